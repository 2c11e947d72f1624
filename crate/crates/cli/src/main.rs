use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfcluster::data::{generate_blobs, read_dataset, write_dataset, write_labels, BlobSpec};
use mfcluster::{CentroidWeighting, ClusterError, InitKind};
use mfcluster_cli::bench::{rows_to_csv, run_bench, BenchConfig};
use mfcluster_cli::suites::{run_suite, Suite};
use mfcluster_cli::{exit_code, run_fit, Algorithm, FitOptions, EXIT_CHECK_FAILED, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "mfcluster",
    version,
    about = "Crisp, fuzzy and robust clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one algorithm to a CSV dataset and print the result as JSON.
    Fit(FitArgs),
    /// Run the built-in property and oracle checks.
    Verify(VerifyArgs),
    /// Time solver iterations over a grid of problem sizes (CSV on stdout).
    Bench(BenchArgs),
    /// Write a Gaussian blob dataset with optional outliers.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Plusplus,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Surrogate,
    PlainMean,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    algo: Algorithm,
    #[arg(long)]
    k: usize,
    /// CSV file, one sample per row, optional header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// fcm and rfcm only [default: 2]
    #[arg(long)]
    fuzzifier: Option<f64>,
    /// rkmeans and rfcm only [default: 1e-8 × median sample norm]
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, value_enum, default_value = "plusplus")]
    init: InitArg,
    /// rkmeans only [default: surrogate]
    #[arg(long, value_enum)]
    centroid_weighting: Option<WeightingArg>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the per-iteration objective trajectory as CSV.
    #[arg(long)]
    trajectory_csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Instances per check [default: per suite]
    #[arg(long)]
    seeds: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    algo: Algorithm,
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    n_grid: Vec<usize>,
    /// One value, or a comma-separated grid when n is fixed.
    #[arg(long, alias = "k-grid", value_delimiter = ',', default_value = "5")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Timed iterations per repetition.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Cluster centers as `x,y;x,y;...`.
    #[arg(long, default_value = "-5,0;5,0")]
    centers: String,
    #[arg(long, default_value_t = 100)]
    samples_per_cluster: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    outlier_fraction: f64,
    #[arg(long, default_value_t = 50.0)]
    outlier_radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Label sidecar [default: <output stem>.labels.csv]
    #[arg(long)]
    labels: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Verify(a) => Ok(verify(a)),
        Command::Bench(a) => bench(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn fit(a: FitArgs) -> Result<i32, ClusterError> {
    let x = read_dataset(&a.input)?;
    let opts = FitOptions {
        algorithm: a.algo,
        n_clusters: a.k,
        rng_seed: a.seed,
        max_iterations: a.max_iter,
        relative_tolerance: a.tol,
        init: match a.init {
            InitArg::Random => InitKind::RandomSamples,
            InitArg::Plusplus => InitKind::PlusPlus,
        },
        fuzzifier: a.fuzzifier,
        smoothing_zeta: a.zeta,
        centroid_weighting: a.centroid_weighting.map(|w| match w {
            WeightingArg::Surrogate => CentroidWeighting::SurrogateConsistent,
            WeightingArg::PlainMean => CentroidWeighting::PaperLiteral,
        }),
    };
    let result = run_fit(&x, &opts)?;
    if let Some(path) = &a.trajectory_csv {
        write_file(path, &result.trajectory_csv())?;
    }
    match &a.output {
        Some(path) => write_file(path, &result.to_json())?,
        None => print!("{}", result.to_json()),
    }
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> i32 {
    let checks = run_suite(a.suite, a.seeds);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn bench(a: BenchArgs) -> Result<i32, ClusterError> {
    let cfg = BenchConfig {
        algorithm: a.algo,
        n_grid: a.n_grid,
        k_grid: a.k,
        n_features: a.m,
        reps: a.reps,
        steps_per_rep: a.iters,
        rng_seed: a.seed,
    };
    let rows = run_bench(&cfg)?;
    print!("{}", rows_to_csv(&cfg, &rows));
    Ok(EXIT_OK)
}

fn generate(a: GenerateArgs) -> Result<i32, ClusterError> {
    let centers = parse_centers(&a.centers)?;
    let spec = BlobSpec {
        n_features: centers[0].len(),
        samples_per_cluster: a.samples_per_cluster,
        centers,
        noise_sigma: a.sigma,
        outlier_fraction: a.outlier_fraction,
        outlier_radius: a.outlier_radius,
        rng_seed: a.seed,
    };
    let d = generate_blobs(&spec)?;
    write_dataset(&a.output, &d.data)?;
    let labels = a
        .labels
        .unwrap_or_else(|| a.output.with_extension("labels.csv"));
    write_labels(&labels, &d.true_labels, &d.outlier_mask)?;
    eprintln!(
        "wrote {} samples ({} outliers) to {} and labels to {}",
        d.data.n_samples(),
        d.n_outliers(),
        a.output.display(),
        labels.display()
    );
    Ok(EXIT_OK)
}

fn parse_centers(s: &str) -> Result<Vec<Vec<f64>>, ClusterError> {
    let centers: Vec<Vec<f64>> = s
        .split(';')
        .map(|c| {
            c.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ClusterError::InvalidConfig(format!("bad center {c:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if centers.is_empty() || centers[0].is_empty() {
        return Err(ClusterError::InvalidConfig("no centers given".into()));
    }
    Ok(centers)
}

fn write_file(path: &Path, contents: &str) -> Result<(), ClusterError> {
    std::fs::write(path, contents).map_err(|e| ClusterError::Io(format!("{}: {e}", path.display())))
}
