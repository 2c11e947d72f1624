//! Library half of the `mfcluster` command: fitting runs with timing, the
//! verification suites and the scaling benchmark.

pub mod bench;
pub mod suites;

use std::time::Instant;

use mfcluster::{
    CentroidWeighting, ClusterError, DataMatrix, FcmConfig, FcmSolver, FitReport, InitKind,
    IterativeSolver, KMeansConfig, KMeansSolver, RobustFcmConfig, RobustFcmSolver,
    RobustKMeansConfig, RobustKMeansSolver,
};
use serde::Serialize;

/// Bumped whenever a key of [`RunResult`] is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

pub fn exit_code(err: &ClusterError) -> i32 {
    if err.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_DATA
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Fcm,
    Rkmeans,
    Rfcm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Kmeans,
        Algorithm::Fcm,
        Algorithm::Rkmeans,
        Algorithm::Rfcm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Fcm => "fcm",
            Algorithm::Rkmeans => "rkmeans",
            Algorithm::Rfcm => "rfcm",
        }
    }

    pub fn is_fuzzy(self) -> bool {
        matches!(self, Algorithm::Fcm | Algorithm::Rfcm)
    }

    pub fn is_robust(self) -> bool {
        matches!(self, Algorithm::Rkmeans | Algorithm::Rfcm)
    }
}

/// Everything `fit` needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub algorithm: Algorithm,
    pub n_clusters: usize,
    pub rng_seed: u64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub init: InitKind,
    /// Fuzzy algorithms only; `None` means the default of 2.
    pub fuzzifier: Option<f64>,
    /// Robust algorithms only; `None` means the data-scaled default.
    pub smoothing_zeta: Option<f64>,
    /// `rkmeans` only; `None` means surrogate-consistent.
    pub centroid_weighting: Option<CentroidWeighting>,
}

impl FitOptions {
    pub fn new(algorithm: Algorithm, n_clusters: usize) -> Self {
        Self {
            algorithm,
            n_clusters,
            rng_seed: 0,
            max_iterations: mfcluster::kmeans::DEFAULT_MAX_ITERATIONS,
            relative_tolerance: mfcluster::kmeans::DEFAULT_RELATIVE_TOLERANCE,
            init: InitKind::default(),
            fuzzifier: None,
            smoothing_zeta: None,
            centroid_weighting: None,
        }
    }

    /// Rejects flags that do not apply to the chosen algorithm.
    pub fn check_applicable(&self) -> Result<(), ClusterError> {
        let a = self.algorithm;
        let reject = |flag: &str| {
            Err(ClusterError::InvalidConfig(format!(
                "{flag} does not apply to --algo {}",
                a.name()
            )))
        };
        if self.fuzzifier.is_some() && !a.is_fuzzy() {
            return reject("--fuzzifier");
        }
        if self.smoothing_zeta.is_some() && !a.is_robust() {
            return reject("--zeta");
        }
        if self.centroid_weighting.is_some() && a != Algorithm::Rkmeans {
            return reject("--centroid-weighting");
        }
        Ok(())
    }

    fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig::new(self.n_clusters)
            .with_seed(self.rng_seed)
            .with_init(self.init)
            .with_max_iterations(self.max_iterations)
            .with_tolerance(self.relative_tolerance)
    }

    fn fcm_config(&self) -> FcmConfig {
        let mut c = FcmConfig::new(self.n_clusters)
            .with_seed(self.rng_seed)
            .with_init(self.init)
            .with_max_iterations(self.max_iterations)
            .with_tolerance(self.relative_tolerance);
        if let Some(f) = self.fuzzifier {
            c = c.with_fuzzifier(f);
        }
        c
    }

    fn robust_kmeans_config(&self) -> RobustKMeansConfig {
        let mut c = RobustKMeansConfig::new(self.kmeans_config())
            .with_weighting(self.centroid_weighting.unwrap_or_default());
        c.smoothing_zeta = self.smoothing_zeta;
        c
    }

    fn robust_fcm_config(&self) -> RobustFcmConfig {
        let mut c = RobustFcmConfig::new(self.fcm_config());
        c.smoothing_zeta = self.smoothing_zeta;
        c
    }
}

/// The resolved configuration as it was actually run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub n_clusters: usize,
    pub rng_seed: u64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub init: InitKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzzifier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coincidence_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing_zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centroid_weighting: Option<CentroidWeighting>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    /// Seeding and initial state, excluded from the per-iteration numbers.
    pub init_seconds: f64,
    pub iteration_seconds: Vec<f64>,
    pub total_seconds: f64,
}

/// Output of one `fit` run. Every key except `timings` is a deterministic
/// function of the input file and the flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub config: ConfigEcho,
    pub n_features: usize,
    pub n_samples: usize,
    pub report: FitReport,
    /// One inner array per cluster.
    pub centroids: Vec<Vec<f64>>,
    /// Cluster of every sample; argmax membership for the fuzzy algorithms.
    pub labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub timings: Timings,
}

impl RunResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run result serializes");
        s.push('\n');
        s
    }

    /// Per-iteration CSV: `iteration,objective[,distortion][,surrogate_before,surrogate_after]`.
    ///
    /// A surrogate pass is listed on the iteration it ends in. Robust k-means
    /// has no pass ending in its first iteration, so those cells stay empty.
    pub fn trajectory_csv(&self) -> String {
        let r = &self.report;
        let fuzzy = self.algorithm.is_fuzzy();
        let robust = self.algorithm.is_robust();
        let mut out = String::from("iteration,objective");
        if fuzzy {
            out.push_str(",distortion");
        }
        if robust {
            out.push_str(",surrogate_before,surrogate_after");
        }
        out.push('\n');
        let offset = r
            .objective_trajectory
            .len()
            .saturating_sub(r.surrogate_passes.len());
        for (t, obj) in r.objective_trajectory.iter().enumerate() {
            out.push_str(&format!("{},{obj}", t + 1));
            if fuzzy {
                out.push_str(&format!(",{}", r.distortion_trajectory[t]));
            }
            if robust {
                match t
                    .checked_sub(offset)
                    .and_then(|i| r.surrogate_passes.get(i))
                {
                    Some(p) => out.push_str(&format!(",{},{}", p.before, p.after)),
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Steps a solver to the end, timing each step separately.
pub fn drive(solver: &mut impl IterativeSolver) -> Result<Vec<f64>, ClusterError> {
    let mut times = Vec::new();
    while !solver.is_finished() {
        let start = Instant::now();
        solver.step()?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(times)
}

fn centroid_rows(m: &mfcluster::Centroids) -> Vec<Vec<f64>> {
    (0..m.n_clusters())
        .map(|i| m.centroid(i).iter().copied().collect())
        .collect()
}

pub fn run_fit(x: &DataMatrix, opts: &FitOptions) -> Result<RunResult, ClusterError> {
    opts.check_applicable()?;
    let started = Instant::now();
    let mut echo = ConfigEcho {
        n_clusters: opts.n_clusters,
        rng_seed: opts.rng_seed,
        max_iterations: opts.max_iterations,
        relative_tolerance: opts.relative_tolerance,
        init: opts.init,
        fuzzifier: None,
        coincidence_epsilon: None,
        smoothing_zeta: None,
        centroid_weighting: None,
    };

    let (init_seconds, iteration_seconds, mut report, centroids, labels) = match opts.algorithm {
        Algorithm::Kmeans => {
            let mut s = KMeansSolver::new(x, opts.kmeans_config())?;
            let init = started.elapsed().as_secs_f64();
            let times = drive(&mut s)?;
            let fit = s.into_fit();
            (
                init,
                times,
                fit.report,
                centroid_rows(&fit.centroids),
                fit.assignment.labels().to_vec(),
            )
        }
        Algorithm::Fcm => {
            let cfg = opts.fcm_config();
            echo.fuzzifier = Some(cfg.fuzzifier);
            echo.coincidence_epsilon = Some(cfg.coincidence_epsilon_for(x));
            let mut s = FcmSolver::new(x, cfg)?;
            let init = started.elapsed().as_secs_f64();
            let times = drive(&mut s)?;
            let fit = s.into_fit();
            (
                init,
                times,
                fit.report,
                centroid_rows(&fit.centroids),
                fit.memberships.hard_labels(),
            )
        }
        Algorithm::Rkmeans => {
            let cfg = opts.robust_kmeans_config();
            echo.smoothing_zeta = Some(cfg.zeta_for(x));
            echo.centroid_weighting = Some(cfg.centroid_weighting);
            let mut s = RobustKMeansSolver::new(x, cfg)?;
            let init = started.elapsed().as_secs_f64();
            let times = drive(&mut s)?;
            let fit = s.into_fit();
            (
                init,
                times,
                fit.report,
                centroid_rows(&fit.centroids),
                fit.assignment.labels().to_vec(),
            )
        }
        Algorithm::Rfcm => {
            let cfg = opts.robust_fcm_config();
            echo.fuzzifier = Some(cfg.base.fuzzifier);
            echo.coincidence_epsilon = Some(cfg.base.coincidence_epsilon_for(x));
            echo.smoothing_zeta = Some(cfg.zeta_for(x));
            let mut s = RobustFcmSolver::new(x, cfg)?;
            let init = started.elapsed().as_secs_f64();
            let times = drive(&mut s)?;
            let fit = s.into_fit();
            (
                init,
                times,
                fit.report,
                centroid_rows(&fit.centroids),
                fit.memberships.hard_labels(),
            )
        }
    };

    let weights = report.final_weights.take();
    Ok(RunResult {
        schema_version: SCHEMA_VERSION,
        algorithm: opts.algorithm,
        config: echo,
        n_features: x.n_features(),
        n_samples: x.n_samples(),
        report,
        centroids,
        labels,
        weights,
        timings: Timings {
            init_seconds,
            iteration_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    })
}
