//! Per-iteration timing over a grid of sample counts or cluster counts.
//!
//! Only solver steps are timed. Seeding, data generation and solver
//! construction happen outside the clock; a solver that converges before the
//! requested number of steps is replaced by a freshly seeded one. The reported
//! figure is the median over all timed steps of a grid point.

use std::time::Instant;

use mfcluster::data::{generate_blobs, BlobSpec};
use mfcluster::{
    ClusterError, DataMatrix, FcmConfig, FcmSolver, IterativeSolver, KMeansConfig, KMeansSolver,
    RobustFcmConfig, RobustFcmSolver, RobustKMeansConfig, RobustKMeansSolver,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Algorithm;

pub const RATIO_BAND: (f64, f64) = (1.6, 2.6);

/// Fresh solvers tried per repetition before giving up on a grid point.
const MAX_RESTARTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub algorithm: Algorithm,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub n_features: usize,
    pub reps: usize,
    pub steps_per_rep: usize,
    pub rng_seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let bad = |m: &str| Err(ClusterError::InvalidConfig(m.into()));
        if self.reps == 0 {
            return bad("--reps must be at least 1");
        }
        if self.steps_per_rep == 0 {
            return bad("--iters must be at least 1");
        }
        if self.n_features == 0 {
            return bad("--m must be at least 1");
        }
        if self.n_grid.is_empty() || self.k_grid.is_empty() {
            return bad("grids must not be empty");
        }
        if self.n_grid.len() > 1 && self.k_grid.len() > 1 {
            return bad("vary either n or k, not both");
        }
        for &n in &self.n_grid {
            for &k in &self.k_grid {
                if k == 0 || k > n {
                    return bad("every grid point needs 1 <= k <= n");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub median_seconds: f64,
    /// Against the previous grid point; `None` on the first row.
    pub ratio: Option<f64>,
    /// Growth the per-iteration cost model predicts for the same step.
    pub predicted: Option<f64>,
}

impl BenchRow {
    /// Ratio rescaled so that exact agreement with the cost model reads 2.
    pub fn normalized(&self) -> Option<f64> {
        Some(2.0 * self.ratio? / self.predicted?)
    }

    pub fn in_band(&self) -> Option<bool> {
        self.normalized()
            .map(|r| (RATIO_BAND.0..=RATIO_BAND.1).contains(&r))
    }
}

/// Per-iteration cost model: `mnk` for the crisp fitters, `mnk + nk²` for the
/// fuzzy ones.
pub fn cost_model(algorithm: Algorithm, n: usize, m: usize, k: usize) -> f64 {
    let (n, m, k) = (n as f64, m as f64, k as f64);
    let base = m * n * k;
    if algorithm.is_fuzzy() {
        base + n * k * k
    } else {
        base
    }
}

/// `k` well-separated Gaussian clusters in `m` dimensions, `n` columns total.
pub fn bench_data(n: usize, m: usize, k: usize, seed: u64) -> Result<DataMatrix, ClusterError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = (0..k)
        .map(|_| (0..m).map(|_| rng.random_range(-20.0..20.0)).collect())
        .collect();
    let spec = BlobSpec {
        n_features: m,
        samples_per_cluster: n.div_ceil(k),
        centers,
        noise_sigma: 1.0,
        outlier_fraction: 0.0,
        outlier_radius: 1.0,
        rng_seed: seed,
    };
    let full = generate_blobs(&spec)?.data;
    DataMatrix::new(full.values().columns(0, n).into_owned())
}

fn boxed_solver<'a>(
    algorithm: Algorithm,
    x: &'a DataMatrix,
    k: usize,
    seed: u64,
) -> Result<Box<dyn IterativeSolver + 'a>, ClusterError> {
    // Tolerance 0 keeps the solvers iterating as long as possible.
    let km = KMeansConfig::new(k).with_seed(seed).with_tolerance(0.0);
    let fc = FcmConfig::new(k).with_seed(seed).with_tolerance(0.0);
    Ok(match algorithm {
        Algorithm::Kmeans => Box::new(KMeansSolver::new(x, km)?),
        Algorithm::Fcm => Box::new(FcmSolver::new(x, fc)?),
        Algorithm::Rkmeans => Box::new(RobustKMeansSolver::new(x, RobustKMeansConfig::new(km))?),
        Algorithm::Rfcm => Box::new(RobustFcmSolver::new(x, RobustFcmConfig::new(fc))?),
    })
}

/// Wall time of `steps` individual steps, restarting solvers as needed.
fn time_steps(
    algorithm: Algorithm,
    x: &DataMatrix,
    k: usize,
    steps: usize,
    seed: &mut u64,
) -> Result<Vec<f64>, ClusterError> {
    let mut times = Vec::with_capacity(steps);
    let mut done = 0;
    let mut restarts = 0;
    while done < steps {
        if restarts == MAX_RESTARTS {
            return Err(ClusterError::DegenerateData(format!(
                "no usable {} solver after {MAX_RESTARTS} seeds",
                algorithm.name()
            )));
        }
        restarts += 1;
        *seed += 1;
        let Ok(mut solver) = boxed_solver(algorithm, x, k, *seed) else {
            continue;
        };
        while done < steps && !solver.is_finished() {
            let start = Instant::now();
            let outcome = solver.step();
            let t = start.elapsed();
            if outcome.is_err() {
                break;
            }
            times.push(t.as_secs_f64());
            done += 1;
        }
    }
    Ok(times)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ClusterError> {
    cfg.validate()?;
    let m = cfg.n_features;
    let points: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.k_grid.iter().map(move |&k| (n, k)))
        .collect();
    let data = points
        .iter()
        .map(|&(n, k)| bench_data(n, m, k, cfg.rng_seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seeds = vec![cfg.rng_seed; points.len()];
    let mut steps: Vec<Vec<f64>> = vec![Vec::new(); points.len()];

    // Repetitions are interleaved across grid points so that slow drift in
    // machine load affects every point alike. The first round is a warm-up.
    for rep in 0..=cfg.reps {
        for (p, &(_, k)) in points.iter().enumerate() {
            let count = if rep == 0 { 1 } else { cfg.steps_per_rep };
            let times = time_steps(cfg.algorithm, &data[p], k, count, &mut seeds[p])?;
            if rep > 0 {
                steps[p].extend(times);
            }
        }
    }

    let mut rows: Vec<BenchRow> = Vec::with_capacity(points.len());
    for (&(n, k), times) in points.iter().zip(steps) {
        let median_seconds = median(times);
        let (ratio, predicted) = match rows.last() {
            Some(prev) => (
                Some(median_seconds / prev.median_seconds),
                Some(
                    cost_model(cfg.algorithm, n, m, k)
                        / cost_model(cfg.algorithm, prev.n, m, prev.k),
                ),
            ),
            None => (None, None),
        };
        rows.push(BenchRow {
            n,
            k,
            median_seconds,
            ratio,
            predicted,
        });
    }
    Ok(rows)
}

pub fn rows_to_csv(cfg: &BenchConfig, rows: &[BenchRow]) -> String {
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
    let mut out = String::from(
        "algorithm,n,m,k,reps,iters,median_seconds_per_iteration,ratio,predicted_ratio,normalized_ratio,in_band\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6e},{},{},{},{}\n",
            cfg.algorithm.name(),
            r.n,
            cfg.n_features,
            r.k,
            cfg.reps,
            cfg.steps_per_rep,
            r.median_seconds,
            opt(r.ratio),
            opt(r.predicted),
            opt(r.normalized()),
            r.in_band().map(|b| b.to_string()).unwrap_or_default(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BenchConfig {
        BenchConfig {
            algorithm: Algorithm::Kmeans,
            n_grid: vec![100, 200],
            k_grid: vec![3],
            n_features: 4,
            reps: 2,
            steps_per_rep: 3,
            rng_seed: 0,
        }
    }

    #[test]
    fn zero_reps_rejected() {
        let c = BenchConfig { reps: 0, ..cfg() };
        assert!(run_bench(&c).unwrap_err().is_config_error());
        let c = BenchConfig {
            n_grid: vec![1, 2],
            k_grid: vec![1, 2],
            ..cfg()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn predicted_factors() {
        assert_eq!(
            cost_model(Algorithm::Kmeans, 2000, 20, 5) / cost_model(Algorithm::Kmeans, 1000, 20, 5),
            2.0
        );
        // (m·2k + (2k)²) / (mk + k²) with m = 20, k = 5.
        let f = cost_model(Algorithm::Fcm, 1000, 20, 10) / cost_model(Algorithm::Fcm, 1000, 20, 5);
        assert!((f - 300.0 / 125.0).abs() < 1e-12);
    }

    #[test]
    fn runs_small_grid() {
        for algorithm in Algorithm::ALL {
            let c = BenchConfig { algorithm, ..cfg() };
            let rows = run_bench(&c).unwrap();
            assert_eq!(rows.len(), 2);
            assert!(rows[1].ratio.unwrap() > 0.0);
            assert_eq!(rows[1].predicted, Some(2.0));
            let csv = rows_to_csv(&c, &rows);
            assert_eq!(csv.lines().count(), 3);
        }
    }

    #[test]
    fn bench_data_shape() {
        let x = bench_data(101, 3, 4, 9).unwrap();
        assert_eq!((x.n_features(), x.n_samples()), (3, 101));
    }
}
