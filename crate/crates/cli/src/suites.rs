//! Property and oracle checks behind `mfcluster verify`.

use mfcluster::data::{brute_force_kmeans, generate_blobs, BlobSpec};
use mfcluster::fcm::update_memberships;
use mfcluster::kmeans::{factorized_objective, update_centroids};
use mfcluster::model::frobenius_objective;
use mfcluster::{
    AssignmentMatrix, CentroidWeighting, Centroids, ClusterError, DataMatrix, FcmConfig, InitKind,
    IterativeSolver, KMeansConfig, KMeansSolver, RobustFcmConfig, RobustKMeansConfig,
    RobustKMeansSolver, Termination,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Equivalence,
    Descent,
    Oracle,
    Robustness,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Counts and margins, human-readable.
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}/{}: {}", self.suite, self.name, self.detail)
    }
}

pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;
pub const CANCELLATION_TOLERANCE: f64 = 1e-12;
pub const DESCENT_SLACK: f64 = 1e-9;
pub const FIXPOINT_ITERATION_LIMIT: usize = 100;
pub const ORACLE_SLACK: f64 = 1e-10;
pub const ORACLE_EQUALITY_RATE: f64 = 0.9;
pub const ROBUST_WIN_RATE: f64 = 0.8;

/// Default number of seeds per suite when `--seeds` is not given.
pub fn default_seeds(suite: Suite) -> u64 {
    match suite {
        Suite::Equivalence => 100,
        Suite::Descent => 20,
        Suite::Oracle | Suite::Robustness => 50,
        Suite::All => 0,
    }
}

/// Runs one suite, or all of them in a fixed order. `seeds = None` picks each
/// suite's default.
pub fn run_suite(suite: Suite, seeds: Option<u64>) -> Vec<CheckResult> {
    let n = |s| seeds.unwrap_or_else(|| default_seeds(s));
    match suite {
        Suite::Equivalence => equivalence(n(Suite::Equivalence)),
        Suite::Descent => descent(n(Suite::Descent)),
        Suite::Oracle => oracle(n(Suite::Oracle)),
        Suite::Robustness => robustness(n(Suite::Robustness)),
        Suite::All => [
            Suite::Equivalence,
            Suite::Descent,
            Suite::Oracle,
            Suite::Robustness,
        ]
        .into_iter()
        .flat_map(|s| run_suite(s, seeds))
        .collect(),
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Random labels with every cluster hit at least once.
fn covering_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let slots = rand::seq::index::sample(rng, n, k);
    for (i, j) in slots.into_iter().enumerate() {
        labels[j] = i;
    }
    labels
}

fn summarize(
    suite: &'static str,
    name: &'static str,
    passed: u64,
    total: u64,
    extra: String,
) -> CheckResult {
    CheckResult {
        suite,
        name,
        passed: passed == total,
        detail: format!("{passed}/{total} pass; {extra}"),
    }
}

/// The factorized objective against the two-step `‖X − MZ‖²` with mean
/// centroids, and weight cancellation in the fuzzy membership update.
pub fn equivalence(seeds: u64) -> Vec<CheckResult> {
    let mut ok = 0;
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=10);
        let n = rng.random_range(5..=50);
        let k = rng.random_range(1..=5);
        let x = DataMatrix::new(uniform_matrix(&mut rng, m, n, 10.0)).expect("finite data");
        let z = AssignmentMatrix::new(covering_labels(&mut rng, n, k), k).expect("valid labels");
        let f = factorized_objective(&x, &z);
        let two =
            update_centroids(&x, &z).and_then(|c| frobenius_objective(&x, &c, &z.to_matrix()));
        if let (Ok(f), Ok(two)) = (f, two) {
            let dev = (f - two).abs() / two.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(dev);
            if dev <= EQUIVALENCE_TOLERANCE {
                ok += 1;
            }
        }
    }
    let first = summarize(
        "equivalence",
        "factorized_vs_two_step",
        ok,
        seeds,
        format!("max relative deviation {worst:.3e} (limit {EQUIVALENCE_TOLERANCE:.0e})"),
    );

    let mut ok = 0;
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=30);
        let k = rng.random_range(1..=5);
        let f = rng.random_range(1.1..4.0);
        let x = DataMatrix::new(uniform_matrix(&mut rng, m, n, 5.0)).expect("finite data");
        let mu = Centroids::new(uniform_matrix(&mut rng, m, k, 5.0)).expect("finite centroids");
        let w: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-4.0..4.0)))
            .collect();
        let Ok(u) = update_memberships(&x, &mu, f, 1e-12) else {
            continue;
        };
        let dev = weighted_ratio_memberships(&x, &mu, f, &w)
            .iter()
            .zip(u.values().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        if dev <= CANCELLATION_TOLERANCE {
            ok += 1;
        }
    }
    let second = summarize(
        "equivalence",
        "weighted_membership_cancellation",
        ok,
        seeds,
        format!("max elementwise deviation {worst:.3e} (limit {CANCELLATION_TOLERANCE:.0e})"),
    );
    vec![first, second]
}

/// Memberships from the ratio formula applied to weighted squared distances
/// `w_j ‖x_j − μ_i‖²`, written out directly without any cancellation.
fn weighted_ratio_memberships(x: &DataMatrix, mu: &Centroids, f: f64, w: &[f64]) -> Vec<f64> {
    let (k, n) = (mu.n_clusters(), x.n_samples());
    let mut out = Vec::with_capacity(k * n);
    for (j, wj) in w.iter().enumerate().take(n) {
        let d: Vec<f64> = (0..k)
            .map(|i| wj * (x.sample(j) - mu.centroid(i)).norm_squared())
            .collect();
        for i in 0..k {
            let s: f64 = d.iter().map(|dr| (d[i] / dr).powf(1.0 / (f - 1.0))).sum();
            out.push(1.0 / s);
        }
    }
    out
}

/// Gaussian blobs with seed-dependent centers, no outliers.
pub fn descent_dataset(seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd15c);
    let centers: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..3).map(|_| rng.random_range(-8.0..8.0)).collect())
        .collect();
    let spec = BlobSpec {
        n_features: 3,
        samples_per_cluster: 30,
        centers,
        noise_sigma: 1.0,
        outlier_fraction: 0.0,
        outlier_radius: 1.0,
        rng_seed: seed,
    };
    generate_blobs(&spec).expect("valid spec").data
}

/// Non-increasing objectives for the classical fitters, within-iteration
/// surrogate descent for the robust ones, and the assignment fixpoint bound for
/// crisp k-means.
pub fn descent(seeds: u64) -> Vec<CheckResult> {
    const K: usize = 3;
    let mut results = Vec::new();
    let datasets: Vec<DataMatrix> = (0..seeds).map(descent_dataset).collect();

    let (mut mono, mut fix, mut worst, mut worst_iters) = (0, 0, f64::NEG_INFINITY, 0);
    for (seed, x) in (0..seeds).zip(&datasets) {
        let cfg = KMeansConfig::new(K).with_seed(seed).with_tolerance(0.0);
        let Ok(fit) = mfcluster::fit_kmeans(x, cfg) else {
            continue;
        };
        let inc = fit.report.max_relative_increase();
        worst = worst.max(inc);
        mono += u64::from(inc <= DESCENT_SLACK);
        worst_iters = worst_iters.max(fit.report.iterations);
        fix += u64::from(
            fit.report.termination == Termination::ConvergedAssignmentsFixed
                && fit.report.iterations <= FIXPOINT_ITERATION_LIMIT,
        );
    }
    results.push(summarize(
        "descent",
        "kmeans_objective",
        mono,
        seeds,
        increase_note(worst),
    ));
    results.push(summarize(
        "descent",
        "kmeans_fixpoint",
        fix,
        seeds,
        format!("max iterations {worst_iters} (limit {FIXPOINT_ITERATION_LIMIT})"),
    ));

    let (mut mono, mut worst, mut errors) = (0, f64::NEG_INFINITY, 0);
    for (seed, x) in (0..seeds).zip(&datasets) {
        match mfcluster::fit_fcm(x, FcmConfig::new(K).with_seed(seed)) {
            Ok(fit) => {
                let inc = fit.report.max_relative_increase();
                worst = worst.max(inc);
                mono += u64::from(inc <= DESCENT_SLACK);
            }
            Err(_) => errors += 1,
        }
    }
    results.push(summarize(
        "descent",
        "fcm_objective",
        mono,
        seeds,
        format!("{}; {errors} fits failed", increase_note(worst)),
    ));

    let (mut ok, mut worst, mut errors) = (0, f64::NEG_INFINITY, 0);
    for (seed, x) in (0..seeds).zip(&datasets) {
        let cfg = RobustKMeansConfig::new(KMeansConfig::new(K).with_seed(seed));
        match mfcluster::fit_robust_kmeans(x, cfg) {
            Ok(fit) => {
                let inc = fit.report.max_surrogate_increase();
                worst = worst.max(inc);
                ok += u64::from(inc <= DESCENT_SLACK);
            }
            Err(_) => errors += 1,
        }
    }
    results.push(summarize(
        "descent",
        "rkmeans_surrogate",
        ok,
        seeds,
        format!("{}; {errors} fits failed", increase_note(worst)),
    ));

    let (mut ok, mut worst, mut errors) = (0, f64::NEG_INFINITY, 0);
    for (seed, x) in (0..seeds).zip(&datasets) {
        let cfg = RobustFcmConfig::new(FcmConfig::new(K).with_seed(seed));
        match mfcluster::fit_robust_fcm(x, cfg) {
            Ok(fit) => {
                let inc = fit.report.max_surrogate_increase();
                worst = worst.max(inc);
                ok += u64::from(inc <= DESCENT_SLACK);
            }
            Err(_) => errors += 1,
        }
    }
    results.push(summarize(
        "descent",
        "rfcm_surrogate",
        ok,
        seeds,
        format!("{}; {errors} fits failed", increase_note(worst)),
    ));
    results
}

fn increase_note(worst: f64) -> String {
    format!("max relative increase {worst:.3e} (slack {DESCENT_SLACK:.0e})")
}

/// Two tight groups in the plane, `gap` apart along the first axis, each of
/// diameter at most `√2`.
pub fn separated_instance(seed: u64, gap: f64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0ac1e);
    let n = rng.random_range(4..=8);
    let split = rng.random_range(1..n);
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let offset = if j < split { 0.0 } else { gap };
            vec![
                offset + rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ]
        })
        .collect();
    DataMatrix::from_samples(&samples).expect("finite data")
}

/// Global optimum lower-bounds every converged fit; with well-separated
/// groups k-means++ usually finds it.
pub fn oracle(seeds: u64) -> Vec<CheckResult> {
    let mut bounded = 0;
    let mut worst = f64::INFINITY;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b);
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=3);
        let x = DataMatrix::new(uniform_matrix(&mut rng, m, n, 5.0)).expect("finite data");
        let init = if seed % 2 == 0 {
            InitKind::PlusPlus
        } else {
            InitKind::RandomSamples
        };
        let fit = mfcluster::fit_kmeans(&x, KMeansConfig::new(2).with_seed(seed).with_init(init));
        let best = brute_force_kmeans(&x, 2);
        if let (Ok(fit), Ok((best, _))) = (fit, best) {
            let margin = fit.report.final_objective - best;
            worst = worst.min(margin);
            bounded += u64::from(margin >= -ORACLE_SLACK);
        }
    }
    let first = summarize(
        "oracle",
        "global_lower_bound",
        bounded,
        seeds,
        format!("min (fitted − optimum) {worst:.3e} (slack {ORACLE_SLACK:.0e})"),
    );

    let mut equal = 0;
    for seed in 0..seeds {
        let x = separated_instance(seed, 20.0);
        let fit = mfcluster::fit_kmeans(&x, KMeansConfig::new(2).with_seed(seed));
        if let (Ok(fit), Ok((best, _))) = (fit, brute_force_kmeans(&x, 2)) {
            equal += u64::from(
                (fit.report.final_objective - best).abs() <= ORACLE_SLACK * best.max(1.0),
            );
        }
    }
    let rate = equal as f64 / seeds.max(1) as f64;
    let second = CheckResult {
        suite: "oracle",
        name: "separated_global_optimum",
        passed: rate >= ORACLE_EQUALITY_RATE,
        detail: format!(
            "{equal}/{seeds} reach the optimum ({:.0}%, need {:.0}%)",
            rate * 100.0,
            ORACLE_EQUALITY_RATE * 100.0
        ),
    };
    vec![first, second]
}

/// Two Gaussian clusters at `(±5, 0)` with `σ = 0.5`, 100 samples each, and
/// 10% of the columns replaced by points at radius 50.
pub fn contaminated_spec(seed: u64) -> BlobSpec {
    BlobSpec {
        n_features: 2,
        samples_per_cluster: 100,
        centers: vec![vec![-5.0, 0.0], vec![5.0, 0.0]],
        noise_sigma: 0.5,
        outlier_fraction: 0.1,
        outlier_radius: 50.0,
        rng_seed: seed,
    }
}

/// Centroid RMSE against the true centers under the best cluster matching;
/// infinite if the fit failed.
pub fn centroid_rmse(fitted: Result<Centroids, ClusterError>, truth: &[Vec<f64>]) -> f64 {
    let Ok(m) = fitted else { return f64::INFINITY };
    let k = truth.len();
    let cost = |perm: &[usize]| -> f64 {
        let sq: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                m.centroid(i)
                    .iter()
                    .zip(&truth[t])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        (sq / k as f64).sqrt()
    };
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| best = best.min(cost(p)));
    best
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}

/// Initialization used by the robustness comparison: uniform sample draws, so
/// seeds land on outliers at the contamination rate instead of being drawn to
/// them as k-means++ is.
pub const ROBUSTNESS_INIT: InitKind = InitKind::RandomSamples;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessSample {
    pub kmeans: f64,
    pub rkmeans: f64,
    pub fcm: f64,
    pub rfcm: f64,
}

pub fn robustness_sample(seed: u64, init: InitKind) -> RobustnessSample {
    let spec = contaminated_spec(seed);
    let data = generate_blobs(&spec).expect("valid spec").data;
    let km = KMeansConfig::new(2).with_seed(seed).with_init(init);
    let fc = FcmConfig::new(2).with_seed(seed).with_init(init);
    RobustnessSample {
        kmeans: centroid_rmse(
            mfcluster::fit_kmeans(&data, km).map(|f| f.centroids),
            &spec.centers,
        ),
        rkmeans: centroid_rmse(
            mfcluster::fit_robust_kmeans(&data, RobustKMeansConfig::new(km)).map(|f| f.centroids),
            &spec.centers,
        ),
        fcm: centroid_rmse(
            mfcluster::fit_fcm(&data, fc).map(|f| f.centroids),
            &spec.centers,
        ),
        rfcm: centroid_rmse(
            mfcluster::fit_robust_fcm(&data, RobustFcmConfig::new(fc)).map(|f| f.centroids),
            &spec.centers,
        ),
    }
}

/// Steps classical and plain-mean robust k-means side by side and reports the
/// first iteration where their states differ.
pub fn plain_mean_divergence(x: &DataMatrix, seed: u64) -> Result<Option<usize>, ClusterError> {
    let base = KMeansConfig::new(2).with_seed(seed).with_tolerance(0.0);
    let mut classic = KMeansSolver::new(x, base)?;
    let mut literal = RobustKMeansSolver::new(
        x,
        RobustKMeansConfig::new(base).with_weighting(CentroidWeighting::PaperLiteral),
    )?;
    loop {
        let a = classic.step()?;
        let b = literal.step()?;
        if classic.centroids() != literal.centroids()
            || classic.assignment() != literal.assignment()
        {
            return Ok(Some(classic.iterations()));
        }
        if a != mfcluster::StepOutcome::Continue || b != mfcluster::StepOutcome::Continue {
            break;
        }
    }
    // Robust runs one extra confirming iteration once assignments settle.
    while !literal.is_finished() {
        literal.step()?;
        if classic.centroids() != literal.centroids()
            || classic.assignment() != literal.assignment()
        {
            return Ok(Some(literal.iterations()));
        }
    }
    Ok(None)
}

pub fn robustness(seeds: u64) -> Vec<CheckResult> {
    let samples: Vec<RobustnessSample> = (0..seeds)
        .map(|s| robustness_sample(s, ROBUSTNESS_INIT))
        .collect();
    let wins = |f: fn(&RobustnessSample) -> bool| samples.iter().filter(|s| f(s)).count() as u64;
    let rate_check = |name, won: u64, note: String| {
        let rate = won as f64 / seeds.max(1) as f64;
        CheckResult {
            suite: "robustness",
            name,
            passed: rate >= ROBUST_WIN_RATE,
            detail: format!(
                "robust wins {won}/{seeds} ({:.0}%, need {:.0}%); {note}",
                rate * 100.0,
                ROBUST_WIN_RATE * 100.0
            ),
        }
    };
    let median = |f: fn(&RobustnessSample) -> f64| {
        let mut v: Vec<f64> = samples.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.get(v.len() / 2).copied().unwrap_or(f64::NAN)
    };
    let failures =
        |f: fn(&RobustnessSample) -> f64| samples.iter().filter(|s| f(s).is_infinite()).count();

    let km = rate_check(
        "rkmeans_beats_kmeans",
        wins(|s| s.rkmeans < s.kmeans),
        format!(
            "median RMSE robust {:.3} vs classical {:.3}",
            median(|s| s.rkmeans),
            median(|s| s.kmeans)
        ),
    );
    let fc = rate_check(
        "rfcm_beats_fcm",
        wins(|s| s.rfcm < s.fcm),
        format!(
            "median RMSE robust {:.3} vs classical {:.3}; failed fits robust {} classical {}",
            median(|s| s.rfcm),
            median(|s| s.fcm),
            failures(|s| s.rfcm),
            failures(|s| s.fcm)
        ),
    );

    let mut same = 0;
    let mut first_mismatch = None;
    for seed in 0..seeds {
        let data = generate_blobs(&contaminated_spec(seed))
            .expect("valid spec")
            .data;
        match plain_mean_divergence(&data, seed) {
            Ok(None) => same += 1,
            Ok(Some(it)) => {
                first_mismatch.get_or_insert((seed, it));
            }
            Err(_) => {}
        }
    }
    let literal = summarize(
        "robustness",
        "plain_mean_matches_kmeans",
        same,
        seeds,
        match first_mismatch {
            Some((s, it)) => format!("seed {s} differs at iteration {it}"),
            None => "identical iterates on every seed".into(),
        },
    );
    vec![km, fc, literal]
}
