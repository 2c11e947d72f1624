//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the criteria execute one after another;
//! the timing criterion would be meaningless with other tests competing for
//! the CPU. Exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;

use mfcluster::fcm::{fcm_centroid_gradient, update_memberships};
use mfcluster::model::{exponentiate_membership, frobenius_objective};
use mfcluster::robust_fcm::update_memberships_weighted;
use mfcluster::{
    Centroids, DataMatrix, FcmConfig, FcmSolver, IterativeSolver, MembershipMatrix, ResidualWeights,
};
use mfcluster_cli::bench::RATIO_BAND;
use mfcluster_cli::suites::{self, CheckResult};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: Vec<CheckResult>) -> Outcome {
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: checks.iter().map(|c| format!("\n    {c}")).collect(),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn random_membership(rng: &mut ChaCha8Rng, k: usize, n: usize, f: f64) -> MembershipMatrix {
    let mut u = DMatrix::from_fn(k, n, |_, _| rng.random_range(0.01..1.0));
    for mut c in u.column_iter_mut() {
        let s = c.sum();
        c /= s;
    }
    MembershipMatrix::new(u, f).unwrap()
}

fn criterion_1() -> Outcome {
    let checks = suites::equivalence(100);
    from_checks(
        checks
            .into_iter()
            .filter(|c| c.name == "factorized_vs_two_step")
            .collect(),
    )
}

fn criterion_2() -> Outcome {
    from_checks(suites::descent(20))
}

fn criterion_3() -> Outcome {
    from_checks(suites::oracle(50))
}

fn criterion_4() -> Outcome {
    // Simplex constraint after every iteration that completes.
    let mut worst_sum = 0.0f64;
    let mut iterations = 0;
    for seed in 0..20 {
        let x = suites::descent_dataset(seed);
        let Ok(mut solver) = FcmSolver::new(&x, FcmConfig::new(3).with_seed(seed)) else {
            continue;
        };
        while !solver.is_finished() {
            if solver.step().is_err() {
                break;
            }
            iterations += 1;
            for c in solver.memberships().values().column_iter() {
                worst_sum = worst_sum.max((c.sum() - 1.0).abs());
            }
        }
    }
    let simplex = worst_sum <= 1e-12;

    // Squared distances 1 and 3 with fuzzifier 2.
    let x = DataMatrix::from_column_slice(2, 1, &[0.0, 0.0]).unwrap();
    let m = Centroids::new(DMatrix::from_column_slice(
        2,
        2,
        &[1.0, 0.0, 0.0, 3f64.sqrt()],
    ))
    .unwrap();
    let u = update_memberships(&x, &m, 2.0, 1e-12).unwrap();
    let hand_dev = (u.values()[(0, 0)] - 0.75)
        .abs()
        .max((u.values()[(1, 0)] - 0.25).abs());
    let hand = hand_dev <= 1e-12;

    // Gradient of ‖X − M U^(m)‖² in M against central differences.
    let mut worst_grad = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let (mf, n, k) = (
            rng.random_range(1..5),
            rng.random_range(3..20),
            rng.random_range(1..5),
        );
        let f = rng.random_range(1.2..3.0);
        let x = DataMatrix::new(random_matrix(&mut rng, mf, n, 3.0)).unwrap();
        let m = Centroids::new(random_matrix(&mut rng, mf, k, 3.0)).unwrap();
        let u = random_membership(&mut rng, k, n, f);
        let um = exponentiate_membership(&u);
        let g = fcm_centroid_gradient(&x, &m, &u).unwrap();
        let h = 1e-5;
        let fd = DMatrix::from_fn(mf, k, |r, c| {
            let mut plus = m.values().clone();
            let mut minus = m.values().clone();
            plus[(r, c)] += h;
            minus[(r, c)] -= h;
            let jp = frobenius_objective(&x, &Centroids::new(plus).unwrap(), &um).unwrap();
            let jm = frobenius_objective(&x, &Centroids::new(minus).unwrap(), &um).unwrap();
            (jp - jm) / (2.0 * h)
        });
        worst_grad = worst_grad.max((&g - &fd).norm() / fd.norm().max(1e-300));
    }
    let grad = worst_grad <= 1e-4;

    Outcome {
        passed: simplex && hand && grad,
        detail: format!(
            "simplex max |sum-1| {worst_sum:.1e} over {iterations} iterations (limit 1e-12); \
             hand value deviation {hand_dev:.1e} (limit 1e-12); \
             gradient max relative error {worst_grad:.1e} over 20 instances (limit 1e-4)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (mf, n, k) = (
            rng.random_range(1..7),
            rng.random_range(1..30),
            rng.random_range(1..6),
        );
        let f = rng.random_range(1.1..4.0);
        let x = DataMatrix::new(random_matrix(&mut rng, mf, n, 5.0)).unwrap();
        let m = Centroids::new(random_matrix(&mut rng, mf, k, 5.0)).unwrap();
        let zeta = 1e-6;
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0 / zeta)).collect();
        let w = ResidualWeights::new(w, zeta).unwrap();
        let a = update_memberships_weighted(&x, &m, f, &w, 1e-12).unwrap();
        let b = update_memberships(&x, &m, f, 1e-12).unwrap();
        worst = worst.max((a.values() - b.values()).amax());
    }
    // The suite check builds the weighted memberships from the ratio formula
    // directly, so it does not rely on the library's cancellation.
    let suite = suites::equivalence(100)
        .into_iter()
        .find(|c| c.name == "weighted_membership_cancellation")
        .unwrap();
    Outcome {
        passed: worst <= 1e-12 && suite.passed,
        detail: format!(
            "library weighted vs unweighted max deviation {worst:.1e} over 100 triples (limit 1e-12); {}",
            suite.detail
        ),
    }
}

fn criterion_6() -> Outcome {
    from_checks(suites::robustness(50))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    let mut passed = true;
    for algo in ["kmeans", "fcm", "rkmeans", "rfcm"] {
        let out = Command::new(env!("CARGO_BIN_EXE_mfcluster"))
            .args([
                "bench",
                "--algo",
                algo,
                "--n-grid",
                "1000,2000,4000,8000",
                "--m",
                "20",
                "--k",
                "5",
            ])
            .output()
            .expect("run bench");
        if !out.status.success() {
            passed = false;
            lines.push(format!("{algo}: exit {:?}", out.status.code()));
            continue;
        }
        let csv = String::from_utf8(out.stdout).unwrap();
        let ratios: Vec<f64> = csv
            .lines()
            .skip(1)
            .filter_map(|l| l.split(',').nth(9).and_then(|v| v.parse().ok()))
            .collect();
        let ok = ratios.len() == 3
            && ratios
                .iter()
                .all(|r| (RATIO_BAND.0..=RATIO_BAND.1).contains(r));
        passed &= ok;
        lines.push(format!(
            "{algo}: doubling ratios {}",
            ratios
                .iter()
                .map(|r| format!("{r:.2}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    Outcome {
        passed,
        detail: format!(
            "band [{}, {}]; {}",
            RATIO_BAND.0,
            RATIO_BAND.1,
            lines.join("; ")
        ),
    }
}

fn without_timings(json: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(json).expect("valid JSON");
    v.as_object_mut().expect("object").remove("timings");
    v
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.csv");
    let gen = Command::new(env!("CARGO_BIN_EXE_mfcluster"))
        // Clean blobs: classical FCM diverges on some contaminated sets, and a
        // failed fit leaves no JSON to compare.
        .args(["generate", "--seed", "3", "--output"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(gen.status.success(), "generate failed");

    let mut same = 0;
    let mut notes = Vec::new();
    for algo in ["kmeans", "fcm", "rkmeans", "rfcm"] {
        let run = |p: &Path| {
            Command::new(env!("CARGO_BIN_EXE_mfcluster"))
                .args([
                    "fit", "--algo", algo, "--k", "2", "--seed", "11", "--init", "random",
                    "--input",
                ])
                .arg(p)
                .output()
                .unwrap()
        };
        let (a, b) = (run(&data), run(&data));
        if !a.status.success() || a.status.code() != b.status.code() {
            notes.push(format!(
                "{algo}: exit {:?}/{:?}",
                a.status.code(),
                b.status.code()
            ));
            continue;
        }
        let identical = without_timings(&a.stdout) == without_timings(&b.stdout);
        // Text comparison too: the JSON must match byte for byte outside `timings`.
        let strip = |s: &[u8]| {
            let s = String::from_utf8_lossy(s).to_string();
            s[..s.find("\"timings\"").unwrap_or(s.len())].to_string()
        };
        if identical && strip(&a.stdout) == strip(&b.stdout) {
            same += 1;
        } else {
            notes.push(format!("{algo}: outputs differ"));
        }
    }
    Outcome {
        passed: same == 4,
        detail: format!(
            "{same}/4 algorithms byte-identical across two runs {}",
            notes.join("; ")
        ),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 equivalence", criterion_1),
        ("2 monotone descent", criterion_2),
        ("3 global-optimum oracle", criterion_3),
        ("4 fcm correctness", criterion_4),
        ("5 weight cancellation", criterion_5),
        ("6 robustness", criterion_6),
        ("7 complexity scaling", criterion_7),
        ("8 determinism", criterion_8),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let o = run();
        println!(
            "{} criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed {
            failed.push(name);
        }
    }
    println!("acceptance: {}/8 criteria pass", 8 - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
