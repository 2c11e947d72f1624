use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfcluster"))
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/four_points.csv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn four_point_fixture_reaches_the_optimum() {
    let f = fixture();
    let out = run(&[
        "fit",
        "--algo",
        "kmeans",
        "--k",
        "2",
        "--seed",
        "7",
        "--input",
        f.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["final_objective"], 1.0);
    assert_eq!(v["report"]["termination"], "converged_assignments_fixed");
    assert_eq!(v["schema_version"], 1);
    let mut c: Vec<f64> = v["centroids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c[0].as_f64().unwrap())
        .collect();
    c.sort_by(f64::total_cmp);
    assert_eq!(c, vec![0.5, 10.5]);
}

#[test]
fn every_algorithm_emits_the_schema() {
    let f = fixture();
    for algo in ["kmeans", "fcm", "rkmeans", "rfcm"] {
        let out = run(&[
            "fit",
            "--algo",
            algo,
            "--k",
            "2",
            "--input",
            f.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{algo}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v = json(&out);
        for key in [
            "schema_version",
            "algorithm",
            "config",
            "n_features",
            "n_samples",
            "report",
            "centroids",
            "labels",
            "timings",
        ] {
            assert!(v.get(key).is_some(), "{algo} lacks {key}");
        }
        assert_eq!(v["algorithm"], algo);
        assert_eq!(v["labels"].as_array().unwrap().len(), 4);
        assert_eq!(v.get("weights").is_some(), algo.starts_with('r'));
        assert_eq!(v["config"].get("fuzzifier").is_some(), algo.contains("fcm"));
    }
}

#[test]
fn config_errors_exit_2() {
    let f = fixture();
    let f = f.to_str().unwrap();
    let cases: [&[&str]; 6] = [
        &["fit", "--algo", "kmeans", "--input", f],
        &[
            "fit",
            "--algo",
            "rfcm",
            "--k",
            "2",
            "--fuzzifier",
            "1.0",
            "--input",
            f,
        ],
        &[
            "fit",
            "--algo",
            "kmeans",
            "--k",
            "2",
            "--fuzzifier",
            "2",
            "--input",
            f,
        ],
        &["fit", "--algo", "kmeans", "--k", "9", "--input", f],
        &["verify", "--suite", "nonsense"],
        &["bench", "--algo", "kmeans", "--reps", "0"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3,4\n5\n").unwrap();
    let out = run(&[
        "fit",
        "--algo",
        "kmeans",
        "--k",
        "2",
        "--input",
        ragged.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = dir.path().join("nope.csv");
    let out = run(&[
        "fit",
        "--algo",
        "kmeans",
        "--k",
        "2",
        "--input",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_and_trajectory_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_json = dir.path().join("r.json");
    let traj = dir.path().join("t.csv");
    let f = fixture();
    let out = bin()
        .args([
            "fit",
            "--algo",
            "rkmeans",
            "--k",
            "2",
            "--input",
            f.to_str().unwrap(),
            "--output",
        ])
        .arg(&out_json)
        .arg("--trajectory-csv")
        .arg(&traj)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    let iters = v["report"]["iterations"].as_u64().unwrap() as usize;
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("iteration,objective,surrogate_before,surrogate_after\n"));
    assert_eq!(csv.lines().count(), iters + 1);
}

#[test]
fn verify_equivalence_passes() {
    let out = run(&["verify", "--suite", "equivalence", "--seeds", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("PASS equivalence/factorized_vs_two_step: 100/100 pass"),
        "{text}"
    );
}

#[test]
fn generate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = bin()
        .args([
            "generate",
            "--outlier-fraction",
            "0.1",
            "--seed",
            "2",
            "--output",
        ])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let labels = std::fs::read_to_string(dir.path().join("d.labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 201);
    assert_eq!(labels.lines().filter(|l| l.ends_with(",1")).count(), 20);

    let out = run(&[
        "fit",
        "--algo",
        "rkmeans",
        "--k",
        "2",
        "--input",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["n_samples"], 200);
}

#[test]
fn bench_small_grid_csv() {
    let out = run(&[
        "bench", "--algo", "fcm", "--n-grid", "200", "--k", "2,4", "--m", "3", "--reps", "1",
        "--iters", "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    // (m·2k + (2k)²) / (mk + k²) with m = 3, k = 2.
    assert_eq!(lines[2].split(',').nth(8), Some("2.8000"));
}
