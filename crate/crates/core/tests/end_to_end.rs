use mfcluster::data::{
    brute_force_kmeans, clustering_accuracy, generate_blobs, read_dataset, write_dataset, BlobSpec,
};
use mfcluster::kmeans::factorized_objective;
use mfcluster::{
    fit_fcm, fit_kmeans, fit_robust_fcm, fit_robust_kmeans, DataMatrix, FcmConfig, InitKind,
    KMeansConfig, RobustFcmConfig, RobustKMeansConfig,
};
use proptest::prelude::*;

fn spec(seed: u64, outliers: f64) -> BlobSpec {
    BlobSpec {
        n_features: 2,
        samples_per_cluster: 60,
        centers: vec![vec![0.0, 0.0], vec![12.0, 0.0], vec![6.0, 10.0]],
        noise_sigma: 0.8,
        outlier_fraction: outliers,
        outlier_radius: 40.0,
        rng_seed: seed,
    }
}

#[test]
fn separated_blobs_are_recovered() {
    for seed in 0..5 {
        let d = generate_blobs(&spec(seed, 0.0)).unwrap();
        let km = fit_kmeans(&d.data, KMeansConfig::new(3).with_seed(seed)).unwrap();
        assert_eq!(
            clustering_accuracy(km.assignment.labels(), &d.true_labels).unwrap(),
            1.0
        );
        let rk = fit_robust_kmeans(
            &d.data,
            RobustKMeansConfig::new(KMeansConfig::new(3).with_seed(seed)),
        )
        .unwrap();
        assert_eq!(
            clustering_accuracy(rk.assignment.labels(), &d.true_labels).unwrap(),
            1.0
        );
    }
}

#[test]
fn robust_weights_flag_outliers() {
    let d = generate_blobs(&spec(9, 0.05)).unwrap();
    let cfg = RobustKMeansConfig::new(
        KMeansConfig::new(3)
            .with_seed(1)
            .with_init(InitKind::RandomSamples),
    );
    let fit = fit_robust_kmeans(&d.data, cfg).unwrap();
    let w = fit.weights.weights();
    let inlier_min = (0..w.len())
        .filter(|&j| !d.outlier_mask[j])
        .map(|j| w[j])
        .fold(f64::INFINITY, f64::min);
    let outlier_max = (0..w.len())
        .filter(|&j| d.outlier_mask[j])
        .map(|j| w[j])
        .fold(0.0, f64::max);
    assert!(
        outlier_max < inlier_min,
        "outlier weight {outlier_max} vs inlier {inlier_min}"
    );
}

#[test]
fn fuzzy_fitters_run_on_clean_blobs() {
    let d = generate_blobs(&spec(3, 0.0)).unwrap();
    let mut converged = 0;
    for seed in 0..10 {
        let cfg = FcmConfig::new(3).with_seed(seed);
        if let Ok(fit) = fit_robust_fcm(&d.data, RobustFcmConfig::new(cfg)) {
            assert!(fit.report.max_surrogate_increase() <= 1e-9);
            converged += 1;
        }
        if let Ok(fit) = fit_fcm(&d.data, cfg) {
            for c in fit.memberships.values().column_iter() {
                assert!((c.sum() - 1.0).abs() <= 1e-12);
            }
        }
    }
    assert!(converged > 0);
}

#[test]
fn csv_round_trip_preserves_fit() {
    let d = generate_blobs(&spec(4, 0.1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blobs.csv");
    write_dataset(&path, &d.data).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, d.data);
    let cfg = KMeansConfig::new(3).with_seed(2);
    assert_eq!(
        fit_kmeans(&back, cfg).unwrap(),
        fit_kmeans(&d.data, cfg).unwrap()
    );
}

fn small_instance(values: &[f64], m: usize) -> DataMatrix {
    DataMatrix::from_column_slice(m, values.len() / m, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_optimum_bounds_every_crisp_fit(
        values in prop::collection::vec(-10.0f64..10.0, 4..16),
        seed in any::<u64>(),
    ) {
        let m = 2;
        let usable = values.len() / m * m;
        let x = small_instance(&values[..usable], m);
        let (best, z) = brute_force_kmeans(&x, 2).unwrap();
        prop_assert!((factorized_objective(&x, &z).unwrap() - best).abs() <= 1e-9 * best.max(1.0));

        for init in [InitKind::PlusPlus, InitKind::RandomSamples] {
            let cfg = KMeansConfig::new(2).with_seed(seed).with_init(init);
            if let Ok(fit) = fit_kmeans(&x, cfg) {
                prop_assert!(fit.report.final_objective >= best - 1e-10);
            }
            if let Ok(fit) = fit_robust_kmeans(&x, RobustKMeansConfig::new(cfg)) {
                let crisp = factorized_objective(&x, &fit.assignment).unwrap();
                prop_assert!(crisp >= best - 1e-10);
            }
        }
    }
}
