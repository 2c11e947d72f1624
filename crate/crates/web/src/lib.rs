//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations: generate a 2-D blob dataset, fit one of the four
//! algorithms to a point set, and evaluate fuzzy memberships over a grid for
//! shading the canvas. Inputs and outputs are JSON strings so the page needs
//! no generated TypeScript types.

use mfcluster::data::{generate_blobs, BlobSpec};
use mfcluster::fcm::update_memberships;
use mfcluster::{
    fit_fcm, fit_kmeans, fit_robust_fcm, fit_robust_kmeans, Centroids, ClusterError, DataMatrix,
    FcmConfig, InitKind, KMeansConfig, RobustFcmConfig, RobustKMeansConfig,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Dataset {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub outliers: Vec<bool>,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct FitView {
    pub centroids: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub objective_trajectory: Vec<f64>,
    pub termination: String,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Reply<T> {
    Ok(T),
    Err { error: String },
}

fn reply<T: Serialize>(r: Result<T, ClusterError>) -> String {
    let r = match r {
        Ok(v) => Reply::Ok(v),
        Err(e) => Reply::Err {
            error: e.to_string(),
        },
    };
    serde_json::to_string(&r).expect("reply serializes")
}

/// Three clusters on a triangle plus optional outliers at radius 25.
pub fn generate(
    samples_per_cluster: usize,
    noise_sigma: f64,
    outlier_fraction: f64,
    seed: u64,
) -> Result<Dataset, ClusterError> {
    let spec = BlobSpec {
        n_features: 2,
        samples_per_cluster,
        centers: vec![vec![-6.0, -4.0], vec![6.0, -4.0], vec![0.0, 6.0]],
        noise_sigma,
        outlier_fraction,
        outlier_radius: 25.0,
        rng_seed: seed,
    };
    let d = generate_blobs(&spec)?;
    Ok(Dataset {
        points: (0..d.data.n_samples())
            .map(|j| [d.data.sample(j)[0], d.data.sample(j)[1]])
            .collect(),
        labels: d.true_labels,
        outliers: d.outlier_mask,
    })
}

fn to_matrix(points: &[[f64; 2]]) -> Result<DataMatrix, ClusterError> {
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    DataMatrix::from_column_slice(2, points.len(), &flat)
}

fn pairs(c: &Centroids) -> Vec<[f64; 2]> {
    (0..c.n_clusters())
        .map(|i| [c.centroid(i)[0], c.centroid(i)[1]])
        .collect()
}

pub fn fit(
    points: &[[f64; 2]],
    algorithm: &str,
    k: usize,
    fuzzifier: f64,
    seed: u64,
) -> Result<FitView, ClusterError> {
    let x = to_matrix(points)?;
    let km = KMeansConfig::new(k)
        .with_seed(seed)
        .with_init(InitKind::RandomSamples);
    let fc = FcmConfig::new(k)
        .with_seed(seed)
        .with_init(InitKind::RandomSamples)
        .with_fuzzifier(fuzzifier);
    let view = match algorithm {
        "kmeans" => {
            let f = fit_kmeans(&x, km)?;
            (
                pairs(&f.centroids),
                f.assignment.labels().to_vec(),
                None,
                f.report,
            )
        }
        "rkmeans" => {
            let f = fit_robust_kmeans(&x, RobustKMeansConfig::new(km))?;
            (
                pairs(&f.centroids),
                f.assignment.labels().to_vec(),
                Some(f.weights.weights().to_vec()),
                f.report,
            )
        }
        "fcm" => {
            let f = fit_fcm(&x, fc)?;
            (
                pairs(&f.centroids),
                f.memberships.hard_labels(),
                None,
                f.report,
            )
        }
        "rfcm" => {
            let f = fit_robust_fcm(&x, RobustFcmConfig::new(fc))?;
            (
                pairs(&f.centroids),
                f.memberships.hard_labels(),
                Some(f.weights.weights().to_vec()),
                f.report,
            )
        }
        other => {
            return Err(ClusterError::InvalidConfig(format!(
                "unknown algorithm {other:?}"
            )))
        }
    };
    let (centroids, labels, weights, report) = view;
    Ok(FitView {
        centroids,
        labels,
        weights,
        objective_trajectory: report.objective_trajectory,
        termination: report.termination.to_string(),
    })
}

/// Row-major `(cluster, membership)` pairs of the winning cluster at every cell
/// centre of a `cols × rows` grid spanning `bounds = [x0, x1, y0, y1]`.
pub fn membership_grid(
    centroids: &[[f64; 2]],
    fuzzifier: f64,
    cols: usize,
    rows: usize,
    bounds: [f64; 4],
) -> Result<Vec<f64>, ClusterError> {
    if cols == 0 || rows == 0 {
        return Err(ClusterError::InvalidConfig(
            "grid must have at least one cell".into(),
        ));
    }
    let flat: Vec<f64> = centroids.iter().flatten().copied().collect();
    let m = Centroids::new(DMatrix::from_column_slice(2, centroids.len(), &flat))?;
    let [x0, x1, y0, y1] = bounds;
    let mut cells = Vec::with_capacity(2 * cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            cells.push(x0 + (c as f64 + 0.5) / cols as f64 * (x1 - x0));
            cells.push(y1 - (r as f64 + 0.5) / rows as f64 * (y1 - y0));
        }
    }
    let grid = DataMatrix::from_column_slice(2, cols * rows, &cells)?;
    let u = update_memberships(&grid, &m, fuzzifier, 1e-12)?;
    let mut out = Vec::with_capacity(2 * cols * rows);
    for col in u.values().column_iter() {
        let (best, value) = col.argmax();
        out.push(best as f64);
        out.push(value);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = generateBlobs)]
pub fn generate_blobs_js(
    samples_per_cluster: usize,
    noise_sigma: f64,
    outlier_fraction: f64,
    seed: u32,
) -> String {
    reply(generate(
        samples_per_cluster,
        noise_sigma,
        outlier_fraction,
        seed.into(),
    ))
}

/// `points_json` is an array of `[x, y]` pairs.
#[wasm_bindgen(js_name = fitPoints)]
pub fn fit_points_js(
    points_json: &str,
    algorithm: &str,
    k: usize,
    fuzzifier: f64,
    seed: u32,
) -> String {
    let points: Result<Vec<[f64; 2]>, _> = serde_json::from_str(points_json);
    reply(
        points
            .map_err(|e| ClusterError::InvalidInput(e.to_string()))
            .and_then(|p| fit(&p, algorithm, k, fuzzifier, seed.into())),
    )
}

/// Empty on invalid input.
#[wasm_bindgen(js_name = membershipGrid)]
#[allow(clippy::too_many_arguments)]
pub fn membership_grid_js(
    centroids_json: &str,
    fuzzifier: f64,
    cols: usize,
    rows: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
) -> Vec<f64> {
    serde_json::from_str::<Vec<[f64; 2]>>(centroids_json)
        .ok()
        .and_then(|c| membership_grid(&c, fuzzifier, cols, rows, [x0, x1, y0, y1]).ok())
        .unwrap_or_default()
}
