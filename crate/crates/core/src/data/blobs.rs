use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};
use crate::model::DataMatrix;

/// Isotropic Gaussian clusters with a fraction of columns replaced by
/// far-away outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_features: usize,
    pub samples_per_cluster: usize,
    pub centers: Vec<Vec<f64>>,
    pub noise_sigma: f64,
    pub outlier_fraction: f64,
    pub outlier_radius: f64,
    pub rng_seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ClusterError::InvalidConfig(msg));
        if self.n_features == 0 || self.samples_per_cluster == 0 || self.centers.is_empty() {
            return bad("blob spec needs features, centers and samples".into());
        }
        if let Some(c) = self.centers.iter().find(|c| c.len() != self.n_features) {
            return bad(format!(
                "center {c:?} does not have {} coordinates",
                self.n_features
            ));
        }
        if self.centers.iter().flatten().any(|v| !v.is_finite()) {
            return bad("centers must be finite".into());
        }
        for (a, ca) in self.centers.iter().enumerate() {
            if self.centers[..a].contains(ca) {
                return bad(format!("center {a} is a duplicate"));
            }
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            ));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return bad(format!(
                "outlier_fraction must lie in [0, 1), got {}",
                self.outlier_fraction
            ));
        }
        if !(self.outlier_radius > 0.0 && self.outlier_radius.is_finite()) {
            return bad(format!(
                "outlier_radius must be positive, got {}",
                self.outlier_radius
            ));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.samples_per_cluster * self.centers.len()
    }

    pub fn n_outliers(&self) -> usize {
        (self.outlier_fraction * self.n_samples() as f64).round() as usize
    }

    /// Mean of the cluster centers; outliers sit on a sphere around it.
    pub fn center_of_centers(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.n_features);
        for center in &self.centers {
            c += DVector::from_column_slice(center);
        }
        c / self.centers.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    /// Generating cluster of every column, outliers included.
    pub true_labels: Vec<usize>,
    pub outlier_mask: Vec<bool>,
}

impl LabeledDataset {
    pub fn n_outliers(&self) -> usize {
        self.outlier_mask.iter().filter(|&&o| o).count()
    }
}

/// Columns are grouped by cluster: `samples_per_cluster` columns for center 0,
/// then center 1, and so on. A random subset of `round(fraction · n)` columns
/// is then overwritten with outliers.
pub fn generate_blobs(spec: &BlobSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let m = spec.n_features;
    let n = spec.n_samples();
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| ClusterError::InvalidConfig(e.to_string()))?;

    let mut x = DMatrix::zeros(m, n);
    let mut labels = Vec::with_capacity(n);
    for (i, center) in spec.centers.iter().enumerate() {
        for s in 0..spec.samples_per_cluster {
            let j = i * spec.samples_per_cluster + s;
            for (r, c) in center.iter().enumerate() {
                x[(r, j)] = c + noise.sample(&mut rng);
            }
            labels.push(i);
        }
    }

    let mut mask = vec![false; n];
    let origin = spec.center_of_centers();
    for j in rand::seq::index::sample(&mut rng, n, spec.n_outliers()) {
        let dir = loop {
            let v = DVector::<f64>::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let norm = v.norm();
            if norm > 1e-12 {
                break v / norm;
            }
        };
        x.set_column(j, &(&origin + dir * spec.outlier_radius));
        mask[j] = true;
    }

    Ok(LabeledDataset {
        data: DataMatrix::new(x)?,
        true_labels: labels,
        outlier_mask: mask,
    })
}
