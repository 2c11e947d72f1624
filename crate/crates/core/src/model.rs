//! Shared domain types and the two loss functionals.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, which is column-major, so a sample
//! (a column of `X`) is a contiguous slice.

use nalgebra::{DMatrix, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};

/// Column sums of a membership matrix must equal one within this tolerance.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// `n_features × n_samples` data, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(ClusterError::InvalidInput(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(ClusterError::InvalidInput(format!(
                "non-finite entry at feature {r}, sample {c}"
            )));
        }
        Ok(Self { values })
    }

    /// Builds from row-per-sample records (the on-disk layout), transposing.
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let m = samples.first().map_or(0, Vec::len);
        if let Some(j) = samples.iter().position(|s| s.len() != m) {
            return Err(ClusterError::Shape(format!(
                "sample {j} has {} features, expected {m}",
                samples[j].len()
            )));
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| samples[j][i]))
    }

    /// Column-major slice constructor, `values.len() == n_features * n_samples`.
    pub fn from_column_slice(n_features: usize, n_samples: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n_features * n_samples {
            return Err(ClusterError::Shape(format!(
                "{} values cannot fill a {n_features}x{n_samples} matrix",
                values.len()
            )));
        }
        Self::new(DMatrix::from_column_slice(n_features, n_samples, values))
    }

    pub fn n_features(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn sample(&self, j: usize) -> DVectorView<'_, f64> {
        self.values.column(j)
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

/// Crisp `k × n` assignment, stored as one cluster label per sample.
///
/// The one-hot invariant holds by construction; `to_matrix` materializes the
/// binary matrix when the dense form is needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssignmentMatrix {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl AssignmentMatrix {
    pub fn new(labels: Vec<usize>, n_clusters: usize) -> Result<Self> {
        if n_clusters == 0 {
            return Err(ClusterError::InvalidInput("n_clusters must be >= 1".into()));
        }
        if let Some(j) = labels.iter().position(|&l| l >= n_clusters) {
            return Err(ClusterError::InvalidInput(format!(
                "label {} of sample {j} is out of range for {n_clusters} clusters",
                labels[j]
            )));
        }
        Ok(Self { labels, n_clusters })
    }

    /// Validates a dense `k × n` binary matrix with exactly one 1 per column.
    pub fn from_matrix(z: &DMatrix<f64>) -> Result<Self> {
        let mut labels = Vec::with_capacity(z.ncols());
        for (j, col) in z.column_iter().enumerate() {
            if col.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(ClusterError::InvalidInput(format!(
                    "column {j} has a non-binary entry"
                )));
            }
            let ones: Vec<usize> = (0..col.len()).filter(|&i| col[i] == 1.0).collect();
            if ones.len() != 1 {
                return Err(ClusterError::InvalidInput(format!(
                    "column {j} has {} ones, expected exactly one",
                    ones.len()
                )));
            }
            labels.push(ones[0]);
        }
        Self::new(labels, z.nrows())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.n_clusters, self.labels.len());
        for (j, &l) in self.labels.iter().enumerate() {
            z[(l, j)] = 1.0;
        }
        z
    }

    /// Diagonal of `Z Zᵀ`.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn empty_clusters(&self) -> Vec<usize> {
        self.cluster_sizes()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub(crate) fn set_label(&mut self, sample: usize, cluster: usize) {
        debug_assert!(cluster < self.n_clusters);
        self.labels[sample] = cluster;
    }
}

/// Fuzzy `k × n` membership matrix with its fuzzifier exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    values: DMatrix<f64>,
    fuzzifier: f64,
}

impl MembershipMatrix {
    pub fn new(values: DMatrix<f64>, fuzzifier: f64) -> Result<Self> {
        validate_fuzzifier(fuzzifier)?;
        if values.nrows() == 0 {
            return Err(ClusterError::InvalidInput(
                "membership matrix has no clusters".into(),
            ));
        }
        for (j, col) in values.column_iter().enumerate() {
            if col.iter().any(|&u| !(0.0..=1.0).contains(&u)) {
                return Err(ClusterError::InvalidInput(format!(
                    "membership column {j} has an entry outside [0, 1]"
                )));
            }
            let s: f64 = col.sum();
            if (s - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(ClusterError::InvalidInput(format!(
                    "membership column {j} sums to {s}"
                )));
            }
        }
        Ok(Self { values, fuzzifier })
    }

    pub(crate) fn new_unchecked(values: DMatrix<f64>, fuzzifier: f64) -> Self {
        Self { values, fuzzifier }
    }

    /// The crisp assignment viewed as a (degenerate) membership matrix.
    pub fn from_assignment(z: &AssignmentMatrix, fuzzifier: f64) -> Result<Self> {
        Self::new(z.to_matrix(), fuzzifier)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn fuzzifier(&self) -> f64 {
        self.fuzzifier
    }

    pub fn n_clusters(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    /// `U^(m)`, recomputed on every call.
    pub fn exponentiated(&self) -> DMatrix<f64> {
        exponentiate_membership(self)
    }

    /// Argmax per column; ties go to the lowest cluster index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.values
            .column_iter()
            .map(|col| {
                let mut best = 0;
                for i in 1..col.len() {
                    if col[i] > col[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

pub(crate) fn validate_fuzzifier(fuzzifier: f64) -> Result<()> {
    if !(fuzzifier.is_finite() && fuzzifier > 1.0) {
        return Err(ClusterError::InvalidConfig(format!(
            "fuzzifier must be a finite value > 1, got {fuzzifier}"
        )));
    }
    Ok(())
}

/// `n_features × n_clusters` centroid matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    values: DMatrix<f64>,
}

impl Centroids {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() == 0 || values.nrows() == 0 {
            return Err(ClusterError::InvalidInput(
                "centroid matrix must be non-empty".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ClusterError::InvalidInput(
                "centroids must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    pub(crate) fn new_unchecked(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn n_features(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn centroid(&self, i: usize) -> DVectorView<'_, f64> {
        self.values.column(i)
    }

    pub(crate) fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }
}

/// IRLS weights `w_j = 1 / (2‖e_j‖ + ζ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualWeights {
    weights: Vec<f64>,
    smoothing: f64,
}

impl ResidualWeights {
    pub fn new(weights: Vec<f64>, smoothing: f64) -> Result<Self> {
        validate_smoothing(smoothing)?;
        let cap = 1.0 / smoothing;
        if let Some(j) = weights.iter().position(|&w| !(w > 0.0 && w <= cap)) {
            return Err(ClusterError::InvalidInput(format!(
                "weight {} of sample {j} is outside (0, 1/zeta]",
                weights[j]
            )));
        }
        Ok(Self { weights, smoothing })
    }

    /// All-ones weights; the implied smoothing is 1 so the `≤ 1/ζ` bound holds.
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
            smoothing: 1.0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub(crate) fn from_parts_unchecked(weights: Vec<f64>, smoothing: f64) -> Self {
        Self { weights, smoothing }
    }
}

pub(crate) fn validate_smoothing(zeta: f64) -> Result<()> {
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(ClusterError::InvalidConfig(format!(
            "smoothing zeta must be finite and > 0, got {zeta}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ConvergedAssignmentsFixed,
    ConvergedRelativeTolerance,
    MaxIterations,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::ConvergedAssignmentsFixed => "converged_assignments_fixed",
            Termination::ConvergedRelativeTolerance => "converged_relative_tolerance",
            Termination::MaxIterations => "max_iterations",
        })
    }
}

/// Surrogate `Σ w_j ‖e_j‖²` evaluated with one frozen weight vector before and
/// after the updates that are supposed to minimize it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePass {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Tracked objective, one entry per iteration: `‖X − MC‖_F²` for the
    /// classical fitters and the ℓ1,2 norm of the residual for the robust ones.
    pub objective_trajectory: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub final_objective: f64,
    /// Fuzzy fitters only: the classical distortion `Σ u_ij^m ‖x_j − μ_i‖²`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distortion_trajectory: Vec<f64>,
    /// Robust fitters only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub surrogate_passes: Vec<SurrogatePass>,
    /// Robust fitters only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_weights: Option<Vec<f64>>,
}

impl FitReport {
    pub(crate) fn new() -> Self {
        Self {
            objective_trajectory: Vec::new(),
            iterations: 0,
            termination: Termination::MaxIterations,
            final_objective: f64::NAN,
            distortion_trajectory: Vec::new(),
            surrogate_passes: Vec::new(),
            final_weights: None,
        }
    }

    /// Largest `(J(t+1) − J(t)) / max(1, J(t))` over the trajectory; `≤ 0`
    /// for a non-increasing sequence.
    pub fn max_relative_increase(&self) -> f64 {
        max_relative_increase(&self.objective_trajectory)
    }

    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.max_relative_increase() <= slack
    }

    /// Largest relative increase across the frozen-weight surrogate passes.
    pub fn max_surrogate_increase(&self) -> f64 {
        self.surrogate_passes
            .iter()
            .map(|p| (p.after - p.before) / p.before.abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn max_relative_increase(trajectory: &[f64]) -> f64 {
    trajectory
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sum of the Euclidean norms of the columns of `a`.
pub fn l12_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::InvalidInput(
            "l12 norm of a non-finite matrix".into(),
        ));
    }
    Ok(a.column_iter().map(|c| c.norm()).sum())
}

fn check_factor_shapes(x: &DataMatrix, m: &Centroids, coeffs: &DMatrix<f64>) -> Result<()> {
    if m.n_features() != x.n_features() {
        return Err(ClusterError::Shape(format!(
            "centroids have {} features, data has {}",
            m.n_features(),
            x.n_features()
        )));
    }
    if coeffs.nrows() != m.n_clusters() || coeffs.ncols() != x.n_samples() {
        return Err(ClusterError::Shape(format!(
            "coefficient matrix is {}x{}, expected {}x{}",
            coeffs.nrows(),
            coeffs.ncols(),
            m.n_clusters(),
            x.n_samples()
        )));
    }
    Ok(())
}

/// `E = X − M C`; column `j` is the residual of sample `j`.
pub fn residual_columns(
    x: &DataMatrix,
    m: &Centroids,
    coeffs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_factor_shapes(x, m, coeffs)?;
    Ok(x.values() - m.values() * coeffs)
}

/// `‖X − M C‖_F²` where `C` is `Z` or `U^(m)`.
pub fn frobenius_objective(x: &DataMatrix, m: &Centroids, coeffs: &DMatrix<f64>) -> Result<f64> {
    Ok(residual_columns(x, m, coeffs)?.norm_squared())
}

/// Elementwise `u_ij^fuzzifier`.
pub fn exponentiate_membership(u: &MembershipMatrix) -> DMatrix<f64> {
    let f = u.fuzzifier();
    u.values().map(|v| v.powf(f))
}

/// `k × n` squared distances `‖x_j − μ_i‖²`.
pub(crate) fn squared_distances(x: &DataMatrix, m: &Centroids) -> DMatrix<f64> {
    let (n, k) = (x.n_samples(), m.n_clusters());
    let mut d = DMatrix::zeros(k, n);
    for j in 0..n {
        let xj = x.sample(j);
        for i in 0..k {
            d[(i, j)] = squared_distance(xj.as_slice(), m.centroid(i).as_slice());
        }
    }
    d
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Crisp residual objective `Σ_j ‖x_j − μ_{z_j}‖²`, computed without forming `Z`.
pub(crate) fn crisp_objective(x: &DataMatrix, m: &Centroids, z: &AssignmentMatrix) -> f64 {
    z.labels()
        .iter()
        .enumerate()
        .map(|(j, &l)| squared_distance(x.sample(j).as_slice(), m.centroid(l).as_slice()))
        .sum()
}

/// Crisp residual column norms `‖x_j − μ_{z_j}‖`.
pub(crate) fn crisp_residual_norms(
    x: &DataMatrix,
    m: &Centroids,
    z: &AssignmentMatrix,
) -> Vec<f64> {
    z.labels()
        .iter()
        .enumerate()
        .map(|(j, &l)| squared_distance(x.sample(j).as_slice(), m.centroid(l).as_slice()).sqrt())
        .collect()
}
