//! Crisp k-means as alternating minimization of `‖X − M Z‖_F²`.
//!
//! `Z Zᵀ` is diagonal with the cluster sizes, so the closed-form centroid
//! update `X Zᵀ (Z Zᵀ)⁻¹` is evaluated as per-cluster sums over counts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};
use crate::init::{init_centroids, repair_all_empty, InitKind, InitStrategy};
use crate::model::{
    crisp_objective, squared_distance, AssignmentMatrix, Centroids, DataMatrix, FitReport,
    Termination,
};
use crate::solver::{relative_change_below, IterativeSolver, StepOutcome};

pub const DEFAULT_MAX_ITERATIONS: usize = 300;
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub n_clusters: usize,
    pub max_iterations: usize,
    /// Stop once `|J(t−1) − J(t)| ≤ tol · J(t−1)`; `0` disables the rule.
    pub relative_tolerance: f64,
    pub rng_seed: u64,
    pub init_strategy: InitKind,
}

impl KMeansConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            relative_tolerance: DEFAULT_RELATIVE_TOLERANCE,
            rng_seed: 0,
            init_strategy: InitKind::PlusPlus,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_init(mut self, kind: InitKind) -> Self {
        self.init_strategy = kind;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.relative_tolerance = tol;
        self
    }

    pub fn init(&self) -> InitStrategy {
        InitStrategy::new(self.init_strategy, self.rng_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(ClusterError::InvalidConfig(
                "n_clusters must be >= 1".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(ClusterError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.relative_tolerance >= 0.0 && self.relative_tolerance.is_finite()) {
            return Err(ClusterError::InvalidConfig(format!(
                "relative_tolerance must be finite and >= 0, got {}",
                self.relative_tolerance
            )));
        }
        Ok(())
    }

    pub(crate) fn validate_for(&self, x: &DataMatrix) -> Result<()> {
        self.validate()?;
        if x.n_samples() < self.n_clusters {
            return Err(ClusterError::InvalidConfig(format!(
                "{} samples cannot form {} clusters",
                x.n_samples(),
                self.n_clusters
            )));
        }
        Ok(())
    }
}

fn check_assignment_shape(x: &DataMatrix, z: &AssignmentMatrix) -> Result<()> {
    if z.n_samples() != x.n_samples() {
        return Err(ClusterError::Shape(format!(
            "assignment covers {} samples, data has {}",
            z.n_samples(),
            x.n_samples()
        )));
    }
    Ok(())
}

/// Per-cluster (optionally weighted) means, i.e. `X W Zᵀ (Z W Zᵀ)⁻¹`.
pub(crate) fn cluster_means(
    x: &DataMatrix,
    z: &AssignmentMatrix,
    weights: Option<&[f64]>,
) -> Result<Centroids> {
    check_assignment_shape(x, z)?;
    let (m, k) = (x.n_features(), z.n_clusters());
    let mut sums = DMatrix::<f64>::zeros(m, k);
    let mut mass = vec![0.0; k];
    for (j, &l) in z.labels().iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        mass[l] += w;
        let mut col = sums.column_mut(l);
        col.axpy(w, &x.sample(j), 1.0);
    }
    let empty: Vec<usize> = (0..k).filter(|&i| mass[i] <= 0.0).collect();
    if !empty.is_empty() {
        return Err(ClusterError::EmptyCluster { clusters: empty });
    }
    for (i, mut col) in sums.column_iter_mut().enumerate() {
        col /= mass[i];
    }
    Ok(Centroids::new_unchecked(sums))
}

/// Fix `Z`, update `M = X Zᵀ (Z Zᵀ)⁻¹`: each centroid is the mean of its members.
pub fn update_centroids(x: &DataMatrix, z: &AssignmentMatrix) -> Result<Centroids> {
    cluster_means(x, z, None)
}

/// Fix `M`, assign each sample to its nearest centroid (lowest index on ties).
pub fn assign_points(x: &DataMatrix, m: &Centroids) -> Result<AssignmentMatrix> {
    if m.n_features() != x.n_features() {
        return Err(ClusterError::Shape(format!(
            "centroids have {} features, data has {}",
            m.n_features(),
            x.n_features()
        )));
    }
    let labels = (0..x.n_samples())
        .map(|j| nearest_centroid(x.sample(j).as_slice(), m).0)
        .collect();
    AssignmentMatrix::new(labels, m.n_clusters())
}

/// `(index, squared distance)` of the nearest centroid; strict `<` keeps the
/// lowest index among ties.
pub(crate) fn nearest_centroid(xj: &[f64], m: &Centroids) -> (usize, f64) {
    let mut best = (0, squared_distance(xj, m.centroid(0).as_slice()));
    for i in 1..m.n_clusters() {
        let d = squared_distance(xj, m.centroid(i).as_slice());
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// `‖X − X Zᵀ (Z Zᵀ)⁻¹ Z‖_F²`, the centroid-free form of the k-means objective.
pub fn factorized_objective(x: &DataMatrix, z: &AssignmentMatrix) -> Result<f64> {
    check_assignment_shape(x, z)?;
    let sizes = z.cluster_sizes();
    let empty: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] == 0).collect();
    if !empty.is_empty() {
        return Err(ClusterError::EmptyCluster { clusters: empty });
    }
    // X Zᵀ, then right-multiply by the diagonal inverse of Z Zᵀ.
    let mut xzt = DMatrix::<f64>::zeros(x.n_features(), z.n_clusters());
    for (j, &l) in z.labels().iter().enumerate() {
        let mut col = xzt.column_mut(l);
        col += x.sample(j);
    }
    for (i, mut col) in xzt.column_iter_mut().enumerate() {
        col /= sizes[i] as f64;
    }
    // Z selects one projected column per sample.
    let mut total = 0.0;
    for (j, &l) in z.labels().iter().enumerate() {
        total += (x.sample(j) - xzt.column(l)).norm_squared();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Centroids,
    pub assignment: AssignmentMatrix,
    pub report: FitReport,
}

/// Block coordinate descent over `(M, Z)`.
///
/// Each step performs the centroid update, records `‖X − M Z‖_F²`, then
/// reassigns. An assignment that empties a cluster is repaired before the
/// next step. On termination the stored pair `(M, Z)` satisfies
/// `M = update_centroids(X, Z)`.
#[derive(Debug, Clone)]
pub struct KMeansSolver<'a> {
    x: &'a DataMatrix,
    config: KMeansConfig,
    centroids: Centroids,
    assignment: AssignmentMatrix,
    report: FitReport,
    finished: Option<Termination>,
}

impl<'a> KMeansSolver<'a> {
    pub fn new(x: &'a DataMatrix, config: KMeansConfig) -> Result<Self> {
        config.validate_for(x)?;
        let m0 = init_centroids(x, config.n_clusters, config.init())?;
        Self::with_centroids(x, config, m0)
    }

    /// Starts from caller-provided centroids instead of the configured seeding.
    pub fn with_centroids(x: &'a DataMatrix, config: KMeansConfig, m0: Centroids) -> Result<Self> {
        config.validate_for(x)?;
        if m0.n_clusters() != config.n_clusters || m0.n_features() != x.n_features() {
            return Err(ClusterError::Shape(format!(
                "initial centroids are {}x{}, expected {}x{}",
                m0.n_features(),
                m0.n_clusters(),
                x.n_features(),
                config.n_clusters
            )));
        }
        let z0 = assign_points(x, &m0)?;
        let (centroids, assignment) = repair_all_empty(x, m0, z0)?;
        Ok(Self {
            x,
            config,
            centroids,
            assignment,
            report: FitReport::new(),
            finished: None,
        })
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn assignment(&self) -> &AssignmentMatrix {
        &self.assignment
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn into_fit(self) -> KMeansFit {
        KMeansFit {
            centroids: self.centroids,
            assignment: self.assignment,
            report: self.report,
        }
    }

    fn finish(&mut self, t: Termination, objective: f64) -> StepOutcome {
        self.report.termination = t;
        self.report.final_objective = objective;
        self.finished = Some(t);
        StepOutcome::Finished(t)
    }
}

impl IterativeSolver for KMeansSolver<'_> {
    fn step(&mut self) -> Result<StepOutcome> {
        if let Some(t) = self.finished {
            return Ok(StepOutcome::Finished(t));
        }
        let m = update_centroids(self.x, &self.assignment)?;
        let objective = crisp_objective(self.x, &m, &self.assignment);
        let previous = self.report.objective_trajectory.last().copied();
        self.report.objective_trajectory.push(objective);
        self.report.iterations += 1;

        let z_new = assign_points(self.x, &m)?;
        let (_, z_new) = repair_all_empty(self.x, m.clone(), z_new)?;
        self.centroids = m;

        if z_new == self.assignment {
            return Ok(self.finish(Termination::ConvergedAssignmentsFixed, objective));
        }
        let tol = self.config.relative_tolerance;
        if tol > 0.0 && previous.is_some_and(|p| relative_change_below(p, objective, tol)) {
            return Ok(self.finish(Termination::ConvergedRelativeTolerance, objective));
        }
        if self.report.iterations >= self.config.max_iterations {
            return Ok(self.finish(Termination::MaxIterations, objective));
        }
        self.assignment = z_new;
        Ok(StepOutcome::Continue)
    }

    fn iterations(&self) -> usize {
        self.report.iterations
    }

    fn is_finished(&self) -> bool {
        self.finished.is_some()
    }
}

pub fn fit_kmeans(x: &DataMatrix, config: KMeansConfig) -> Result<KMeansFit> {
    let mut solver = KMeansSolver::new(x, config)?;
    solver.run_to_end()?;
    Ok(solver.into_fit())
}
