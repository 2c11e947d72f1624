//! Robust crisp k-means: minimizes `‖X − M Z‖_{1,2}` by IRLS.
//!
//! The ℓ1,2 norm is replaced at each iteration by the quadratic surrogate
//! `Σ_j w_j ‖x_j − M z_j‖²` with `w_j = 1 / (2‖e_j‖ + ζ)` taken from the
//! current residuals. One iteration is:
//!
//! 1. centroids from the current assignment and the previous weights,
//! 2. residuals and new weights,
//! 3. reassignment.
//!
//! Because `w_j` is the same for every candidate cluster of sample `j`, the
//! weighted assignment picks the same cluster as the unweighted one; robustness
//! comes entirely from the weighted centroid update. With
//! [`CentroidWeighting::PaperLiteral`] the centroid update ignores the weights
//! too and the whole algorithm coincides with classical k-means.

use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};
use crate::init::{init_centroids, repair_all_empty};
use crate::kmeans::{assign_points, cluster_means, KMeansConfig};
use crate::model::{
    crisp_residual_norms, squared_distance, validate_smoothing, AssignmentMatrix, Centroids,
    DataMatrix, FitReport, ResidualWeights, SurrogatePass, Termination,
};
use crate::solver::{relative_change_below, IterativeSolver, StepOutcome};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidWeighting {
    /// `M = X W Zᵀ (Z W Zᵀ)⁻¹`: weighted cluster means, the exact minimizer
    /// of the frozen-weight surrogate.
    #[default]
    SurrogateConsistent,
    /// `M = X Zᵀ (Z Zᵀ)⁻¹`: plain cluster means.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustKMeansConfig {
    pub base: KMeansConfig,
    /// `None` uses [`default_smoothing_zeta`].
    pub smoothing_zeta: Option<f64>,
    pub centroid_weighting: CentroidWeighting,
    /// Keeps every weight at one, which reduces the fitter to classical k-means.
    pub unit_weights: bool,
}

impl RobustKMeansConfig {
    pub fn new(base: KMeansConfig) -> Self {
        Self {
            base,
            smoothing_zeta: None,
            centroid_weighting: CentroidWeighting::SurrogateConsistent,
            unit_weights: false,
        }
    }

    pub fn with_weighting(mut self, mode: CentroidWeighting) -> Self {
        self.centroid_weighting = mode;
        self
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.smoothing_zeta = Some(zeta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if let Some(z) = self.smoothing_zeta {
            validate_smoothing(z)?;
        }
        Ok(())
    }

    pub fn zeta_for(&self, x: &DataMatrix) -> f64 {
        self.smoothing_zeta
            .unwrap_or_else(|| default_smoothing_zeta(x))
    }
}

/// `1e-8 ×` the median sample norm (or `1e-8` if that median is zero).
pub fn default_smoothing_zeta(x: &DataMatrix) -> f64 {
    let mut norms: Vec<f64> = x.values().column_iter().map(|c| c.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let n = norms.len();
    let median = if n % 2 == 1 {
        norms[n / 2]
    } else {
        0.5 * (norms[n / 2 - 1] + norms[n / 2])
    };
    if median > 0.0 {
        1e-8 * median
    } else {
        1e-8
    }
}

/// `w_j = 1 / (2‖e_j‖ + ζ)` for each residual column.
pub fn compute_residual_weights(residuals: &DMatrix<f64>, zeta: f64) -> Result<ResidualWeights> {
    validate_smoothing(zeta)?;
    let norms: Vec<f64> = residuals.column_iter().map(|c| c.norm()).collect();
    Ok(weights_from_norms(&norms, zeta))
}

pub(crate) fn weights_from_norms(norms: &[f64], zeta: f64) -> ResidualWeights {
    let w = norms.iter().map(|&r| 1.0 / (2.0 * r + zeta)).collect();
    ResidualWeights::from_parts_unchecked(w, zeta)
}

pub(crate) fn check_weights(x: &DataMatrix, w: &ResidualWeights) -> Result<()> {
    if w.len() != x.n_samples() {
        return Err(ClusterError::Shape(format!(
            "{} weights for {} samples",
            w.len(),
            x.n_samples()
        )));
    }
    Ok(())
}

pub fn update_centroids_weighted(
    x: &DataMatrix,
    z: &AssignmentMatrix,
    w: &ResidualWeights,
    mode: CentroidWeighting,
) -> Result<Centroids> {
    check_weights(x, w)?;
    match mode {
        CentroidWeighting::SurrogateConsistent => cluster_means(x, z, Some(w.weights())),
        CentroidWeighting::PaperLiteral => cluster_means(x, z, None),
    }
}

/// `argmin_r w_j ‖x_j − μ_r‖²`, lowest index on ties.
pub fn assign_points_weighted(
    x: &DataMatrix,
    m: &Centroids,
    w: &ResidualWeights,
) -> Result<AssignmentMatrix> {
    check_weights(x, w)?;
    if m.n_features() != x.n_features() {
        return Err(ClusterError::Shape("centroids do not match data".into()));
    }
    let labels = (0..x.n_samples())
        .map(|j| {
            let wj = w.weights()[j];
            let xj = x.sample(j);
            let mut best = (
                0,
                wj * squared_distance(xj.as_slice(), m.centroid(0).as_slice()),
            );
            for i in 1..m.n_clusters() {
                let d = wj * squared_distance(xj.as_slice(), m.centroid(i).as_slice());
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0
        })
        .collect();
    AssignmentMatrix::new(labels, m.n_clusters())
}

/// `Σ_j w_j ‖x_j − μ_{z_j}‖²`.
pub fn crisp_surrogate(
    x: &DataMatrix,
    m: &Centroids,
    z: &AssignmentMatrix,
    w: &ResidualWeights,
) -> f64 {
    crisp_residual_norms(x, m, z)
        .iter()
        .zip(w.weights())
        .map(|(r, w)| w * r * r)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustKMeansFit {
    pub centroids: Centroids,
    pub assignment: AssignmentMatrix,
    pub weights: ResidualWeights,
    pub report: FitReport,
}

/// IRLS loop; stops once the assignment is unchanged and the ℓ1,2 objective
/// moved by less than the relative tolerance, or at the iteration cap.
///
/// Each [`SurrogatePass`] in the report holds the surrogate under one frozen
/// weight vector, evaluated right after those weights were computed and again
/// after the following reassignment and centroid update.
#[derive(Debug, Clone)]
pub struct RobustKMeansSolver<'a> {
    x: &'a DataMatrix,
    config: RobustKMeansConfig,
    zeta: f64,
    centroids: Centroids,
    assignment: AssignmentMatrix,
    weights: ResidualWeights,
    pending_surrogate: Option<f64>,
    report: FitReport,
    finished: Option<Termination>,
}

impl<'a> RobustKMeansSolver<'a> {
    pub fn new(x: &'a DataMatrix, config: RobustKMeansConfig) -> Result<Self> {
        config.validate()?;
        config.base.validate_for(x)?;
        let m0 = init_centroids(x, config.base.n_clusters, config.base.init())?;
        Self::with_centroids(x, config, m0)
    }

    pub fn with_centroids(
        x: &'a DataMatrix,
        config: RobustKMeansConfig,
        m0: Centroids,
    ) -> Result<Self> {
        config.validate()?;
        config.base.validate_for(x)?;
        if m0.n_clusters() != config.base.n_clusters || m0.n_features() != x.n_features() {
            return Err(ClusterError::Shape(
                "initial centroids have the wrong shape".into(),
            ));
        }
        let z0 = assign_points(x, &m0)?;
        let (centroids, assignment) = repair_all_empty(x, m0, z0)?;
        Ok(Self {
            x,
            config,
            zeta: config.zeta_for(x),
            centroids,
            assignment,
            weights: ResidualWeights::uniform(x.n_samples()),
            pending_surrogate: None,
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

    pub fn weights(&self) -> &ResidualWeights {
        &self.weights
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn into_fit(self) -> RobustKMeansFit {
        RobustKMeansFit {
            centroids: self.centroids,
            assignment: self.assignment,
            weights: self.weights,
            report: self.report,
        }
    }

    fn finish(&mut self, t: Termination, objective: f64) -> StepOutcome {
        self.report.termination = t;
        self.report.final_objective = objective;
        self.report.final_weights = Some(self.weights.weights().to_vec());
        self.finished = Some(t);
        StepOutcome::Finished(t)
    }
}

impl IterativeSolver for RobustKMeansSolver<'_> {
    fn step(&mut self) -> Result<StepOutcome> {
        if let Some(t) = self.finished {
            return Ok(StepOutcome::Finished(t));
        }
        let x = self.x;
        // Step 1 with the weights from the previous iteration.
        let m = update_centroids_weighted(
            x,
            &self.assignment,
            &self.weights,
            self.config.centroid_weighting,
        )?;
        if let Some(before) = self.pending_surrogate.take() {
            let after = crisp_surrogate(x, &m, &self.assignment, &self.weights);
            self.report
                .surrogate_passes
                .push(SurrogatePass { before, after });
        }

        // Step 2.
        let norms = crisp_residual_norms(x, &m, &self.assignment);
        let objective: f64 = norms.iter().sum();
        let previous = self.report.objective_trajectory.last().copied();
        self.report.objective_trajectory.push(objective);
        self.report.iterations += 1;
        let weights = if self.config.unit_weights {
            ResidualWeights::uniform(x.n_samples())
        } else {
            weights_from_norms(&norms, self.zeta)
        };
        let before: f64 = norms
            .iter()
            .zip(weights.weights())
            .map(|(r, w)| w * r * r)
            .sum();

        // Step 3.
        let z_new = assign_points_weighted(x, &m, &weights)?;
        let (_, z_new) = repair_all_empty(x, m.clone(), z_new)?;
        self.centroids = m;
        self.weights = weights;

        let fixed = z_new == self.assignment;
        let settled = previous.is_some_and(|p| {
            relative_change_below(p, objective, self.config.base.relative_tolerance)
        });
        if fixed && settled {
            return Ok(self.finish(Termination::ConvergedAssignmentsFixed, objective));
        }
        if self.report.iterations >= self.config.base.max_iterations {
            return Ok(self.finish(Termination::MaxIterations, objective));
        }
        self.assignment = z_new;
        self.pending_surrogate = Some(before);
        Ok(StepOutcome::Continue)
    }

    fn iterations(&self) -> usize {
        self.report.iterations
    }

    fn is_finished(&self) -> bool {
        self.finished.is_some()
    }
}

pub fn fit_robust_kmeans(x: &DataMatrix, config: RobustKMeansConfig) -> Result<RobustKMeansFit> {
    let mut solver = RobustKMeansSolver::new(x, config)?;
    solver.run_to_end()?;
    Ok(solver.into_fit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmeans::{update_centroids, KMeansSolver};
    use crate::model::l12_norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(v: &[f64]) -> DataMatrix {
        DataMatrix::from_column_slice(1, v.len(), v).unwrap()
    }

    fn random_data(seed: u64, m: usize, n: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..m * n).map(|_| rng.random_range(-5.0..5.0)).collect();
        DataMatrix::from_column_slice(m, n, &v).unwrap()
    }

    #[test]
    fn weight_examples() {
        let e = DMatrix::from_row_slice(1, 3, &[0.0, 0.5, 2.0]);
        let w = compute_residual_weights(&e, 1e-3).unwrap();
        assert_eq!(w.weights()[0], 1e3);
        assert!((w.weights()[1] - 1.0 / 1.001).abs() < 1e-15);
        assert!(w.weights()[1] > w.weights()[2]);
        let tiny =
            compute_residual_weights(&DMatrix::from_row_slice(1, 1, &[0.5]), 1e-300).unwrap();
        assert_eq!(tiny.weights()[0], 1.0);
        assert!(compute_residual_weights(&e, 0.0).is_err());
    }

    #[test]
    fn uniform_weights_match_classic_centroids() {
        let x = random_data(1, 2, 10);
        let z = AssignmentMatrix::new((0..10).map(|j| j % 3).collect(), 3).unwrap();
        let w = ResidualWeights::new(vec![0.4; 10], 1.0).unwrap();
        let classic = update_centroids(&x, &z).unwrap();
        for mode in [
            CentroidWeighting::SurrogateConsistent,
            CentroidWeighting::PaperLiteral,
        ] {
            let m = update_centroids_weighted(&x, &z, &w, mode).unwrap();
            assert!((m.values() - classic.values()).amax() < 1e-12);
        }
    }

    #[test]
    fn vanishing_weight_drops_member() {
        let x = line(&[0.0, 3.0]);
        let z = AssignmentMatrix::new(vec![0, 0], 1).unwrap();
        let w = ResidualWeights::new(vec![1.0, 1e-12], 1e-12).unwrap();
        let m =
            update_centroids_weighted(&x, &z, &w, CentroidWeighting::SurrogateConsistent).unwrap();
        assert!(m.centroid(0)[0].abs() < 1e-11);
    }

    #[test]
    fn weighted_assignment_examples() {
        let x = line(&[0.0, 10.0, 5.0]);
        let m = Centroids::new(DMatrix::from_row_slice(1, 2, &[1.0, 9.0])).unwrap();
        let w = ResidualWeights::new(vec![0.3, 7.0, 2.0], 0.1).unwrap();
        assert_eq!(
            assign_points_weighted(&x, &m, &w).unwrap().labels(),
            &[0, 1, 0]
        );
    }

    #[test]
    fn surrogate_update_minimizes_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..10 {
            let x = random_data(seed, 2, 12);
            let z = AssignmentMatrix::new((0..12).map(|j| j % 3).collect(), 3).unwrap();
            let w =
                ResidualWeights::new((0..12).map(|_| rng.random_range(0.1..2.0)).collect(), 0.1)
                    .unwrap();
            let m = update_centroids_weighted(&x, &z, &w, CentroidWeighting::SurrogateConsistent)
                .unwrap();
            let base = crisp_surrogate(&x, &m, &z, &w);
            for idx in 0..m.values().len() {
                for d in [1e-3, -1e-3] {
                    let mut p = m.values().clone();
                    p[idx] += d;
                    let v = crisp_surrogate(&x, &Centroids::new(p).unwrap(), &z, &w);
                    assert!(v >= base - 1e-12 * base);
                }
            }
        }
    }

    #[test]
    fn duplicated_sample_single_cluster() {
        let x = DataMatrix::from_column_slice(2, 5, &[1.5, -2.0].repeat(5)).unwrap();
        let fit = fit_robust_kmeans(&x, RobustKMeansConfig::new(KMeansConfig::new(1))).unwrap();
        assert_eq!(fit.centroids.centroid(0).as_slice(), &[1.5, -2.0]);
        assert_eq!(fit.report.final_objective, 0.0);
    }

    #[test]
    fn unit_weights_reproduce_classic_iterates() {
        for seed in 0..10 {
            let x = random_data(seed, 2, 40);
            let base = KMeansConfig::new(3).with_seed(seed);
            let mut cfg = RobustKMeansConfig::new(base);
            cfg.unit_weights = true;
            let mut classic = KMeansSolver::new(&x, base).unwrap();
            let mut robust = RobustKMeansSolver::new(&x, cfg).unwrap();
            loop {
                let a = classic.step().unwrap();
                let b = robust.step().unwrap();
                assert_eq!(classic.centroids(), robust.centroids());
                assert_eq!(classic.assignment(), robust.assignment());
                if matches!(a, StepOutcome::Finished(_)) {
                    break;
                }
                assert_eq!(b, StepOutcome::Continue);
            }
        }
    }

    #[test]
    fn surrogate_descends_and_l12_improves() {
        for seed in 0..10 {
            let x = random_data(seed + 20, 3, 50);
            let fit = fit_robust_kmeans(
                &x,
                RobustKMeansConfig::new(KMeansConfig::new(3).with_seed(seed)),
            )
            .unwrap();
            assert!(fit.report.max_surrogate_increase() <= 1e-9);
            let first = fit.report.objective_trajectory[0];
            assert!(fit.report.final_objective <= first * (1.0 + 1e-12));
            let e = crate::model::residual_columns(&x, &fit.centroids, &fit.assignment.to_matrix())
                .unwrap();
            assert!(
                (l12_norm(&e).unwrap() - fit.report.final_objective).abs()
                    <= 1e-9 * fit.report.final_objective
            );
            let cap = 1.0 / default_smoothing_zeta(&x);
            assert!(fit.weights.weights().iter().all(|&w| w > 0.0 && w <= cap));
        }
    }

    #[test]
    fn zeta_default_scales_with_data() {
        let x = line(&[3.0, -4.0, 5.0]);
        assert!((default_smoothing_zeta(&x) - 4e-8).abs() < 1e-20);
        let zeros = line(&[0.0, 0.0]);
        assert_eq!(default_smoothing_zeta(&zeros), 1e-8);
    }

    proptest! {
        #[test]
        fn weighted_assignment_equals_unweighted(seed in any::<u64>(), k in 1usize..5) {
            let x = random_data(seed, 3, 25);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let m = Centroids::new(DMatrix::from_fn(3, k, |_, _| rng.random_range(-5.0..5.0))).unwrap();
            let w = ResidualWeights::new((0..25).map(|_| rng.random_range(1e-6..1e3)).collect(), 1e-4).unwrap();
            prop_assert_eq!(assign_points_weighted(&x, &m, &w).unwrap(), assign_points(&x, &m).unwrap());
        }
    }
}
