//! Robust fuzzy c-means: minimizes `‖X − M U^(m)‖_{1,2}` by IRLS.
//!
//! Per iteration: weighted centroids `M = X W U^(m)ᵀ (U^(m) W U^(m)ᵀ)⁻¹` using
//! the previous weights (all ones on the first iteration), then new weights
//! from the residuals, then memberships.
//!
//! The per-sample weight multiplies every squared distance of that sample and
//! cancels in the membership ratio, so memberships are exactly the unweighted
//! ones. Outliers are down-weighted only in the centroid update; their
//! memberships are not outlier-aware.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};
use crate::fcm::{update_memberships, FcmConfig};
use crate::init::init_centroids;
use crate::linalg::gram_centroids;
use crate::model::{
    squared_distances, validate_smoothing, Centroids, DataMatrix, FitReport, MembershipMatrix,
    ResidualWeights, SurrogatePass, Termination,
};
use crate::robust_kmeans::{check_weights, default_smoothing_zeta, weights_from_norms};
use crate::solver::{relative_change_below, IterativeSolver, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustFcmConfig {
    pub base: FcmConfig,
    /// `None` uses [`default_smoothing_zeta`].
    pub smoothing_zeta: Option<f64>,
    /// Keeps every weight at one, which reduces the fitter to classical FCM.
    pub unit_weights: bool,
}

impl RobustFcmConfig {
    pub fn new(base: FcmConfig) -> Self {
        Self {
            base,
            smoothing_zeta: None,
            unit_weights: false,
        }
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

/// `M = X W U^(m)ᵀ (U^(m) W U^(m)ᵀ)⁻¹`.
pub fn update_centroids_weighted_fcm(
    x: &DataMatrix,
    u: &MembershipMatrix,
    w: &ResidualWeights,
) -> Result<Centroids> {
    check_weights(x, w)?;
    if u.n_samples() != x.n_samples() {
        return Err(ClusterError::Shape("memberships do not match data".into()));
    }
    gram_centroids(x, &u.exponentiated(), Some(w.weights()))
}

/// Membership update for the weighted surrogate. The weights cancel, so this
/// returns exactly [`update_memberships`].
pub fn update_memberships_weighted(
    x: &DataMatrix,
    m: &Centroids,
    fuzzifier: f64,
    w: &ResidualWeights,
    coincidence_epsilon: f64,
) -> Result<MembershipMatrix> {
    check_weights(x, w)?;
    update_memberships(x, m, fuzzifier, coincidence_epsilon)
}

/// Residual column norms `‖x_j − M u_j^(m)‖`.
fn fuzzy_residual_norms(x: &DataMatrix, m: &Centroids, um: &DMatrix<f64>) -> Vec<f64> {
    (x.values() - m.values() * um)
        .column_iter()
        .map(|c| c.norm())
        .collect()
}

/// `J^(t) = Σ_j w_j ‖x_j − M u_j^(m)‖²`.
pub fn fuzzy_surrogate(
    x: &DataMatrix,
    m: &Centroids,
    u: &MembershipMatrix,
    w: &ResidualWeights,
) -> f64 {
    fuzzy_residual_norms(x, m, &u.exponentiated())
        .iter()
        .zip(w.weights())
        .map(|(r, w)| w * r * r)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustFcmFit {
    pub centroids: Centroids,
    pub memberships: MembershipMatrix,
    pub weights: ResidualWeights,
    pub report: FitReport,
}

/// IRLS loop; stops when the ℓ1,2 objective changes by less than the relative
/// tolerance or at the iteration cap.
///
/// Each [`SurrogatePass`] records `J^(t)` under the previous weights before and
/// after the centroid update of one iteration.
#[derive(Debug, Clone)]
pub struct RobustFcmSolver<'a> {
    x: &'a DataMatrix,
    config: RobustFcmConfig,
    zeta: f64,
    epsilon: f64,
    centroids: Centroids,
    memberships: MembershipMatrix,
    weights: ResidualWeights,
    report: FitReport,
    finished: Option<Termination>,
}

impl<'a> RobustFcmSolver<'a> {
    pub fn new(x: &'a DataMatrix, config: RobustFcmConfig) -> Result<Self> {
        config.validate()?;
        config.base.validate_for(x)?;
        let m0 = init_centroids(x, config.base.n_clusters, config.base.init())?;
        Self::with_centroids(x, config, m0)
    }

    pub fn with_centroids(
        x: &'a DataMatrix,
        config: RobustFcmConfig,
        m0: Centroids,
    ) -> Result<Self> {
        config.validate()?;
        config.base.validate_for(x)?;
        if m0.n_clusters() != config.base.n_clusters || m0.n_features() != x.n_features() {
            return Err(ClusterError::Shape(
                "initial centroids have the wrong shape".into(),
            ));
        }
        let epsilon = config.base.coincidence_epsilon_for(x);
        let u0 = update_memberships(x, &m0, config.base.fuzzifier, epsilon)?;
        Ok(Self::from_parts(x, config, epsilon, m0, u0))
    }

    /// Starts from given memberships (their fuzzifier is replaced by the config's).
    pub fn with_memberships(
        x: &'a DataMatrix,
        config: RobustFcmConfig,
        u0: &MembershipMatrix,
    ) -> Result<Self> {
        config.validate()?;
        config.base.validate_for(x)?;
        if u0.n_clusters() != config.base.n_clusters || u0.n_samples() != x.n_samples() {
            return Err(ClusterError::Shape(
                "initial memberships have the wrong shape".into(),
            ));
        }
        let u0 = MembershipMatrix::new(u0.values().clone(), config.base.fuzzifier)?;
        let m0 = gram_centroids(x, &u0.exponentiated(), None)?;
        let epsilon = config.base.coincidence_epsilon_for(x);
        Ok(Self::from_parts(x, config, epsilon, m0, u0))
    }

    fn from_parts(
        x: &'a DataMatrix,
        config: RobustFcmConfig,
        epsilon: f64,
        centroids: Centroids,
        memberships: MembershipMatrix,
    ) -> Self {
        Self {
            x,
            config,
            zeta: config.zeta_for(x),
            epsilon,
            centroids,
            memberships,
            weights: ResidualWeights::uniform(x.n_samples()),
            report: FitReport::new(),
            finished: None,
        }
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn memberships(&self) -> &MembershipMatrix {
        &self.memberships
    }

    pub fn weights(&self) -> &ResidualWeights {
        &self.weights
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn into_fit(self) -> RobustFcmFit {
        RobustFcmFit {
            centroids: self.centroids,
            memberships: self.memberships,
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

impl IterativeSolver for RobustFcmSolver<'_> {
    fn step(&mut self) -> Result<StepOutcome> {
        if let Some(t) = self.finished {
            return Ok(StepOutcome::Finished(t));
        }
        let x = self.x;
        let um = self.memberships.exponentiated();

        // Centroids under the previous weights.
        let before: f64 = weighted_sq(
            &fuzzy_residual_norms(x, &self.centroids, &um),
            &self.weights,
        );
        let m = gram_centroids(x, &um, Some(self.weights.weights()))?;
        let norms = fuzzy_residual_norms(x, &m, &um);
        let after = weighted_sq(&norms, &self.weights);
        self.report
            .surrogate_passes
            .push(SurrogatePass { before, after });

        // Weights from the new residuals.
        let objective: f64 = norms.iter().sum();
        let previous = self.report.objective_trajectory.last().copied();
        self.report.objective_trajectory.push(objective);
        self.report
            .distortion_trajectory
            .push(squared_distances(x, &m).component_mul(&um).sum());
        self.report.iterations += 1;
        let weights = if self.config.unit_weights {
            ResidualWeights::uniform(x.n_samples())
        } else {
            weights_from_norms(&norms, self.zeta)
        };

        // Memberships.
        let u_new =
            update_memberships_weighted(x, &m, self.config.base.fuzzifier, &weights, self.epsilon)?;
        self.centroids = m;
        self.weights = weights;

        if previous.is_some_and(|p| {
            relative_change_below(p, objective, self.config.base.relative_tolerance)
        }) {
            return Ok(self.finish(Termination::ConvergedRelativeTolerance, objective));
        }
        if self.report.iterations >= self.config.base.max_iterations {
            return Ok(self.finish(Termination::MaxIterations, objective));
        }
        self.memberships = u_new;
        Ok(StepOutcome::Continue)
    }

    fn iterations(&self) -> usize {
        self.report.iterations
    }

    fn is_finished(&self) -> bool {
        self.finished.is_some()
    }
}

fn weighted_sq(norms: &[f64], w: &ResidualWeights) -> f64 {
    norms.iter().zip(w.weights()).map(|(r, w)| w * r * r).sum()
}

pub fn fit_robust_fcm(x: &DataMatrix, config: RobustFcmConfig) -> Result<RobustFcmFit> {
    let mut solver = RobustFcmSolver::new(x, config)?;
    solver.run_to_end()?;
    Ok(solver.into_fit())
}
