//! Fuzzy c-means in factorized form, `X ≈ M U^(m)`.
//!
//! Centroids are the least-squares solution `M = X U^(m)ᵀ (U^(m) U^(m)ᵀ)⁻¹`.
//! For non-crisp `U` this is a regression on the exponentiated memberships,
//! not the membership-weighted mean of the classical algorithm, so the two
//! agree only when `U` is one-hot or `k = 1`.
//!
//! Memberships use the standard closed form in which nearer centroids get
//! larger memberships:
//!
//! ```text
//! u_ij = 1 / Σ_r (‖x_j − μ_i‖² / ‖x_j − μ_r‖²)^(1/(m−1))
//! ```
//!
//! evaluated as a softmax over `−ln‖x_j − μ_i‖² / (m−1)` so fuzzifiers close
//! to one do not overflow. Fuzzifiers above about 10 push all memberships
//! toward `1/k` and the Gram matrix toward singularity.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};
use crate::init::{init_centroids, InitKind, InitStrategy};
use crate::kmeans::{DEFAULT_MAX_ITERATIONS, DEFAULT_RELATIVE_TOLERANCE};
use crate::linalg::gram_centroids;
use crate::model::{
    frobenius_objective, squared_distances, validate_fuzzifier, Centroids, DataMatrix, FitReport,
    MembershipMatrix, Termination,
};
use crate::solver::{relative_change_below, IterativeSolver, StepOutcome};

pub const DEFAULT_FUZZIFIER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmConfig {
    pub n_clusters: usize,
    pub fuzzifier: f64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub rng_seed: u64,
    pub init_strategy: InitKind,
    /// Squared-distance threshold below which a sample is treated as sitting
    /// on a centroid. `None` uses [`default_coincidence_epsilon`].
    pub coincidence_epsilon: Option<f64>,
}

impl FcmConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            fuzzifier: DEFAULT_FUZZIFIER,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            relative_tolerance: DEFAULT_RELATIVE_TOLERANCE,
            rng_seed: 0,
            init_strategy: InitKind::PlusPlus,
            coincidence_epsilon: None,
        }
    }

    pub fn with_fuzzifier(mut self, fuzzifier: f64) -> Self {
        self.fuzzifier = fuzzifier;
        self
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
        validate_fuzzifier(self.fuzzifier)?;
        if !(self.relative_tolerance >= 0.0 && self.relative_tolerance.is_finite()) {
            return Err(ClusterError::InvalidConfig(format!(
                "relative_tolerance must be finite and >= 0, got {}",
                self.relative_tolerance
            )));
        }
        if let Some(eps) = self.coincidence_epsilon {
            validate_epsilon(eps)?;
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

    pub fn coincidence_epsilon_for(&self, x: &DataMatrix) -> f64 {
        self.coincidence_epsilon
            .unwrap_or_else(|| default_coincidence_epsilon(x))
    }
}

fn validate_epsilon(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ClusterError::InvalidConfig(format!(
            "coincidence_epsilon must be finite and > 0, got {eps}"
        )));
    }
    Ok(())
}

/// `1e-12 ×` the mean squared sample norm (`trace(X Xᵀ) / n`).
pub fn default_coincidence_epsilon(x: &DataMatrix) -> f64 {
    let scale = x.values().norm_squared() / x.n_samples() as f64;
    (1e-12 * scale).max(f64::MIN_POSITIVE)
}

fn check_membership_shape(x: &DataMatrix, u: &MembershipMatrix) -> Result<()> {
    if u.n_samples() != x.n_samples() {
        return Err(ClusterError::Shape(format!(
            "memberships cover {} samples, data has {}",
            u.n_samples(),
            x.n_samples()
        )));
    }
    Ok(())
}

/// Fix `U`, update `M = X U^(m)ᵀ (U^(m) U^(m)ᵀ)⁻¹`.
pub fn update_centroids_fcm(x: &DataMatrix, u: &MembershipMatrix) -> Result<Centroids> {
    check_membership_shape(x, u)?;
    gram_centroids(x, &u.exponentiated(), None)
}

/// Fix `M`, update every membership column in closed form.
///
/// A sample whose nearest squared distance is below `coincidence_epsilon`
/// gets membership one on that centroid (lowest index among ties).
pub fn update_memberships(
    x: &DataMatrix,
    m: &Centroids,
    fuzzifier: f64,
    coincidence_epsilon: f64,
) -> Result<MembershipMatrix> {
    validate_fuzzifier(fuzzifier)?;
    validate_epsilon(coincidence_epsilon)?;
    if m.n_features() != x.n_features() {
        return Err(ClusterError::Shape(format!(
            "centroids have {} features, data has {}",
            m.n_features(),
            x.n_features()
        )));
    }
    let d = squared_distances(x, m);
    let k = m.n_clusters();
    let power = 1.0 / (fuzzifier - 1.0);
    let mut u = DMatrix::<f64>::zeros(k, x.n_samples());
    let mut logits = vec![0.0; k];
    for j in 0..x.n_samples() {
        let col = d.column(j);
        let nearest = (1..k).fold(0, |b, i| if col[i] < col[b] { i } else { b });
        if col[nearest] < coincidence_epsilon {
            u[(nearest, j)] = 1.0;
            continue;
        }
        let mut top = f64::NEG_INFINITY;
        for i in 0..k {
            logits[i] = -power * col[i].ln();
            top = top.max(logits[i]);
        }
        let mut total = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - top).exp();
            total += *l;
        }
        for i in 0..k {
            u[(i, j)] = logits[i] / total;
        }
    }
    Ok(MembershipMatrix::new_unchecked(u, fuzzifier))
}

/// `‖X − X U^(m)ᵀ (U^(m) U^(m)ᵀ)⁻¹ U^(m)‖_F²`.
pub fn fcm_factorized_objective(x: &DataMatrix, u: &MembershipMatrix) -> Result<f64> {
    check_membership_shape(x, u)?;
    let um = u.exponentiated();
    let m = gram_centroids(x, &um, None)?;
    frobenius_objective(x, &m, &um)
}

/// Classical distortion `Σ_ij u_ij^m ‖x_j − μ_i‖²`.
pub fn fcm_distortion(x: &DataMatrix, m: &Centroids, u: &MembershipMatrix) -> Result<f64> {
    check_membership_shape(x, u)?;
    if m.n_clusters() != u.n_clusters() || m.n_features() != x.n_features() {
        return Err(ClusterError::Shape(
            "centroids do not match memberships".into(),
        ));
    }
    let d = squared_distances(x, m);
    let um = u.exponentiated();
    Ok(d.component_mul(&um).sum())
}

/// `∂/∂M ‖X − M U^(m)‖_F² = −2 X U^(m)ᵀ + 2 M U^(m) U^(m)ᵀ`.
pub fn fcm_centroid_gradient(
    x: &DataMatrix,
    m: &Centroids,
    u: &MembershipMatrix,
) -> Result<DMatrix<f64>> {
    check_membership_shape(x, u)?;
    let um = u.exponentiated();
    if m.n_clusters() != um.nrows() || m.n_features() != x.n_features() {
        return Err(ClusterError::Shape(
            "centroids do not match memberships".into(),
        ));
    }
    let umt = um.transpose();
    Ok(-2.0 * x.values() * &umt + 2.0 * m.values() * (&um * &umt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmFit {
    pub centroids: Centroids,
    pub memberships: MembershipMatrix,
    pub report: FitReport,
}

/// Alternates the centroid and membership updates.
///
/// Each step updates `M` from the current `U`, records
/// `J = ‖X − M U^(m)‖_F²` (and the classical distortion), then updates `U`.
/// On termination the stored pair is the one `J` was evaluated on.
#[derive(Debug, Clone)]
pub struct FcmSolver<'a> {
    x: &'a DataMatrix,
    config: FcmConfig,
    epsilon: f64,
    centroids: Centroids,
    memberships: MembershipMatrix,
    report: FitReport,
    finished: Option<Termination>,
}

impl<'a> FcmSolver<'a> {
    pub fn new(x: &'a DataMatrix, config: FcmConfig) -> Result<Self> {
        config.validate_for(x)?;
        let m0 = init_centroids(x, config.n_clusters, config.init())?;
        Self::with_centroids(x, config, m0)
    }

    pub fn with_centroids(x: &'a DataMatrix, config: FcmConfig, m0: Centroids) -> Result<Self> {
        config.validate_for(x)?;
        if m0.n_clusters() != config.n_clusters || m0.n_features() != x.n_features() {
            return Err(ClusterError::Shape(
                "initial centroids have the wrong shape".into(),
            ));
        }
        let epsilon = config.coincidence_epsilon_for(x);
        let u0 = update_memberships(x, &m0, config.fuzzifier, epsilon)?;
        Ok(Self {
            x,
            config,
            epsilon,
            centroids: m0,
            memberships: u0,
            report: FitReport::new(),
            finished: None,
        })
    }

    /// Starts from given memberships (their fuzzifier is replaced by the config's).
    pub fn with_memberships(
        x: &'a DataMatrix,
        config: FcmConfig,
        u0: &MembershipMatrix,
    ) -> Result<Self> {
        config.validate_for(x)?;
        check_membership_shape(x, u0)?;
        if u0.n_clusters() != config.n_clusters {
            return Err(ClusterError::Shape(
                "initial memberships have the wrong shape".into(),
            ));
        }
        let u0 = MembershipMatrix::new(u0.values().clone(), config.fuzzifier)?;
        let centroids = update_centroids_fcm(x, &u0)?;
        Ok(Self {
            x,
            config,
            epsilon: config.coincidence_epsilon_for(x),
            centroids,
            memberships: u0,
            report: FitReport::new(),
            finished: None,
        })
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn memberships(&self) -> &MembershipMatrix {
        &self.memberships
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn coincidence_epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn into_fit(self) -> FcmFit {
        FcmFit {
            centroids: self.centroids,
            memberships: self.memberships,
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

impl IterativeSolver for FcmSolver<'_> {
    fn step(&mut self) -> Result<StepOutcome> {
        if let Some(t) = self.finished {
            return Ok(StepOutcome::Finished(t));
        }
        let x = self.x;
        let m = update_centroids_fcm(x, &self.memberships)?;
        let um = self.memberships.exponentiated();
        let objective = frobenius_objective(x, &m, &um)?;
        let distortion = squared_distances(x, &m).component_mul(&um).sum();
        let previous = self.report.objective_trajectory.last().copied();
        self.report.objective_trajectory.push(objective);
        self.report.distortion_trajectory.push(distortion);
        self.report.iterations += 1;

        let u_new = update_memberships(x, &m, self.config.fuzzifier, self.epsilon)?;
        self.centroids = m;

        if previous
            .is_some_and(|p| relative_change_below(p, objective, self.config.relative_tolerance))
        {
            return Ok(self.finish(Termination::ConvergedRelativeTolerance, objective));
        }
        if self.report.iterations >= self.config.max_iterations {
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

pub fn fit_fcm(x: &DataMatrix, config: FcmConfig) -> Result<FcmFit> {
    let mut solver = FcmSolver::new(x, config)?;
    solver.run_to_end()?;
    Ok(solver.into_fit())
}
