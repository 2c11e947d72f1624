//! Seeding and degenerate-state repair shared by all fitters.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a seed pins the
//! result on every platform.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ClusterError, Result};
use crate::fcm::{default_coincidence_epsilon, update_memberships};
use crate::model::{
    crisp_residual_norms, squared_distance, AssignmentMatrix, Centroids, DataMatrix,
    MembershipMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// `k` distinct sample columns drawn uniformly without replacement.
    RandomSamples,
    /// k-means++ seeding.
    #[default]
    PlusPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InitStrategy {
    pub kind: InitKind,
    pub rng_seed: u64,
}

impl InitStrategy {
    pub fn new(kind: InitKind, rng_seed: u64) -> Self {
        Self { kind, rng_seed }
    }
}

pub fn init_centroids(x: &DataMatrix, k: usize, strategy: InitStrategy) -> Result<Centroids> {
    let n = x.n_samples();
    if k == 0 {
        return Err(ClusterError::InvalidConfig(
            "n_clusters must be >= 1".into(),
        ));
    }
    if k > n {
        return Err(ClusterError::InvalidConfig(format!(
            "cannot seed {k} clusters from {n} samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(strategy.rng_seed);
    let chosen = match strategy.kind {
        InitKind::RandomSamples => rand::seq::index::sample(&mut rng, n, k).into_vec(),
        InitKind::PlusPlus => plus_plus_indices(x, k, &mut rng)?,
    };
    Ok(Centroids::new_unchecked(x.values().select_columns(&chosen)))
}

fn plus_plus_indices(x: &DataMatrix, k: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let n = x.n_samples();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = (0..n)
        .map(|j| squared_distance(x.sample(j).as_slice(), x.sample(chosen[0]).as_slice()))
        .collect();
    while chosen.len() < k {
        // All-zero weights means every column duplicates a chosen one.
        let dist = WeightedIndex::new(&nearest).map_err(|_| {
            ClusterError::DegenerateData(format!(
                "fewer than {k} distinct sample columns; cannot seed k-means++"
            ))
        })?;
        let next = dist.sample(rng);
        chosen.push(next);
        for (j, d) in nearest.iter_mut().enumerate() {
            let dj = squared_distance(x.sample(j).as_slice(), x.sample(next).as_slice());
            if dj < *d {
                *d = dj;
            }
        }
    }
    Ok(chosen)
}

/// One membership update against the initial centroids, using the
/// data-scaled default coincidence threshold.
pub fn init_memberships(x: &DataMatrix, m: &Centroids, fuzzifier: f64) -> Result<MembershipMatrix> {
    update_memberships(x, m, fuzzifier, default_coincidence_epsilon(x))
}

/// Moves the sample with the largest residual norm into the empty cluster and
/// places that cluster's centroid on it.
///
/// The donor is taken from a cluster with at least two members so no new empty
/// cluster appears; ties go to the lowest sample index.
pub fn repair_empty_cluster(
    x: &DataMatrix,
    m: &Centroids,
    z: &AssignmentMatrix,
    empty: usize,
) -> Result<(Centroids, AssignmentMatrix)> {
    let sizes = z.cluster_sizes();
    if empty >= z.n_clusters() || sizes[empty] != 0 {
        return Err(ClusterError::InvalidInput(format!(
            "cluster {empty} is not an empty cluster"
        )));
    }
    let residuals = crisp_residual_norms(x, m, z);
    let mut donor: Option<usize> = None;
    for (j, &r) in residuals.iter().enumerate() {
        if sizes[z.labels()[j]] < 2 {
            continue;
        }
        if donor.is_none_or(|d| r > residuals[d]) {
            donor = Some(j);
        }
    }
    let donor = donor.ok_or_else(|| {
        ClusterError::InvalidConfig("no donor sample: fewer samples than clusters".into())
    })?;

    let mut z = z.clone();
    z.set_label(donor, empty);
    let mut m = m.clone();
    m.values_mut().set_column(empty, &x.sample(donor));
    Ok((m, z))
}

/// Repairs every empty cluster in ascending index order.
pub(crate) fn repair_all_empty(
    x: &DataMatrix,
    mut m: Centroids,
    mut z: AssignmentMatrix,
) -> Result<(Centroids, AssignmentMatrix)> {
    while let Some(&empty) = z.empty_clusters().first() {
        (m, z) = repair_empty_cluster(x, &m, &z, empty)?;
    }
    Ok((m, z))
}
