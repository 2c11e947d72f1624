use crate::error::{ClusterError, Result};
use crate::kmeans::update_centroids;
use crate::model::{crisp_objective, AssignmentMatrix, DataMatrix};

/// Largest `k^n` the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Global minimum of the crisp k-means objective by enumerating every
/// assignment without empty clusters.
///
/// Assignments are visited in lexicographic order of their label vectors and a
/// later one replaces the incumbent only when it is strictly better, so ties
/// resolve to the lexicographically smallest labelling. The returned objective
/// is recomputed from the optimal centroids.
pub fn brute_force_kmeans(x: &DataMatrix, k: usize) -> Result<(f64, AssignmentMatrix)> {
    let n = x.n_samples();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidConfig(format!(
            "need 1 <= k <= n for enumeration, got k = {k}, n = {n}"
        )));
    }
    let total = (k as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= BRUTE_FORCE_LIMIT)
        .ok_or_else(|| {
            ClusterError::Capacity(format!("{k}^{n} assignments exceed {BRUTE_FORCE_LIMIT}"))
        })?;

    let m = x.n_features();
    let norms: f64 = x.values().norm_squared();
    let mut labels = vec![0usize; n];
    let mut sums = vec![0.0; m * k];
    let mut counts = vec![0usize; k];
    let mut best: Option<(f64, Vec<usize>)> = None;

    for _ in 0..total {
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (j, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (r, v) in x.sample(j).iter().enumerate() {
                sums[l * m + r] += v;
            }
        }
        if counts.iter().all(|&c| c > 0) {
            // ‖X‖² − Σ_i ‖s_i‖² / c_i
            let explained: f64 = (0..k)
                .map(|i| {
                    sums[i * m..(i + 1) * m].iter().map(|s| s * s).sum::<f64>() / counts[i] as f64
                })
                .sum();
            let obj = norms - explained;
            let better = best
                .as_ref()
                .is_none_or(|(b, _)| obj < b - 1e-12 * b.abs().max(1.0));
            if better {
                best = Some((obj, labels.clone()));
            }
        }
        // Odometer increment, last sample fastest.
        for l in labels.iter_mut().rev() {
            *l += 1;
            if *l < k {
                break;
            }
            *l = 0;
        }
    }

    let (_, labels) = best.expect("k <= n admits a labelling without empty clusters");
    let z = AssignmentMatrix::new(labels, k)?;
    let centroids = update_centroids(x, &z)?;
    Ok((crisp_objective(x, &centroids, &z), z))
}
