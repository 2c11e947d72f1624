use nalgebra::DMatrix;

use crate::error::{ClusterError, Result};
use crate::model::{Centroids, DataMatrix};

/// Least-squares centroids for a soft coefficient matrix:
/// `M = X W Cᵀ (C W Cᵀ)⁻¹` with `W = diag(weights)` (identity when `None`).
///
/// The `k × k` Gram matrix is factored by Cholesky; a failed factorization or
/// non-finite solution is reported against the cluster with the smallest
/// Gram diagonal.
pub(crate) fn gram_centroids(
    x: &DataMatrix,
    coeffs: &DMatrix<f64>,
    weights: Option<&[f64]>,
) -> Result<Centroids> {
    let (m, n, k) = (x.n_features(), x.n_samples(), coeffs.nrows());
    debug_assert_eq!(coeffs.ncols(), n);

    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut cross = DMatrix::<f64>::zeros(m, k);
    for j in 0..n {
        let w = weights.map_or(1.0, |w| w[j]);
        let c = coeffs.column(j);
        let xj = x.sample(j);
        for a in 0..k {
            let wc = w * c[a];
            if wc == 0.0 {
                continue;
            }
            for b in a..k {
                gram[(a, b)] += wc * c[b];
            }
            for r in 0..m {
                cross[(r, a)] += wc * xj[r];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let weakest = || {
        (0..k)
            .min_by(|&a, &b| gram[(a, a)].total_cmp(&gram[(b, b)]))
            .unwrap_or(0)
    };
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| ClusterError::DegenerateMembership { cluster: weakest() })?;
    let centroids = chol.solve(&cross.transpose()).transpose();
    if centroids.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::DegenerateMembership { cluster: weakest() });
    }
    Ok(Centroids::new_unchecked(centroids))
}
