use crate::error::{ClusterError, Result};

/// Largest label count the exact matching accepts.
const MAX_MATCHED_LABELS: usize = 16;

/// Fraction of samples labelled correctly under the best one-to-one matching
/// of predicted labels to true labels.
///
/// The matching is solved exactly by dynamic programming over subsets of true
/// labels, which is fine up to 16 distinct labels.
pub fn clustering_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(ClusterError::Shape(format!(
            "{} predicted labels vs {} true labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(ClusterError::InvalidInput("no labels to compare".into()));
    }
    let size = predicted.iter().chain(truth).max().map_or(0, |&l| l + 1);
    if size > MAX_MATCHED_LABELS {
        return Err(ClusterError::Capacity(format!(
            "{size} labels exceed the exact-matching limit of {MAX_MATCHED_LABELS}"
        )));
    }
    let mut overlap = vec![vec![0usize; size]; size];
    for (&p, &t) in predicted.iter().zip(truth) {
        overlap[p][t] += 1;
    }
    // best[mask]: most matches with predicted labels 0..popcount(mask) assigned
    // to the true labels in `mask`.
    let mut best = vec![0usize; 1 << size];
    for mask in 0usize..(1 << size) {
        let p = mask.count_ones() as usize;
        if p >= size {
            continue;
        }
        for t in (0..size).filter(|t| mask & (1 << t) == 0) {
            let next = mask | (1 << t);
            best[next] = best[next].max(best[mask] + overlap[p][t]);
        }
    }
    Ok(best[(1 << size) - 1] as f64 / predicted.len() as f64)
}
