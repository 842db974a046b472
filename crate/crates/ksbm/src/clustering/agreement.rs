use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{KsbmError, Result};

/// Maps arbitrary label values to `0..k` in order of first appearance.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let compact = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (compact, map.len())
}

/// Fraction of nodes labelled correctly under the best one-to-one matching
/// of estimated to true communities. Estimated communities left without a
/// partner count as wrong.
pub fn agreement(truth: &[usize], estimate: &[usize]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(KsbmError::param(format!(
            "{} true labels vs {} estimated labels",
            truth.len(),
            estimate.len()
        )));
    }
    if truth.is_empty() {
        return Err(KsbmError::param("agreement of empty labelings"));
    }
    let (t, n) = compact_labels(truth);
    let (e, k) = compact_labels(estimate);
    let mut table = vec![vec![0i64; n]; k];
    for (&a, &b) in e.iter().zip(&t) {
        table[a][b] += 1;
    }
    // the solver wants no more rows than columns
    let weights = if k <= n {
        Matrix::from_rows(table).expect("rectangular table")
    } else {
        Matrix::from_fn(n, k, |(r, c)| table[c][r])
    };
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / truth.len() as f64)
}
