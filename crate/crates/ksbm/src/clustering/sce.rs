//! Structural community estimation by iterative medoid splitting.

use ndarray::{Array2, ArrayViewD};
use serde::{Deserialize, Serialize};

use super::distance::{distances_between, representative_vectors, VectorMode};
use super::metrics::{tensor_block_metrics, BlockScore};
use crate::error::{KsbmError, Result};

/// Estimated partition with one medoid per community.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityEstimate {
    pub labels: Vec<usize>,
    /// `medoids[r]` is a node carrying label `r`.
    pub medoids: Vec<usize>,
    /// Block score of the final partition, if known.
    pub score: Option<BlockScore>,
    /// Normalized scores `g/k` of every partition tried, accepted or not,
    /// starting with `k = 1`.
    pub trace: Vec<f64>,
}

impl CommunityEstimate {
    pub fn k(&self) -> usize {
        self.medoids.len()
    }

    /// `g / k` of the final partition.
    pub fn normalized_score(&self) -> Option<f64> {
        self.score.map(|s| s.normalized())
    }

    /// Recomputes the block score against `b`.
    pub fn rescore(&mut self, b: ArrayViewD<f64>, stabilizer: f64) -> Result<()> {
        self.score = Some(tensor_block_metrics(b, &self.labels, stabilizer)?);
        Ok(())
    }
}

/// Options for [`sce`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceOptions {
    pub vectors: VectorMode,
    pub stabilizer: f64,
}

impl Default for SceOptions {
    fn default() -> Self {
        Self { vectors: VectorMode::RowColumn, stabilizer: 0.0 }
    }
}

/// Most distant pair of nodes sharing a label, lowest `(i, j)` on ties.
fn widest_intra_pair(d: &Array2<f64>, labels: &[usize]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] == labels[j] && best.is_none_or(|(_, _, b)| d[[i, j]] > b) {
                best = Some((i, j, d[[i, j]]));
            }
        }
    }
    best
}

/// Nearest-medoid assignment, lowest community on ties; medoids keep their
/// own label even when another medoid is equally close.
fn assign(d: &Array2<f64>, medoids: &[usize]) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..d.nrows())
        .map(|node| {
            let mut best = 0;
            for (r, &med) in medoids.iter().enumerate().skip(1) {
                if d[[node, med]] < d[[node, medoids[best]]] {
                    best = r;
                }
            }
            best
        })
        .collect();
    for (r, &med) in medoids.iter().enumerate() {
        labels[med] = r;
    }
    labels
}

/// Runs the medoid-splitting loop on a precomputed distance matrix, scoring
/// each candidate partition against `b`.
pub fn sce_with_distances(b: ArrayViewD<f64>, d: &Array2<f64>, stabilizer: f64) -> Result<CommunityEstimate> {
    let n = d.nrows();
    if n < 2 {
        return Err(KsbmError::param("structural community estimation needs at least 2 nodes"));
    }
    if d.ncols() != n || b.shape().iter().any(|&s| s != n) {
        return Err(KsbmError::param("distance matrix and data disagree on the node count"));
    }
    let mut labels = vec![0; n];
    let mut medoids = vec![0];
    let mut score = tensor_block_metrics(b.view(), &labels, stabilizer)?;
    let mut best = score.normalized();
    let mut trace = vec![best];
    while medoids.len() < n {
        let Some((i, j, gap)) = widest_intra_pair(d, &labels) else { break };
        if !(gap > 0.0) {
            break;
        }
        let mut next_medoids = medoids.clone();
        next_medoids[labels[i]] = i;
        next_medoids.push(j);
        let next_labels = assign(d, &next_medoids);
        let next_score = tensor_block_metrics(b.view(), &next_labels, stabilizer)?;
        let normalized = next_score.normalized();
        trace.push(normalized);
        if normalized > best {
            best = normalized;
            labels = next_labels;
            medoids = next_medoids;
            score = next_score;
        } else {
            break;
        }
    }
    Ok(CommunityEstimate { labels, medoids, score: Some(score), trace })
}

/// Structural community estimation on a matrix or tensor.
pub fn sce(b: ArrayViewD<f64>, options: SceOptions) -> Result<CommunityEstimate> {
    let vectors = representative_vectors(b.view(), options.vectors)?;
    sce_with_distances(b, &distances_between(&vectors), options.stabilizer)
}

/// Merges estimated communities pairwise by smallest average distance until
/// `k` remain. The lower label and its medoid survive each merge; labels are
/// then renumbered to `0..k`. The score is cleared; see
/// [`CommunityEstimate::rescore`].
pub fn prune(estimate: &CommunityEstimate, d: &Array2<f64>, k: usize) -> Result<CommunityEstimate> {
    if k < 1 {
        return Err(KsbmError::param("cannot prune to fewer than one community"));
    }
    let current = estimate.k();
    if k > current {
        return Err(KsbmError::param(format!("cannot prune {current} communities up to {k}")));
    }
    if d.dim() != (estimate.labels.len(), estimate.labels.len()) {
        return Err(KsbmError::param("distance matrix does not match the estimate"));
    }
    if k == current {
        return Ok(estimate.clone());
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); current];
    for (node, &l) in estimate.labels.iter().enumerate() {
        members[l].push(node);
    }
    let mut alive: Vec<usize> = (0..current).collect();
    let mean_distance = |a: &[usize], b: &[usize]| {
        let total: f64 = a.iter().flat_map(|&i| b.iter().map(move |&j| d[[i, j]])).sum();
        total / (a.len() * b.len()) as f64
    };
    while alive.len() > k {
        let mut best: Option<(usize, usize, f64)> = None;
        for (x, &r) in alive.iter().enumerate() {
            for &s in &alive[x + 1..] {
                let avg = mean_distance(&members[r], &members[s]);
                if best.is_none_or(|(_, _, b)| avg < b) {
                    best = Some((r, s, avg));
                }
            }
        }
        let (r, s, _) = best.expect("at least two communities alive");
        let moved = std::mem::take(&mut members[s]);
        members[r].extend(moved);
        alive.retain(|&x| x != s);
    }
    let mut labels = vec![0; estimate.labels.len()];
    for (new, &old) in alive.iter().enumerate() {
        for &node in &members[old] {
            labels[node] = new;
        }
    }
    let medoids = alive.iter().map(|&old| estimate.medoids[old]).collect();
    Ok(CommunityEstimate { labels, medoids, score: None, trace: estimate.trace.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_matrix(values: &[[f64; 3]; 3], m: usize) -> Array2<f64> {
        Array2::from_shape_fn((3 * m, 3 * m), |(i, j)| values[i / m][j / m])
    }

    #[test]
    fn ideal_blocks_recovered() {
        let b = block_matrix(&[[0.0, 1.0, -2.0], [-1.0, 0.0, 3.0], [2.0, -3.0, 0.0]], 4);
        let est = sce(b.view().into_dyn(), SceOptions::default()).unwrap();
        assert_eq!(est.k(), 3);
        for (node, &l) in est.labels.iter().enumerate() {
            assert_eq!(l, est.labels[(node / 4) * 4]);
        }
        for (r, &med) in est.medoids.iter().enumerate() {
            assert_eq!(est.labels[med], r);
        }
    }

    #[test]
    fn constant_matrix_stays_whole() {
        let b = Array2::from_elem((6, 6), 1.5);
        let est = sce(b.view().into_dyn(), SceOptions::default()).unwrap();
        assert_eq!(est.k(), 1);
        assert_eq!(est.labels, vec![0; 6]);
    }

    #[test]
    fn prune_merges_closest_pair() {
        let est = CommunityEstimate { labels: vec![0, 1, 2, 2], medoids: vec![0, 1, 2], score: None, trace: vec![] };
        let mut d = Array2::from_elem((4, 4), 5.0);
        d[[0, 1]] = 0.0;
        d[[1, 0]] = 0.0;
        d.diag_mut().fill(0.0);
        let pruned = prune(&est, &d, 2).unwrap();
        assert_eq!(pruned.labels, vec![0, 0, 1, 1]);
        assert_eq!(pruned.medoids, vec![0, 2]);
        assert_eq!(prune(&est, &d, 3).unwrap(), est);
        assert!(prune(&est, &d, 0).is_err());
        assert!(prune(&est, &d, 4).is_err());
    }
}
