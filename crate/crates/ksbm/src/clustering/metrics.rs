//! Community homogeneity `h`, discriminativity `d` and block clustering `g`
//! of matrices and higher-order tensors.

use ndarray::{Array2, ArrayViewD, Dimension};
use serde::{Deserialize, Serialize};

use crate::error::{KsbmError, Result};

/// Block structure score of a matrix or tensor under a partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockScore {
    pub h: f64,
    pub d: f64,
    /// `d / (h + stabilizer)`; `+∞` when the denominator vanishes and `d > 0`.
    pub g: f64,
    pub n_used: usize,
    /// Set when `g` is the infinite sentinel.
    pub unbounded: bool,
}

impl BlockScore {
    /// `g / n_used`.
    pub fn normalized(&self) -> f64 {
        self.g / self.n_used as f64
    }
}

/// Number of communities of a label vector whose labels are exactly `0..k`.
pub(crate) fn community_count(labels: &[usize]) -> Result<usize> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(KsbmError::param("labels must use every value in 0..k"));
    }
    Ok(k)
}

fn check_shape(b: &ArrayViewD<f64>, labels: &[usize]) -> Result<()> {
    if b.ndim() < 2 {
        return Err(KsbmError::param("block metrics need a matrix or higher-order tensor"));
    }
    if b.shape().iter().any(|&s| s != labels.len()) {
        return Err(KsbmError::param(format!(
            "tensor shape {:?} does not match {} labels",
            b.shape(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(KsbmError::param("empty partition"));
    }
    Ok(())
}

fn block_of(index: &[usize], labels: &[usize], n: usize) -> usize {
    index.iter().fold(0, |acc, &i| acc * n + labels[i])
}

/// Block means and within-block population variances, flat over `n^M`
/// block multi-indices.
fn block_moments(b: &ArrayViewD<f64>, labels: &[usize], n: usize) -> (Vec<f64>, Vec<f64>) {
    let blocks = n.pow(b.ndim() as u32);
    let mut sum = vec![0.0; blocks];
    let mut count = vec![0usize; blocks];
    for (idx, &v) in b.indexed_iter() {
        let k = block_of(idx.slice(), labels, n);
        sum[k] += v;
        count[k] += 1;
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let mut sq = vec![0.0; blocks];
    for (idx, &v) in b.indexed_iter() {
        let k = block_of(idx.slice(), labels, n);
        sq[k] += (v - mean[k]).powi(2);
    }
    let var = sq.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    (mean, var)
}

fn discriminativity_from_means(mean: &[f64], n: usize, order: usize) -> f64 {
    let blocks = mean.len();
    // flat index of the diagonal block (r, r, ..., r)
    let diag_stride: usize = (0..order).map(|p| n.pow(p as u32)).sum();
    let mut total = 0.0;
    let mut digits = vec![0usize; order];
    for (k, &m) in mean.iter().enumerate() {
        let mut rem = k;
        for p in (0..order).rev() {
            digits[p] = rem % n;
            rem /= n;
        }
        for &r in &digits {
            total += (m - mean[r * diag_stride]).powi(2);
        }
    }
    total / blocks as f64
}

/// `h`, `d` and `g` of an order-`M` tensor with every axis of length `N`.
pub fn tensor_block_metrics(b: ArrayViewD<f64>, labels: &[usize], stabilizer: f64) -> Result<BlockScore> {
    check_shape(&b, labels)?;
    if !(stabilizer >= 0.0) {
        return Err(KsbmError::param("stabilizer must be >= 0"));
    }
    let n = community_count(labels)?;
    let (mean, var) = block_moments(&b, labels, n);
    let h = var.iter().sum::<f64>() / var.len() as f64;
    let d = discriminativity_from_means(&mean, n, b.ndim());
    let denom = h + stabilizer;
    let (g, unbounded) = if denom > 0.0 {
        (d / denom, false)
    } else if d > 0.0 {
        (f64::INFINITY, true)
    } else {
        (0.0, false)
    };
    Ok(BlockScore { h, d, g, n_used: n, unbounded })
}

/// `h(B|G) = (1/n²) Σ_{r,s} Var_{i∈G_r, j∈G_s} B_ij` (population variance).
pub fn homogeneity(b: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    Ok(tensor_block_metrics(b.view().into_dyn(), labels, 0.0)?.h)
}

/// `d(B|G) = (1/n²) Σ_{r,s} (B̄_rs − B̄_rr)² + (B̄_rs − B̄_ss)²` over block means.
pub fn discriminativity(b: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    Ok(tensor_block_metrics(b.view().into_dyn(), labels, 0.0)?.d)
}

/// `g = d / (h + stabilizer)`.
pub fn block_clustering(b: &Array2<f64>, labels: &[usize], stabilizer: f64) -> Result<BlockScore> {
    tensor_block_metrics(b.view().into_dyn(), labels, stabilizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, ArrayD, IxDyn};

    #[test]
    fn single_block_variance() {
        let b = array![[0.0, 0.0], [1.0, 1.0]];
        assert_eq!(homogeneity(&b, &[0, 0]).unwrap(), 0.25);
        assert_eq!(discriminativity(&b, &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn two_block_discriminativity() {
        // only the two off-diagonal blocks contribute, 2 each, over n² = 4
        let b = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(discriminativity(&b, &[0, 1]).unwrap(), 1.0);
        let s = block_clustering(&b, &[0, 1], 0.0).unwrap();
        assert!(s.unbounded && s.g.is_infinite());
        assert_eq!(block_clustering(&b, &[0, 1], 0.5).unwrap().g, 2.0);
    }

    #[test]
    fn constant_matrix_scores_zero() {
        let b = Array2::from_elem((4, 4), 3.0);
        let s = block_clustering(&b, &[0, 0, 1, 1], 0.0).unwrap();
        assert_eq!((s.h, s.d, s.g, s.unbounded), (0.0, 0.0, 0.0, false));
    }

    #[test]
    fn order_three_block_constant() {
        let labels = [0, 0, 1, 1];
        let t = ArrayD::from_shape_fn(IxDyn(&[4, 4, 4]), |ix| (labels[ix[0]] * 4 + labels[ix[1]] * 2 + labels[ix[2]]) as f64);
        let s = tensor_block_metrics(t.view(), &labels, 0.0).unwrap();
        assert_eq!(s.h, 0.0);
        assert!(s.d > 0.0);
    }

    #[test]
    fn rejects_gapped_labels() {
        let b = Array2::zeros((3, 3));
        assert!(homogeneity(&b, &[0, 2, 2]).is_err());
        assert!(homogeneity(&b, &[0, 1]).is_err());
    }
}
