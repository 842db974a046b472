use ndarray::{Array2, ArrayViewD, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{KsbmError, Result};

/// How a node's representative vector is read off a matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorMode {
    /// Row `i` followed by column `i` (for tensors: every slice with `i` at
    /// each index position, in position order).
    #[default]
    RowColumn,
    /// Column `i` only (for tensors: `i` in the last position only).
    Column,
}

/// `N x L` matrix whose row `i` is the representative vector `v_i` of node `i`.
pub fn representative_vectors(b: ArrayViewD<f64>, mode: VectorMode) -> Result<Array2<f64>> {
    let order = b.ndim();
    if order < 2 {
        return Err(KsbmError::param("need a matrix or higher-order tensor"));
    }
    let n = b.shape()[0];
    if b.shape().iter().any(|&s| s != n) {
        return Err(KsbmError::param("every tensor axis must have the same length"));
    }
    let positions: Vec<usize> = match mode {
        VectorMode::RowColumn => (0..order).collect(),
        VectorMode::Column => vec![order - 1],
    };
    let slice_len = n.pow(order as u32 - 1);
    let mut out = Array2::zeros((n, positions.len() * slice_len));
    for i in 0..n {
        let mut row = out.row_mut(i);
        for (p_idx, &p) in positions.iter().enumerate() {
            let slice = b.index_axis(Axis(p), i);
            for (slot, &v) in row.iter_mut().skip(p_idx * slice_len).zip(slice.iter()) {
                *slot = v;
            }
        }
    }
    Ok(out)
}

/// Pairwise Euclidean distances between the rows of `vectors`.
pub fn distances_between(vectors: &Array2<f64>) -> Array2<f64> {
    let n = vectors.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let dist = vectors
                .row(i)
                .iter()
                .zip(vectors.row(j))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            d[[i, j]] = dist;
            d[[j, i]] = dist;
        }
    }
    d
}

/// `D_ij = ‖v_i − v_j‖₂` for the representative vectors of `b`.
pub fn distance_matrix(b: ArrayViewD<f64>, mode: VectorMode) -> Result<Array2<f64>> {
    Ok(distances_between(&representative_vectors(b, mode)?))
}
