use super::{Path, Scalar};
use crate::error::{KsbmError, Result};

/// Highest supported truncation level.
pub const MAX_SIGNATURE_LEVEL: usize = 4;

/// Default bound on the total number of stored signature entries.
pub const DEFAULT_SIGNATURE_CAP: usize = 1 << 24;

/// Truncated signature: for each level `ℓ ≤ M` the full `N^ℓ` tensor,
/// stored row-major (first index slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureTensor<T = f64> {
    dim: usize,
    levels: Vec<Vec<T>>,
}

fn storage(dim: usize, level: usize) -> Option<usize> {
    (1..=level).try_fold(0usize, |acc, l| acc.checked_add(dim.checked_pow(l as u32)?))
}

impl<T: Scalar> SignatureTensor<T> {
    /// Signature of the constant path: 1 at level 0, zero elsewhere.
    pub fn identity(dim: usize, level: usize) -> Self {
        let mut levels = vec![vec![T::one()]];
        for l in 1..=level {
            levels.push(vec![T::zero(); dim.pow(l as u32)]);
        }
        Self { dim, levels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Flat row-major entries of level `l`.
    pub fn level_entries(&self, l: usize) -> &[T] {
        &self.levels[l]
    }

    /// `S_I` for a multi-index of length at most the truncation level.
    pub fn get(&self, index: &[usize]) -> T {
        let flat = index.iter().fold(0, |acc, &i| {
            assert!(i < self.dim, "index {i} out of range for dimension {}", self.dim);
            acc * self.dim + i
        });
        self.levels[index.len()][flat]
    }

    /// Signature of a single linear segment with increment `delta`:
    /// level `ℓ` is `delta^{⊗ℓ} / ℓ!`.
    pub fn segment(delta: &[T], level: usize) -> Self {
        let mut levels = vec![vec![T::one()]];
        for l in 1..=level {
            let scale = T::from(1.0 / l as f64);
            let prev = &levels[l - 1];
            let mut next = Vec::with_capacity(prev.len() * delta.len());
            for &p in prev {
                for &d in delta {
                    next.push(p * d * scale);
                }
            }
            levels.push(next);
        }
        Self { dim: delta.len(), levels }
    }

    /// Chen product: the signature of `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in Chen product");
        assert_eq!(self.level(), other.level(), "level mismatch in Chen product");
        let mut out = self.clone();
        out.extend_by(other);
        out
    }

    /// In-place Chen product with `other` on the right. Levels are updated
    /// from the top so lower levels still hold their old values when read.
    fn extend_by(&mut self, other: &Self) {
        for l in (1..=self.level()).rev() {
            for a in 0..l {
                let (left, right) = (&self.levels[a], &other.levels[l - a]);
                let mut acc = vec![T::zero(); left.len() * right.len()];
                for (x, &u) in left.iter().enumerate() {
                    let row = &mut acc[x * right.len()..(x + 1) * right.len()];
                    for (slot, &v) in row.iter_mut().zip(right) {
                        *slot = u * v;
                    }
                }
                for (s, v) in self.levels[l].iter_mut().zip(acc) {
                    *s += v;
                }
            }
        }
    }
}

/// Exact level-`level` signature of the piecewise-linear path, with the
/// default storage cap.
pub fn signature<T: Scalar>(path: &Path<T>, level: usize, base_at_zero: bool) -> Result<SignatureTensor<T>> {
    signature_with_cap(path, level, base_at_zero, DEFAULT_SIGNATURE_CAP)
}

/// As [`signature`] with an explicit cap on the number of stored entries.
///
/// Signatures only see increments, so `base_at_zero` does not change the
/// result; it is accepted for symmetry with the lead-matrix reading.
pub fn signature_with_cap<T: Scalar>(
    path: &Path<T>,
    level: usize,
    base_at_zero: bool,
    cap: usize,
) -> Result<SignatureTensor<T>> {
    if level == 0 {
        return Err(KsbmError::param("signature level must be >= 1"));
    }
    let requested = storage(path.dim(), level).unwrap_or(usize::MAX);
    if level > MAX_SIGNATURE_LEVEL {
        let cap = storage(path.dim(), MAX_SIGNATURE_LEVEL).unwrap_or(usize::MAX).min(cap);
        return Err(KsbmError::Capacity { requested, cap });
    }
    if requested > cap {
        return Err(KsbmError::Capacity { requested, cap });
    }
    let path = if base_at_zero { path.based() } else { path.clone() };
    let mut sig = SignatureTensor::identity(path.dim(), level);
    for delta in path.increments().rows() {
        let delta = delta.to_vec();
        sig.extend_by(&SignatureTensor::segment(&delta, level));
    }
    Ok(sig)
}
