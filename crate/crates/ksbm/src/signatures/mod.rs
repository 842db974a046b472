//! Path signatures, lead and covariance matrices of multivariate series.
//!
//! Paths are piecewise-linear interpolants of their samples. Everything here
//! is exact for that interpolant; no quadrature is involved.

mod analytic;
mod matrices;
mod tensor;

use ndarray::{s, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::Trajectory;
use crate::error::{KsbmError, Result};

pub use analytic::{
    analytic_ss_lead_sin, analytic_ss_lead_sin_exact, analytic_ss_signature_exp, analytic_ss_signature_sin,
    analytic_ss_signature_sin_four_term, analytic_ss_signature_theta,
};
pub use matrices::{covariance_matrix, lead_matrix, regime_split, window_matrix, RegimeMatrices, Statistic, Window};
pub use tensor::{signature, signature_with_cap, SignatureTensor, DEFAULT_SIGNATURE_CAP, MAX_SIGNATURE_LEVEL};

/// Scalar field a path may take values in.
pub trait Scalar:
    Copy + ndarray::LinalgScalar + std::ops::AddAssign + std::ops::Neg<Output = Self> + From<f64> + Send + Sync
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// Samples of an `N`-dimensional path on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T = f64> {
    pub times: Vec<f64>,
    /// `K x N`, one row per time sample.
    pub values: Array2<T>,
}

impl<T: Scalar> Path<T> {
    pub fn new(times: Vec<f64>, values: Array2<T>) -> Result<Self> {
        if times.len() != values.nrows() {
            return Err(KsbmError::param(format!(
                "{} times for {} value rows",
                times.len(),
                values.nrows()
            )));
        }
        if times.is_empty() {
            return Err(KsbmError::param("a path needs at least one sample"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KsbmError::param("path times must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("paths are never empty")
    }

    /// Row increments `γ(t_{k+1}) − γ(t_k)`.
    pub fn increments(&self) -> Array2<T> {
        let v = &self.values;
        let k = v.nrows();
        &v.slice(s![1..k, ..]) - &v.slice(s![0..k - 1, ..])
    }

    /// Path shifted so that it starts at the origin.
    pub fn based(&self) -> Path<T> {
        let first = self.values.row(0).to_owned();
        Path { times: self.times.clone(), values: &self.values - &first }
    }

    fn value_at(&self, t: f64) -> ndarray::Array1<T> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values.row(0).to_owned();
        }
        if k >= self.len() {
            return self.values.row(self.len() - 1).to_owned();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = T::from((t - t0) / (t1 - t0));
        let (a, b) = (self.values.row(k - 1), self.values.row(k));
        let mut out = a.to_owned();
        out.zip_mut_with(&b, |x, &y| *x = *x + w * (y - *x));
        out
    }

    /// Restriction of the interpolant to `[a, b] ∩ [start, end]`, with
    /// interpolated endpoints. An empty or inverted window yields the single
    /// point at `a`.
    pub fn restrict(&self, a: f64, b: f64) -> Path<T> {
        let a = a.clamp(self.start(), self.end());
        let b = b.clamp(self.start(), self.end());
        let point = |t: f64| Path { times: vec![t], values: self.value_at(t).insert_axis(Axis(0)) };
        if !(b > a) {
            return point(a);
        }
        // interior samples strictly inside (a, b)
        let lo = self.times.partition_point(|&s| s <= a);
        let hi = self.times.partition_point(|&s| s < b);
        let mut times = Vec::with_capacity(hi.saturating_sub(lo) + 2);
        times.push(a);
        times.extend_from_slice(&self.times[lo..hi.max(lo)]);
        times.push(b);
        let mut values = Array2::from_elem((times.len(), self.dim()), T::zero());
        values.row_mut(0).assign(&self.value_at(a));
        if hi > lo {
            values.slice_mut(s![1..times.len() - 1, ..]).assign(&self.values.slice(s![lo..hi, ..]));
        }
        values.row_mut(times.len() - 1).assign(&self.value_at(b));
        Path { times, values }
    }
}

/// Element-wise map applied to a phase path before taking statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Sin,
    ExpI,
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Sin => "sin",
            Transform::ExpI => "exp_i",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = KsbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "theta" => Ok(Transform::Identity),
            "sin" => Ok(Transform::Sin),
            "exp_i" => Ok(Transform::ExpI),
            other => Err(KsbmError::Config(format!("unknown transform `{other}`"))),
        }
    }
}

/// Real-valued identity or sine transform. `ExpI` is rejected; use
/// [`transform_complex`].
pub fn transform(path: &Path, f: Transform) -> Result<Path> {
    let values = match f {
        Transform::Identity => path.values.clone(),
        Transform::Sin => path.values.mapv(f64::sin),
        Transform::ExpI => return Err(KsbmError::param("exp_i is complex-valued; use transform_complex")),
    };
    Ok(Path { times: path.times.clone(), values })
}

/// `e^{iγ}` element-wise.
pub fn transform_complex(path: &Path) -> Path<Complex64> {
    Path { times: path.times.clone(), values: path.values.mapv(|x| Complex64::from_polar(1.0, x)) }
}

/// Removes jumps larger than π between consecutive samples by whole turns.
pub fn unwrap_values(values: ArrayView2<f64>) -> Array2<f64> {
    let mut out = values.to_owned();
    for mut col in out.columns_mut() {
        let mut offset = 0.0;
        let mut prev = col[0];
        for x in col.iter_mut().skip(1) {
            let raw = *x;
            let d = raw - prev;
            if d.abs() > PI {
                offset -= 2.0 * PI * (d / (2.0 * PI)).round();
            }
            prev = raw;
            *x = raw + offset;
        }
    }
    out
}

/// Lifted phase path of a trajectory.
pub fn unwrap(traj: &Trajectory) -> Path {
    Path { times: traj.times.clone(), values: unwrap_values(traj.phases.view()) }
}
