use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{transform, Path, Scalar, Transform};
use crate::dynamics::RegimeBoundaries;
use crate::error::{KsbmError, Result};

/// Lead matrix `L_ij = ½(S_(i,j) − S_(j,i))` of the based path.
///
/// With `x_k = γ(t_k) − γ(t_0)` and `Δ_k = γ(t_{k+1}) − γ(t_k)` the level-2
/// signature is `Σ_k x_k Δ_kᵀ + ½ Δ_k Δ_kᵀ`; the symmetric second term drops
/// out, and `L` is formed entrywise from `A = Σ_k x_k Δ_kᵀ` so that
/// `L_ji = −L_ij` holds bit for bit.
pub fn lead_matrix<T: Scalar>(path: &Path<T>) -> Array2<T> {
    let n = path.dim();
    let k = path.len();
    if k < 2 {
        return Array2::from_elem((n, n), T::zero());
    }
    let based = path.based();
    let x = based.values.slice(s![0..k - 1, ..]);
    let delta = path.increments();
    let a = x.t().dot(&delta);
    let half = T::from(0.5);
    let mut lead = Array2::from_elem((n, n), T::zero());
    for i in 0..n {
        for j in i + 1..n {
            let v = half * (a[[i, j]] - a[[j, i]]);
            lead[[i, j]] = v;
            lead[[j, i]] = -v;
        }
    }
    lead
}

/// Population (`1/K`) covariance of the sample rows, centred in time.
/// Fewer than two samples give the zero matrix.
pub fn covariance_matrix(path: &Path) -> Array2<f64> {
    let (k, n) = path.values.dim();
    if k < 2 {
        return Array2::zeros((n, n));
    }
    let mean = path.values.mean_axis(Axis(0)).expect("non-empty path");
    let centred = &path.values - &mean;
    let mut cov = centred.t().dot(&centred) / k as f64;
    // enforce exact symmetry
    for i in 0..n {
        for j in i + 1..n {
            cov[[j, i]] = cov[[i, j]];
        }
    }
    cov
}

/// Statistic extracted from each regime window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Lead,
    Cov,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Lead => "lead",
            Statistic::Cov => "cov",
        }
    }

    pub fn compute(&self, path: &Path) -> Array2<f64> {
        match self {
            Statistic::Lead => lead_matrix(path),
            Statistic::Cov => covariance_matrix(path),
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = KsbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lead" => Ok(Statistic::Lead),
            "cov" | "covariance" => Ok(Statistic::Cov),
            other => Err(KsbmError::Config(format!("unknown statistic `{other}`"))),
        }
    }
}

/// Closed time interval `[start, end]` (s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

/// Statistic of `f(path)` restricted to one window.
pub fn window_matrix(path: &Path, window: Window, stat: Statistic, f: Transform) -> Result<Array2<f64>> {
    let mapped = transform(path, f)?;
    Ok(stat.compute(&mapped.restrict(window.start, window.end)))
}

/// One matrix per regime window.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeMatrices {
    pub clusterization: Array2<f64>,
    pub transient: Array2<f64>,
    pub steady_state: Option<Array2<f64>>,
    pub windows: [Option<Window>; 3],
}

/// Splits the path at the regime boundaries and computes `stat` of `f(path)`
/// on `[start, t_trans]`, `[t_trans, t_ss]` and `[t_ss, t_ss + ss_horizon]`.
///
/// Without `t_ss` the transient window runs to the end of the data and there
/// is no steady-state matrix. `ss_horizon` defaults to the rest of the data;
/// windows are clipped to the path domain.
pub fn regime_split(
    path: &Path,
    bounds: &RegimeBoundaries,
    ss_horizon: Option<f64>,
    stat: Statistic,
    f: Transform,
) -> Result<RegimeMatrices> {
    if let Some(t_ss) = bounds.t_ss {
        if bounds.t_trans > t_ss {
            return Err(KsbmError::param(format!(
                "t_trans = {} exceeds t_ss = {t_ss}",
                bounds.t_trans
            )));
        }
    }
    if let Some(h) = ss_horizon {
        if !(h >= 0.0) {
            return Err(KsbmError::param("steady-state horizon must be >= 0"));
        }
    }
    let mapped = transform(path, f)?;
    let (start, end) = (path.start(), path.end());
    let clip = |a: f64, b: f64| Window { start: a.clamp(start, end), end: b.clamp(start, end) };
    let c = clip(start, bounds.t_trans);
    let tr = clip(bounds.t_trans, bounds.t_ss.unwrap_or(end));
    let ss = bounds.t_ss.map(|t_ss| clip(t_ss, ss_horizon.map_or(end, |h| t_ss + h)));
    let compute = |w: Window| stat.compute(&mapped.restrict(w.start, w.end));
    Ok(RegimeMatrices {
        clusterization: compute(c),
        transient: compute(tr),
        steady_state: ss.map(compute),
        windows: [Some(c), Some(tr), ss],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::PI;

    #[test]
    fn unit_circle_area() {
        let k = 20_000;
        let times: Vec<f64> = (0..=k).map(|s| 2.0 * PI * s as f64 / k as f64).collect();
        let values = Array2::from_shape_fn((k + 1, 2), |(s, c)| if c == 0 { times[s].cos() - 1.0 } else { times[s].sin() });
        let lead = lead_matrix(&Path::new(times, values).unwrap());
        assert!((lead[[0, 1]] - PI).abs() < 1e-6);
        assert_eq!(lead[[1, 0]], -lead[[0, 1]]);
    }

    #[test]
    fn one_dimensional_lead_is_zero() {
        let p = Path::new(vec![0.0, 1.0, 2.0], array![[0.0], [1.0], [-3.0]]).unwrap();
        assert_eq!(lead_matrix(&p), array![[0.0]]);
    }

    #[test]
    fn covariance_conventions() {
        let p = Path::new(vec![0.0, 1.0, 2.0], array![[1.0, 2.0], [2.0, 4.0], [6.0, 12.0]]).unwrap();
        let c = covariance_matrix(&p);
        assert!((c[[1, 1]] - 4.0 * c[[0, 0]]).abs() < 1e-12);
        // population variance of {1, 2, 6}
        assert!((c[[0, 0]] - 14.0 / 3.0).abs() < 1e-12);
        let flat = Path::new(vec![0.0, 1.0], array![[3.0, 3.0], [3.0, 3.0]]).unwrap();
        assert_eq!(covariance_matrix(&flat), Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn degenerate_split_reproduces_full_path() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let values = Array2::from_shape_fn((50, 3), |(k, i)| (times[k] * (i + 1) as f64).sin());
        let p = Path::new(times, values).unwrap();
        let bounds = RegimeBoundaries::new(0.0, Some(0.0)).unwrap();
        let m = regime_split(&p, &bounds, None, Statistic::Lead, Transform::Identity).unwrap();
        assert_eq!(m.steady_state.unwrap(), lead_matrix(&p));
        assert_eq!(m.clusterization, Array2::<f64>::zeros((3, 3)));
        let bad = RegimeBoundaries { t_trans: 2.0, t_ss: Some(1.0) };
        assert!(regime_split(&p, &bad, None, Statistic::Lead, Transform::Identity).is_err());
        assert!(regime_split(&p, &bounds, None, Statistic::Lead, Transform::ExpI).is_err());
    }
}
