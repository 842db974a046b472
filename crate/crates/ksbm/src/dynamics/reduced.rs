//! Reduced models: mean-field community phases and Gaussian variance laws.

use std::f64::consts::PI;

use ndarray::{s, Array2};

use super::ksbm::{GaussianState, Trajectory};
use super::ode::{integrate_rk4, TimeGrid};
use crate::error::{KsbmError, Result};

/// `θ̇_r = μ_r + m Σ_s P_rs C_rs sin(θ_s − θ_r)` for the `n` community phases.
pub fn integrate_mean_field(
    m: usize,
    p: &Array2<f64>,
    c: &Array2<f64>,
    mu: &[f64],
    theta_bar0: &[f64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let n = mu.len();
    if p.dim() != (n, n) || c.dim() != (n, n) || theta_bar0.len() != n {
        return Err(KsbmError::param("mean-field inputs must all have n communities"));
    }
    let weights = p * c * m as f64;
    let phases = integrate_rk4(
        theta_bar0,
        grid,
        |_, th, dth| {
            for r in 0..n {
                let mut acc = mu[r];
                for s in 0..n {
                    if s != r {
                        acc += weights[[r, s]] * (th[s] - th[r]).sin();
                    }
                }
                dth[r] = acc;
            }
        },
        |_| {},
    )?;
    Ok(Trajectory { times: grid.recorded_times(), phases, omegas: mu.to_vec() })
}

/// Solution of a scalar variance law on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// For the dominated model: whether a stable clustered steady state exists.
    pub stable: bool,
    /// Stable fixed point bound `v*` when it exists.
    pub v_star: Option<f64>,
}

impl VarianceCurve {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("variance curve is never empty")
    }
}

fn integrate_variance(kappa: f64, n: usize, eps: f64, v0: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    if !(v0 >= 0.0 && v0.is_finite()) {
        return Err(KsbmError::param("initial variance must be finite and >= 0"));
    }
    if n == 0 {
        return Err(KsbmError::param("community count must be positive"));
    }
    let rate = 2.0 * kappa / n as f64;
    let out = integrate_rk4(&[v0], grid, |_, v, dv| dv[0] = eps - rate * v[0] * (-v[0]).exp(), |_| {})?;
    Ok(out.column(0).to_vec())
}

/// `dV/dt = −(2κ/n) V e^{−V}`.
pub fn integrate_variance_dominated_identical(kappa: f64, n: usize, v0: f64, grid: &TimeGrid) -> Result<VarianceCurve> {
    let values = integrate_variance(kappa, n, 0.0, v0, grid)?;
    Ok(VarianceCurve { times: grid.recorded_times(), values, stable: true, v_star: Some(0.0) })
}

/// Noise floor `ε = σ²πn/κ` used by the Gaussian models.
pub fn epsilon_bound(kappa: f64, n: usize, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * sigma * PI * n as f64 / kappa
    }
}

/// Smallest root of `v = (π/2)(σn/κ)² e^v`, if the clustered steady state is stable.
pub fn dominated_fixed_point(kappa: f64, n: usize, sigma: f64) -> Option<f64> {
    let a = 0.5 * PI * (sigma * n as f64 / kappa).powi(2);
    if !(a < (-1.0f64).exp()) {
        return None;
    }
    // v ↦ a e^v is a contraction below the smallest root
    let mut v = 0.0;
    for _ in 0..10_000 {
        let next = a * f64::exp(v);
        if (next - v).abs() <= 1e-16 * next.max(f64::MIN_POSITIVE) {
            return Some(next);
        }
        v = next;
    }
    Some(v)
}

/// `dV/dt = ε − (2κ/n) V e^{−V}` with `ε` at its bound `σ²πn/κ`.
pub fn integrate_variance_dominated(
    kappa: f64,
    n: usize,
    sigma: f64,
    v0: f64,
    grid: &TimeGrid,
) -> Result<VarianceCurve> {
    if !(sigma >= 0.0) {
        return Err(KsbmError::param("sigma must be >= 0"));
    }
    let values = integrate_variance(kappa, n, epsilon_bound(kappa, n, sigma), v0, grid)?;
    let v_star = dominated_fixed_point(kappa, n, sigma);
    Ok(VarianceCurve { times: grid.recorded_times(), values, stable: v_star.is_some(), v_star })
}

/// Coupled community means and variances of the Gaussian assortative model.
///
/// State layout is `[θ_1..θ_n, V_1..V_n]`. Variances that step below zero are
/// clamped and reported through `GaussianState::clamped`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_gaussian_full(
    kappa: f64,
    big_n: usize,
    n: usize,
    omega_means: &[f64],
    sigma: f64,
    means0: &[f64],
    v0: &[f64],
    grid: &TimeGrid,
) -> Result<GaussianState> {
    if omega_means.len() != n || means0.len() != n || v0.len() != n {
        return Err(KsbmError::param("Gaussian model inputs must all have n communities"));
    }
    if n == 0 || big_n < n {
        return Err(KsbmError::param("need N >= n >= 1"));
    }
    if v0.iter().any(|&v| !(v >= 0.0)) {
        return Err(KsbmError::param("initial variances must be >= 0"));
    }
    let eps = epsilon_bound(kappa, n, sigma);
    let intra = 2.0 * kappa / n as f64;
    // a single community has no inter-community edges
    let inter = if n > 1 { 2.0 * kappa / (big_n as f64 * (n - 1) as f64) } else { 0.0 };
    let mut y0 = means0.to_vec();
    y0.extend_from_slice(v0);
    let mut clamped = false;
    let mut damp = vec![0.0; n];
    let out = integrate_rk4(
        &y0,
        grid,
        |_, y, dy| {
            let (th, v) = y.split_at(n);
            for r in 0..n {
                damp[r] = (-0.5 * v[r]).exp();
            }
            for r in 0..n {
                let (mut ss, mut sc) = (0.0, 0.0);
                for s in 0..n {
                    if s != r {
                        let d = th[s] - th[r];
                        ss += d.sin() * damp[s];
                        sc += d.cos() * damp[s];
                    }
                }
                dy[r] = omega_means[r] + inter * damp[r] * ss;
                dy[n + r] = eps - intra * v[r] * (-v[r]).exp() - 2.0 * inter * v[r] * damp[r] * sc;
            }
        },
        |y| {
            for v in &mut y[n..] {
                if *v < 0.0 {
                    *v = 0.0;
                    clamped = true;
                }
            }
        },
    )?;
    Ok(GaussianState {
        times: grid.recorded_times(),
        means: out.slice(s![.., ..n]).to_owned(),
        variances: out.slice(s![.., n..]).to_owned(),
        clamped,
    })
}
