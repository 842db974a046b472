//! Regime boundaries: transition time and synchronized steady state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ksbm::Trajectory;
use super::ode::TimeGrid;
use super::reduced::integrate_variance_dominated_identical;
use crate::error::{KsbmError, Result};

/// Clusterization / transient / steady-state split points (s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeBoundaries {
    pub t_trans: f64,
    pub t_ss: Option<f64>,
}

impl RegimeBoundaries {
    pub fn new(t_trans: f64, t_ss: Option<f64>) -> Result<Self> {
        if !(t_trans >= 0.0 && t_trans.is_finite()) {
            return Err(KsbmError::param(format!("t_trans = {t_trans} must be finite and >= 0")));
        }
        if let Some(t_ss) = t_ss {
            if !(t_ss >= t_trans) {
                return Err(KsbmError::param(format!("t_ss = {t_ss} must not precede t_trans = {t_trans}")));
            }
        }
        Ok(Self { t_trans, t_ss })
    }
}

/// First time the curve drops to `m^{−(2+ν)}`, linearly interpolated between
/// the bracketing samples. `None` when the threshold is never reached.
pub fn transition_time(times: &[f64], variance: &[f64], m: usize, nu: f64) -> Option<f64> {
    let threshold = (m as f64).powf(-(2.0 + nu));
    let k = variance.iter().position(|&v| v <= threshold)?;
    if k == 0 {
        return Some(times[0]);
    }
    let (v0, v1) = (variance[k - 1], variance[k]);
    let frac = (v0 - threshold) / (v0 - v1);
    Some(times[k - 1] + frac * (times[k] - times[k - 1]))
}

/// Transition time predicted by the dominated-identical variance law started
/// from the uniform-phase variance π²/3.
pub fn predicted_transition_time(kappa: f64, n: usize, m: usize, nu: f64) -> Result<Option<f64>> {
    if !(kappa > 0.0) {
        return Ok(None);
    }
    // the law only depends on κ/n through the time scale n/(2κ)
    let scale = n as f64 / (2.0 * kappa);
    let grid = TimeGrid::new(scale * 1e-3, scale * 100.0)?;
    let curve = integrate_variance_dominated_identical(kappa, n, PI * PI / 3.0, &grid)?;
    Ok(transition_time(&curve.times, &curve.values, m, nu))
}

/// Earliest sample time `t` such that the spread of finite-difference
/// frequencies stays below `tol` over `[t, t + window]`.
pub fn detect_steady_state(traj: &Trajectory, tol: f64, window: f64) -> Option<f64> {
    if traj.is_empty() {
        return None;
    }
    let t_end = *traj.times.last()?;
    if traj.oscillators() <= 1 {
        return Some(traj.times[0]);
    }
    let freq = traj.frequencies();
    let spread: Vec<f64> = freq
        .rows()
        .into_iter()
        .map(|row| {
            let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| (lo.min(f), hi.max(f)));
            hi - lo
        })
        .collect();
    // scan backwards keeping the end of the current run of in-tolerance samples
    let slack = 1e-9 * traj.step().max(1e-12);
    let mut run_end: Option<f64> = None;
    let mut best = None;
    for k in (0..spread.len()).rev() {
        if spread[k] < tol {
            let end = *run_end.get_or_insert(traj.times[k]);
            if traj.times[k] + window <= end + slack && traj.times[k] + window <= t_end + slack {
                best = Some(traj.times[k]);
            }
        } else {
            run_end = None;
        }
    }
    best
}

/// Locked offset `arcsin(n(ω_i − ω_ref)/κ)` of an oscillator at synchronized
/// steady state.
pub fn steady_state_deviation(omega_i: f64, omega_ref: f64, kappa: f64, n: usize) -> Result<f64> {
    let argument = n as f64 * (omega_i - omega_ref) / kappa;
    if !(argument.abs() <= 1.0) {
        return Err(KsbmError::NoLocking { argument });
    }
    Ok(argument.asin())
}
