//! Full KSBM: parameters, realized frequencies and phase trajectories.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::ode::{integrate_rk4, TimeGrid};
use crate::error::{KsbmError, Result};
use crate::graphgen::{CommunityAssignment, CouplingGraph};
use crate::rng;

/// Everything needed to integrate one KSBM realization.
#[derive(Clone, Debug)]
pub struct KsbmParams {
    pub graph: CouplingGraph,
    /// Mean intrinsic frequency of each community (rad/s).
    pub mu: Vec<f64>,
    /// Intrinsic frequency heterogeneity (rad/s).
    pub sigma: f64,
    /// Initial phases (rad).
    pub theta0: Vec<f64>,
    /// Realized intrinsic frequencies (rad/s).
    pub omegas: Vec<f64>,
    pub seed: u64,
    /// Brownian noise scale (rad/√s); 0 for deterministic runs.
    pub brownian_b: f64,
}

impl KsbmParams {
    /// Draws intrinsic frequencies and uniform initial phases on `[-π, π)`
    /// from `seed`.
    pub fn sample(graph: CouplingGraph, mu: Vec<f64>, sigma: f64, brownian_b: f64, seed: u64) -> Result<Self> {
        let comm = graph.communities();
        if mu.len() != comm.n() {
            return Err(KsbmError::param(format!(
                "{} community frequencies given for {} communities",
                mu.len(),
                comm.n()
            )));
        }
        let omegas = sample_frequencies(&mu, sigma, comm.m(), seed)?;
        let theta0 = uniform_phases(comm.len(), seed);
        let params = Self { graph, mu, sigma, theta0, omegas, seed, brownian_b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.node_count();
        if !(self.sigma >= 0.0) {
            return Err(KsbmError::param("sigma must be >= 0"));
        }
        if !(self.brownian_b >= 0.0 && self.brownian_b.is_finite()) {
            return Err(KsbmError::param("Brownian scale b must be finite and >= 0"));
        }
        if self.theta0.len() != n || self.omegas.len() != n {
            return Err(KsbmError::param("theta0 / omegas length does not match node count"));
        }
        if self.theta0.iter().chain(&self.omegas).any(|v| !v.is_finite()) {
            return Err(KsbmError::param("initial phases and frequencies must be finite"));
        }
        Ok(())
    }

    pub fn communities(&self) -> &CommunityAssignment {
        self.graph.communities()
    }

    /// Mean realized intrinsic frequency per community.
    pub fn community_omega_means(&self) -> Vec<f64> {
        let comm = self.communities();
        (0..comm.n())
            .map(|r| comm.members(r).map(|i| self.omegas[i]).sum::<f64>() / comm.m() as f64)
            .collect()
    }
}

/// `ω_i = μ_{φ(i)} + σ z_i`, `z_i` i.i.d. standard normal.
pub fn sample_frequencies(mu: &[f64], sigma: f64, m: usize, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(KsbmError::param("sigma must be >= 0"));
    }
    let mut rng = rng::stream(seed, rng::STREAM_FREQUENCIES);
    Ok(mu
        .iter()
        .flat_map(|&mean| std::iter::repeat_n(mean, m))
        .map(|mean| {
            let z: f64 = rng.sample(StandardNormal);
            mean + sigma * z
        })
        .collect())
}

/// Phases uniform on `[-π, π)`.
pub fn uniform_phases(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, rng::STREAM_PHASES);
    (0..count).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Unwrapped phases of every oscillator on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `K x N`, one row per time sample.
    pub phases: Array2<f64>,
    pub omegas: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn oscillators(&self) -> usize {
        self.phases.ncols()
    }

    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Index of the sample closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        match self.times.iter().position(|&s| s >= t) {
            None => self.times.len().saturating_sub(1),
            Some(0) => 0,
            Some(k) => {
                if (self.times[k] - t) < (t - self.times[k - 1]) {
                    k
                } else {
                    k - 1
                }
            }
        }
    }

    /// Instantaneous frequencies by central differences (one-sided at the ends).
    pub fn frequencies(&self) -> Array2<f64> {
        let (k, n) = self.phases.dim();
        let mut freq = Array2::zeros((k, n));
        if k < 2 {
            return freq;
        }
        for t in 0..k {
            let (lo, hi) = (t.saturating_sub(1), (t + 1).min(k - 1));
            let span = self.times[hi] - self.times[lo];
            for i in 0..n {
                freq[[t, i]] = (self.phases[[hi, i]] - self.phases[[lo, i]]) / span;
            }
        }
        freq
    }

    /// Re-chooses the lift of every oscillator by a whole number of turns so
    /// that, at sample `reference`, it lies within π of its community's
    /// circular mean. The vector field is 2π-periodic in each phase, so the
    /// result is the trajectory that would have been integrated from the
    /// shifted initial phases.
    pub fn lift_aligned(&self, communities: &CommunityAssignment, reference: usize) -> Trajectory {
        let mut out = self.clone();
        let row = self.phases.row(reference);
        for r in 0..communities.n() {
            let members = communities.members(r);
            let (s, c) = members
                .clone()
                .fold((0.0, 0.0), |(s, c), i| (s + row[i].sin(), c + row[i].cos()));
            let psi = s.atan2(c);
            let plain = members.clone().map(|i| row[i]).sum::<f64>() / communities.m() as f64;
            let center = psi + 2.0 * PI * ((plain - psi) / (2.0 * PI)).round();
            for i in members {
                let turns = ((center - row[i]) / (2.0 * PI)).round();
                if turns != 0.0 {
                    out.phases.column_mut(i).mapv_inplace(|v| v + 2.0 * PI * turns);
                }
            }
        }
        out
    }
}

fn kuramoto_drift(graph: &CouplingGraph, omegas: &[f64], theta: &[f64], sin: &mut [f64], cos: &mut [f64], out: &mut [f64]) {
    for (i, &th) in theta.iter().enumerate() {
        let (s, c) = th.sin_cos();
        sin[i] = s;
        cos[i] = c;
    }
    // sin(θj − θi) = sin θj cos θi − cos θj sin θi
    for i in 0..theta.len() {
        let (mut ss, mut sc) = (0.0, 0.0);
        for (j, w) in graph.row(i) {
            ss += w * sin[j];
            sc += w * cos[j];
        }
        out[i] = omegas[i] + cos[i] * ss - sin[i] * sc;
    }
}

/// Deterministic KSBM, `θ̇_i = ω_i + Σ_j C̃_ij sin(θ_j − θ_i)`, integrated
/// on ℝ with RK4.
pub fn integrate_full(params: &KsbmParams, grid: &TimeGrid) -> Result<Trajectory> {
    params.validate()?;
    if params.brownian_b != 0.0 {
        return Err(KsbmError::param("integrate_full is deterministic; use integrate_stochastic for b > 0"));
    }
    let n = params.graph.node_count();
    let (mut sin, mut cos) = (vec![0.0; n], vec![0.0; n]);
    let phases = integrate_rk4(
        &params.theta0,
        grid,
        |_, y, dy| kuramoto_drift(&params.graph, &params.omegas, y, &mut sin, &mut cos, dy),
        |_| {},
    )?;
    Ok(Trajectory { times: grid.recorded_times(), phases, omegas: params.omegas.clone() })
}

/// Forward Euler–Maruyama for `dθ_i = θ̇_i dt + b dW_i`.
pub fn integrate_stochastic(params: &KsbmParams, grid: &TimeGrid) -> Result<Trajectory> {
    params.validate()?;
    grid.check()?;
    let n = params.graph.node_count();
    let mut rng = rng::stream(params.seed, rng::STREAM_NOISE);
    let noise = params.brownian_b * grid.dt.sqrt();
    let (mut sin, mut cos, mut drift) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut theta = params.theta0.clone();
    let mut phases = Array2::zeros((grid.recorded_len(), n));
    phases.row_mut(0).assign(&ArrayView1::from(&theta));
    for step in 0..grid.steps {
        kuramoto_drift(&params.graph, &params.omegas, &theta, &mut sin, &mut cos, &mut drift);
        for (th, d) in theta.iter_mut().zip(&drift) {
            *th += d * grid.dt;
            if noise != 0.0 {
                let xi: f64 = rng.sample(StandardNormal);
                *th += noise * xi;
            }
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(KsbmError::Diverged { last_valid_time: grid.t0 + step as f64 * grid.dt });
        }
        if (step + 1) % grid.record_every == 0 {
            phases.row_mut((step + 1) / grid.record_every).assign(&ArrayView1::from(&theta));
        }
    }
    Ok(Trajectory { times: grid.recorded_times(), phases, omegas: params.omegas.clone() })
}

/// Per-community mean phase and phase variance over time.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub times: Vec<f64>,
    /// `K x n` community mean phases (rad).
    pub means: Array2<f64>,
    /// `K x n` community variances (rad²).
    pub variances: Array2<f64>,
    /// Set when a variance had to be clamped back to zero.
    pub clamped: bool,
}

impl GaussianState {
    pub fn variance_curve(&self, community: usize) -> Vec<f64> {
        self.variances.column(community).to_vec()
    }

    /// Largest community variance at each time.
    pub fn max_variance(&self) -> Vec<f64> {
        self.variances
            .axis_iter(Axis(0))
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect()
    }
}

/// Plain (non-circular) community means and population variances of the
/// unwrapped phases at every sample.
pub fn community_stats(traj: &Trajectory, communities: &CommunityAssignment) -> Result<GaussianState> {
    if communities.len() != traj.oscillators() {
        return Err(KsbmError::param("community labels do not cover the trajectory"));
    }
    let (k, n) = (traj.len(), communities.n());
    let mut means = Array2::zeros((k, n));
    let mut variances = Array2::zeros((k, n));
    let m = communities.m() as f64;
    for (t, row) in traj.phases.axis_iter(Axis(0)).enumerate() {
        for r in 0..n {
            let members = communities.members(r);
            let mean = members.clone().map(|i| row[i]).sum::<f64>() / m;
            let var = members.map(|i| (row[i] - mean).powi(2)).sum::<f64>() / m;
            means[[t, r]] = mean;
            variances[[t, r]] = var;
        }
    }
    Ok(GaussianState { times: traj.times.clone(), means, variances, clamped: false })
}
