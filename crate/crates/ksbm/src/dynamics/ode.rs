//! Fixed-step integration grid and classical RK4.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{KsbmError, Result};

/// Uniform integration grid `t0, t0+dt, ..., t0+steps*dt`, of which every
/// `record_every`-th point is stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
}

impl TimeGrid {
    /// Grid on `[0, t_end]` recording every step. `t_end` is rounded to the
    /// nearest multiple of `dt`.
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(KsbmError::param(format!("time step {dt} must be positive")));
        }
        if !(t_end > dt) {
            return Err(KsbmError::param(format!("horizon {t_end} must exceed the step {dt}")));
        }
        let steps = (t_end / dt).round() as usize;
        Ok(Self { t0: 0.0, dt, steps, record_every: 1 })
    }

    /// Grid on `[0, t_end]` with `internal_steps` integration steps, resampled
    /// to `output_steps` recorded intervals.
    pub fn with_output(t_end: f64, internal_steps: usize, output_steps: usize) -> Result<Self> {
        if output_steps == 0 || internal_steps == 0 || !internal_steps.is_multiple_of(output_steps) {
            return Err(KsbmError::param(format!(
                "internal steps {internal_steps} must be a positive multiple of output steps {output_steps}"
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(KsbmError::param(format!("horizon {t_end} must be positive")));
        }
        Ok(Self {
            t0: 0.0,
            dt: t_end / internal_steps as f64,
            steps: internal_steps,
            record_every: internal_steps / output_steps,
        })
    }

    pub fn starting_at(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }

    pub fn recorded_len(&self) -> usize {
        self.steps / self.record_every + 1
    }

    pub fn recorded_times(&self) -> Vec<f64> {
        (0..self.recorded_len())
            .map(|k| self.t0 + (k * self.record_every) as f64 * self.dt)
            .collect()
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.record_every == 0 || !self.steps.is_multiple_of(self.record_every) {
            return Err(KsbmError::param("steps must be a multiple of record_every"));
        }
        if !(self.dt > 0.0) {
            return Err(KsbmError::param("time step must be positive"));
        }
        Ok(())
    }
}

/// Scratch buffers for one RK4 step of a `dim`-dimensional system.
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub(crate) fn step<F>(&mut self, rhs: &mut F, t: f64, y: &mut [f64], dt: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let half = 0.5 * dt;
        rhs(t, y, &mut self.k1);
        for (tmp, (&y, &k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k1)) {
            *tmp = y + half * k;
        }
        rhs(t + half, &self.tmp, &mut self.k2);
        for (tmp, (&y, &k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k2)) {
            *tmp = y + half * k;
        }
        rhs(t + half, &self.tmp, &mut self.k3);
        for (tmp, (&y, &k)) in self.tmp.iter_mut().zip(y.iter().zip(&self.k3)) {
            *tmp = y + dt * k;
        }
        rhs(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates `y' = rhs(t, y)` with RK4 on `grid`, applying `project` after
/// each step (identity for most systems). Returns the recorded states, one
/// row per recorded time.
pub(crate) fn integrate_rk4<F, P>(
    y0: &[f64],
    grid: &TimeGrid,
    mut rhs: F,
    mut project: P,
) -> Result<Array2<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    P: FnMut(&mut [f64]),
{
    grid.check()?;
    let dim = y0.len();
    let mut out = Array2::zeros((grid.recorded_len(), dim));
    let mut y = y0.to_vec();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(KsbmError::param("initial state is not finite"));
    }
    out.row_mut(0).assign(&ndarray::ArrayView1::from(&y));
    let mut stepper = Rk4::new(dim);
    for step in 0..grid.steps {
        let t = grid.t0 + step as f64 * grid.dt;
        stepper.step(&mut rhs, t, &mut y, grid.dt);
        project(&mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(KsbmError::Diverged { last_valid_time: t });
        }
        if (step + 1) % grid.record_every == 0 {
            out.row_mut((step + 1) / grid.record_every)
                .assign(&ndarray::ArrayView1::from(&y));
        }
    }
    Ok(out)
}
