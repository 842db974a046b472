//! Spike-train ingestion: binning, causal exponential smoothing and trial
//! concatenation into a multivariate path.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path as FsPath;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{KsbmError, Result};
use crate::signatures::Path;

/// Bounds of one trial (s, same clock as the spike times).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeIngestConfig {
    /// Bin width (s).
    pub dt: f64,
    /// Filter time constant (s).
    pub tau: f64,
    /// Kernel support in units of `tau`.
    pub support: f64,
    /// Trial bounds. Without a table every trial spans `[0, last spike + dt]`.
    pub trials: Option<Vec<Trial>>,
    /// Units to emit, in column order. Without a list the units seen in the
    /// spike table are used.
    pub units: Option<Vec<String>>,
}

impl Default for SpikeIngestConfig {
    fn default() -> Self {
        Self { dt: 0.002, tau: 0.040, support: 10.0, trials: None, units: None }
    }
}

impl SpikeIngestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(KsbmError::param(format!("bin width dt = {} must be positive", self.dt)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(KsbmError::param(format!("time constant tau = {} must be positive", self.tau)));
        }
        if !(self.support > 0.0) {
            return Err(KsbmError::param("kernel support must be positive"));
        }
        if let Some(trials) = &self.trials {
            for t in trials {
                if !(t.end_s > t.start_s) {
                    return Err(KsbmError::param(format!("trial {} has empty bounds", t.trial_id)));
                }
            }
        }
        Ok(())
    }
}

/// One row of a spike table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub unit_id: String,
    pub trial_id: String,
    pub spike_time_s: f64,
}

/// Numeric order when both ids are integers, lexicographic otherwise.
pub fn id_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Causal kernel `w_k ∝ e^{−k dt/τ}` for `k = 0..=ceil(support·τ/dt)`,
/// normalized to unit sum.
pub fn exponential_kernel(dt: f64, tau: f64, support: f64) -> Vec<f64> {
    let len = (support * tau / dt).ceil() as usize + 1;
    let raw: Vec<f64> = (0..len).map(|k| (-(k as f64) * dt / tau).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Causal convolution truncated to the input length.
pub fn causal_filter(counts: &[f64], kernel: &[f64]) -> Vec<f64> {
    (0..counts.len())
        .map(|t| kernel.iter().take(t + 1).enumerate().map(|(k, w)| w * counts[t - k]).sum())
        .collect()
}

pub fn read_spikes(path: &FsPath) -> Result<Vec<Spike>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_trials(path: &FsPath) -> Result<Vec<Trial>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Filtered spike trains, one column per unit, trials concatenated in
/// `trial_id` order on a uniform `dt` grid starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikePath {
    pub path: Path,
    pub units: Vec<String>,
    pub trials: Vec<String>,
    /// First sample row of every trial.
    pub trial_offsets: Vec<usize>,
}

pub fn ingest_spikes(spikes: &[Spike], config: &SpikeIngestConfig) -> Result<SpikePath> {
    config.validate()?;
    let units: Vec<String> = match &config.units {
        Some(units) => units.clone(),
        None => {
            let mut seen: Vec<String> = spikes.iter().map(|s| s.unit_id.clone()).collect();
            seen.sort_by(|a, b| id_order(a, b));
            seen.dedup();
            seen
        }
    };
    let unit_index: BTreeMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    if unit_index.len() != units.len() {
        return Err(KsbmError::param("duplicate unit ids"));
    }
    if units.is_empty() {
        return Err(KsbmError::param("no units to ingest"));
    }
    let mut trials: Vec<Trial> = match &config.trials {
        Some(table) => table.clone(),
        None => {
            let mut ends: BTreeMap<&str, f64> = BTreeMap::new();
            for s in spikes {
                let e = ends.entry(&s.trial_id).or_insert(0.0);
                *e = e.max(s.spike_time_s);
            }
            ends.into_iter()
                .map(|(id, last)| Trial { trial_id: id.to_string(), start_s: 0.0, end_s: last + config.dt })
                .collect()
        }
    };
    trials.sort_by(|a, b| id_order(&a.trial_id, &b.trial_id));
    if trials.windows(2).any(|w| w[0].trial_id == w[1].trial_id) {
        return Err(KsbmError::param("duplicate trial ids"));
    }
    if trials.is_empty() {
        return Err(KsbmError::param("no trials to ingest"));
    }
    let trial_index: BTreeMap<&str, usize> = trials.iter().enumerate().map(|(i, t)| (t.trial_id.as_str(), i)).collect();
    let bins: Vec<usize> = trials.iter().map(|t| (((t.end_s - t.start_s) / config.dt) - 1e-9).ceil().max(1.0) as usize).collect();
    let mut offsets = Vec::with_capacity(trials.len());
    let mut total = 0;
    for &b in &bins {
        offsets.push(total);
        total += b;
    }
    let mut counts = Array2::<f64>::zeros((total, units.len()));
    for s in spikes {
        let &u = unit_index
            .get(s.unit_id.as_str())
            .ok_or_else(|| KsbmError::UnknownReference(format!("unit `{}`", s.unit_id)))?;
        let &t = trial_index
            .get(s.trial_id.as_str())
            .ok_or_else(|| KsbmError::UnknownReference(format!("trial `{}`", s.trial_id)))?;
        let trial = &trials[t];
        if !(s.spike_time_s >= trial.start_s && s.spike_time_s <= trial.end_s) {
            return Err(KsbmError::param(format!(
                "spike at {} s outside trial {} [{}, {}]",
                s.spike_time_s, trial.trial_id, trial.start_s, trial.end_s
            )));
        }
        let bin = (((s.spike_time_s - trial.start_s) / config.dt).floor() as usize).min(bins[t] - 1);
        counts[[offsets[t] + bin, u]] += 1.0;
    }
    let kernel = exponential_kernel(config.dt, config.tau, config.support);
    let mut values = Array2::<f64>::zeros((total, units.len()));
    for (t, &start) in offsets.iter().enumerate() {
        let span = start..start + bins[t];
        for u in 0..units.len() {
            let column: Vec<f64> = counts.slice(ndarray::s![span.clone(), u]).to_vec();
            let filtered = causal_filter(&column, &kernel);
            values.slice_mut(ndarray::s![span.clone(), u]).assign(&ndarray::Array1::from(filtered));
        }
    }
    let times = (0..total).map(|k| k as f64 * config.dt).collect();
    Ok(SpikePath {
        path: Path::new(times, values)?,
        units,
        trials: trials.into_iter().map(|t| t.trial_id).collect(),
        trial_offsets: offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spike(u: &str, t: &str, s: f64) -> Spike {
        Spike { unit_id: u.into(), trial_id: t.into(), spike_time_s: s }
    }

    #[test]
    fn kernel_is_normalized_and_decays() {
        let k = exponential_kernel(0.002, 0.04, 10.0);
        assert_eq!(k.len(), 201);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((k[1] / k[0] - (-0.05f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn single_spike_starts_at_peak() {
        let config = SpikeIngestConfig {
            trials: Some(vec![Trial { trial_id: "1".into(), start_s: 0.0, end_s: 0.2 }]),
            units: Some(vec!["a".into(), "b".into()]),
            ..SpikeIngestConfig::default()
        };
        let out = ingest_spikes(&[spike("a", "1", 0.0)], &config).unwrap();
        let kernel = exponential_kernel(0.002, 0.04, 10.0);
        let a = out.path.values.column(0);
        assert_eq!(out.path.len(), 100);
        assert_eq!(a[0], kernel[0]);
        assert!(a.iter().all(|&v| v <= a[0]));
        assert!((a[1] / a[0] - (-0.05f64).exp()).abs() < 1e-12);
        assert!(out.path.values.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn trials_sorted_by_id() {
        let spikes = [spike("u", "10", 0.01), spike("u", "2", 0.0), spike("u", "2", 0.03)];
        let out = ingest_spikes(&spikes, &SpikeIngestConfig::default()).unwrap();
        assert_eq!(out.trials, vec!["2", "10"]);
        assert_eq!(out.trial_offsets, vec![0, 16]);
    }

    #[test]
    fn unknown_references() {
        let config = SpikeIngestConfig {
            trials: Some(vec![Trial { trial_id: "1".into(), start_s: 0.0, end_s: 1.0 }]),
            units: Some(vec!["a".into()]),
            ..SpikeIngestConfig::default()
        };
        assert!(matches!(ingest_spikes(&[spike("b", "1", 0.1)], &config), Err(KsbmError::UnknownReference(_))));
        assert!(matches!(ingest_spikes(&[spike("a", "7", 0.1)], &config), Err(KsbmError::UnknownReference(_))));
        assert!(matches!(ingest_spikes(&[spike("a", "1", 2.0)], &config), Err(KsbmError::Parameter(_))));
    }
}
