//! Experiment configuration: named presets with field-by-field TOML overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::clustering::{Linkage, VectorMode};
use crate::error::{KsbmError, Result};
use crate::graphgen::HierarchicalSpec;
use crate::signatures::{Statistic, Transform};

/// Named parameter sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Standard,
    Collapsed,
    Noisy,
    Large,
    Hierarchical,
    Stochastic,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Standard,
        Preset::Collapsed,
        Preset::Noisy,
        Preset::Large,
        Preset::Hierarchical,
        Preset::Stochastic,
        Preset::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Standard => "standard",
            Preset::Collapsed => "collapsed",
            Preset::Noisy => "noisy",
            Preset::Large => "large",
            Preset::Hierarchical => "hierarchical",
            Preset::Stochastic => "stochastic",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = KsbmError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| KsbmError::Config(format!("unknown preset `{s}`")))
    }
}

/// Community structure of the coupling graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSpec {
    Assortative { n: usize, m: usize },
    Hierarchical(HierarchicalSpec),
    Sbm { n: usize, m: usize, probabilities: Vec<Vec<f64>>, couplings: Vec<Vec<f64>> },
}

impl GraphSpec {
    /// Community count at the finest level.
    pub fn n(&self) -> usize {
        match self {
            GraphSpec::Assortative { n, .. } | GraphSpec::Sbm { n, .. } => *n,
            GraphSpec::Hierarchical(h) => h.n1,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            GraphSpec::Assortative { m, .. } | GraphSpec::Sbm { m, .. } => *m,
            GraphSpec::Hierarchical(h) => h.m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub graph: GraphSpec,
    pub kappa: f64,
    pub sigma: f64,
    pub mu: Vec<f64>,
    pub brownian_b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_end: f64,
    pub internal_steps: usize,
    pub output_steps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimePolicy {
    /// `t_trans` from the dominated-identical variance law, `t_ss` detected.
    #[default]
    Analytic,
    /// Both boundaries given in the config.
    Manual,
    /// No split: every matrix covers the whole path.
    FullWindow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub policy: RegimePolicy,
    pub t_trans: Option<f64>,
    pub t_ss: Option<f64>,
    pub nu: f64,
    /// Frequency spread tolerance for steady-state detection (rad/s).
    pub steady_tol: f64,
    /// Window over which the spread must stay below tolerance (s).
    pub steady_window: f64,
    /// Steady-state window length; `None` runs to the end of the data.
    pub ss_horizon: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Sce,
    Kmeans,
    Hierarchical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSpec {
    pub method: Method,
    pub linkage: Linkage,
    /// Community count for the fixed-k baselines; defaults to the true count.
    pub k: usize,
    pub vectors: VectorMode,
    pub stabilizer: f64,
    /// Merge SCE estimates down to this many communities.
    pub prune_to: Option<usize>,
}

/// Fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub preset: Preset,
    pub seed: u64,
    pub graph_seed: u64,
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub regimes: RegimeSpec,
    pub transforms: Vec<Transform>,
    pub statistics: Vec<Statistic>,
    pub clustering: ClusteringSpec,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub graph: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub kappa: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<Vec<f64>>,
    pub mu_range: Option<[f64; 2]>,
    pub brownian_b: Option<f64>,
    pub n2: Option<usize>,
    pub r: Option<f64>,
    pub probabilities: Option<Vec<Vec<f64>>>,
    pub couplings: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub t_end: Option<f64>,
    pub internal_steps: Option<usize>,
    pub output_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeOverrides {
    pub policy: Option<RegimePolicy>,
    pub t_trans: Option<f64>,
    pub t_ss: Option<f64>,
    pub nu: Option<f64>,
    pub steady_tol: Option<f64>,
    pub steady_window: Option<f64>,
    pub ss_horizon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureOverrides {
    pub transforms: Option<Vec<Transform>>,
    pub statistics: Option<Vec<Statistic>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringOverrides {
    pub method: Option<Method>,
    pub linkage: Option<Linkage>,
    pub k: Option<usize>,
    pub vectors: Option<VectorMode>,
    pub stabilizer: Option<f64>,
    pub prune_to: Option<usize>,
}

/// Config file contents: a preset name plus optional overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<Preset>,
    pub seed: Option<u64>,
    pub graph_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: ModelOverrides,
    #[serde(default)]
    pub grid: GridOverrides,
    #[serde(default)]
    pub regimes: RegimeOverrides,
    #[serde(default)]
    pub signatures: SignatureOverrides,
    #[serde(default)]
    pub clustering: ClusteringOverrides,
}

/// `n` evenly spaced points on `[lo, hi]` (just `lo` when `n = 1`).
pub fn evenly_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|r| lo + (hi - lo) * r as f64 / (n - 1) as f64).collect()
}

struct Base {
    graph: &'static str,
    n: usize,
    m: usize,
    kappa: f64,
    sigma: f64,
    mu_range: [f64; 2],
    brownian_b: f64,
    t_end: f64,
    n2: usize,
    r: f64,
}

fn base(preset: Preset) -> Base {
    let standard = Base {
        graph: "assortative",
        n: 3,
        m: 33,
        kappa: 100.0,
        sigma: 0.1,
        mu_range: [2.0 / 3.0, 2.0],
        brownian_b: 0.0,
        t_end: 10.0,
        n2: 3,
        r: 0.05,
    };
    match preset {
        Preset::Standard | Preset::Custom => standard,
        Preset::Collapsed => Base { mu_range: [2.0 / 3.0, 2.0 / 3.0], ..standard },
        Preset::Noisy => Base { kappa: 10.0, sigma: 1.0, mu_range: [1.0 / 3.0, 1.0], t_end: 50.0, ..standard },
        Preset::Large => Base { n: 6, mu_range: [1.0 / 6.0, 1.0], t_end: 19.0, ..standard },
        Preset::Hierarchical => {
            Base { graph: "hierarchical", n: 9, kappa: 300.0, mu_range: [2.0 / 9.0, 2.0], ..standard }
        }
        Preset::Stochastic => Base { brownian_b: 0.1, ..standard },
    }
}

fn matrix(rows: Vec<Vec<f64>>, n: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(KsbmError::Config(format!("{what} must be {n}x{n}")));
    }
    Ok(rows)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| KsbmError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KsbmError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(preset: Preset) -> Self {
        Self { model: Some(preset), ..Self::default() }
    }

    /// Expands the preset and applies every override.
    pub fn resolve(&self) -> Result<Experiment> {
        let preset = self.model.unwrap_or_default();
        let b = base(preset);
        let p = &self.params;
        let n = p.n.unwrap_or(b.n);
        let m = p.m.unwrap_or(b.m);
        let mu = match (&p.mu, p.mu_range) {
            (Some(_), Some(_)) => return Err(KsbmError::Config("give either mu or mu_range, not both".into())),
            (Some(mu), None) => mu.clone(),
            (None, range) => {
                let [lo, hi] = range.unwrap_or(b.mu_range);
                evenly_spaced(lo, hi, n)
            }
        };
        if mu.len() != n {
            return Err(KsbmError::Config(format!("{} community frequencies for n = {n}", mu.len())));
        }
        let graph = match p.graph.as_deref().unwrap_or(b.graph) {
            "assortative" => GraphSpec::Assortative { n, m },
            "hierarchical" => {
                GraphSpec::Hierarchical(HierarchicalSpec { n1: n, n2: p.n2.unwrap_or(b.n2), r: p.r.unwrap_or(b.r), m })
            }
            "sbm" => {
                let (Some(probabilities), Some(couplings)) = (p.probabilities.clone(), p.couplings.clone()) else {
                    return Err(KsbmError::Config("sbm graphs need `probabilities` and `couplings`".into()));
                };
                GraphSpec::Sbm {
                    n,
                    m,
                    probabilities: matrix(probabilities, n, "probabilities")?,
                    couplings: matrix(couplings, n, "couplings")?,
                }
            }
            other => return Err(KsbmError::Config(format!("unknown graph kind `{other}`"))),
        };
        let model = ModelSpec {
            graph,
            kappa: p.kappa.unwrap_or(b.kappa),
            sigma: p.sigma.unwrap_or(b.sigma),
            mu,
            brownian_b: p.brownian_b.unwrap_or(b.brownian_b),
        };
        let grid = GridSpec {
            t_end: self.grid.t_end.unwrap_or(b.t_end),
            internal_steps: self.grid.internal_steps.unwrap_or(5000),
            output_steps: self.grid.output_steps.unwrap_or(500),
        };
        let r = &self.regimes;
        let regimes = RegimeSpec {
            policy: r.policy.unwrap_or_default(),
            t_trans: r.t_trans,
            t_ss: r.t_ss,
            nu: r.nu.unwrap_or(0.0),
            steady_tol: r.steady_tol.unwrap_or(1e-2),
            steady_window: r.steady_window.unwrap_or(1.0),
            ss_horizon: r.ss_horizon,
        };
        let c = &self.clustering;
        let default_prune = match &model.graph {
            GraphSpec::Hierarchical(h) if c.method.unwrap_or_default() == Method::Sce => Some(h.n2),
            _ => None,
        };
        let clustering = ClusteringSpec {
            method: c.method.unwrap_or_default(),
            linkage: c.linkage.unwrap_or(Linkage::Average),
            k: c.k.unwrap_or(n),
            vectors: c.vectors.unwrap_or_default(),
            stabilizer: c.stabilizer.unwrap_or(0.0),
            prune_to: c.prune_to.or(default_prune),
        };
        let experiment = Experiment {
            preset,
            seed: self.seed.unwrap_or(0),
            graph_seed: self.graph_seed.or(self.seed).unwrap_or(0),
            model,
            grid,
            regimes,
            transforms: self.signatures.transforms.clone().unwrap_or(vec![Transform::Identity, Transform::Sin]),
            statistics: self.signatures.statistics.clone().unwrap_or(vec![Statistic::Lead, Statistic::Cov]),
            clustering,
            output_dir: self.output_dir.clone(),
        };
        experiment.validate()?;
        Ok(experiment)
    }
}

impl Experiment {
    pub fn from_preset(preset: Preset, seed: u64) -> Result<Self> {
        ExperimentConfig { seed: Some(seed), ..ExperimentConfig::preset(preset) }.resolve()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(KsbmError::Config(msg));
        let m = &self.model;
        let (n, size) = (m.graph.n(), m.graph.m());
        if n == 0 || size == 0 {
            return bad("community count and size must be positive".into());
        }
        if let GraphSpec::Hierarchical(h) = &m.graph {
            h.validate().map_err(|e| KsbmError::Config(e.to_string()))?;
        }
        if !(m.kappa >= 0.0 && m.kappa.is_finite()) {
            return bad(format!("kappa = {} must be finite and >= 0", m.kappa));
        }
        if !(m.sigma >= 0.0 && m.sigma.is_finite()) {
            return bad(format!("sigma = {} must be finite and >= 0", m.sigma));
        }
        if !(m.brownian_b >= 0.0 && m.brownian_b.is_finite()) {
            return bad(format!("brownian_b = {} must be finite and >= 0", m.brownian_b));
        }
        if m.mu.iter().any(|x| !x.is_finite()) {
            return bad("mu must be finite".into());
        }
        let g = &self.grid;
        if !(g.t_end > 0.0 && g.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", g.t_end));
        }
        if g.output_steps == 0 || g.internal_steps == 0 || !g.internal_steps.is_multiple_of(g.output_steps) {
            return bad(format!(
                "internal_steps = {} must be a positive multiple of output_steps = {}",
                g.internal_steps, g.output_steps
            ));
        }
        let r = &self.regimes;
        if r.policy == RegimePolicy::Manual && r.t_trans.is_none() {
            return bad("manual regime policy needs t_trans".into());
        }
        if let (Some(a), Some(b)) = (r.t_trans, r.t_ss) {
            if b < a {
                return bad(format!("t_ss = {b} precedes t_trans = {a}"));
            }
        }
        if !(r.steady_tol > 0.0) || !(r.steady_window > 0.0) {
            return bad("steady_tol and steady_window must be positive".into());
        }
        if r.ss_horizon.is_some_and(|h| !(h > 0.0)) {
            return bad("ss_horizon must be positive".into());
        }
        if self.transforms.is_empty() || self.statistics.is_empty() {
            return bad("at least one transform and one statistic are needed".into());
        }
        if self.transforms.contains(&Transform::ExpI) {
            return bad("exp_i matrices are complex; use identity or sin".into());
        }
        let c = &self.clustering;
        let nodes = n * size;
        if c.k == 0 || c.k > nodes {
            return bad(format!("clustering k = {} must lie in 1..={nodes}", c.k));
        }
        if c.prune_to.is_some_and(|k| k == 0) {
            return bad("prune_to must be positive".into());
        }
        if !(c.stabilizer >= 0.0) {
            return bad("stabilizer must be >= 0".into());
        }
        Ok(())
    }

    /// Copy of this experiment with the Brownian term switched off.
    pub fn deterministic_twin(&self) -> Experiment {
        let mut twin = self.clone();
        twin.model.brownian_b = 0.0;
        twin
    }
}
