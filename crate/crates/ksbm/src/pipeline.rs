//! End-to-end experiment: simulate, split into regimes, build matrices,
//! estimate communities and score them against the ground truth.

use std::f64::consts::PI;
use std::path::Path as FsPath;

use log::warn;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::clustering::{
    agreement, distances_between, hierarchical_cluster, kmeans_cluster, prune, representative_vectors,
    sce_with_distances, tensor_block_metrics, BlockScore,
};
use crate::config::{Experiment, GraphSpec, Method, RegimePolicy};
use crate::dynamics::{
    community_stats, detect_steady_state, integrate_full, integrate_stochastic,
    integrate_variance_dominated_identical, predicted_transition_time, transition_time, GaussianState, KsbmParams,
    RegimeBoundaries, TimeGrid, Trajectory,
};
use crate::error::{KsbmError, Result};
use crate::graphgen::{generate_assortative, generate_hierarchical, generate_sbm, CouplingGraph};
use crate::io;
use crate::signatures::{regime_split, unwrap, window_matrix, Statistic, Transform, Window};

/// Time window a matrix was computed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "C")]
    Clusterization,
    #[serde(rename = "TR")]
    Transient,
    #[serde(rename = "SS")]
    SteadyState,
    #[serde(rename = "full")]
    Full,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Clusterization => "C",
            Regime::Transient => "TR",
            Regime::SteadyState => "SS",
            Regime::Full => "full",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRecord {
    pub transform: Transform,
    pub statistic: Statistic,
    pub regime: Regime,
    pub window: Window,
    pub matrix: Array2<f64>,
}

impl MatrixRecord {
    /// File stem such as `sin_lead_TR`.
    pub fn stem(&self) -> String {
        format!("{}_{}_{}", self.transform.name(), self.statistic.name(), self.regime.name())
    }
}

/// Estimate merged down to a fixed community count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunedEstimate {
    pub labels: Vec<usize>,
    pub k: usize,
    /// `"coarse"` or `"fine"` ground truth.
    pub reference: String,
    pub agreement: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRecord {
    pub transform: Transform,
    pub statistic: Statistic,
    pub regime: Regime,
    pub method: Method,
    pub labels: Vec<usize>,
    pub k: usize,
    /// Block score of the matrix under the estimated partition.
    pub score: BlockScore,
    /// Block score of the matrix under the true partition.
    pub true_score: BlockScore,
    pub agreement: f64,
    pub pruned: Option<PrunedEstimate>,
}

/// How the regime boundaries were obtained.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub policy: Option<RegimePolicy>,
    pub t_trans: Option<f64>,
    pub t_ss: Option<f64>,
    pub t_trans_predicted: Option<f64>,
    /// First time the largest aligned community variance reaches `(1/m)^{2+ν}`.
    pub t_trans_empirical: Option<f64>,
    pub t_ss_detected: Option<f64>,
    /// False when the pipeline fell back to full-window matrices.
    pub split: bool,
}

/// Everything one experiment produces.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub experiment: Experiment,
    pub graph: CouplingGraph,
    pub theta0: Vec<f64>,
    pub omegas: Vec<f64>,
    pub trajectory: Trajectory,
    /// Community statistics of the lift-aligned trajectory.
    pub variances: GaussianState,
    /// Dominated-identical variance law from `π²/3` on the output grid.
    pub predicted_variance: Option<Vec<f64>>,
    pub regimes: RegimeInfo,
    pub matrices: Vec<MatrixRecord>,
    pub estimates: Vec<EstimateRecord>,
    pub warnings: Vec<String>,
}

impl Bundle {
    pub fn true_labels(&self) -> &[usize] {
        self.graph.communities().labels()
    }

    pub fn matrix(&self, transform: Transform, statistic: Statistic, regime: Regime) -> Option<&MatrixRecord> {
        self.matrices
            .iter()
            .find(|m| m.transform == transform && m.statistic == statistic && m.regime == regime)
    }

    pub fn estimate(&self, transform: Transform, statistic: Statistic, regime: Regime) -> Option<&EstimateRecord> {
        self.estimates
            .iter()
            .find(|e| e.transform == transform && e.statistic == statistic && e.regime == regime)
    }

    pub fn report(&self) -> Report {
        let entries = self
            .estimates
            .iter()
            .map(|e| {
                let window = self
                    .matrix(e.transform, e.statistic, e.regime)
                    .map(|m| m.window)
                    .expect("every estimate has a matrix");
                ReportEntry {
                    transform: e.transform,
                    statistic: e.statistic,
                    regime: e.regime,
                    window_start: window.start,
                    window_end: window.end,
                    method: e.method,
                    h: e.score.h,
                    d: e.score.d,
                    g: finite(e.score.g),
                    g_normalized: finite(e.score.normalized()),
                    unbounded: e.score.unbounded,
                    k: e.k,
                    agreement: e.agreement,
                    g_true: finite(e.true_score.g),
                    pruned_k: e.pruned.as_ref().map(|p| p.k),
                    pruned_agreement: e.pruned.as_ref().map(|p| p.agreement),
                    pruned_reference: e.pruned.as_ref().map(|p| p.reference.clone()),
                }
            })
            .collect();
        Report {
            preset: self.experiment.preset.name().to_string(),
            seed: self.experiment.seed,
            graph_seed: self.experiment.graph_seed,
            regimes: self.regimes.clone(),
            warnings: self.warnings.clone(),
            entries,
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub transform: Transform,
    pub statistic: Statistic,
    pub regime: Regime,
    pub window_start: f64,
    pub window_end: f64,
    pub method: Method,
    pub h: f64,
    pub d: f64,
    /// `None` when unbounded.
    pub g: Option<f64>,
    pub g_normalized: Option<f64>,
    pub unbounded: bool,
    pub k: usize,
    pub agreement: f64,
    pub g_true: Option<f64>,
    pub pruned_k: Option<usize>,
    pub pruned_agreement: Option<f64>,
    pub pruned_reference: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub preset: String,
    pub seed: u64,
    pub graph_seed: u64,
    pub regimes: RegimeInfo,
    pub warnings: Vec<String>,
    pub entries: Vec<ReportEntry>,
}

pub fn build_graph(experiment: &Experiment) -> Result<CouplingGraph> {
    let model = &experiment.model;
    let seed = experiment.graph_seed;
    match &model.graph {
        GraphSpec::Assortative { n, m } => generate_assortative(*n, *m, model.kappa, seed),
        GraphSpec::Hierarchical(spec) => generate_hierarchical(spec, model.kappa, seed),
        GraphSpec::Sbm { n, m, probabilities, couplings } => {
            let to_array = |rows: &Vec<Vec<f64>>| {
                Array2::from_shape_vec((*n, *n), rows.iter().flatten().copied().collect())
                    .map_err(|_| KsbmError::Config("block matrices must be n x n".into()))
            };
            generate_sbm(*n, *m, &to_array(probabilities)?, &to_array(couplings)?, seed)
        }
    }
}

pub fn time_grid(experiment: &Experiment) -> Result<TimeGrid> {
    let g = &experiment.grid;
    TimeGrid::with_output(g.t_end, g.internal_steps, g.output_steps)
}

/// Samples parameters and integrates the experiment's dynamics.
pub fn simulate(experiment: &Experiment) -> Result<(CouplingGraph, KsbmParams, Trajectory)> {
    let graph = build_graph(experiment).map_err(|e| e.at("graph"))?;
    let model = &experiment.model;
    let params = KsbmParams::sample(graph.clone(), model.mu.clone(), model.sigma, model.brownian_b, experiment.seed)
        .map_err(|e| e.at("parameters"))?;
    let grid = time_grid(experiment)?;
    let traj = if model.brownian_b > 0.0 {
        integrate_stochastic(&params, &grid)
    } else {
        integrate_full(&params, &grid)
    }
    .map_err(|e| e.at("integration"))?;
    Ok((graph, params, traj))
}

fn note(warnings: &mut Vec<String>, msg: String) {
    warn!("{msg}");
    warnings.push(msg);
}

fn cluster_matrix(
    experiment: &Experiment,
    matrix: &Array2<f64>,
    truth: &[usize],
    coarse: Option<&[usize]>,
) -> Result<(Vec<usize>, Option<PrunedEstimate>)> {
    let c = &experiment.clustering;
    let b = matrix.view().into_dyn();
    let vectors = representative_vectors(b.view(), c.vectors)?;
    let d = distances_between(&vectors);
    match c.method {
        Method::Sce => {
            let est = sce_with_distances(b, &d, c.stabilizer)?;
            let pruned = match c.prune_to {
                Some(k) => {
                    let merged = if est.k() > k { prune(&est, &d, k)? } else { est.clone() };
                    let (reference, target) = match coarse {
                        Some(coarse) if k == coarse.iter().max().map_or(0, |x| x + 1) => ("coarse", coarse),
                        _ => ("fine", truth),
                    };
                    Some(PrunedEstimate {
                        agreement: agreement(target, &merged.labels)?,
                        k: merged.k(),
                        labels: merged.labels,
                        reference: reference.to_string(),
                    })
                }
                None => None,
            };
            Ok((est.labels, pruned))
        }
        Method::Kmeans => Ok((kmeans_cluster(&vectors, c.k, experiment.seed)?, None)),
        Method::Hierarchical => Ok((hierarchical_cluster(&d, c.linkage, c.k)?, None)),
    }
}

fn boundaries(
    experiment: &Experiment,
    traj: &Trajectory,
    deterministic: &Trajectory,
    info: &mut RegimeInfo,
    warnings: &mut Vec<String>,
) -> Result<Option<RegimeBoundaries>> {
    let r = &experiment.regimes;
    let (t0, t_end) = (traj.times[0], *traj.times.last().expect("non-empty trajectory"));
    info.policy = Some(r.policy);
    info.t_ss_detected = detect_steady_state(deterministic, r.steady_tol, r.steady_window);
    let (t_trans, t_ss) = match r.policy {
        RegimePolicy::FullWindow => return Ok(None),
        RegimePolicy::Manual => (r.t_trans.expect("validated"), r.t_ss),
        RegimePolicy::Analytic => {
            let Some(t_trans) = info.t_trans_predicted else {
                note(warnings, "no transition time found; using full-window matrices".into());
                return Ok(None);
            };
            (t_trans, r.t_ss.or(info.t_ss_detected).map(|t| t.max(t_trans)))
        }
    };
    if !(t_trans > t0 && t_trans < t_end) {
        note(
            warnings,
            format!("transition time {t_trans} outside the data [{t0}, {t_end}]; using full-window matrices"),
        );
        return Ok(None);
    }
    let t_ss = match t_ss {
        Some(t) if t >= t_end => {
            note(warnings, format!("steady state at {t} s lies beyond the data; no steady-state matrices"));
            None
        }
        other => other,
    };
    if r.policy == RegimePolicy::Analytic && t_ss.is_none() && info.t_ss_detected.is_none() {
        note(warnings, "no steady state detected; transient window runs to the end of the data".into());
    }
    Ok(Some(RegimeBoundaries::new(t_trans, t_ss)?))
}

/// Runs the whole experiment in memory.
pub fn run_experiment(experiment: &Experiment) -> Result<Bundle> {
    experiment.validate()?;
    let mut warnings = Vec::new();
    let (graph, params, traj) = simulate(experiment)?;
    let comm = graph.communities().clone();
    let deterministic = if experiment.model.brownian_b > 0.0 {
        integrate_full(&KsbmParams { brownian_b: 0.0, ..params.clone() }, &time_grid(experiment)?)
            .map_err(|e| e.at("deterministic twin"))?
    } else {
        traj.clone()
    };

    let aligned = traj.lift_aligned(&comm, traj.len() - 1);
    let variances = community_stats(&aligned, &comm).map_err(|e| e.at("community statistics"))?;
    let model = &experiment.model;
    let (n, m) = (model.graph.n(), model.graph.m());
    let nu = experiment.regimes.nu;
    let mut info = RegimeInfo {
        t_trans_predicted: predicted_transition_time(model.kappa, n, m, nu).map_err(|e| e.at("transition time"))?,
        t_trans_empirical: transition_time(&variances.times, &variances.max_variance(), m, nu),
        ..RegimeInfo::default()
    };
    let predicted_variance = if model.kappa > 0.0 {
        let curve = integrate_variance_dominated_identical(model.kappa, n, PI * PI / 3.0, &time_grid(experiment)?)
            .map_err(|e| e.at("variance law"))?;
        Some(curve.values)
    } else {
        None
    };
    let bounds = boundaries(experiment, &traj, &deterministic, &mut info, &mut warnings)?;
    info.split = bounds.is_some();
    info.t_trans = bounds.map(|b| b.t_trans);
    info.t_ss = bounds.and_then(|b| b.t_ss);

    let path = unwrap(&traj);
    let mut matrices = Vec::new();
    for &transform in &experiment.transforms {
        for &statistic in &experiment.statistics {
            let record = |regime, window: Window, matrix| MatrixRecord { transform, statistic, regime, window, matrix };
            match &bounds {
                Some(b) => {
                    let split = regime_split(&path, b, experiment.regimes.ss_horizon, statistic, transform)
                        .map_err(|e| e.at("signatures"))?;
                    let [c, tr, ss] = split.windows;
                    matrices.push(record(Regime::Clusterization, c.expect("always present"), split.clusterization));
                    matrices.push(record(Regime::Transient, tr.expect("always present"), split.transient));
                    if let (Some(w), Some(mat)) = (ss, split.steady_state) {
                        matrices.push(record(Regime::SteadyState, w, mat));
                    }
                }
                None => {
                    let w = Window { start: path.start(), end: path.end() };
                    let mat = window_matrix(&path, w, statistic, transform).map_err(|e| e.at("signatures"))?;
                    matrices.push(record(Regime::Full, w, mat));
                }
            }
        }
    }

    let truth = comm.labels().to_vec();
    let coarse = graph.coarse_communities().map(|c| c.labels().to_vec());
    let stabilizer = experiment.clustering.stabilizer;
    let mut estimates = Vec::new();
    for rec in &matrices {
        let (labels, pruned) = match cluster_matrix(experiment, &rec.matrix, &truth, coarse.as_deref()) {
            Ok(found) => found,
            Err(e @ KsbmError::Degenerate(_)) => {
                note(&mut warnings, format!("{}: {e}", rec.stem()));
                continue;
            }
            Err(e) => return Err(e.at("clustering")),
        };
        let b = rec.matrix.view().into_dyn();
        estimates.push(EstimateRecord {
            transform: rec.transform,
            statistic: rec.statistic,
            regime: rec.regime,
            method: experiment.clustering.method,
            k: labels.iter().max().map_or(0, |x| x + 1),
            score: tensor_block_metrics(b.view(), &labels, stabilizer).map_err(|e| e.at("scoring"))?,
            true_score: tensor_block_metrics(b, &truth, stabilizer).map_err(|e| e.at("scoring"))?,
            agreement: agreement(&truth, &labels)?,
            labels,
            pruned,
        });
    }

    Ok(Bundle {
        experiment: experiment.clone(),
        graph,
        theta0: params.theta0,
        omegas: params.omegas,
        trajectory: traj,
        variances,
        predicted_variance,
        regimes: info,
        matrices,
        estimates,
        warnings,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    rng: &'static str,
    seed: u64,
    graph_seed: u64,
    experiment: &'a Experiment,
    regimes: &'a RegimeInfo,
    files: Vec<String>,
}

/// Writes the bundle under `dir`:
/// `manifest.json`, `graph.csv` (+ `.json`), `nodes.csv`, `trajectory.csv`,
/// `variance.csv`, `matrices/<stem>.csv` (+ `.json`), `labels/<stem>.csv`,
/// `labels/truth.csv` and `report.json`.
pub fn write_bundle(bundle: &Bundle, dir: &FsPath) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec!["graph.csv".to_string(), "graph.json".into(), "nodes.csv".into()];
    io::write_edge_list(&dir.join("graph.csv"), &bundle.graph)?;
    let comm = bundle.graph.communities();
    let nodes = comm.len();
    io::write_columns(
        &dir.join("nodes.csv"),
        &["node", "community", "omega", "theta0"],
        &[
            (0..nodes).map(|i| i as f64).collect(),
            comm.labels().iter().map(|&l| l as f64).collect(),
            bundle.omegas.clone(),
            bundle.theta0.clone(),
        ],
    )?;
    io::write_trajectory_csv(&dir.join("trajectory.csv"), &bundle.trajectory)?;
    files.push("trajectory.csv".into());

    let v = &bundle.variances;
    let mut headers = vec!["t".to_string()];
    let mut columns = vec![v.times.clone()];
    if let Some(pred) = &bundle.predicted_variance {
        headers.push("predicted".into());
        columns.push(pred.clone());
    }
    for (r, col) in v.variances.axis_iter(Axis(1)).enumerate() {
        headers.push(format!("var_{r}"));
        columns.push(col.to_vec());
    }
    for (r, col) in v.means.axis_iter(Axis(1)).enumerate() {
        headers.push(format!("mean_{r}"));
        columns.push(col.to_vec());
    }
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    io::write_columns(&dir.join("variance.csv"), &header_refs, &columns)?;
    files.push("variance.csv".into());

    for rec in &bundle.matrices {
        let stem = rec.stem();
        io::write_matrix_csv(&dir.join("matrices").join(format!("{stem}.csv")), &rec.matrix)?;
        io::write_json(
            &dir.join("matrices").join(format!("{stem}.json")),
            &io::MatrixSidecar {
                statistic: rec.statistic.name().into(),
                transform: rec.transform.name().into(),
                window: rec.regime.name().into(),
                start: rec.window.start,
                end: rec.window.end,
                based_at_zero: true,
                size: rec.matrix.nrows(),
            },
        )?;
        files.push(format!("matrices/{stem}.csv"));
    }
    io::write_labels(&dir.join("labels").join("truth.csv"), comm.labels())?;
    files.push("labels/truth.csv".into());
    if let Some(coarse) = bundle.graph.coarse_communities() {
        io::write_labels(&dir.join("labels").join("truth_coarse.csv"), coarse.labels())?;
        files.push("labels/truth_coarse.csv".into());
    }
    for e in &bundle.estimates {
        let stem = format!("{}_{}_{}", e.transform.name(), e.statistic.name(), e.regime.name());
        io::write_labels(&dir.join("labels").join(format!("{stem}.csv")), &e.labels)?;
        files.push(format!("labels/{stem}.csv"));
        if let Some(p) = &e.pruned {
            io::write_labels(&dir.join("labels").join(format!("{stem}_pruned.csv")), &p.labels)?;
            files.push(format!("labels/{stem}_pruned.csv"));
        }
    }
    io::write_json(&dir.join("report.json"), &bundle.report())?;
    files.push("report.json".into());
    io::write_json(
        &dir.join("manifest.json"),
        &Manifest {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            rng: "ChaCha8",
            seed: bundle.experiment.seed,
            graph_seed: bundle.experiment.graph_seed,
            experiment: &bundle.experiment,
            regimes: &bundle.regimes,
            files,
        },
    )
}
