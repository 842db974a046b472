use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ksbm::clustering::{
    agreement, distances_between, hierarchical_cluster, kmeans_cluster, prune, representative_vectors,
    sce_with_distances, tensor_block_metrics, Linkage, VectorMode,
};
use ksbm::config::{ExperimentConfig, Method, Preset, RegimePolicy};
use ksbm::dynamics::RegimeBoundaries;
use ksbm::signatures::{regime_split, window_matrix, Statistic, Transform, Window};
use ksbm::{figures, io, pipeline, spikes, KsbmError, Result};
use serde::Serialize;

/// Kuramoto stochastic block model experiments.
#[derive(Parser)]
#[command(name = "ksbm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and integrate the phase dynamics.
    Simulate(ExperimentArgs),
    /// Regime-split lead or covariance matrices of a phase trajectory CSV.
    Signatures(SignatureArgs),
    /// Estimate communities from a matrix CSV.
    Cluster(ClusterArgs),
    /// Simulate, split, build matrices, cluster and report.
    Pipeline {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Also render heatmaps and curve data.
        #[arg(long)]
        figures: bool,
    },
    /// Bin and filter spike trains into a path CSV.
    IngestSpikes(SpikeArgs),
    /// Render heatmaps and curves of a written bundle.
    Figures {
        #[arg(long)]
        bundle: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    graph_seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    brownian_b: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    internal_steps: Option<usize>,
    #[arg(long)]
    output_steps: Option<usize>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<RegimePolicy>,
    #[arg(long)]
    t_trans: Option<f64>,
    #[arg(long)]
    t_ss: Option<f64>,
    #[arg(long)]
    ss_horizon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    transforms: Option<Vec<Transform>>,
    #[arg(long, value_delimiter = ',')]
    statistics: Option<Vec<Statistic>>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    prune_to: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SignatureArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// Without a transition time one full-window matrix is written.
    #[arg(long)]
    t_trans: Option<f64>,
    #[arg(long)]
    t_ss: Option<f64>,
    #[arg(long)]
    ss_horizon: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "sin")]
    transforms: Vec<Transform>,
    #[arg(long, value_delimiter = ',', default_value = "lead")]
    statistics: Vec<Statistic>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Ground-truth labels CSV (`node,label`) for the agreement score.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_parser = parse_method, default_value = "sce")]
    method: Method,
    /// Community count for k-means and hierarchical clustering.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "average")]
    linkage: Linkage,
    #[arg(long, value_parser = parse_vectors, default_value = "row_column")]
    vectors: VectorMode,
    #[arg(long, default_value_t = 0.0)]
    stabilizer: f64,
    #[arg(long)]
    prune_to: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpikeArgs {
    /// CSV with columns `unit_id,trial_id,spike_time_s`.
    #[arg(long)]
    spikes: PathBuf,
    /// CSV with columns `trial_id,start_s,end_s`.
    #[arg(long)]
    trials: Option<PathBuf>,
    /// Units to emit, in column order.
    #[arg(long, value_delimiter = ',')]
    units: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.002)]
    dt: f64,
    #[arg(long, default_value_t = 0.040)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the lead matrix of the whole series here.
    #[arg(long)]
    lead: Option<PathBuf>,
}

fn parse_serde<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_policy(s: &str) -> std::result::Result<RegimePolicy, String> {
    parse_serde(s)
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    parse_serde(s)
}

fn parse_vectors(s: &str) -> std::result::Result<VectorMode, String> {
    parse_serde(s)
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($dst:expr => $src:expr),* $(,)?) => {
                $(if let Some(v) = $src.clone() { $dst = Some(v); })*
            };
        }
        set! {
            cfg.model => self.preset,
            cfg.seed => self.seed,
            cfg.graph_seed => self.graph_seed,
            cfg.output_dir => self.out,
            cfg.params.n => self.n,
            cfg.params.m => self.m,
            cfg.params.kappa => self.kappa,
            cfg.params.sigma => self.sigma,
            cfg.params.mu => self.mu,
            cfg.params.brownian_b => self.brownian_b,
            cfg.grid.t_end => self.t_end,
            cfg.grid.internal_steps => self.internal_steps,
            cfg.grid.output_steps => self.output_steps,
            cfg.regimes.policy => self.policy,
            cfg.regimes.t_trans => self.t_trans,
            cfg.regimes.t_ss => self.t_ss,
            cfg.regimes.ss_horizon => self.ss_horizon,
            cfg.signatures.transforms => self.transforms,
            cfg.signatures.statistics => self.statistics,
            cfg.clustering.method => self.method,
            cfg.clustering.k => self.k,
            cfg.clustering.prune_to => self.prune_to,
        }
        if self.mu.is_some() {
            cfg.params.mu_range = None;
        }
        Ok(cfg)
    }
}

fn output_dir(dir: Option<PathBuf>) -> Result<PathBuf> {
    dir.ok_or_else(|| KsbmError::Config("no output directory: pass --out or set output_dir".into()))
}

fn simulate(args: &ExperimentArgs) -> Result<()> {
    let experiment = args.config()?.resolve()?;
    let dir = output_dir(experiment.output_dir.clone())?;
    let (graph, params, traj) = pipeline::simulate(&experiment)?;
    io::write_edge_list(&dir.join("graph.csv"), &graph)?;
    io::write_labels(&dir.join("labels").join("truth.csv"), graph.communities().labels())?;
    io::write_trajectory_csv(&dir.join("trajectory.csv"), &traj)?;
    io::write_columns(
        &dir.join("nodes.csv"),
        &["node", "community", "omega", "theta0"],
        &[
            (0..graph.node_count()).map(|i| i as f64).collect(),
            graph.communities().labels().iter().map(|&l| l as f64).collect(),
            params.omegas.clone(),
            params.theta0.clone(),
        ],
    )?;
    io::write_json(&dir.join("manifest.json"), &serde_json::json!({
        "package": "ksbm",
        "version": env!("CARGO_PKG_VERSION"),
        "rng": "ChaCha8",
        "experiment": experiment,
    }))?;
    println!("wrote {} samples of {} oscillators to {}", traj.len(), traj.oscillators(), dir.display());
    Ok(())
}

fn signatures(args: &SignatureArgs) -> Result<()> {
    let (path, _) = io::read_path_csv(&args.trajectory)?;
    let mut written = 0;
    for &transform in &args.transforms {
        if transform == Transform::ExpI {
            return Err(KsbmError::Config("exp_i matrices are complex; use identity or sin".into()));
        }
        for &statistic in &args.statistics {
            let mut records: Vec<(&str, Window, ndarray::Array2<f64>)> = Vec::new();
            match args.t_trans {
                Some(t_trans) => {
                    let bounds = RegimeBoundaries::new(t_trans, args.t_ss)?;
                    let split = regime_split(&path, &bounds, args.ss_horizon, statistic, transform)?;
                    let [c, tr, ss] = split.windows;
                    records.push(("C", c.expect("present"), split.clusterization));
                    records.push(("TR", tr.expect("present"), split.transient));
                    if let (Some(w), Some(m)) = (ss, split.steady_state) {
                        records.push(("SS", w, m));
                    }
                }
                None => {
                    let w = Window { start: path.start(), end: path.end() };
                    records.push(("full", w, window_matrix(&path, w, statistic, transform)?));
                }
            }
            for (regime, w, matrix) in records {
                let stem = format!("{}_{}_{regime}", transform.name(), statistic.name());
                io::write_matrix_csv(&args.out.join(format!("{stem}.csv")), &matrix)?;
                io::write_json(
                    &args.out.join(format!("{stem}.json")),
                    &io::MatrixSidecar {
                        statistic: statistic.name().into(),
                        transform: transform.name().into(),
                        window: regime.into(),
                        start: w.start,
                        end: w.end,
                        based_at_zero: true,
                        size: matrix.nrows(),
                    },
                )?;
                written += 1;
            }
        }
    }
    println!("wrote {written} matrices to {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct ClusterReport {
    method: Method,
    h: f64,
    d: f64,
    g: Option<f64>,
    g_normalized: Option<f64>,
    unbounded: bool,
    k: usize,
    agreement: Option<f64>,
    pruned_k: Option<usize>,
    pruned_agreement: Option<f64>,
}

fn cluster(args: &ClusterArgs) -> Result<()> {
    let matrix = io::read_matrix_csv(&args.matrix)?;
    if matrix.nrows() != matrix.ncols() {
        return Err(KsbmError::Config(format!("{} is not square", args.matrix.display())));
    }
    let truth = args.truth.as_deref().map(io::read_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != matrix.nrows() {
            return Err(KsbmError::Config("truth labels do not match the matrix size".into()));
        }
    }
    let b = matrix.view().into_dyn();
    let vectors = representative_vectors(b.view(), args.vectors)?;
    let d = distances_between(&vectors);
    let fixed_k = || args.k.ok_or_else(|| KsbmError::Config("--k is required for this method".into()));
    let mut pruned = None;
    let labels = match args.method {
        Method::Sce => {
            let est = sce_with_distances(b.view(), &d, args.stabilizer)?;
            if let Some(k) = args.prune_to {
                let merged = if est.k() > k { prune(&est, &d, k)? } else { est.clone() };
                io::write_labels(&args.out.join("labels_pruned.csv"), &merged.labels)?;
                pruned = Some(merged);
            }
            est.labels
        }
        Method::Kmeans => kmeans_cluster(&vectors, fixed_k()?, args.seed)?,
        Method::Hierarchical => hierarchical_cluster(&d, args.linkage, fixed_k()?)?,
    };
    let score = tensor_block_metrics(b, &labels, args.stabilizer)?;
    let finite = |x: f64| x.is_finite().then_some(x);
    let report = ClusterReport {
        method: args.method,
        h: score.h,
        d: score.d,
        g: finite(score.g),
        g_normalized: finite(score.normalized()),
        unbounded: score.unbounded,
        k: score.n_used,
        agreement: truth.as_deref().map(|t| agreement(t, &labels)).transpose()?,
        pruned_k: pruned.as_ref().map(|p| p.k()),
        pruned_agreement: match (&truth, &pruned) {
            (Some(t), Some(p)) => Some(agreement(t, &p.labels)?),
            _ => None,
        },
    };
    io::write_labels(&args.out.join("labels.csv"), &labels)?;
    io::write_json(&args.out.join("report.json"), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn run_pipeline(args: &ExperimentArgs, with_figures: bool) -> Result<()> {
    let experiment = args.config()?.resolve()?;
    let dir = output_dir(experiment.output_dir.clone())?;
    let bundle = pipeline::run_experiment(&experiment)?;
    pipeline::write_bundle(&bundle, &dir)?;
    if with_figures {
        figures::emit_figures(&dir)?;
    }
    for e in bundle.report().entries {
        println!(
            "{:<22} k={:<3} agreement={:.3} g_true={}",
            format!("{}_{}_{}", e.transform.name(), e.statistic.name(), e.regime.name()),
            e.k,
            e.agreement,
            e.g_true.map_or("inf".to_string(), |g| format!("{g:.3}")),
        );
    }
    Ok(())
}

fn ingest(args: &SpikeArgs) -> Result<()> {
    let config = spikes::SpikeIngestConfig {
        dt: args.dt,
        tau: args.tau,
        trials: args.trials.as_deref().map(spikes::read_trials).transpose()?,
        units: args.units.clone(),
        ..spikes::SpikeIngestConfig::default()
    };
    let records = spikes::read_spikes(&args.spikes)?;
    let out = spikes::ingest_spikes(&records, &config)?;
    io::write_path_csv(&args.out, &out.path, &out.units)?;
    if let Some(lead) = &args.lead {
        io::write_matrix_csv(lead, &ksbm::signatures::lead_matrix(&out.path))?;
    }
    println!("wrote {} samples of {} units from {} trials", out.path.len(), out.units.len(), out.trials.len());
    Ok(())
}

fn draw(bundle: &FsPath) -> Result<()> {
    let summary = figures::emit_figures(bundle)?;
    println!("wrote {} heatmaps and {} curve files", summary.heatmaps.len(), summary.curves.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Signatures(args) => signatures(args),
        Command::Cluster(args) => cluster(args),
        Command::Pipeline { experiment, figures } => run_pipeline(experiment, *figures),
        Command::IngestSpikes(args) => ingest(args),
        Command::Figures { bundle } => draw(bundle),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
