use std::fs;
use std::path::Path;

use ksbm::config::{Experiment, Preset};
use ksbm::figures::{emit_figures, heatmap_levels};
use ksbm::io;
use ksbm::pipeline::{run_experiment, write_bundle, Regime, Report};
use ksbm::signatures::{Statistic, Transform};

fn csv_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|e| e == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn standard_run_is_reproducible_and_reported() {
    let e = Experiment::from_preset(Preset::Standard, 0).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let bundle = run_experiment(&e).unwrap();
    write_bundle(&bundle, a.path()).unwrap();
    write_bundle(&run_experiment(&e).unwrap(), b.path()).unwrap();
    let files = csv_files(a.path());
    assert!(files.len() > 10);
    for f in &files {
        let rel = f.strip_prefix(a.path()).unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{}", rel.display());
    }
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(b.path().join("manifest.json")).unwrap()
    );

    let report: Report = io::read_json(&a.path().join("report.json")).unwrap();
    let t_trans = report.regimes.t_trans.unwrap();
    assert!((t_trans - 0.281).abs() < 0.05 * 0.281, "{t_trans}");
    assert!(report.regimes.split);
    let tr = report
        .entries
        .iter()
        .find(|e| e.transform == Transform::Sin && e.statistic == Statistic::Lead && e.regime == Regime::Transient)
        .unwrap();
    assert_eq!(tr.agreement, 1.0);
    assert_eq!(tr.k, 3);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
}

#[test]
fn uncoupled_run_falls_back_to_full_window() {
    let mut e = Experiment::from_preset(Preset::Custom, 1).unwrap();
    e.model.kappa = 0.0;
    let bundle = run_experiment(&e).unwrap();
    assert!(!bundle.regimes.split);
    assert_eq!(bundle.regimes.t_trans, None);
    assert!(bundle.warnings.iter().any(|w| w.contains("full-window")), "{:?}", bundle.warnings);
    assert!(bundle.matrices.iter().all(|m| m.regime == Regime::Full));
    assert_eq!(bundle.matrices.len(), e.transforms.len() * e.statistics.len());
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle, dir.path()).unwrap();
    assert!(dir.path().join("matrices/sin_lead_full.csv").is_file());
}

#[test]
fn collapsed_steady_state_loses_sinusoid_recovery() {
    let mut total = 0.0;
    let mut count = 0.0;
    for seed in 0..4 {
        let bundle = run_experiment(&Experiment::from_preset(Preset::Collapsed, seed).unwrap()).unwrap();
        let ss: Vec<_> = bundle.estimates.iter().filter(|e| e.regime == Regime::SteadyState).collect();
        assert_eq!(ss.len(), 4);
        for e in ss.iter().filter(|e| e.transform == Transform::Sin) {
            assert!(e.agreement < 1.0, "seed {seed} {:?}: {}", e.statistic, e.agreement);
            total += e.agreement;
            count += 1.0;
        }
    }
    assert!(total / count <= 0.6, "{}", total / count);
}

#[test]
fn figures_from_standard_bundle() {
    let bundle = run_experiment(&Experiment::from_preset(Preset::Standard, 0).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle, dir.path()).unwrap();
    let summary = emit_figures(dir.path()).unwrap();
    assert_eq!(summary.heatmaps.len(), bundle.matrices.len());

    let lead = &bundle.matrix(Transform::Sin, Statistic::Lead, Regime::Transient).unwrap().matrix;
    let levels = heatmap_levels(lead);
    for i in 0..levels.nrows() {
        for j in 0..levels.ncols() {
            assert_eq!(levels[[i, j]] as i32 - 128, 128 - levels[[j, i]] as i32);
        }
    }
    let png = image::open(dir.path().join("figures/heatmaps/sin_lead_TR.png")).unwrap().to_luma8();
    let pixel = png.width() / 99;
    assert_eq!(png.get_pixel(5 * pixel, 70 * pixel)[0], levels[[70, 5]]);

    let (curve, names) = io::read_path_csv(&dir.path().join("figures/variance.csv")).unwrap();
    let col = |name: &str| curve.values.column(names.iter().position(|n| n == name).unwrap()).to_vec();
    let (predicted, threshold) = (col("predicted"), col("threshold"));
    assert_eq!(threshold[0], 1.0 / (33.0 * 33.0));
    let t_trans = bundle.regimes.t_trans.unwrap();
    let k = curve.times.iter().position(|&t| t >= t_trans).unwrap();
    assert!(predicted[k - 1] > threshold[0] && predicted[k] <= threshold[0]);
    assert!(dir.path().join("figures/phases.csv").is_file());
    assert!(dir.path().join("figures/scores.csv").is_file());
}

#[test]
fn empty_bundle_draws_nothing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_figures(dir.path()).unwrap().is_empty());
}
