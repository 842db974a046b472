//! Static figure data from a written bundle: grayscale heatmaps of every
//! matrix plus CSV curves.

use std::path::{Path as FsPath, PathBuf};

use image::{GrayImage, Luma};
use log::warn;
use ndarray::Array2;

use crate::error::Result;
use crate::io;
use crate::pipeline::Report;

/// Gray level `128 + round(127 v / max|v|)`; an all-zero matrix is uniform 128.
pub fn heatmap_levels(matrix: &Array2<f64>) -> Array2<u8> {
    let scale = matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    matrix.mapv(|v| if scale > 0.0 { (128.0 + (127.0 * v / scale).round()) as u8 } else { 128 })
}

/// Heatmap image, each entry drawn as a `pixel x pixel` square.
pub fn heatmap(matrix: &Array2<f64>, pixel: u32) -> GrayImage {
    let levels = heatmap_levels(matrix);
    let pixel = pixel.max(1);
    let (rows, cols) = levels.dim();
    GrayImage::from_fn(cols as u32 * pixel, rows as u32 * pixel, |x, y| {
        Luma([levels[[(y / pixel) as usize, (x / pixel) as usize]]])
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

/// Files written by [`emit_figures`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FigureSummary {
    pub heatmaps: Vec<PathBuf>,
    pub curves: Vec<PathBuf>,
}

impl FigureSummary {
    pub fn is_empty(&self) -> bool {
        self.heatmaps.is_empty() && self.curves.is_empty()
    }
}

fn sorted_csvs(dir: &FsPath) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.extension().is_some_and(|e| e == "csv") {
            found.push(p);
        }
    }
    found.sort();
    Ok(found)
}

/// Renders everything found in `bundle_dir` into `bundle_dir/figures`:
/// `heatmaps/<stem>.png` for each matrix, `variance.csv` with the
/// `(1/m)²` threshold column, `phases.csv` with phases wrapped to `[-π, π)`
/// and `scores.csv` with one bar per report entry. Missing inputs are
/// skipped; a bundle with nothing to draw is a no-op with a warning.
pub fn emit_figures(bundle_dir: &FsPath) -> Result<FigureSummary> {
    let out = bundle_dir.join("figures");
    let mut summary = FigureSummary::default();

    for csv in sorted_csvs(&bundle_dir.join("matrices"))? {
        let matrix = io::read_matrix_csv(&csv)?;
        let pixel = (256 / matrix.nrows().max(1)).max(1) as u32;
        let target = out.join("heatmaps").join(csv.with_extension("png").file_name().expect("file name"));
        std::fs::create_dir_all(target.parent().expect("parent"))?;
        heatmap(&matrix, pixel).save(&target)?;
        summary.heatmaps.push(target);
    }

    let variance = bundle_dir.join("variance.csv");
    let sizes = bundle_dir.join("graph.json");
    if variance.is_file() {
        let (curve, names) = io::read_path_csv(&variance)?;
        let mut headers = vec!["t".to_string()];
        let mut columns = vec![curve.times.clone()];
        for (name, col) in names.iter().zip(curve.values.columns()) {
            if name == "predicted" || name.starts_with("var_") {
                headers.push(name.clone());
                columns.push(col.to_vec());
            }
        }
        if sizes.is_file() {
            let graph: io::GraphSidecar = io::read_json(&sizes)?;
            headers.push("threshold".into());
            columns.push(vec![(graph.community_size as f64).powi(-2); curve.len()]);
        }
        let refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let target = out.join("variance.csv");
        io::write_columns(&target, &refs, &columns)?;
        summary.curves.push(target);
    }

    let trajectory = bundle_dir.join("trajectory.csv");
    if trajectory.is_file() {
        let (mut path, names) = io::read_path_csv(&trajectory)?;
        use std::f64::consts::PI;
        path.values.mapv_inplace(|x| (x + PI).rem_euclid(2.0 * PI) - PI);
        let target = out.join("phases.csv");
        io::write_path_csv(&target, &path, &names)?;
        summary.curves.push(target);
    }

    let report = bundle_dir.join("report.json");
    if report.is_file() {
        let report: Report = io::read_json(&report)?;
        let target = out.join("scores.csv");
        let mut w = csv::Writer::from_path({
            std::fs::create_dir_all(&out)?;
            &target
        })?;
        w.write_record(["matrix", "g_true", "g", "g_normalized", "k", "agreement"])?;
        for e in &report.entries {
            w.write_record([
                format!("{}_{}_{}", e.transform.name(), e.statistic.name(), e.regime.name()),
                opt(e.g_true),
                opt(e.g),
                opt(e.g_normalized),
                e.k.to_string(),
                e.agreement.to_string(),
            ])?;
        }
        w.flush()?;
        summary.curves.push(target);
    }

    if summary.is_empty() {
        warn!("nothing to draw in {}", bundle_dir.display());
    }
    Ok(summary)
}
