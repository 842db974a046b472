//! CSV and JSON formats for graphs, trajectories, matrices, labels and reports.
//!
//! Floats are written with Rust's shortest round-trip formatting so files
//! are byte-stable across runs and re-read exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path as FsPath;

use ndarray::Array2;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{KsbmError, Result};
use crate::graphgen::{CouplingGraph, GraphKind, HierarchicalSpec};
use crate::signatures::Path;

fn create(path: &FsPath) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_f64(field: &str, path: &FsPath) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| KsbmError::Config(format!("{}: `{field}` is not a number", path.display())))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &FsPath, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &FsPath) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Headerless `N x N` numeric CSV.
pub fn write_matrix_csv(path: &FsPath, matrix: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    for row in matrix.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &FsPath) -> Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut values = Vec::new();
    let mut rows = 0;
    for record in r.records() {
        for field in record?.iter() {
            values.push(parse_f64(field, path)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(KsbmError::Config(format!("{}: empty matrix", path.display())));
    }
    let cols = values.len() / rows;
    Array2::from_shape_vec((rows, cols), values)
        .map_err(|_| KsbmError::Config(format!("{}: ragged matrix", path.display())))
}

/// Metadata written next to every exported matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub statistic: String,
    pub transform: String,
    pub window: String,
    pub start: f64,
    pub end: f64,
    /// Paths are translated to start at the origin before the statistic.
    pub based_at_zero: bool,
    pub size: usize,
}

/// Time column plus one column per channel, with a header row.
pub fn write_path_csv(path: &FsPath, data: &Path, channels: &[String]) -> Result<()> {
    if channels.len() != data.dim() {
        return Err(KsbmError::param("channel names do not match the path dimension"));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(std::iter::once("t").chain(channels.iter().map(String::as_str)))?;
    for (t, row) in data.times.iter().zip(data.values.rows()) {
        w.write_record(std::iter::once(t.to_string()).chain(row.iter().map(|v| v.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_path_csv`] or [`write_trajectory_csv`].
pub fn read_path_csv(path: &FsPath) -> Result<(Path, Vec<String>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.len() < 2 {
        return Err(KsbmError::Config(format!("{}: need a time column and at least one channel", path.display())));
    }
    let channels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in r.records() {
        let record = record?;
        times.push(parse_f64(&record[0], path)?);
        for field in record.iter().skip(1) {
            values.push(parse_f64(field, path)?);
        }
    }
    let values = Array2::from_shape_vec((times.len(), channels.len()), values)
        .map_err(|_| KsbmError::Config(format!("{}: ragged rows", path.display())))?;
    Ok((Path::new(times, values)?, channels))
}

/// Phase trajectory with columns `t, theta_0, ..., theta_{N-1}`.
pub fn write_trajectory_csv(path: &FsPath, traj: &Trajectory) -> Result<()> {
    let channels: Vec<String> = (0..traj.oscillators()).map(|i| format!("theta_{i}")).collect();
    let data = Path::new(traj.times.clone(), traj.phases.clone())?;
    write_path_csv(path, &data, &channels)
}

/// Named columns of equal length.
pub fn write_columns(path: &FsPath, headers: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    if headers.len() != columns.len() || columns.iter().any(|c| c.len() != columns[0].len()) {
        return Err(KsbmError::param("column headers and lengths must agree"));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(headers)?;
    for k in 0..columns.first().map_or(0, Vec::len) {
        w.write_record(columns.iter().map(|c| c[k].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    node: usize,
    label: usize,
}

pub fn write_labels(path: &FsPath, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (node, &label) in labels.iter().enumerate() {
        w.serialize(LabelRow { node, label })?;
    }
    w.flush()?;
    Ok(())
}

/// Labels ordered by node index; every node `0..N` must appear once.
pub fn read_labels(path: &FsPath) -> Result<Vec<usize>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<LabelRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|row| row.node);
    if rows.iter().enumerate().any(|(i, row)| row.node != i) {
        return Err(KsbmError::Config(format!("{}: nodes must be 0..N without gaps", path.display())));
    }
    Ok(rows.into_iter().map(|row| row.label).collect())
}

/// Graph metadata stored beside the edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub kind: GraphKind,
    pub communities: usize,
    pub community_size: usize,
    pub nodes: usize,
    pub edges: usize,
    pub seed: u64,
    pub hierarchy: Option<HierarchicalSpec>,
    pub labels: Vec<usize>,
}

#[derive(Serialize)]
struct EdgeRow {
    source: usize,
    target: usize,
    coupling: f64,
}

/// Directed edge list `source,target,coupling` plus a JSON sidecar at
/// `path` with extension `.json`.
pub fn write_edge_list(path: &FsPath, graph: &CouplingGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for ((i, j), &a) in graph.adjacency().indexed_iter() {
        if a {
            w.serialize(EdgeRow { source: i, target: j, coupling: graph.coupling()[[i, j]] })?;
        }
    }
    w.flush()?;
    let comm = graph.communities();
    let sidecar = GraphSidecar {
        kind: graph.kind(),
        communities: comm.n(),
        community_size: comm.m(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        seed: graph.seed(),
        hierarchy: graph.hierarchy().copied(),
        labels: comm.labels().to_vec(),
    };
    write_json(&path.with_extension("json"), &sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("m.csv");
        let m = array![[0.1, -1.0 / 3.0], [1e-300, f64::MAX]];
        write_matrix_csv(&file, &m).unwrap();
        assert_eq!(read_matrix_csv(&file).unwrap(), m);
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("labels.csv");
        write_labels(&file, &[2, 0, 1, 1]).unwrap();
        assert_eq!(read_labels(&file).unwrap(), vec![2, 0, 1, 1]);
    }

    #[test]
    fn path_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("p.csv");
        let p = Path::new(vec![0.0, 0.5, 1.0], array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.5]]).unwrap();
        write_path_csv(&file, &p, &["a".into(), "b".into()]).unwrap();
        let (back, names) = read_path_csv(&file).unwrap();
        assert_eq!(back, p);
        assert_eq!(names, vec!["a", "b"]);
    }
}
