//! CSV, TSV and JSON artifacts. Everything is rendered in memory first and
//! written with temp-file-and-rename once a run has succeeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use hjj_core::SolutionField;
use serde::Serialize;

use crate::RunError;

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Position label of a node: whole-line `x` on the two-edge line,
/// `edge:distance` otherwise.
pub fn node_label(field: &SolutionField, node: usize) -> String {
    let g = field.grid();
    if is_line(field) {
        fmt17(g.signed_position(node))
    } else {
        let p = g.point(node);
        format!("{}:{}", p.edge, fmt17(p.dist))
    }
}

fn is_line(field: &SolutionField) -> bool {
    let g = field.grid();
    g.edge_count() == 2 && g.orientations()[0] != g.orientations()[1]
}

fn csv_bytes(delimiter: u8, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, RunError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| RunError::Io(e.to_string()))
}

fn csv_error(e: csv::Error) -> RunError {
    RunError::Io(e.to_string())
}

/// `t,x,u` with one row per level and node.
pub fn field_csv(field: &SolutionField) -> Result<Vec<u8>, RunError> {
    let g = field.grid();
    let order = field.nodes_by_position();
    let labels: Vec<String> = order.iter().map(|&n| node_label(field, n)).collect();
    let rows = (0..g.levels()).flat_map(|level| {
        let t = fmt17(g.time(level));
        order
            .iter()
            .zip(&labels)
            .map(move |(&node, x)| vec![t.clone(), x.clone(), fmt17(field.value(level, node))])
            .collect::<Vec<_>>()
    });
    csv_bytes(b',', &["t", "x", "u"], rows)
}

/// Tab-separated `x u` snapshot at the grid level nearest to `t`.
pub fn snapshot_tsv(field: &SolutionField, t: f64) -> Result<Vec<u8>, RunError> {
    let level = field.grid().nearest_level(t);
    let rows = field
        .nodes_by_position()
        .into_iter()
        .map(|node| vec![node_label(field, node), fmt17(field.value(level, node))]);
    csv_bytes(b'\t', &["x", "u"], rows)
}

/// Pretty JSON with keys sorted.
pub fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, RunError> {
    // serde_json::Value keeps objects in a BTreeMap, which sorts the keys
    let sorted = serde_json::to_value(value).map_err(|e| RunError::Io(e.to_string()))?;
    let mut out = serde_json::to_vec_pretty(&sorted).map_err(|e| RunError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Name fragment for a report time, e.g. `t0.25`.
pub fn time_tag(t: f64) -> String {
    format!("t{t}")
}

/// Files produced by a run, written together at the end.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                write_atomic(&path, bytes)?;
                Ok(path)
            })
            .collect()
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
