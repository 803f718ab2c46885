//! On-disk formats: panels, planted truth, posterior outputs.

use std::path::Path;

use bcglpm_core::mcmc::{ChainTrace, PosteriorSummary};
use bcglpm_core::nalgebra::DMatrix;
use bcglpm_core::{Graph, TimeSeriesPanel};
use serde::Serialize;

use crate::error::{AppError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(AppError::csv(path))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(AppError::io(path))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().from_path(path).map_err(AppError::csv(path))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, cell: &str) -> Result<T> {
    cell.trim().parse().map_err(|_| AppError::format(path, format!("line {line}: cannot parse {cell:?}")))
}

/// Numeric panel: a header `date,<series...>` and one row per observation.
pub fn read_panel(path: &Path) -> Result<TimeSeriesPanel> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(AppError::csv(path))?.clone();
    if header.len() < 2 {
        return Err(AppError::format(path, "need a date column and at least one series"));
    }
    let labels: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(AppError::csv(path))?;
        dates.push(rec[0].trim().to_string());
        for cell in rec.iter().skip(1) {
            values.push(parse_num::<f64>(path, r + 2, cell)?);
        }
    }
    if dates.is_empty() {
        return Err(AppError::format(path, "no data rows"));
    }
    let y = DMatrix::from_row_slice(dates.len(), labels.len(), &values);
    Ok(TimeSeriesPanel::new(y, DMatrix::zeros(0, 0), dates, labels)?)
}

pub fn write_panel(path: &Path, panel: &TimeSeriesPanel) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(panel.labels().iter().cloned());
    w.write_record(&header).map_err(AppError::csv(path))?;
    for (t, date) in panel.dates().iter().enumerate() {
        let mut row = vec![date.clone()];
        row.extend(panel.y().row(t).iter().map(|&v| fmt_f64(v)));
        w.write_record(&row).map_err(AppError::csv(path))?;
    }
    finish(w, path)
}

/// `i,j,edge` for every pair `i < j`.
pub fn write_truth(path: &Path, graph: &Graph) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "edge"]).map_err(AppError::csv(path))?;
    let n = graph.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let e = if graph.has_edge(i, j) { "1" } else { "0" };
            w.write_record([i.to_string(), j.to_string(), e.to_string()]).map_err(AppError::csv(path))?;
        }
    }
    finish(w, path)
}

/// Reads `(i, j, value)` rows from the first three columns into a symmetric
/// matrix; `n` is one more than the largest index.
fn read_pairs(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = reader(path)?;
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(AppError::csv(path))?;
        if rec.len() < 3 {
            return Err(AppError::format(path, format!("line {}: expected at least 3 fields", r + 2)));
        }
        let i: usize = parse_num(path, r + 2, &rec[0])?;
        let j: usize = parse_num(path, r + 2, &rec[1])?;
        let v: f64 = parse_num(path, r + 2, &rec[2])?;
        if i == j {
            return Err(AppError::format(path, format!("line {}: self pair", r + 2)));
        }
        rows.push((i, j, v));
    }
    let n = rows.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    if rows.len() != n * n.saturating_sub(1) / 2 {
        return Err(AppError::format(path, format!("{} rows do not cover all pairs of {n} nodes", rows.len())));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, j, v) in rows {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

pub fn read_truth(path: &Path) -> Result<Graph> {
    Ok(Graph::from_threshold(&read_pairs(path)?, 0.5))
}

/// `i,j,edge_prob,median_edge` for every pair `i < j`.
pub fn write_edges(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "edge_prob", "median_edge"]).map_err(AppError::csv(path))?;
    let n = summary.edge_prob.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let med = if summary.median_graph.has_edge(i, j) { "1" } else { "0" };
            w.write_record([i.to_string(), j.to_string(), fmt_f64(summary.edge_prob[(i, j)]), med.to_string()])
                .map_err(AppError::csv(path))?;
        }
    }
    finish(w, path)
}

/// Edge probabilities from an `edges.csv` file.
pub fn read_edges(path: &Path) -> Result<DMatrix<f64>> {
    read_pairs(path)
}

/// `node,label,u1,u2`.
pub fn write_latent(path: &Path, u: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["node", "label", "u1", "u2"]).map_err(AppError::csv(path))?;
    for i in 0..u.nrows() {
        let label = labels.get(i).cloned().unwrap_or_else(|| format!("{i}"));
        w.write_record([i.to_string(), label, fmt_f64(u[(i, 0)]), fmt_f64(u[(i, 1)])])
            .map_err(AppError::csv(path))?;
    }
    finish(w, path)
}

pub fn read_latent(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = reader(path)?;
    let mut vals = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(AppError::csv(path))?;
        if rec.len() != 4 {
            return Err(AppError::format(path, format!("line {}: expected node,label,u1,u2", r + 2)));
        }
        let node: usize = parse_num(path, r + 2, &rec[0])?;
        if node != r {
            return Err(AppError::format(path, format!("line {}: nodes must be listed in order", r + 2)));
        }
        vals.push(parse_num::<f64>(path, r + 2, &rec[2])?);
        vals.push(parse_num::<f64>(path, r + 2, &rec[3])?);
    }
    if vals.is_empty() {
        return Err(AppError::format(path, "no nodes"));
    }
    Ok(DMatrix::from_row_slice(vals.len() / 2, 2, &vals))
}

/// `sweep,score`, sweeps counted from 1.
pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sweep", "score"]).map_err(AppError::csv(path))?;
    for (s, v) in trace.scores.iter().enumerate() {
        w.write_record([(s + 1).to_string(), fmt_f64(*v)]).map_err(AppError::csv(path))?;
    }
    finish(w, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::format(path, format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(AppError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("truth.csv");
        let g = Graph::from_edges(4, &[(0, 3), (1, 2)]);
        write_truth(&p, &g).unwrap();
        assert_eq!(read_truth(&p).unwrap(), g);
    }

    #[test]
    fn incomplete_pairs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, "i,j,edge_prob,median_edge\n0,2,0.5,0\n").unwrap();
        assert!(read_edges(&p).is_err());
    }
}
