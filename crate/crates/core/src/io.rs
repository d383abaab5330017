//! Plain-CSV serialization of samples, selections, and traces.
//!
//! Sample files hold one point per row with `d` numeric columns and no header
//! by default; floats are written in shortest round-trip form so identical
//! runs produce byte-identical files.

use ndarray::Array2;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::samplers::{SampleMeta, SampleSet};
use crate::thinning::ThinningResult;

pub fn write_sample_csv(path: &Path, sample: &SampleSet, header: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if header {
        let cols: Vec<String> = (0..sample.dim()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", cols.join(","))?;
    }
    for row in sample.points.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar metadata path for a sample CSV: `<file>.meta.json`.
pub fn meta_path(csv_path: &Path) -> std::path::PathBuf {
    let mut s = csv_path.as_os_str().to_os_string();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

pub fn write_sample_meta(csv_path: &Path, meta: &SampleMeta) -> Result<()> {
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(meta_path(csv_path), json + "\n")?;
    Ok(())
}

pub fn read_sample_csv(path: &Path, has_header: bool) -> Result<Array2<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if has_header && lineno == 0 {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::Dataset(format!(
                        "non-numeric cell {:?} on line {}",
                        cell,
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Dataset(format!(
                    "ragged CSV: line {} has {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    d
                )))
            }
            _ => {}
        }
        rows.push(row);
    }
    let d = dim.ok_or_else(|| Error::Dataset("empty sample file".into()))?;
    let n = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, d), flat)
        .map_err(|e| Error::Dataset(format!("bad sample shape: {e}")))
}

/// One selected index per line, 0-based.
pub fn write_indices_csv(path: &Path, indices: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in indices {
        writeln!(w, "{i}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_indices_csv(path: &Path) -> Result<Vec<usize>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse::<usize>()
                .map_err(|_| Error::Dataset(format!("bad index {t:?}")))?,
        );
    }
    Ok(out)
}

/// Per-iteration objective and running KSD^2, with a header row.
pub fn write_trace_csv(path: &Path, result: &ThinningResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,objective,ksd2")?;
    for (t, (obj, ksd)) in result
        .objective_trace
        .iter()
        .zip(result.ksd_trace.iter())
        .enumerate()
    {
        writeln!(w, "{},{obj},{ksd}", t + 1)?;
    }
    w.flush()?;
    Ok(())
}
