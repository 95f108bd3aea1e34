//! File formats: dataset manifests, dissimilarity block exports, distance
//! matrices (CSV and a flat binary format), weight matrices and
//! cross-validation reports.
//!
//! All floating-point CSV output goes through [`fmt_f64`] (12 significant
//! digits), so reruns of a deterministic pipeline produce byte-identical
//! files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::dataset::CategoricalDataset;
use crate::delta::BlockDiagonalDelta;
use crate::distance::{DistanceMatrix, DistanceProvenance};
use crate::error::{Error, Result};
use crate::learners::CvReport;
use crate::measures::assoc::WeightMatrix;

/// Fixed-width float formatting: 12 significant digits, plain decimal.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

pub fn write_dataset_manifest(ds: &CategoricalDataset, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &ds.manifest())?;
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Write one CSV per block (level labels as headers) plus a JSON manifest
/// tying blocks to variables and recording the measure spec. Returns the
/// manifest path.
pub fn write_delta(
    delta: &BlockDiagonalDelta,
    spec_json: serde_json::Value,
    dir: &Path,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut block_entries = Vec::new();
    for (idx, block) in delta.blocks().iter().enumerate() {
        let file_name = format!("delta_block_{idx:03}_{}.csv", sanitize(block.variable_name()));
        let mut w = csv::Writer::from_path(dir.join(&file_name))?;
        let mut header = vec!["level".to_string()];
        header.extend(block.levels().iter().cloned());
        w.write_record(&header)?;
        for a in 0..block.order() {
            let mut rec = vec![block.levels()[a].clone()];
            for b in 0..block.order() {
                rec.push(fmt_f64(block.get(a, b)));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        block_entries.push(json!({
            "variable": block.variable_name(),
            "file": file_name,
            "levels": block.levels(),
            "undefined_levels": block.undefined_levels(),
        }));
    }
    let manifest = json!({
        "measure": spec_json,
        "flags": {
            "symmetric": delta.is_symmetric(),
            "zero_diagonal": delta.has_zero_diagonal(),
        },
        "provenance": delta.provenance(),
        "blocks": block_entries,
    });
    let path = dir.join("delta_manifest.json");
    let file = File::create(&path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(path)
}

/// Distance matrix as CSV: header `id,0,1,...`, one row per source row.
pub fn write_distance_csv(d: &DistanceMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..d.n_cols()).map(|j| j.to_string()));
    w.write_record(&header)?;
    for i in 0..d.n_rows() {
        let mut rec = vec![i.to_string()];
        rec.extend(d.row(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

const DISTANCE_MAGIC: &[u8; 8] = b"CDDMAT01";
const FLAG_SYMMETRIC: u32 = 1;
const FLAG_ZERO_DIAGONAL: u32 = 2;

/// Flat binary distance format: 8-byte magic, n1 and n2 as little-endian
/// u64, a u32 flag word (bit 0 symmetric, bit 1 zero diagonal), then
/// n1 * n2 row-major little-endian f64 values.
pub fn write_distance_binary(d: &DistanceMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DISTANCE_MAGIC)?;
    w.write_all(&(d.n_rows() as u64).to_le_bytes())?;
    w.write_all(&(d.n_cols() as u64).to_le_bytes())?;
    let mut flags = 0u32;
    if d.is_symmetric() {
        flags |= FLAG_SYMMETRIC;
    }
    if d.has_zero_diagonal() {
        flags |= FLAG_ZERO_DIAGONAL;
    }
    w.write_all(&flags.to_le_bytes())?;
    for &v in d.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_distance_binary(path: &Path) -> Result<DistanceMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DISTANCE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic in {}: expected {DISTANCE_MAGIC:?}",
            path.display()
        )));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let n1 = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let n2 = u64::from_le_bytes(buf8) as usize;
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let flags = u32::from_le_bytes(buf4);
    let mut values = Vec::with_capacity(n1 * n2);
    for _ in 0..n1 * n2 {
        r.read_exact(&mut buf8)?;
        values.push(f64::from_le_bytes(buf8));
    }
    Ok(DistanceMatrix::new(
        n1,
        n2,
        values,
        flags & FLAG_SYMMETRIC != 0,
        flags & FLAG_ZERO_DIAGONAL != 0,
        DistanceProvenance {
            measure: "imported".into(),
            delta_spec_fingerprint: 0,
            delta_train_fingerprint: 0,
            delta_data_dependent: false,
            rows_fingerprint: 0,
            cols_fingerprint: 0,
        },
    ))
}

/// Read a Q x Q weight matrix: header row of variable names, then Q rows of
/// Q values. When `expected_names` is given, the header must match it.
pub fn read_weight_matrix_csv(path: &Path, expected_names: Option<&[String]>) -> Result<WeightMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or(Error::EmptyTable)?
        .map_err(Error::Csv)?;
    let names: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    if let Some(expected) = expected_names {
        if names != expected {
            return Err(Error::InvalidWeights(format!(
                "weight matrix header {names:?} does not match variables {expected:?}"
            )));
        }
    }
    let dim = names.len();
    let mut rows = Vec::with_capacity(dim);
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(Error::Csv)?;
        let row: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidWeights(format!("non-numeric entry '{s}' in row {}", i + 1))
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.len() != dim {
        return Err(Error::InvalidWeights(format!(
            "expected {dim} rows, got {}",
            rows.len()
        )));
    }
    WeightMatrix::from_rows(rows)
}

/// Tidy cell-level CSV: one row per (measure, k, repeat, fold).
pub fn write_cv_cells_csv(report: &CvReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["measure", "k", "repeat", "fold", report.task_metric.as_str(), "error"])?;
    for c in &report.cells {
        w.write_record([
            c.measure.clone(),
            c.k.map(|k| k.to_string()).unwrap_or_default(),
            c.repeat.to_string(),
            c.fold.to_string(),
            c.value.map(fmt_f64).unwrap_or_default(),
            c.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Summary CSV: one row per (measure, k) with mean, sd over repeats and the
/// selected flag.
pub fn write_cv_summary_csv(report: &CvReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "measure",
        "k",
        &format!("mean_{}", report.task_metric),
        "sd",
        "n_ok",
        "n_err",
        "selected",
    ])?;
    for s in &report.summaries {
        w.write_record([
            s.measure.clone(),
            s.k.map(|k| k.to_string()).unwrap_or_default(),
            if s.mean.is_nan() {
                String::new()
            } else {
                fmt_f64(s.mean)
            },
            if s.sd.is_nan() { String::new() } else { fmt_f64(s.sd) },
            s.n_ok.to_string(),
            s.n_err.to_string(),
            s.selected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
