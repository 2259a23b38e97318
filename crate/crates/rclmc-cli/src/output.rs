//! CSV and binary emission.
//!
//! Every CSV starts with a provenance line `# config=<16-hex FNV-1a of the
//! canonical config JSON>` followed by the fixed header
//! `m,elapsed,nominal_cost,work_cost,error,stderr`. Floats print as their
//! shortest round-trip decimal.

use anyhow::{Context, Result};
use rclmc::harness::{BenchmarkResult, CurveRow};
use rclmc::sampler::EnsembleRecord;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const CSV_HEADER: &str = "m,elapsed,nominal_cost,work_cost,error,stderr";

fn open(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

pub fn write_error_series(path: &Path, config_hash: u64, rows: &[CurveRow]) -> Result<()> {
    let mut w = open(path)?;
    writeln!(w, "# config={config_hash:016x}")?;
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.m, r.elapsed, r.nominal_cost, r.work_cost, r.error, r.stderr
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Extract the error series of one observable from an ensemble record.
pub fn series_for_observable(record: &EnsembleRecord, index: usize) -> Vec<CurveRow> {
    record
        .snapshots
        .iter()
        .map(|snap| {
            let obs = &snap.observables[index];
            CurveRow {
                m: snap.m,
                elapsed: snap.elapsed_mean,
                nominal_cost: snap.nominal_cost,
                work_cost: snap.work_cost_mean,
                error: obs.error.unwrap_or(f64::NAN),
                stderr: obs.stderr,
            }
        })
        .collect()
}

/// Combined benchmark table: one row per shared cost point, one
/// (error, stderr) column pair per curve.
pub fn write_benchmark_combined(
    path: &Path,
    config_hash: u64,
    result: &BenchmarkResult,
    separator: char,
    comment_columns: bool,
) -> Result<()> {
    let mut w = open(path)?;
    writeln!(w, "# config={config_hash:016x}")?;
    let mut header = String::from("cost");
    for curve in &result.curves {
        header.push(separator);
        header.push_str(&format!("error_{0}{separator}stderr_{0}", curve.label));
    }
    if comment_columns {
        writeln!(w, "# columns: {header}")?;
    } else {
        writeln!(w, "{header}")?;
    }
    for (k, cost) in result.cost_grid.iter().enumerate() {
        let mut line = format!("{cost}");
        for curve in &result.curves {
            let row = &curve.rows[k];
            line.push(separator);
            line.push_str(&format!("{}{separator}{}", row.error, row.stderr));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Raw binary snapshots: header {magic "RCLM", version u32, d u32, N u32,
/// snapshot count u32}, then one little-endian f64 block of N×d chain states
/// per snapshot, chain-major.
pub fn write_binary_snapshots(path: &Path, record: &EnsembleRecord) -> Result<()> {
    let raw = record
        .raw
        .as_ref()
        .context("ensemble was run without raw state capture")?;
    let mut w = open(path)?;
    w.write_all(b"RCLM")?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&(raw.dim as u32).to_le_bytes())?;
    w.write_all(&(raw.chains as u32).to_le_bytes())?;
    w.write_all(&(raw.states.len() as u32).to_le_bytes())?;
    for snapshot in &raw.states {
        for value in snapshot {
            w.write_all(&value.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}
