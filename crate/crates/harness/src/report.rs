//! Artifact writers and the report-diff tool.
//!
//! Report CSVs are byte-deterministic: fixed field order, fixed
//! 17-significant-digit float format, no timestamps. Wall time and thread
//! counts live only in the manifest, which is excluded from the
//! determinism contract.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use spde_core::regularity::SpatialProfilePoint;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("schema mismatch: {detail}")]
    SchemaMismatch { detail: String },
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

pub fn write_profile_csv(dir: &Path, profile: &[SpatialProfilePoint]) -> std::io::Result<PathBuf> {
    let mut csv =
        String::from("theta,p,sup_moment,sup_moment_half,ratio,threshold,divergent\n");
    for pt in profile {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            pt.theta,
            pt.p,
            pt.sup_moment,
            pt.sup_moment_half,
            pt.ratio,
            pt.threshold,
            u8::from(pt.divergent)
        ));
    }
    write_text(dir, "profile.csv", &csv)
}

/// Config echo + version + wall time. Not part of the byte-deterministic
/// report set.
pub fn write_manifest(
    dir: &Path,
    config: &RunConfig,
    wall_seconds: f64,
) -> std::io::Result<PathBuf> {
    let manifest = serde_json::json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "wall_seconds": wall_seconds,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    write_text(dir, "manifest.json", &text)
}

/// Result of diffing two report files sharing a schema.
#[derive(Debug)]
pub struct CompareOutcome {
    pub identical: bool,
    pub diffs: Vec<String>,
}

/// Per-row, per-column diff of two CSV reports. The headers must match
/// exactly; otherwise the schemas are declared incompatible.
pub fn compare_reports(a: &Path, b: &Path) -> Result<CompareOutcome, CompareError> {
    let ta = fs::read_to_string(a)?;
    let tb = fs::read_to_string(b)?;
    let mut la = ta.lines();
    let mut lb = tb.lines();
    let ha = la.next().unwrap_or("");
    let hb = lb.next().unwrap_or("");
    if ha != hb {
        return Err(CompareError::SchemaMismatch {
            detail: format!("header `{ha}` vs `{hb}`"),
        });
    }
    let columns: Vec<&str> = ha.split(',').collect();
    let rows_a: Vec<&str> = la.collect();
    let rows_b: Vec<&str> = lb.collect();
    let mut diffs = Vec::new();
    if rows_a.len() != rows_b.len() {
        diffs.push(format!("row count: {} vs {}", rows_a.len(), rows_b.len()));
    }
    for (i, (ra, rb)) in rows_a.iter().zip(&rows_b).enumerate() {
        if ra == rb {
            continue;
        }
        let fa: Vec<&str> = ra.split(',').collect();
        let fb: Vec<&str> = rb.split(',').collect();
        if fa.len() != fb.len() {
            return Err(CompareError::SchemaMismatch {
                detail: format!("row {i}: {} vs {} fields", fa.len(), fb.len()),
            });
        }
        for (c, (va, vb)) in fa.iter().zip(&fb).enumerate() {
            if va == vb {
                continue;
            }
            let col = columns.get(c).copied().unwrap_or("?");
            match (va.parse::<f64>(), vb.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    diffs.push(format!("row {i} col {col}: {x:e} vs {y:e} (delta {:e})", y - x))
                }
                _ => diffs.push(format!("row {i} col {col}: `{va}` vs `{vb}`")),
            }
        }
    }
    Ok(CompareOutcome { identical: diffs.is_empty(), diffs })
}
