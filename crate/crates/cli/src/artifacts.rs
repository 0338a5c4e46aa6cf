//! On-disk artifacts: binary matrices, CSV tables and the run manifest.
//!
//! Matrix files start with the 6-byte magic `TLNMF1`, followed by the row and
//! column counts as little-endian `u64`, then the entries as row-major
//! little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::Serialize;
use thiserror::Error;

use tlnmf::analysis::{EnergyProfile, SimilarityReport};
use tlnmf::driver::ExperimentLog;

pub const MATRIX_MAGIC: &[u8; 6] = b"TLNMF1";

pub const LOG_HEADER: [&str; 7] = [
    "iteration",
    "objective",
    "fit",
    "penalty",
    "elapsed_s",
    "step_sizes",
    "grad_norm",
];
pub const SYNTH_HEADER: [&str; 5] = ["iteration", "L", "elapsed_s", "step_sizes", "grad_norm"];
pub const ENERGY_HEADER: [&str; 5] = ["transform", "rank", "atom", "energy", "cumulative"];
pub const PERMUTATION_HEADER: [&str; 4] = ["position", "first_atom", "second_atom", "similarity"];

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("missing artifact {0}")]
    Missing(PathBuf),
    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ArtifactError>;

pub fn write_matrix(path: &Path, m: ArrayView2<'_, f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    if !path.exists() {
        return Err(ArtifactError::Missing(path.to_path_buf()));
    }
    let malformed = |reason: &str| ArtifactError::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < 22 || &bytes[..6] != MATRIX_MAGIC {
        return Err(malformed("not a TLNMF1 matrix file"));
    }
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
    let (rows, cols) = (dim(6), dim(14));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| malformed("dimensions overflow"))?;
    if bytes.len() - 22 != expected {
        return Err(malformed(&format!(
            "expected {expected} data bytes for {rows}x{cols}, found {}",
            bytes.len() - 22
        )));
    }
    let data = bytes[22..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), data).expect("length checked above"))
}

fn join_steps(steps: &[f64]) -> String {
    steps.iter().map(|s| format!("{s:e}")).collect::<Vec<_>>().join(";")
}

pub fn write_log(path: &Path, log: &ExperimentLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LOG_HEADER)?;
    for r in &log.records {
        w.write_record([
            r.iteration.to_string(),
            format!("{:e}", r.objective),
            format!("{:e}", r.fit),
            format!("{:e}", r.penalty),
            format!("{:.6}", r.elapsed_s),
            join_steps(&r.step_sizes),
            format!("{:e}", r.gradient_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Transform-only runs: the objective is `L` alone.
pub fn write_synth_log(path: &Path, log: &ExperimentLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SYNTH_HEADER)?;
    for r in &log.records {
        w.write_record([
            r.iteration.to_string(),
            format!("{:e}", r.objective),
            format!("{:.6}", r.elapsed_s),
            join_steps(&r.step_sizes),
            format!("{:e}", r.gradient_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_energy(path: &Path, profiles: &[(&str, &EnergyProfile)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ENERGY_HEADER)?;
    for (name, profile) in profiles {
        for (rank, &atom) in profile.order.iter().enumerate() {
            w.write_record([
                name.to_string(),
                (rank + 1).to_string(),
                atom.to_string(),
                format!("{:e}", profile.energies[atom]),
                format!("{:.17e}", profile.sorted_cumulative[rank]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `|P T|` as a headerless-index CSV, one row per matched position.
pub fn write_similarity(path: &Path, report: &SimilarityReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let k = report.selected_count;
    w.write_record((0..k).map(|j| format!("c{j}")))?;
    for row in report.permuted_abs.rows() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// `first_atom` and `second_atom` are energy ranks within each run's selection.
pub fn write_permutation(path: &Path, report: &SimilarityReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PERMUTATION_HEADER)?;
    for (position, &first) in report.permutation.iter().enumerate() {
        w.write_record([
            position.to_string(),
            first.to_string(),
            position.to_string(),
            format!("{:e}", report.permuted_abs[[position, position]]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub threads: Option<usize>,
    pub input: serde_json::Value,
    pub config: C,
    pub outputs: Vec<String>,
}

impl<C: Serialize> Manifest<C> {
    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(path)
    }
}
