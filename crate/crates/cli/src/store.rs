//! Append-only on-disk result store for one experiment.
//!
//! Layout under `<out>/<experiment_id>/`:
//! - `plan.json`: the plan plus a SHA-256 hash of its canonical JSON;
//! - `trials.jsonl`: one [`TrialRecord`] per line, in canonical key order;
//! - `summary.csv`: per grid point aggregates, written once the log is complete.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tensorconc::experiments::{ExperimentPlan, GridSummary, TrialRecord};
use thiserror::Error;

use crate::format::{sig6, sig6_opt};

pub const PLAN_FILE: &str = "plan.json";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_COLUMNS: [&str; 8] =
    ["experiment_id", "N", "statistic", "mean", "stderr", "bound", "ratio", "converged_fraction"];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {0} already exists; pass --resume to continue it")]
    Exists(PathBuf),
    #[error("no store at {0}")]
    Missing(PathBuf),
    #[error("resume conflict in {path}: stored plan hash {stored} differs from config hash {config}")]
    HashConflict { path: PathBuf, stored: String, config: String },
    #[error("trial log {path} line {line}: {message}")]
    CorruptLog { path: PathBuf, line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json error on {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

type Result<T> = std::result::Result<T, StoreError>;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlanFile {
    payload_hash: String,
    plan: ExperimentPlan,
}

/// Hex SHA-256 of the plan's canonical JSON serialization.
pub fn payload_hash(plan: &ExperimentPlan) -> String {
    let bytes = serde_json::to_vec(plan).expect("plan serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub struct ResultStore {
    dir: PathBuf,
    plan: ExperimentPlan,
    records: Vec<TrialRecord>,
}

impl ResultStore {
    pub fn dir_for(out: &Path, plan: &ExperimentPlan) -> PathBuf {
        out.join(&plan.experiment_id)
    }

    /// Creates a fresh store, or reopens an existing one when `resume` is set.
    ///
    /// Reopening truncates a partially written last line, checks that the
    /// stored records are a prefix of the plan's key order and aborts on a
    /// payload hash mismatch.
    pub fn open(out: &Path, plan: &ExperimentPlan, resume: bool) -> Result<Self> {
        let dir = Self::dir_for(out, plan);
        let plan_path = dir.join(PLAN_FILE);
        let hash = payload_hash(plan);
        if plan_path.exists() {
            if !resume {
                return Err(StoreError::Exists(dir));
            }
            let stored: PlanFile = read_json(&plan_path)?;
            if stored.payload_hash != hash {
                return Err(StoreError::HashConflict { path: dir, stored: stored.payload_hash, config: hash });
            }
            let records = recover_log(&dir.join(TRIALS_FILE), plan)?;
            return Ok(Self { dir, plan: plan.clone(), records });
        }
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let file = PlanFile { payload_hash: hash, plan: plan.clone() };
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|source| StoreError::Json { path: plan_path.clone(), source })?;
        text.push('\n');
        fs::write(&plan_path, text).map_err(io(&plan_path))?;
        let log = dir.join(TRIALS_FILE);
        File::create(&log).map_err(io(&log))?;
        Ok(Self { dir, plan: plan.clone(), records: Vec::new() })
    }

    /// Opens an existing store read-only.
    pub fn load(dir: &Path) -> Result<Self> {
        let plan_path = dir.join(PLAN_FILE);
        if !plan_path.exists() {
            return Err(StoreError::Missing(dir.to_path_buf()));
        }
        let stored: PlanFile = read_json(&plan_path)?;
        let records = read_log(&dir.join(TRIALS_FILE))?.0;
        Ok(Self { dir: dir.to_path_buf(), plan: stored.plan, records })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn plan(&self) -> &ExperimentPlan {
        &self.plan
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    /// Keys of the plan not yet present in the log, in canonical order.
    pub fn pending_keys(&self) -> Vec<(u64, u64)> {
        self.plan.keys().split_off(self.records.len())
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == self.plan.keys().len()
    }

    /// Appends records (which must continue the canonical key order) and
    /// flushes them to disk.
    pub fn append(&mut self, batch: &[TrialRecord]) -> Result<()> {
        let keys = self.plan.keys();
        let path = self.dir.join(TRIALS_FILE);
        for (offset, r) in batch.iter().enumerate() {
            let pos = self.records.len() + offset;
            if keys.get(pos) != Some(&(r.n, r.trial_index)) {
                return Err(StoreError::CorruptLog {
                    path,
                    line: pos + 1,
                    message: format!("record (N={}, trial={}) is out of key order", r.n, r.trial_index),
                });
            }
        }
        let file = OpenOptions::new().append(true).open(&path).map_err(io(&path))?;
        let mut w = BufWriter::new(file);
        for r in batch {
            serde_json::to_writer(&mut w, r).map_err(|source| StoreError::Json { path: path.clone(), source })?;
            w.write_all(b"\n").map_err(io(&path))?;
        }
        w.flush().map_err(io(&path))?;
        w.get_ref().sync_data().map_err(io(&path))?;
        self.records.extend_from_slice(batch);
        Ok(())
    }

    pub fn write_summary(&self, summary: &[GridSummary]) -> Result<PathBuf> {
        let path = self.dir.join(SUMMARY_FILE);
        write_summary_csv(&path, summary)?;
        Ok(path)
    }
}

/// One summary row as the formatted strings shared by the CSV and the table.
pub fn summary_row(g: &GridSummary) -> [String; 8] {
    [
        g.experiment_id.clone(),
        g.n.to_string(),
        g.statistic.clone(),
        sig6(g.mean),
        sig6(g.stderr),
        sig6_opt(g.bound),
        sig6_opt(g.ratio),
        sig6(g.converged_fraction),
    ]
}

pub fn write_summary_csv(path: &Path, summary: &[GridSummary]) -> Result<()> {
    let csv_err = |source| StoreError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(SUMMARY_COLUMNS).map_err(csv_err)?;
    for g in summary {
        w.write_record(summary_row(g)).map_err(csv_err)?;
    }
    w.flush().map_err(io(path))?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json { path: path.to_path_buf(), source })
}

/// Parses complete lines; returns the records and the byte length they span.
fn read_log(path: &Path) -> Result<(Vec<TrialRecord>, u64)> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(io(path)(e)),
    };
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut complete_len = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(io(path))?;
        if read == 0 || !line.ends_with('\n') {
            break;
        }
        let record = serde_json::from_str(line.trim_end()).map_err(|e| StoreError::CorruptLog {
            path: path.to_path_buf(),
            line: records.len() + 1,
            message: e.to_string(),
        })?;
        records.push(record);
        complete_len += read as u64;
    }
    Ok((records, complete_len))
}

fn recover_log(path: &Path, plan: &ExperimentPlan) -> Result<Vec<TrialRecord>> {
    let (records, complete_len) = read_log(path)?;
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io(path))?;
    if file.metadata().map_err(io(path))?.len() != complete_len {
        file.set_len(complete_len).map_err(io(path))?;
    }
    let keys = plan.keys();
    if records.len() > keys.len() {
        return Err(StoreError::CorruptLog {
            path: path.to_path_buf(),
            line: keys.len() + 1,
            message: "more records than the plan has trials".into(),
        });
    }
    for (i, (r, k)) in records.iter().zip(&keys).enumerate() {
        if r.experiment_id != plan.experiment_id || (r.n, r.trial_index) != *k {
            return Err(StoreError::CorruptLog {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!(
                    "expected key (N={}, trial={}), found ({}, N={}, trial={})",
                    k.0, k.1, r.experiment_id, r.n, r.trial_index
                ),
            });
        }
    }
    Ok(records)
}
