//! On-disk artifact formats and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use bvqc::benchmarks::Benchmark;
use bvqc::train::TrainConfig;
use bvqc::watermark::{GroupingConfig, GroupingReport, TrainedOutcome, Verification, WatermarkBundle};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// Everything that determines a run, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub benchmark: Benchmark,
    pub seed: u64,
    pub train: TrainConfig,
    pub grouping: Option<GroupingConfig>,
    /// Noise presets evaluated (`none` for noiseless).
    pub noise: Vec<String>,
    pub shots: Option<usize>,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaFile {
    pub benchmark: Benchmark,
    pub seed: u64,
    pub watermarked: bool,
    pub theta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub confirmed: bool,
    pub wm_gtd: f64,
}

impl From<Verification> for Verdict {
    fn from(v: Verification) -> Self {
        Verdict {
            confirmed: v.confirmed,
            wm_gtd: v.wm_gtd,
        }
    }
}

/// Grouping outcome without any bundle contents, safe to publish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicGroupingReport {
    pub benchmark: Benchmark,
    pub reference_base_gtd: f64,
    pub accepted_index: Option<usize>,
    pub candidates: Vec<PublicCandidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicCandidate {
    pub index: usize,
    pub step_scores: Vec<f64>,
    pub aggregate_score: f64,
    pub passed_sign: bool,
    pub trained: Option<TrainedOutcome>,
    pub accepted: bool,
}

impl PublicGroupingReport {
    pub fn new(benchmark: Benchmark, report: &GroupingReport) -> Self {
        PublicGroupingReport {
            benchmark,
            reference_base_gtd: report.reference_base_gtd,
            accepted_index: report.accepted_index,
            candidates: report
                .candidates
                .iter()
                .map(|c| PublicCandidate {
                    index: c.index,
                    step_scores: c.step_scores.clone(),
                    aggregate_score: c.aggregate_score,
                    passed_sign: c.passed_sign,
                    trained: c.trained.clone(),
                    accepted: c.accepted,
                })
                .collect(),
        }
    }
}

/// One evaluation setting of a group run: watermark-free (NW) and
/// watermarked (BVQC) parameters side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub noise: String,
    pub base_gtd_nw: f64,
    pub base_gtd_bvqc: f64,
    pub wm_gtd_nw: f64,
    pub wm_gtd_bvqc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub benchmark: Benchmark,
    pub seed: u64,
    pub optimal: f64,
    pub accepted_index: usize,
    pub shots: usize,
    pub rows: Vec<SummaryRow>,
}

pub fn summary_name(b: Benchmark) -> String {
    format!("summary_{}.json", b.id())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackEntry {
    pub seed: u64,
    pub variant_file: String,
    pub fidelity: f64,
    pub one_qubit: usize,
    pub two_qubit: usize,
    pub confirmed: bool,
    pub wm_gtd: f64,
    pub wm_gtd_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub benchmark: Benchmark,
    pub coupling: String,
    pub original: Verdict,
    pub variants: Vec<AttackEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpaPoint {
    pub b: u64,
    /// At the point estimate of p.
    pub ppa: f64,
    /// At the upper end of the 95% interval for p.
    pub ppa_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpaReport {
    pub benchmark: Benchmark,
    pub p_hat: f64,
    pub interval: [f64; 2],
    pub hits: usize,
    pub trials: usize,
    pub constraints: u64,
    pub ppa_curve: Vec<PpaPoint>,
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| data_err(dir, e))
}

/// Writes via a temporary file in the target directory and a rename, so a
/// reader never sees a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    ensure_dir(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| data_err(dir, e))?;
    tmp.write_all(contents).map_err(|e| data_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| data_err(path, e))?;
    tmp.persist(path).map_err(|e| data_err(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| data_err(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| data_err(path, e))
}

pub fn read_bundle(path: &Path) -> CliResult<WatermarkBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    WatermarkBundle::from_json(&text).map_err(|e| data_err(path, e))
}
