//! Cross-benchmark table of base and watermark GTD, watermark-free (NW)
//! against watermarked (BVQC).

use std::fmt::Write as _;
use std::path::Path;

use bvqc::benchmarks::Benchmark;
use serde::Serialize;

use crate::artifacts::{read_json, summary_name, SummaryFile};
use crate::{CliError, CliResult};

/// Reads one summary per benchmark; any missing file is an error naming
/// every absent summary.
pub fn load_summaries(dir: &Path) -> CliResult<Vec<SummaryFile>> {
    let missing: Vec<String> = Benchmark::ALL
        .iter()
        .map(|&b| summary_name(b))
        .filter(|name| !dir.join(name).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Data(format!(
            "{} is missing {}",
            dir.display(),
            missing.join(", ")
        )));
    }
    Benchmark::ALL
        .iter()
        .map(|&b| {
            let path = dir.join(summary_name(b));
            let s: SummaryFile = read_json(&path)?;
            if s.benchmark != b {
                return Err(CliError::Data(format!(
                    "{} describes {} instead of {b}",
                    path.display(),
                    s.benchmark
                )));
            }
            Ok(s)
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    benchmark: &'a str,
    noise: &'a str,
    base_gtd_nw: f64,
    base_gtd_bvqc: f64,
    wm_gtd_nw: f64,
    wm_gtd_bvqc: f64,
}

/// Markdown and CSV renderings, one row per (benchmark, noise setting).
pub fn render(summaries: &[SummaryFile]) -> CliResult<(String, String)> {
    let mut md = String::new();
    md.push_str("# Watermark accuracy summary\n\n");
    md.push_str("GTD = |measured − optimum|. NW: watermark-free training; BVQC: watermarked training. ");
    md.push_str("Watermark GTD is the distance of the probe value from the bundle target.\n\n");
    md.push_str("| benchmark | noise | base GTD (NW) | base GTD (BVQC) | wm GTD (NW) | wm GTD (BVQC) |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summaries {
        for r in &s.rows {
            let _ = writeln!(
                md,
                "| {} | {} | {:.3e} | {:.3e} | {:.3e} | {:.3e} |",
                s.benchmark, r.noise, r.base_gtd_nw, r.base_gtd_bvqc, r.wm_gtd_nw, r.wm_gtd_bvqc
            );
            w.serialize(CsvRow {
                benchmark: s.benchmark.id(),
                noise: &r.noise,
                base_gtd_nw: r.base_gtd_nw,
                base_gtd_bvqc: r.base_gtd_bvqc,
                wm_gtd_nw: r.wm_gtd_nw,
                wm_gtd_bvqc: r.wm_gtd_bvqc,
            })
            .map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }
    let noisy: Vec<String> = summaries
        .iter()
        .filter_map(|s| s.rows.iter().any(|r| r.noise != "none").then(|| format!("{} ({})", s.benchmark, s.shots)))
        .collect();
    if !noisy.is_empty() {
        let _ = writeln!(md, "\nNoisy rows are trajectory averages; shots per evaluation: {}.", noisy.join(", "));
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    let csv = String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((md, csv))
}
