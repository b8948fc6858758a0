//! Aggregates over a directory of repair reports.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::repair::{RepairReport, REPORT_KIND};
use super::PipelineError;
use crate::validate::RepairStatus;

pub const TOP_K: [usize; 7] = [1, 5, 10, 50, 100, 200, 500];
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Some(Summary { min: v[0], max: v[n - 1], median, mean: v.iter().sum::<f64>() / n as f64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub reports: usize,
    pub plausible: usize,
    pub exhausted: usize,
    pub errors: usize,
    /// Over reports that reached validation (status other than error).
    pub npc: Option<Summary>,
    /// Total wall time per bug, seconds, same population as `npc`.
    pub time: Option<Summary>,
    /// Plausible repairs whose first plausible rank is at most k.
    pub top_k: BTreeMap<usize, usize>,
}

/// Counts ranks at or below each threshold.
pub fn top_k_counts(ranks: &[usize]) -> BTreeMap<usize, usize> {
    TOP_K.iter().map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count())).collect()
}

pub fn aggregate(reports: &[RepairReport]) -> Stats {
    let validated: Vec<&RepairReport> = reports.iter().filter(|r| r.status != RepairStatus::Error).collect();
    let npc: Vec<f64> = validated.iter().map(|r| r.npc as f64).collect();
    let time: Vec<f64> = validated.iter().map(|r| r.timings.total).collect();
    let ranks: Vec<usize> = reports
        .iter()
        .filter(|r| r.status == RepairStatus::Plausible)
        .filter_map(|r| r.first_plausible_rank)
        .collect();
    let count = |s| reports.iter().filter(|r| r.status == s).count();
    Stats {
        reports: reports.len(),
        plausible: count(RepairStatus::Plausible),
        exhausted: count(RepairStatus::Exhausted),
        errors: count(RepairStatus::Error),
        npc: Summary::of(&npc),
        time: Summary::of(&time),
        top_k: top_k_counts(&ranks),
    }
}

/// Reads every `*.json` report in `dir`; other files are ignored.
pub fn load_reports(dir: &Path) -> Result<Vec<RepairReport>, PipelineError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != STATS_FILE))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) else { continue };
        if value.get("kind").and_then(|k| k.as_str()) != Some(REPORT_KIND) {
            continue;
        }
        match serde_json::from_value::<RepairReport>(value) {
            Ok(report) => out.push(report),
            Err(err) => tracing::warn!("skipping {}: {err}", path.display()),
        }
    }
    Ok(out)
}

/// Aggregates `dir` and writes `stats.json` next to the reports.
pub fn stats_dir(dir: &Path) -> Result<Stats, PipelineError> {
    let stats = aggregate(&load_reports(dir)?);
    let path = dir.join(STATS_FILE);
    let mut text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    text.push('\n');
    fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    Ok(stats)
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "reports {}  plausible {}  exhausted {}  error {}",
            self.reports, self.plausible, self.exhausted, self.errors
        )?;
        writeln!(f, "{:<10}{:>10}{:>10}{:>10}{:>10}", "", "min", "max", "median", "mean")?;
        for (name, s) in [("npc", self.npc), ("time (s)", self.time)] {
            match s {
                Some(s) => writeln!(f, "{name:<10}{:>10.2}{:>10.2}{:>10.2}{:>10.2}", s.min, s.max, s.median, s.mean)?,
                None => writeln!(f, "{name:<10}{:>10}{:>10}{:>10}{:>10}", "-", "-", "-", "-")?,
            }
        }
        let header: String = self.top_k.keys().map(|k| format!("{:>7}", format!("top-{k}"))).collect();
        let row: String = self.top_k.values().map(|v| format!("{v:>7}")).collect();
        writeln!(f, "{header}")?;
        writeln!(f, "{row}")
    }
}
