//! Aggregate sweep and ablation result tables into per-configuration
//! medians and interquartile ranges, and classify how the ensemble's
//! test AUC moves as the ensemble grows.

use super::ablate::{read_ablate_csv, AblateResult, ABLATE_CSV};
use super::commands::{fmt, io_err, write_json};
use super::runconfig::{fusion_label, variant_label};
use super::sweep::{read_sweep_csv, CellResult, SweepRow, SWEEP_CSV};
use crate::error::{EktfError, Result};
use crate::objective::{Fusion, Variant};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Median-AUC differences at or below this magnitude count as seed noise
/// when a scaling trend is classified.
pub const NOISE_AUC: f64 = 0.002;

pub const SWEEP_SUMMARY_CSV: &str = "sweep_summary.csv";
pub const ABLATE_SUMMARY_CSV: &str = "ablate_summary.csv";
pub const REPORT_JSON: &str = "report.json";

const SWEEP_SUMMARY_HEADER: [&str; 11] = [
    "variant",
    "fusion",
    "k",
    "runs",
    "failures",
    "median_auc",
    "iqr_auc",
    "median_logloss",
    "iqr_logloss",
    "median_gap_auc",
    "iqr_gap_auc",
];

const ABLATE_SUMMARY_HEADER: [&str; 7] = [
    "ablation",
    "runs",
    "failures",
    "median_auc",
    "iqr_auc",
    "median_logloss",
    "iqr_logloss",
];

/// Linear-interpolation quantile over a sorted, nonempty sample: the
/// value at fractional rank `p * (n - 1)`, interpolated between the two
/// neighbouring order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Median and interquartile range of a sample; `None` for an empty one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
}

pub fn spread(values: &[f64]) -> Option<Spread> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Spread {
        median: quantile(&sorted, 0.5),
        iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    spread(values).map(|s| s.median)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepGroupSummary {
    pub variant: String,
    pub fusion: String,
    pub k: usize,
    pub runs: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<Spread>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logloss: Option<Spread>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_auc: Option<Spread>,
}

/// How the ensemble's median test AUC moves between the smallest and
/// largest swept ensemble size for one (variant, fusion) pair.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingTrend {
    pub variant: String,
    pub fusion: String,
    pub min_k: usize,
    pub max_k: usize,
    pub median_auc_at_min_k: f64,
    pub median_auc_at_max_k: f64,
    pub delta_auc: f64,
    pub direction: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub groups: Vec<SweepGroupSummary>,
    pub trends: Vec<ScalingTrend>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblateGroupSummary {
    pub ablation: String,
    pub runs: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<Spread>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logloss: Option<Spread>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub noise_auc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablate: Option<Vec<AblateGroupSummary>>,
}

#[derive(Debug)]
pub struct ReportOutput {
    pub report: Report,
    pub written: Vec<PathBuf>,
}

/// Aggregate whichever result tables exist under `out_dir`.
pub fn cmd_report(out_dir: &Path) -> Result<ReportOutput> {
    let sweep_path = out_dir.join(SWEEP_CSV);
    let ablate_path = out_dir.join(ABLATE_CSV);
    if !sweep_path.exists() && !ablate_path.exists() {
        return Err(EktfError::Config(format!(
            "nothing to report: neither {SWEEP_CSV} nor {ABLATE_CSV} exists under {}",
            out_dir.display()
        )));
    }

    let mut written = Vec::new();
    let sweep = if sweep_path.exists() {
        let summary = summarize_sweep(&read_sweep_csv(&sweep_path)?);
        let path = out_dir.join(SWEEP_SUMMARY_CSV);
        write_sweep_summary(&path, &summary.groups)?;
        written.push(path);
        Some(summary)
    } else {
        None
    };
    let ablate = if ablate_path.exists() {
        let groups = summarize_ablate(&read_ablate_csv(&ablate_path)?);
        let path = out_dir.join(ABLATE_SUMMARY_CSV);
        write_ablate_summary(&path, &groups)?;
        written.push(path);
        Some(groups)
    } else {
        None
    };

    let report = Report {
        noise_auc: NOISE_AUC,
        sweep,
        ablate,
    };
    let json_path = out_dir.join(REPORT_JSON);
    write_json(&json_path, &report)?;
    written.push(json_path);
    Ok(ReportOutput { report, written })
}

pub fn summarize_sweep(rows: &[SweepRow]) -> SweepReport {
    #[derive(Default)]
    struct Bucket {
        runs: usize,
        failures: usize,
        auc: Vec<f64>,
        logloss: Vec<f64>,
        gap: Vec<f64>,
    }
    let mut buckets: BTreeMap<(Variant, Fusion, usize), Bucket> = BTreeMap::new();
    for row in rows {
        let bucket = buckets
            .entry((row.key.variant, row.key.fusion, row.key.k))
            .or_default();
        bucket.runs += 1;
        match &row.result {
            CellResult::Done(m) => {
                bucket.auc.push(m.ensemble.auc);
                bucket.logloss.push(m.ensemble.logloss);
                bucket.gap.push(m.gap_auc);
            }
            CellResult::Failed(_) => bucket.failures += 1,
        }
    }

    let groups: Vec<SweepGroupSummary> = buckets
        .iter()
        .map(|(&(variant, fusion, k), b)| SweepGroupSummary {
            variant: variant_label(variant).to_string(),
            fusion: fusion_label(fusion).to_string(),
            k,
            runs: b.runs,
            failures: b.failures,
            auc: spread(&b.auc),
            logloss: spread(&b.logloss),
            gap_auc: spread(&b.gap),
        })
        .collect();

    let mut curves: BTreeMap<(Variant, Fusion), BTreeMap<usize, f64>> = BTreeMap::new();
    for (&(variant, fusion, k), b) in &buckets {
        if let Some(m) = median(&b.auc) {
            curves.entry((variant, fusion)).or_default().insert(k, m);
        }
    }
    let trends = curves
        .iter()
        .filter_map(|(&(variant, fusion), by_k)| {
            let (&min_k, &at_min) = by_k.first_key_value()?;
            let (&max_k, &at_max) = by_k.last_key_value()?;
            if min_k == max_k {
                return None;
            }
            let delta = at_max - at_min;
            Some(ScalingTrend {
                variant: variant_label(variant).to_string(),
                fusion: fusion_label(fusion).to_string(),
                min_k,
                max_k,
                median_auc_at_min_k: at_min,
                median_auc_at_max_k: at_max,
                delta_auc: delta,
                direction: classify(delta),
            })
        })
        .collect();

    SweepReport { groups, trends }
}

fn classify(delta_auc: f64) -> &'static str {
    if delta_auc > NOISE_AUC {
        "improving"
    } else if delta_auc < -NOISE_AUC {
        "degrading"
    } else {
        "flat"
    }
}

pub fn summarize_ablate(rows: &[super::ablate::AblateRow]) -> Vec<AblateGroupSummary> {
    #[derive(Default)]
    struct Bucket {
        runs: usize,
        failures: usize,
        auc: Vec<f64>,
        logloss: Vec<f64>,
    }
    let mut buckets: BTreeMap<super::runconfig::Ablation, Bucket> = BTreeMap::new();
    for row in rows {
        let bucket = buckets.entry(row.key.ablation).or_default();
        bucket.runs += 1;
        match &row.result {
            AblateResult::Done { test, .. } => {
                bucket.auc.push(test.auc);
                bucket.logloss.push(test.logloss);
            }
            AblateResult::Failed(_) => bucket.failures += 1,
        }
    }
    buckets
        .iter()
        .map(|(&ablation, b)| AblateGroupSummary {
            ablation: ablation.label().to_string(),
            runs: b.runs,
            failures: b.failures,
            auc: spread(&b.auc),
            logloss: spread(&b.logloss),
        })
        .collect()
}

fn stat_cells(s: Option<Spread>) -> [String; 2] {
    match s {
        Some(s) => [fmt(s.median), fmt(s.iqr)],
        None => [String::new(), String::new()],
    }
}

fn write_sweep_summary(path: &Path, groups: &[SweepGroupSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(SWEEP_SUMMARY_HEADER)
        .map_err(|e| io_err(path, e))?;
    for g in groups {
        let mut record = vec![
            g.variant.clone(),
            g.fusion.clone(),
            g.k.to_string(),
            g.runs.to_string(),
            g.failures.to_string(),
        ];
        record.extend(stat_cells(g.auc));
        record.extend(stat_cells(g.logloss));
        record.extend(stat_cells(g.gap_auc));
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn write_ablate_summary(path: &Path, groups: &[AblateGroupSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(ABLATE_SUMMARY_HEADER)
        .map_err(|e| io_err(path, e))?;
    for g in groups {
        let mut record = vec![
            g.ablation.clone(),
            g.runs.to_string(),
            g.failures.to_string(),
        ];
        record.extend(stat_cells(g.auc));
        record.extend(stat_cells(g.logloss));
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}
