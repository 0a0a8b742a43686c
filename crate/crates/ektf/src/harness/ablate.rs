//! The loss-component ablation: train the five objective arms (full
//! transfer objective, each transfer loss alone, uniform weights instead
//! of the examination, and plain ensemble training) over a shared seed
//! set, one row per arm per seed. Resumable like the sweep.

use super::commands::{build_dataset, fmt, io_err, run_cell, split_dataset};
use super::runconfig::{Ablation, RunConfig};
use super::sweep::{cell_metrics, one_line};
use crate::error::{EktfError, Result};
use crate::trainer::Metrics;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const ABLATE_CSV: &str = "ablate.csv";

pub(crate) const ABLATE_HEADER: [&str; 8] = [
    "ablation",
    "seed",
    "status",
    "test_logloss",
    "test_auc",
    "best_epoch",
    "epochs_run",
    "error",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AblateKey {
    pub ablation: Ablation,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum AblateResult {
    Done {
        test: Metrics,
        best_epoch: usize,
        epochs_run: usize,
    },
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct AblateRow {
    pub key: AblateKey,
    pub result: AblateResult,
}

pub struct AblateOutput {
    pub rows: Vec<AblateRow>,
    pub csv_path: PathBuf,
    pub ran: usize,
    pub reused: usize,
}

/// Run (or resume) the ablation grid.
pub fn cmd_ablate(config: &RunConfig, out_dir: &Path, strict: bool) -> Result<AblateOutput> {
    if config.ablate.ablations.is_empty() || config.ablate.seeds.is_empty() {
        return Err(EktfError::Config(
            "ablate grid lists (ablations, seeds) must be nonempty".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(ABLATE_CSV);

    let mut grid = Vec::new();
    for &ablation in &config.ablate.ablations {
        for &seed in &config.ablate.seeds {
            grid.push(AblateKey { ablation, seed });
        }
    }

    let mut existing: BTreeMap<AblateKey, AblateRow> = BTreeMap::new();
    if csv_path.exists() {
        for row in read_ablate_csv(&csv_path)? {
            if matches!(row.result, AblateResult::Done { .. }) {
                existing.insert(row.key, row);
            }
        }
    }

    let (dataset, _) = build_dataset(&config.dataset)?;
    let (train_set, val_set, test_set) = split_dataset(&dataset, &config.dataset)?;

    let mut computed: BTreeMap<AblateKey, AblateRow> = BTreeMap::new();
    let mut ran = 0;
    let mut reused = 0;
    for key in &grid {
        if let Some(row) = existing.get(key) {
            computed.insert(*key, row.clone());
            reused += 1;
            continue;
        }
        let objective = key.ablation.objective(&config.objective);
        let result = match run_cell(
            (&train_set, &val_set, &test_set),
            &config.model,
            &objective,
            &config.training,
            key.seed,
            strict,
        ) {
            Ok(outcome) => {
                let m = cell_metrics(&outcome);
                AblateResult::Done {
                    test: m.ensemble,
                    best_epoch: m.best_epoch,
                    epochs_run: m.epochs_run,
                }
            }
            Err(e @ EktfError::Config(_)) => return Err(e),
            Err(e) => AblateResult::Failed(one_line(e.to_string())),
        };
        computed.insert(*key, AblateRow { key: *key, result });
        ran += 1;
        persist_ablate(&csv_path, &grid, &computed, &existing)?;
    }
    persist_ablate(&csv_path, &grid, &computed, &existing)?;

    let rows = grid
        .iter()
        .filter_map(|k| computed.get(k).cloned())
        .collect();
    Ok(AblateOutput {
        rows,
        csv_path,
        ran,
        reused,
    })
}

fn persist_ablate(
    path: &Path,
    grid: &[AblateKey],
    computed: &BTreeMap<AblateKey, AblateRow>,
    existing: &BTreeMap<AblateKey, AblateRow>,
) -> Result<()> {
    let rows: Vec<&AblateRow> = grid
        .iter()
        .filter_map(|k| computed.get(k).or_else(|| existing.get(k)))
        .collect();
    let tmp = path.with_extension("csv.tmp");
    write_ablate_csv(&tmp, &rows)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_ablate_csv(path: &Path, rows: &[&AblateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(ABLATE_HEADER).map_err(|e| io_err(path, e))?;
    for row in rows {
        let record = match &row.result {
            AblateResult::Done {
                test,
                best_epoch,
                epochs_run,
            } => vec![
                row.key.ablation.label().to_string(),
                row.key.seed.to_string(),
                "ok".to_string(),
                fmt(test.logloss),
                fmt(test.auc),
                best_epoch.to_string(),
                epochs_run.to_string(),
                String::new(),
            ],
            AblateResult::Failed(message) => vec![
                row.key.ablation.label().to_string(),
                row.key.seed.to_string(),
                "error".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                message.clone(),
            ],
        };
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Parse an ablation CSV back into rows (resume and reporting).
pub fn read_ablate_csv(path: &Path) -> Result<Vec<AblateRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let context = |line: usize, what: &str| {
        EktfError::Data(format!("{}: row {line}: {what}", path.display()))
    };
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(path, e))?;
        let line = i + 2;
        if record.len() != ABLATE_HEADER.len() {
            return Err(context(line, "wrong column count"));
        }
        let cell = |j: usize| record.get(j).unwrap_or("");
        let key = AblateKey {
            ablation: Ablation::parse(cell(0))?,
            seed: cell(1).parse().map_err(|_| context(line, "bad seed"))?,
        };
        let result = match cell(2) {
            "ok" => AblateResult::Done {
                test: Metrics {
                    logloss: cell(3)
                        .parse()
                        .map_err(|_| context(line, "bad logloss"))?,
                    auc: cell(4).parse().map_err(|_| context(line, "bad auc"))?,
                },
                best_epoch: cell(5)
                    .parse()
                    .map_err(|_| context(line, "bad best_epoch"))?,
                epochs_run: cell(6)
                    .parse()
                    .map_err(|_| context(line, "bad epochs_run"))?,
            },
            "error" => AblateResult::Failed(cell(7).to_string()),
            other => return Err(context(line, &format!("unknown status {other:?}"))),
        };
        rows.push(AblateRow { key, result });
    }
    Ok(rows)
}
