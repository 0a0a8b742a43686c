//! The ensemble-scaling sweep: train every (K, fusion, variant, seed)
//! cell of the configured grid on one shared dataset and record ensemble
//! vs. best/worst-student test metrics per cell.
//!
//! The sweep is resumable: cells already completed successfully in
//! `sweep.csv` are reused by key, failed cells are retried, and the file
//! is atomically rewritten in grid order after every completed cell, so a
//! crash never loses finished work and the final file's row order is
//! independent of how many resumes it took.

use super::commands::{build_dataset, fmt, io_err, run_cell, split_dataset, RunOutcome};
use super::runconfig::{fusion_label, parse_fusion, parse_variant, variant_label, RunConfig};
use crate::error::{EktfError, Result};
use crate::objective::{Fusion, ObjectiveSpec, Variant};
use crate::trainer::Metrics;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SWEEP_CSV: &str = "sweep.csv";

pub(crate) const SWEEP_HEADER: [&str; 15] = [
    "k",
    "fusion",
    "variant",
    "seed",
    "status",
    "ensemble_logloss",
    "ensemble_auc",
    "best_student_logloss",
    "best_student_auc",
    "worst_student_logloss",
    "worst_student_auc",
    "gap_auc",
    "best_epoch",
    "epochs_run",
    "error",
];

/// Identity of one sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SweepKey {
    pub k: usize,
    pub fusion: Fusion,
    pub variant: Variant,
    pub seed: u64,
}

/// Test-set outcome of one successful cell.
#[derive(Clone, Copy, Debug)]
pub struct CellMetrics {
    pub ensemble: Metrics,
    pub best_student: Metrics,
    pub worst_student: Metrics,
    /// Ensemble AUC minus best-student AUC; may be negative.
    pub gap_auc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Clone, Debug)]
pub enum CellResult {
    Done(CellMetrics),
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub key: SweepKey,
    pub result: CellResult,
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub csv_path: PathBuf,
    /// Cells trained in this invocation.
    pub ran: usize,
    /// Cells reused from a previous invocation.
    pub reused: usize,
}

/// Pick best/worst student by AUC (first index wins ties) and derive the
/// ensemble-minus-best gap.
pub(crate) fn cell_metrics(outcome: &RunOutcome) -> CellMetrics {
    let per = &outcome.test.per_student;
    let mut best = per[0];
    let mut worst = per[0];
    for m in &per[1..] {
        if m.auc > best.auc {
            best = *m;
        }
        if m.auc < worst.auc {
            worst = *m;
        }
    }
    CellMetrics {
        ensemble: outcome.test.ensemble,
        best_student: best,
        worst_student: worst,
        gap_auc: outcome.test.ensemble.auc - best.auc,
        best_epoch: outcome.report.best_epoch.unwrap_or(0),
        epochs_run: outcome.report.epochs.len(),
    }
}

pub(crate) fn one_line(message: String) -> String {
    message.replace('\n', " ")
}

/// Run (or resume) the configured sweep grid.
pub fn cmd_sweep(config: &RunConfig, out_dir: &Path, strict: bool) -> Result<SweepOutput> {
    let grid_spec = &config.sweep;
    if grid_spec.ensemble_sizes.is_empty()
        || grid_spec.fusions.is_empty()
        || grid_spec.variants.is_empty()
        || grid_spec.seeds.is_empty()
    {
        return Err(EktfError::Config(
            "sweep grid lists (ensemble_sizes, fusions, variants, seeds) must be nonempty".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(SWEEP_CSV);

    let mut grid = Vec::new();
    for &k in &grid_spec.ensemble_sizes {
        for &fusion in &grid_spec.fusions {
            for &variant in &grid_spec.variants {
                for &seed in &grid_spec.seeds {
                    grid.push(SweepKey {
                        k,
                        fusion,
                        variant,
                        seed,
                    });
                }
            }
        }
    }

    // Completed cells from a previous invocation; failed cells are retried.
    let mut existing: BTreeMap<SweepKey, SweepRow> = BTreeMap::new();
    if csv_path.exists() {
        for row in read_sweep_csv(&csv_path)? {
            if matches!(row.result, CellResult::Done(_)) {
                existing.insert(row.key, row);
            }
        }
    }

    let (dataset, _) = build_dataset(&config.dataset)?;
    let (train_set, val_set, test_set) = split_dataset(&dataset, &config.dataset)?;

    let mut computed: BTreeMap<SweepKey, SweepRow> = BTreeMap::new();
    let mut ran = 0;
    let mut reused = 0;
    for key in &grid {
        if let Some(row) = existing.get(key) {
            computed.insert(*key, row.clone());
            reused += 1;
            continue;
        }
        let model = config.model.with_ensemble_size(key.k);
        let objective = ObjectiveSpec {
            variant: key.variant,
            fusion: key.fusion,
            ..config.objective
        };
        let result = match run_cell(
            (&train_set, &val_set, &test_set),
            &model,
            &objective,
            &config.training,
            key.seed,
            strict,
        ) {
            Ok(outcome) => CellResult::Done(cell_metrics(&outcome)),
            // A config error poisons every cell; fail fast.
            Err(e @ EktfError::Config(_)) => return Err(e),
            Err(e) => CellResult::Failed(one_line(e.to_string())),
        };
        computed.insert(
            *key,
            SweepRow {
                key: *key,
                result,
            },
        );
        ran += 1;
        persist_sweep(&csv_path, &grid, &computed, &existing)?;
    }
    persist_sweep(&csv_path, &grid, &computed, &existing)?;

    let rows = grid
        .iter()
        .filter_map(|k| computed.get(k).cloned())
        .collect();
    Ok(SweepOutput {
        rows,
        csv_path,
        ran,
        reused,
    })
}

/// Atomically rewrite the sweep file in grid order. Cells not yet reached
/// in this invocation fall back to their previous completed rows, so an
/// interrupted retry pass cannot erase finished work.
fn persist_sweep(
    path: &Path,
    grid: &[SweepKey],
    computed: &BTreeMap<SweepKey, SweepRow>,
    existing: &BTreeMap<SweepKey, SweepRow>,
) -> Result<()> {
    let rows: Vec<&SweepRow> = grid
        .iter()
        .filter_map(|k| computed.get(k).or_else(|| existing.get(k)))
        .collect();
    let tmp = path.with_extension("csv.tmp");
    write_sweep_csv(&tmp, &rows)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_sweep_csv(path: &Path, rows: &[&SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(SWEEP_HEADER).map_err(|e| io_err(path, e))?;
    for row in rows {
        let key = &row.key;
        let head = [
            key.k.to_string(),
            fusion_label(key.fusion).to_string(),
            variant_label(key.variant).to_string(),
            key.seed.to_string(),
        ];
        let tail = match &row.result {
            CellResult::Done(m) => [
                "ok".to_string(),
                fmt(m.ensemble.logloss),
                fmt(m.ensemble.auc),
                fmt(m.best_student.logloss),
                fmt(m.best_student.auc),
                fmt(m.worst_student.logloss),
                fmt(m.worst_student.auc),
                fmt(m.gap_auc),
                m.best_epoch.to_string(),
                m.epochs_run.to_string(),
                String::new(),
            ],
            CellResult::Failed(message) => {
                let mut t = vec!["error".to_string()];
                t.extend(std::iter::repeat_n(String::new(), 9));
                t.push(message.clone());
                t.try_into().expect("11 columns")
            }
        };
        let record: Vec<&str> = head.iter().chain(tail.iter()).map(String::as_str).collect();
        w.write_record(&record).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Parse a sweep CSV back into rows (used for resuming and reporting).
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let context = |line: usize, what: &str| {
        EktfError::Data(format!("{}: row {line}: {what}", path.display()))
    };
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(path, e))?;
        let line = i + 2;
        if record.len() != SWEEP_HEADER.len() {
            return Err(context(line, "wrong column count"));
        }
        let cell = |j: usize| record.get(j).unwrap_or("");
        let num = |j: usize| -> Result<f64> {
            cell(j)
                .parse()
                .map_err(|_| context(line, &format!("bad number {:?}", cell(j))))
        };
        let key = SweepKey {
            k: cell(0)
                .parse()
                .map_err(|_| context(line, "bad ensemble size"))?,
            fusion: parse_fusion(cell(1))?,
            variant: parse_variant(cell(2))?,
            seed: cell(3).parse().map_err(|_| context(line, "bad seed"))?,
        };
        let result = match cell(4) {
            "ok" => CellResult::Done(CellMetrics {
                ensemble: Metrics {
                    logloss: num(5)?,
                    auc: num(6)?,
                },
                best_student: Metrics {
                    logloss: num(7)?,
                    auc: num(8)?,
                },
                worst_student: Metrics {
                    logloss: num(9)?,
                    auc: num(10)?,
                },
                gap_auc: num(11)?,
                best_epoch: cell(12)
                    .parse()
                    .map_err(|_| context(line, "bad best_epoch"))?,
                epochs_run: cell(13)
                    .parse()
                    .map_err(|_| context(line, "bad epochs_run"))?,
            }),
            "error" => CellResult::Failed(cell(14).to_string()),
            other => return Err(context(line, &format!("unknown status {other:?}"))),
        };
        rows.push(SweepRow { key, result });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep_config(dir: &Path) -> RunConfig {
        RunConfig::parse(&format!(
            r#"
            [dataset]
            source = "synthetic"
            seed = 3
            [dataset.synthetic]
            num_rows = 400
            num_fields = 3
            vocab_size = 6
            num_interaction_pairs = 2

            [model]
            students = ["mlp"]
            embedding_dim = 2
            hidden = [4]

            [training]
            batch_size = 64
            eval_batch_size = 256
            max_epochs = 1

            [output]
            dir = {dir:?}

            [sweep]
            ensemble_sizes = [1, 2]
            fusions = ["mean"]
            variants = ["vanilla", "ektf"]
            seeds = [1, 2]
            "#,
            dir = dir.display().to_string(),
        ))
        .unwrap()
    }

    #[test]
    fn grid_produces_cartesian_rows_in_order() {
        let tmp = tempfile::tempdir().unwrap();
        let config = sweep_config(tmp.path());
        let output = cmd_sweep(&config, tmp.path(), true).unwrap();
        assert_eq!(output.rows.len(), 8);
        assert_eq!(output.ran, 8);
        assert_eq!(output.reused, 0);
        // Order: k-major, then fusion, variant, seed.
        assert_eq!(output.rows[0].key.k, 1);
        assert_eq!(output.rows[0].key.variant, Variant::Vanilla);
        assert_eq!(output.rows[0].key.seed, 1);
        assert_eq!(output.rows[1].key.seed, 2);
        assert_eq!(output.rows[2].key.variant, Variant::Ektf);
        assert_eq!(output.rows[4].key.k, 2);
        for row in &output.rows {
            let CellResult::Done(m) = &row.result else {
                panic!("cell failed");
            };
            assert!(m.best_student.auc >= m.worst_student.auc);
            assert_eq!(m.epochs_run, 1);
        }
    }

    #[test]
    fn resume_reuses_completed_cells_and_preserves_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let config = sweep_config(tmp.path());
        let first = cmd_sweep(&config, tmp.path(), true).unwrap();
        let bytes1 = std::fs::read(&first.csv_path).unwrap();

        let second = cmd_sweep(&config, tmp.path(), true).unwrap();
        assert_eq!(second.ran, 0);
        assert_eq!(second.reused, 8);
        assert_eq!(bytes1, std::fs::read(&second.csv_path).unwrap());
    }

    #[test]
    fn csv_round_trips_through_the_parser() {
        let tmp = tempfile::tempdir().unwrap();
        let config = sweep_config(tmp.path());
        let output = cmd_sweep(&config, tmp.path(), true).unwrap();
        let parsed = read_sweep_csv(&output.csv_path).unwrap();
        assert_eq!(parsed.len(), output.rows.len());
        for (a, b) in parsed.iter().zip(&output.rows) {
            assert_eq!(a.key, b.key);
            let (CellResult::Done(x), CellResult::Done(y)) = (&a.result, &b.result) else {
                panic!("unexpected failure rows");
            };
            assert_eq!(x.ensemble.auc, y.ensemble.auc);
            assert_eq!(x.gap_auc, y.gap_auc);
        }
    }

    #[test]
    fn single_student_cells_have_zero_gap() {
        let tmp = tempfile::tempdir().unwrap();
        let config = sweep_config(tmp.path());
        let output = cmd_sweep(&config, tmp.path(), true).unwrap();
        for row in output.rows.iter().filter(|r| r.key.k == 1) {
            let CellResult::Done(m) = &row.result else {
                panic!("cell failed");
            };
            assert_eq!(m.gap_auc, 0.0);
            assert_eq!(m.best_student.auc, m.ensemble.auc);
        }
    }

    #[test]
    fn empty_grid_lists_are_config_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = sweep_config(tmp.path());
        config.sweep.seeds.clear();
        assert!(matches!(
            cmd_sweep(&config, tmp.path(), true),
            Err(EktfError::Config(_))
        ));
    }
}
