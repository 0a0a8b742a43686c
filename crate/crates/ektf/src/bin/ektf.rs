//! Thin command-line wrapper over the library's experiment harness.
//!
//! Everything here delegates to `ektf::harness`; the binary only parses
//! arguments, resolves the output directory, and prints short summaries.

use clap::{Parser, Subcommand};
use ektf::harness::{
    cmd_ablate, cmd_preprocess, cmd_report, cmd_sweep, cmd_train, RunConfig,
};
use std::path::PathBuf;

/// Environment variable that overrides the config file's output directory.
const OUTPUT_DIR_ENV: &str = "EKTF_OUTPUT_DIR";

/// Ensemble knowledge-transfer training for click-through-rate models.
#[derive(Parser)]
#[command(name = "ektf", version, about)]
struct Cli {
    /// Run configuration file (sectioned TOML).
    #[arg(long, global = true, default_value = "run.toml")]
    config: PathBuf,

    /// Override the training seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Bitwise-reproducible output: disables wall-clock timings so reruns
    /// of the same config and seed produce identical files.
    #[arg(long, global = true)]
    strict_deterministic: bool,

    /// Output directory (takes precedence over EKTF_OUTPUT_DIR and the
    /// config file's output section).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or ingest the configured dataset; write its cache and a
    /// vocabulary/positive-rate summary.
    Preprocess,
    /// Train one ensemble; write the epoch log, test summary, and
    /// checkpoint.
    Train,
    /// Train every (ensemble size x fusion x objective x seed) grid cell;
    /// resumable.
    Sweep,
    /// Train the five objective-ablation arms over a shared seed set;
    /// resumable.
    Ablate,
    /// Aggregate sweep/ablation tables into medians, IQRs, and
    /// scaling-trend classifications.
    Report,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> ektf::Result<()> {
    if let Command::Report = cli.command {
        // The report needs only a directory of result tables; the config
        // file is consulted only when no override names that directory.
        let out_dir = match override_out_dir(cli) {
            Some(dir) => dir,
            None => load_config(cli)?.output.dir,
        };
        let output = cmd_report(&out_dir)?;
        if let Some(sweep) = &output.report.sweep {
            for t in &sweep.trends {
                println!(
                    "{}/{}: K={} -> K={}, median AUC {:.4} -> {:.4} ({})",
                    t.variant,
                    t.fusion,
                    t.min_k,
                    t.max_k,
                    t.median_auc_at_min_k,
                    t.median_auc_at_max_k,
                    t.direction
                );
            }
        }
        for path in &output.written {
            println!("wrote {}", path.display());
        }
        return Ok(());
    }

    let config = load_config(cli)?;
    let out_dir = override_out_dir(cli).unwrap_or_else(|| config.output.dir.clone());
    let strict = cli.strict_deterministic;
    match cli.command {
        Command::Preprocess => {
            let summary = cmd_preprocess(&config, &out_dir)?;
            println!(
                "cached {} rows x {} fields (positive rate {:.4}) under {}",
                summary.rows,
                summary.fields.len(),
                summary.positive_rate,
                out_dir.display()
            );
        }
        Command::Train => {
            let artifacts = cmd_train(&config, &out_dir, strict)?;
            let test = &artifacts.summary.test;
            println!(
                "test: ensemble logloss {:.6}, AUC {:.6} ({} students)",
                test.ensemble.logloss,
                test.ensemble.auc,
                test.per_student.len()
            );
            for path in [
                &artifacts.epochs_csv,
                &artifacts.summary_json,
                &artifacts.checkpoint,
            ] {
                println!("wrote {}", path.display());
            }
        }
        Command::Sweep => {
            let output = cmd_sweep(&config, &out_dir, strict)?;
            println!(
                "sweep: {} cells trained, {} reused -> {}",
                output.ran,
                output.reused,
                output.csv_path.display()
            );
        }
        Command::Ablate => {
            let output = cmd_ablate(&config, &out_dir, strict)?;
            println!(
                "ablation: {} cells trained, {} reused -> {}",
                output.ran,
                output.reused,
                output.csv_path.display()
            );
        }
        Command::Report => unreachable!("handled above"),
    }
    Ok(())
}

fn override_out_dir(cli: &Cli) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
}

fn load_config(cli: &Cli) -> ektf::Result<RunConfig> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.training.seed = seed;
    }
    Ok(config)
}
