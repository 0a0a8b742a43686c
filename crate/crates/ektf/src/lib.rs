//! Ensemble knowledge-transfer training for click-through-rate prediction.
//!
//! The crate trains an ensemble of small student networks (feed-forward or
//! feature-crossing) on tabular categorical data, coupling them during
//! training through two transfer losses:
//!
//! * **distillation** — each student is pulled toward the ensemble-mean
//!   prediction (an "abstract teacher" that has no parameters of its own);
//! * **mutual learning** — each student is pulled toward every peer.
//!
//! Both couplings are weighted per batch by an *examination* step that
//! scores each student's accuracy on the current batch and softly
//! reallocates attention toward weaker students (distillation) or stronger
//! peers (mutual learning).
//!
//! Layout:
//!
//! * [`numkit`] — matrices, deterministic RNG, Adam, gradient checking
//! * [`data`] — CSV ingestion, vocabulary building, encoding, synthesis
//! * [`model`] — embeddings and student networks
//! * [`objective`] — fusion, losses, examination weights, composition
//! * [`trainer`] — the training loop, metrics, early stopping
//! * [`harness`] — run configs, experiment commands, sweep/ablation/report
//!
//! The `examples/` directory is the front door: each example is a small
//! runnable program exercising one capability end to end. A thin `ektf`
//! binary exposes the same operations as subcommands for scripted use.

mod bytesio;

pub mod data;
pub mod error;
pub mod harness;
pub mod model;
pub mod numkit;
pub mod objective;
pub mod trainer;

pub use error::{EktfError, Result};
