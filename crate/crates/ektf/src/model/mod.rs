//! Models: embedding banks, student networks, the ensemble, checkpoints.

pub mod checkpoint;
pub mod crossnet;
pub mod embedding;
pub mod ensemble;
pub mod mlp;
pub mod student;

use crate::numkit::matrix::Matrix;
use std::collections::BTreeMap;

/// Named gradient (or parameter) collection; BTreeMap so iteration order is
/// deterministic everywhere it matters (optimizer, checkpoints, logs).
pub type ParamMap = BTreeMap<String, Matrix>;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use crossnet::CrossNet;
pub use embedding::EmbeddingBank;
pub use ensemble::{ConcatHead, EnsembleConfig, EnsembleModel, ForwardBundle};
pub use mlp::MlpNet;
pub use student::{StudentArch, StudentKind, StudentNet, StudentTrace};
