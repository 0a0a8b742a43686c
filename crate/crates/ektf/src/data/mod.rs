//! Data pipeline: schemas, vocabularies, CSV ingestion, encoded datasets,
//! splitting, batching, and a synthetic generator with a known oracle.

pub mod csv_ingest;
pub mod dataset;
pub mod schema;
pub mod synthetic;
pub mod vocab;

pub use csv_ingest::{encode_csv, ingest_csv, FieldVocabs, IngestOptions};
pub use dataset::{Batch, BatchIter, EncodedDataset};
pub use schema::{FeatureSchema, FieldDef, FieldKind, FieldRole};
pub use synthetic::{synthesize, Generator, SyntheticConfig};
pub use vocab::{discretize_numeric, Vocab};
