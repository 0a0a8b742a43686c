//! Dataset schema: field definitions and the label column.

use crate::error::{EktfError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Categorical,
    Numeric,
}

/// Coarse provenance of a field; informational (reports group by it).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    User,
    Item,
    Context,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub kind: FieldKind,
    #[serde(default = "default_role")]
    pub role: FieldRole,
}

fn default_role() -> FieldRole {
    FieldRole::Context
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub fields: Vec<FieldDef>,
    pub label_column: String,
}

impl FeatureSchema {
    pub fn new(fields: Vec<FieldDef>, label_column: impl Into<String>) -> Result<Self> {
        let label_column = label_column.into();
        if fields.is_empty() {
            return Err(EktfError::Config("schema needs at least one field".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(EktfError::Config(format!(
                    "duplicate field name {:?} in schema",
                    f.name
                )));
            }
            if f.name == label_column {
                return Err(EktfError::Config(format!(
                    "label column {:?} cannot also be a feature field",
                    label_column
                )));
            }
        }
        Ok(FeatureSchema {
            fields,
            label_column,
        })
    }

    /// All-categorical schema with generated names; used by the synthesizer.
    pub fn synthetic(num_fields: usize) -> Self {
        let fields = (0..num_fields)
            .map(|i| FieldDef {
                name: format!("field_{i}"),
                kind: FieldKind::Categorical,
                role: FieldRole::Context,
            })
            .collect();
        FeatureSchema {
            fields,
            label_column: "click".to_string(),
        }
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }
}
