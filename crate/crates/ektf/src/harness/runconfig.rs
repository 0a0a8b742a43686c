//! Run configuration files.
//!
//! A run is described by one sectioned TOML file. Unknown keys anywhere are
//! hard errors: experiment configs must be fully auditable, and a silently
//! ignored typo (`learing_rate`) would corrupt a sweep without a trace.

use crate::data::SyntheticConfig;
use crate::error::{EktfError, Result};
use crate::model::{EnsembleConfig, StudentArch, StudentKind};
use crate::numkit::adam::AdamConfig;
use crate::objective::{Fusion, ObjectiveSpec, Variant};
use crate::trainer::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One experiment description: what data, what model, what objective, how
/// to train, where to write, and the sweep/ablation grids.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub ablate: AblateSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            EktfError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| EktfError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Parse from text (tests and embedded configs).
    pub fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| EktfError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.model.validate()?;
        self.training.validate()?;
        Ok(())
    }
}

/// Where the rows come from. The matching subsection must be present and
/// the other subsections absent, so a config never carries dead settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic,
    Csv,
    Cache,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub source: DatasetSource,
    /// Train/validation/test fractions.
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    /// Seed for synthesis and for the split shuffle; independent of the
    /// per-run training seed so sweeps share one dataset.
    #[serde(default = "default_data_seed")]
    pub seed: u64,
    pub synthetic: Option<SyntheticConfig>,
    pub csv: Option<CsvSection>,
    pub cache: Option<PathBuf>,
}

fn default_split() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}

fn default_data_seed() -> u64 {
    7
}

impl DatasetSection {
    fn validate(&self) -> Result<()> {
        let (want, present) = match self.source {
            DatasetSource::Synthetic => ("synthetic", self.synthetic.is_some()),
            DatasetSource::Csv => ("csv", self.csv.is_some()),
            DatasetSource::Cache => ("cache", self.cache.is_some()),
        };
        if !present {
            return Err(EktfError::Config(format!(
                "dataset.source = \"{want}\" requires a [dataset.{want}] section"
            )));
        }
        let stray: Vec<&str> = [
            ("synthetic", self.synthetic.is_some()),
            ("csv", self.csv.is_some()),
            ("cache", self.cache.is_some()),
        ]
        .iter()
        .filter(|(name, some)| *some && *name != want)
        .map(|(name, _)| *name)
        .collect();
        if !stray.is_empty() {
            return Err(EktfError::Config(format!(
                "dataset.source = \"{want}\" but unrelated section(s) present: {}",
                stray.join(", ")
            )));
        }
        Ok(())
    }
}

/// CSV ingestion settings: which columns are features, which is the label.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSection {
    pub path: PathBuf,
    pub label: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub numeric: Vec<String>,
    /// Tokens seen fewer times than this map to the OOV id.
    #[serde(default = "default_min_count")]
    pub min_count: u64,
}

fn default_min_count() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub students: Vec<StudentKind>,
    pub embedding_dim: usize,
    /// Hidden layer widths of feed-forward students.
    pub hidden: Vec<usize>,
    /// Depth of feature-crossing students.
    pub cross_layers: usize,
    pub init_std: f64,
    pub shared_embeddings: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            students: vec![StudentKind::Mlp; 3],
            embedding_dim: 16,
            hidden: vec![64, 64],
            cross_layers: 2,
            init_std: 0.01,
            shared_embeddings: false,
        }
    }
}

impl ModelSection {
    fn validate(&self) -> Result<()> {
        if self.students.is_empty() {
            return Err(EktfError::Config("model.students must not be empty".into()));
        }
        if self.embedding_dim == 0 {
            return Err(EktfError::Config("model.embedding_dim must be >= 1".into()));
        }
        if !(self.init_std > 0.0) {
            return Err(EktfError::Config("model.init_std must be > 0".into()));
        }
        Ok(())
    }

    pub fn ensemble_config(&self, with_concat_head: bool) -> EnsembleConfig {
        EnsembleConfig {
            students: self.students.clone(),
            embedding_dim: self.embedding_dim,
            arch: StudentArch {
                hidden: self.hidden.clone(),
                cross_layers: self.cross_layers,
                init_std: self.init_std,
            },
            shared_embeddings: self.shared_embeddings,
            with_concat_head,
        }
    }

    /// The same section with the ensemble resized to `k` copies of the
    /// first student kind (how sweeps vary K over a homogeneous ensemble).
    pub fn with_ensemble_size(&self, k: usize) -> ModelSection {
        let kind = self.students.first().copied().unwrap_or(StudentKind::Mlp);
        ModelSection {
            students: vec![kind; k],
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// Drives model initialization and epoch shuffling for this run.
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            batch_size: 256,
            eval_batch_size: 4096,
            max_epochs: 10,
            patience: 2,
            learning_rate: 0.001,
            seed: 42,
            shuffle: true,
        }
    }
}

impl TrainingSection {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.eval_batch_size == 0 {
            return Err(EktfError::Config("training batch sizes must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(EktfError::Config("training.max_epochs must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(EktfError::Config("training.patience must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(EktfError::Config("training.learning_rate must be > 0".into()));
        }
        Ok(())
    }

    /// Loop configuration for one run. `strict` disables wall-clock
    /// recording so every emitted byte is reproducible.
    pub fn train_config(&self, strict: bool) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            eval_batch_size: self.eval_batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
            seed: self.seed,
            shuffle: self.shuffle,
            record_walltime: !strict,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs"),
        }
    }
}

/// Grid for the ensemble-scaling sweep.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub ensemble_sizes: Vec<usize>,
    pub fusions: Vec<Fusion>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            ensemble_sizes: vec![1, 2, 3, 4, 6],
            fusions: vec![Fusion::Mean],
            variants: vec![Variant::Vanilla, Variant::Ektf],
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

/// Grid for the loss-component ablation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblateSection {
    pub ablations: Vec<Ablation>,
    pub seeds: Vec<u64>,
}

impl Default for AblateSection {
    fn default() -> Self {
        AblateSection {
            ablations: vec![
                Ablation::Ektf,
                Ablation::OnlyKd,
                Ablation::OnlyDml,
                Ablation::WoEm,
                Ablation::WoAll,
            ],
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

/// The five ablation arms: the full objective, each transfer loss alone,
/// the full objective with uniform weights instead of the examination, and
/// plain ensemble training with nothing transferred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Ektf,
    OnlyKd,
    OnlyDml,
    WoEm,
    WoAll,
}

impl Ablation {
    pub fn label(self) -> &'static str {
        match self {
            Ablation::Ektf => "ektf",
            Ablation::OnlyKd => "only_kd",
            Ablation::OnlyDml => "only_dml",
            Ablation::WoEm => "wo_em",
            Ablation::WoAll => "wo_all",
        }
    }

    pub fn parse(s: &str) -> Result<Ablation> {
        Ok(match s {
            "ektf" => Ablation::Ektf,
            "only_kd" => Ablation::OnlyKd,
            "only_dml" => Ablation::OnlyDml,
            "wo_em" => Ablation::WoEm,
            "wo_all" => Ablation::WoAll,
            other => {
                return Err(EktfError::Config(format!("unknown ablation {other:?}")));
            }
        })
    }

    /// The objective this arm trains with. Flags not owned by the arm
    /// (stop-gradient, footnote weighting, teacher-CTR) pass through from
    /// the base objective so the comparison changes exactly one thing.
    pub fn objective(self, base: &ObjectiveSpec) -> ObjectiveSpec {
        let mut spec = *base;
        match self {
            Ablation::Ektf => {
                spec.variant = Variant::Ektf;
                spec.use_exam = true;
            }
            Ablation::OnlyKd => {
                spec.variant = Variant::KdCtr;
                spec.use_exam = true;
            }
            Ablation::OnlyDml => {
                spec.variant = Variant::DmlCtr;
                spec.use_exam = true;
            }
            Ablation::WoEm => {
                spec.variant = Variant::Ektf;
                spec.use_exam = false;
            }
            Ablation::WoAll => {
                spec.variant = Variant::Vanilla;
                spec.fusion = Fusion::Mean;
                spec.use_exam = false;
            }
        }
        spec
    }
}

/// Stable text labels for CSV cells (identical to the serde names).
pub fn fusion_label(f: Fusion) -> &'static str {
    match f {
        Fusion::Mean => "mean",
        Fusion::Sum => "sum",
        Fusion::Concat => "concat",
    }
}

pub fn parse_fusion(s: &str) -> Result<Fusion> {
    Ok(match s {
        "mean" => Fusion::Mean,
        "sum" => Fusion::Sum,
        "concat" => Fusion::Concat,
        other => return Err(EktfError::Config(format!("unknown fusion {other:?}"))),
    })
}

pub fn variant_label(v: Variant) -> &'static str {
    match v {
        Variant::Vanilla => "vanilla",
        Variant::KdCtr => "kd_ctr",
        Variant::DmlCtr => "dml_ctr",
        Variant::Ektf => "ektf",
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    Ok(match s {
        "vanilla" => Variant::Vanilla,
        "kd_ctr" => Variant::KdCtr,
        "dml_ctr" => Variant::DmlCtr,
        "ektf" => Variant::Ektf,
        other => return Err(EktfError::Config(format!("unknown variant {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [dataset]
        source = "synthetic"
        [dataset.synthetic]
        num_rows = 100
    "#;

    #[test]
    fn minimal_config_fills_defaults() {
        let config = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(config.dataset.split, [0.8, 0.1, 0.1]);
        assert_eq!(config.dataset.synthetic.as_ref().unwrap().num_rows, 100);
        assert_eq!(config.dataset.synthetic.as_ref().unwrap().num_fields, 8);
        assert_eq!(config.model.students.len(), 3);
        assert_eq!(config.training.batch_size, 256);
        assert_eq!(config.training.patience, 2);
        assert!(config.objective.use_exam);
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        for bad in [
            // top-level
            "[dataset]\nsource = \"synthetic\"\n[dataset.synthetic]\nnum_rows = 1\n[extras]\nx = 1",
            // nested, typo'd training key
            "[dataset]\nsource = \"synthetic\"\n[dataset.synthetic]\nnum_rows = 1\n[training]\nlearing_rate = 0.1",
            // unknown synthetic knob
            "[dataset]\nsource = \"synthetic\"\n[dataset.synthetic]\nnum_rowz = 1",
        ] {
            let err = RunConfig::parse(bad).unwrap_err();
            assert!(matches!(err, EktfError::Config(_)), "accepted: {bad}");
        }
    }

    #[test]
    fn source_must_match_subsection() {
        let missing = "[dataset]\nsource = \"csv\"";
        assert!(RunConfig::parse(missing).is_err());

        let stray = r#"
            [dataset]
            source = "synthetic"
            cache = "some.ekds"
            [dataset.synthetic]
            num_rows = 10
        "#;
        let err = RunConfig::parse(stray).unwrap_err();
        assert!(err.to_string().contains("cache"), "{err}");
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        for (section, expect) in [
            ("[training]\nlearning_rate = 0.0", "learning_rate"),
            ("[training]\npatience = 0", "patience"),
            ("[training]\nmax_epochs = 0", "max_epochs"),
            ("[model]\nstudents = []", "students"),
            ("[model]\nembedding_dim = 0", "embedding_dim"),
        ] {
            let text = format!("{MINIMAL}\n{section}");
            let err = RunConfig::parse(&text).unwrap_err();
            assert!(err.to_string().contains(expect), "{err}");
        }
    }

    #[test]
    fn full_config_round_trips_choices() {
        let text = r#"
            [dataset]
            source = "csv"
            split = [0.6, 0.2, 0.2]
            seed = 3
            [dataset.csv]
            path = "clicks.csv"
            label = "click"
            categorical = ["site", "device"]
            numeric = ["price"]
            min_count = 2

            [model]
            students = ["mlp", "crossnet"]
            embedding_dim = 8
            hidden = [32]
            cross_layers = 3
            init_std = 0.02
            shared_embeddings = true

            [objective]
            variant = "dml_ctr"
            use_exam = false
            fusion = "sum"
            stop_gradient_targets = false
            mu_one_over_k = true
            add_teacher_ctr = true

            [training]
            batch_size = 128
            eval_batch_size = 999
            max_epochs = 4
            patience = 1
            learning_rate = 0.01
            seed = 11
            shuffle = false

            [output]
            dir = "out/exp1"

            [sweep]
            ensemble_sizes = [1, 2]
            fusions = ["mean", "concat"]
            variants = ["vanilla"]
            seeds = [1]

            [ablate]
            ablations = ["ektf", "wo_all"]
            seeds = [1, 2]
        "#;
        let config = RunConfig::parse(text).unwrap();
        assert_eq!(config.model.students, vec![StudentKind::Mlp, StudentKind::Crossnet]);
        assert_eq!(config.objective.variant, Variant::DmlCtr);
        assert_eq!(config.objective.fusion, Fusion::Sum);
        assert!(config.objective.mu_one_over_k);
        assert!(!config.training.shuffle);
        assert_eq!(config.sweep.fusions, vec![Fusion::Mean, Fusion::Concat]);
        assert_eq!(config.ablate.ablations, vec![Ablation::Ektf, Ablation::WoAll]);
        assert_eq!(config.output.dir, PathBuf::from("out/exp1"));

        let tc = config.training.train_config(true);
        assert_eq!(tc.adam.lr, 0.01);
        assert!(!tc.record_walltime);
        assert!(!tc.shuffle);
    }

    #[test]
    fn ablation_arms_map_to_objectives() {
        let base = ObjectiveSpec::default();
        let kd = Ablation::OnlyKd.objective(&base);
        assert_eq!(kd.variant, Variant::KdCtr);
        assert!(kd.use_exam);

        let wo_em = Ablation::WoEm.objective(&base);
        assert_eq!(wo_em.variant, Variant::Ektf);
        assert!(!wo_em.use_exam);

        let wo_all = Ablation::WoAll.objective(&base);
        assert_eq!(wo_all.variant, Variant::Vanilla);
        assert_eq!(wo_all.fusion, Fusion::Mean);

        // Pass-through flags survive.
        let base2 = ObjectiveSpec {
            stop_gradient_targets: false,
            ..base
        };
        assert!(!Ablation::Ektf.objective(&base2).stop_gradient_targets);
    }

    #[test]
    fn resizing_replicates_the_first_kind() {
        let section = ModelSection {
            students: vec![StudentKind::Crossnet, StudentKind::Mlp],
            ..ModelSection::default()
        };
        let resized = section.with_ensemble_size(4);
        assert_eq!(resized.students, vec![StudentKind::Crossnet; 4]);
        assert_eq!(resized.embedding_dim, section.embedding_dim);
    }

    #[test]
    fn labels_round_trip() {
        for v in [Variant::Vanilla, Variant::KdCtr, Variant::DmlCtr, Variant::Ektf] {
            assert_eq!(parse_variant(variant_label(v)).unwrap(), v);
        }
        for f in [Fusion::Mean, Fusion::Sum, Fusion::Concat] {
            assert_eq!(parse_fusion(fusion_label(f)).unwrap(), f);
        }
        for a in [
            Ablation::Ektf,
            Ablation::OnlyKd,
            Ablation::OnlyDml,
            Ablation::WoEm,
            Ablation::WoAll,
        ] {
            assert_eq!(Ablation::parse(a.label()).unwrap(), a);
        }
    }
}
