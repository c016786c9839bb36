//! Flat TOML configuration for the experiment pipeline.
//!
//! Every key sits at the top level. Training keys are those of
//! [`TrainingConfig`]; the rest are listed on [`PipelineConfig`].
//! Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::corrupt::CorruptionSpec;
use crate::encoding::DecodeMode;
use crate::eval::EvaluationPlan;
use crate::schema::CategoricalSchema;
use crate::seed::derive_seed;
use crate::toy::ToyPopulationSpec;
use crate::wgan::TrainingConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Existing ground-truth CSV. Without it a toy population is generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    pub toy_rows: usize,
    pub toy_categories: Vec<usize>,
    pub toy_latent_classes: usize,
    /// Share of the ground truth drawn as the training sample.
    pub sample_fraction: f64,
    /// Unique combinations deleted from the sample to form the benchmark set.
    pub removed_combinations: usize,
    /// `"attr_a,attr_b:0.10"`: attributes to blank and the per-attribute rate.
    pub corruptions: Vec<String>,
    #[serde(flatten)]
    pub training: TrainingConfig,
    /// Rows generated per model; defaults to the ground-truth size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_rows: Option<usize>,
    pub decode_mode: DecodeMode,
    /// Every subset of these sizes enters the k-joint table.
    pub joint_k: Vec<usize>,
    /// Extra explicit subsets for the k-joint table.
    pub joint_subsets: Vec<Vec<String>>,
    pub taxonomy_attributes: Vec<String>,
    pub sampling_levels: Vec<usize>,
}

const PIPELINE_KEYS: &[&str] = &[
    "seed",
    "ground_truth",
    "schema",
    "toy_rows",
    "toy_categories",
    "toy_latent_classes",
    "sample_fraction",
    "removed_combinations",
    "corruptions",
    "synthetic_rows",
    "decode_mode",
    "joint_k",
    "joint_subsets",
    "taxonomy_attributes",
    "sampling_levels",
];

impl Default for PipelineConfig {
    fn default() -> Self {
        let toy = ToyPopulationSpec::default();
        Self {
            seed: 0,
            ground_truth: None,
            schema: None,
            toy_rows: toy.n_rows,
            toy_categories: toy.categories_per_attribute,
            toy_latent_classes: toy.n_latent_classes,
            sample_fraction: 0.1,
            removed_combinations: 200,
            corruptions: vec!["attr2,attr4:0.10".into(), "attr2,attr4:0.40".into()],
            training: TrainingConfig::default(),
            synthetic_rows: None,
            decode_mode: DecodeMode::Sample,
            joint_k: vec![3],
            joint_subsets: vec![],
            taxonomy_attributes: vec![],
            sampling_levels: vec![],
        }
    }
}

fn training_keys() -> BTreeSet<String> {
    let value =
        toml::Value::try_from(TrainingConfig::default()).expect("training config serializes");
    let mut keys: BTreeSet<String> = value
        .as_table()
        .map(|t| t.keys().cloned().collect())
        .unwrap_or_default();
    keys.insert("reference_size".into());
    keys
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        let training = training_keys();
        for key in table.keys() {
            if !PIPELINE_KEYS.contains(&key.as_str()) && !training.contains(key) {
                return Err(PipelineError::Config(format!("unknown key {key:?}")));
            }
        }
        let config: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON rendering.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn toy_spec(&self) -> ToyPopulationSpec {
        ToyPopulationSpec {
            n_rows: self.toy_rows,
            n_attributes: self.toy_categories.len(),
            categories_per_attribute: self.toy_categories.clone(),
            n_latent_classes: self.toy_latent_classes,
            seed: derive_seed(self.seed, "toy-population"),
        }
    }

    pub fn corruption_specs(&self) -> Result<Vec<CorruptionSpec>, PipelineError> {
        let specs: Vec<CorruptionSpec> = self
            .corruptions
            .iter()
            .map(|text| parse_corruption(text, self.seed))
            .collect::<Result<_, _>>()?;
        let mut labels = BTreeSet::new();
        for s in &specs {
            if !labels.insert(s.label()) {
                return Err(PipelineError::Config(format!(
                    "corruption {} listed twice",
                    s.label()
                )));
            }
        }
        Ok(specs)
    }

    /// Checks value ranges and that every named attribute exists.
    pub fn validate(&self, schema: &CategoricalSchema) -> Result<(), PipelineError> {
        self.training
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(PipelineError::Config(format!(
                "sample_fraction {} outside (0, 1]",
                self.sample_fraction
            )));
        }
        let known = |name: &String| {
            schema
                .index_of(name)
                .map(|_| ())
                .ok_or_else(|| PipelineError::Config(format!("unknown attribute {name:?}")))
        };
        for spec in self.corruption_specs()? {
            spec.target_attributes.iter().try_for_each(known)?;
        }
        self.joint_subsets.iter().flatten().try_for_each(known)?;
        self.taxonomy_attributes.iter().try_for_each(known)?;
        if let Some(&k) = self
            .joint_k
            .iter()
            .find(|&&k| k == 0 || k > schema.n_attributes())
        {
            return Err(PipelineError::Config(format!(
                "joint_k {k} outside 1..={}",
                schema.n_attributes()
            )));
        }
        if self.sampling_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PipelineError::Config(
                "sampling_levels must be strictly ascending".into(),
            ));
        }
        Ok(())
    }

    /// All `joint_k` subsets in lexicographic order, then the explicit ones.
    pub fn evaluation_plan(&self, schema: &CategoricalSchema) -> EvaluationPlan {
        let names: Vec<String> = schema.attributes().iter().map(|a| a.name.clone()).collect();
        let mut subsets = Vec::new();
        for &k in &self.joint_k {
            subsets.extend(
                combinations(names.len(), k)
                    .into_iter()
                    .map(|c| c.into_iter().map(|i| names[i].clone()).collect()),
            );
        }
        subsets.extend(self.joint_subsets.iter().cloned());
        EvaluationPlan {
            joint_subsets: subsets,
            taxonomy_attributes: self.taxonomy_attributes.clone(),
            sampling_levels: self.sampling_levels.clone(),
        }
    }
}

fn parse_corruption(text: &str, global_seed: u64) -> Result<CorruptionSpec, PipelineError> {
    let bad = || PipelineError::Config(format!("corruption {text:?} is not \"attr,...:rate\""));
    let (attrs, rate) = text.rsplit_once(':').ok_or_else(bad)?;
    let rate: f64 = rate.trim().parse().map_err(|_| bad())?;
    let targets: Vec<String> = attrs
        .split(',')
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    if targets.is_empty() {
        return Err(bad());
    }
    let mut spec = CorruptionSpec::new(targets, rate, 0);
    spec.seed = derive_seed(
        global_seed,
        &format!("corrupt-{}-{}", spec.label(), attrs.trim()),
    );
    Ok(spec)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 || k > n {
        return vec![];
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::toy_schema;

    #[test]
    fn round_trips_through_toml() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
        let c = PipelineConfig::from_toml("epochs = 3\nseed = 9\nreference_size = 64\n").unwrap();
        assert_eq!(
            (c.training.epochs, c.seed, c.training.reference_size),
            (3, 9, Some(64))
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_toml("epoch = 3\n").is_err());
        assert!(PipelineConfig::from_toml("[training]\nepochs = 3\n").is_err());
    }

    #[test]
    fn corruption_strings() {
        let spec = parse_corruption("attr2, attr4:0.4", 1).unwrap();
        assert_eq!(spec.target_attributes, vec!["attr2", "attr4"]);
        assert_eq!(spec.label(), "miss-2-40");
        assert!(parse_corruption("attr2", 1).is_err());
        assert!(parse_corruption(":0.1", 1).is_err());
        let mut c = PipelineConfig::default();
        c.corruptions.push("attr2,attr4:0.1".into());
        assert!(c.corruption_specs().is_err());
    }

    #[test]
    fn adding_a_corruption_keeps_other_seeds() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.corruptions.insert(0, "attr0:0.2".into());
        assert_eq!(
            a.corruption_specs().unwrap()[0],
            b.corruption_specs().unwrap()[1]
        );
    }

    #[test]
    fn subsets_enumerate_in_order() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(8, 3).len(), 56);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        let schema = toy_schema(&[2, 3, 2]).unwrap();
        let plan = PipelineConfig {
            joint_k: vec![2],
            ..PipelineConfig::default()
        }
        .evaluation_plan(&schema);
        assert_eq!(plan.joint_subsets[0], vec!["attr0", "attr1"]);
        assert_eq!(plan.joint_subsets.len(), 3);
    }

    #[test]
    fn validation_checks_attributes() {
        let schema = toy_schema(&[2, 3]).unwrap();
        let c = PipelineConfig {
            corruptions: vec!["attr1:0.1".into()],
            joint_k: vec![2],
            ..PipelineConfig::default()
        };
        assert!(c.validate(&schema).is_ok());
        assert!(PipelineConfig::default().validate(&schema).is_err());
        let c = PipelineConfig {
            corruptions: vec![],
            joint_k: vec![3],
            ..PipelineConfig::default()
        };
        assert!(c.validate(&schema).is_err());
    }
}
