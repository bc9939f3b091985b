//! Batch manifests: a TOML document with optional shared defaults and one
//! `[[trials]]` entry per run. Completed trials are detected from their
//! persisted summaries, so a killed batch resumes where it stopped.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use grounding_core::controller::MorphologyId;
use grounding_core::protocol::{Regime, Treatment, TrialConfig};

use crate::failure::Failure;
use crate::iofs;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub morphology: Option<MorphologyId>,
    pub treatment: Option<Treatment>,
    pub regime: Option<Regime>,
    pub seed: Option<u64>,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub embedding_dim: Option<usize>,
    pub embedding_seed: Option<u64>,
    pub embedding_bin: Option<String>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
}

impl PartialConfig {
    fn merged(&self, defaults: &PartialConfig) -> PartialConfig {
        PartialConfig {
            morphology: self.morphology.or(defaults.morphology),
            treatment: self.treatment.or(defaults.treatment),
            regime: self.regime.or(defaults.regime),
            seed: self.seed.or(defaults.seed),
            population: self.population.or(defaults.population),
            generations: self.generations.or(defaults.generations),
            embedding_dim: self.embedding_dim.or(defaults.embedding_dim),
            embedding_seed: self.embedding_seed.or(defaults.embedding_seed),
            embedding_bin: self
                .embedding_bin
                .clone()
                .or_else(|| defaults.embedding_bin.clone()),
            steps: self.steps.or(defaults.steps),
            dt: self.dt.or(defaults.dt),
        }
    }

    fn build(&self, index: usize) -> Result<TrialConfig, Failure> {
        let need =
            |key: &str| Failure::invalid(format!("trial {index}: missing required key {key:?}"));
        Ok(TrialConfig {
            morphology: self.morphology.ok_or_else(|| need("morphology"))?,
            treatment: self.treatment.ok_or_else(|| need("treatment"))?,
            regime: self.regime.unwrap_or(Regime::Original),
            seed: self.seed.ok_or_else(|| need("seed"))?,
            population: self.population.ok_or_else(|| need("population"))?,
            generations: self.generations.ok_or_else(|| need("generations"))?,
            embedding_dim: self
                .embedding_dim
                .unwrap_or(grounding_core::protocol::DEFAULT_EMBEDDING_DIM),
            embedding_seed: self
                .embedding_seed
                .unwrap_or(grounding_core::protocol::DEFAULT_EMBEDDING_SEED),
            embedding_bin: self.embedding_bin.clone(),
            steps: self.steps.unwrap_or(500),
            dt: self.dt.unwrap_or(0.05),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchManifest {
    pub out_dir: Option<String>,
    #[serde(default)]
    pub defaults: PartialConfig,
    pub trials: Vec<PartialConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Pending,
    Done,
    Failed,
    SkippedAlreadyDone,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexEntry {
    pub dir: String,
    pub morphology: MorphologyId,
    pub regime: Regime,
    pub treatment: Treatment,
    pub seed: u64,
    pub status: TrialStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Parses and validates a manifest: every trial must build into a valid
/// config and the (morphology, regime, treatment, seed) keys must be
/// unique.
pub fn load_manifest(path: &Path) -> Result<(BatchManifest, Vec<TrialConfig>), Failure> {
    let text = iofs::read_to_string(path)?;
    let manifest: BatchManifest = toml::from_str(&text)
        .map_err(|e| Failure::invalid(format!("manifest {}: {e}", path.display())))?;
    if manifest.trials.is_empty() {
        return Err(Failure::invalid("manifest has no trials"));
    }
    let mut configs = Vec::with_capacity(manifest.trials.len());
    let mut keys = HashSet::new();
    for (i, partial) in manifest.trials.iter().enumerate() {
        let config = partial.merged(&manifest.defaults).build(i)?;
        config
            .validate()
            .map_err(|e| Failure::invalid(format!("trial {i}: {e}")))?;
        let key = (
            config.morphology,
            config.regime,
            config.treatment,
            config.seed,
        );
        if !keys.insert(key) {
            return Err(Failure::invalid(format!(
                "trial {i}: duplicate trial key {}/{}/{}/{}",
                config.morphology.as_str(),
                config.regime.as_str(),
                config.treatment.as_str(),
                config.seed
            )));
        }
        configs.push(config);
    }
    Ok((manifest, configs))
}

pub fn trial_dir(out_dir: &Path, config: &TrialConfig) -> PathBuf {
    out_dir.join(iofs::trial_dir_name(
        config.morphology.as_str(),
        config.regime.as_str(),
        config.treatment.as_str(),
        config.seed,
    ))
}
