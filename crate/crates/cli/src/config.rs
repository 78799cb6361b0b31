//! Declarative pipeline configuration (TOML) and lineage hashes.

use std::path::{Path, PathBuf};

use anomale_core::detectors::{DetectorKind, GridSpec};
use anomale_core::dgi::{ReadoutSource, TrainConfig};
use anomale_core::encoder::EncoderConfig;
use anomale_core::ingest::{schema, Contamination, SplitSpec};
use anomale_core::preprocess::CategoricalEncoding;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Labelled data: grid search and evaluation.
    #[default]
    Benchmark,
    /// Unlabelled data: fixed detector settings, no evaluation.
    Deploy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub schema: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            path: None,
            schema: "nf-unsw-nb15-v2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub downsample_fraction: f64,
    pub train_fraction: f64,
    /// Attack share of the training split; 0 keeps it benign-only.
    pub contamination: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let d = SplitSpec::default();
        Self {
            downsample_fraction: d.downsample_fraction,
            train_fraction: d.train_fraction,
            contamination: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub encoding: CategoricalEncoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub depth: usize,
    pub hidden_dim: usize,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let d = EncoderConfig::new(1);
        Self {
            depth: d.depth,
            hidden_dim: d.hidden_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub lr: f64,
    pub readout: ReadoutSource,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            lr: d.lr,
            readout: d.readout,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub mode: Mode,
    pub out: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub preprocess: PreprocessConfig,
    pub encoder: EncoderSection,
    pub train: TrainSection,
    pub grid: GridSpec,
    pub detectors: Vec<DetectorKind>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: None,
            mode: Mode::Benchmark,
            out: None,
            dataset: DatasetConfig::default(),
            split: SplitConfig::default(),
            preprocess: PreprocessConfig::default(),
            encoder: EncoderSection::default(),
            train: TrainSection::default(),
            grid: GridSpec::default(),
            detectors: DetectorKind::ALL.to_vec(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?;
        // relative dataset/out paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = cfg.dataset.path.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = cfg.out.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            downsample_fraction: self.split.downsample_fraction,
            train_fraction: self.split.train_fraction,
            contamination: if self.split.contamination == 0.0 {
                Contamination::None
            } else {
                Contamination::Fraction(self.split.contamination)
            },
            rng_seed: self.seed.unwrap_or_default(),
        }
    }

    pub fn encoder_config(&self, input_dim: usize) -> EncoderConfig {
        EncoderConfig {
            depth: self.encoder.depth,
            hidden_dim: self.encoder.hidden_dim,
            input_dim,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            lr: self.train.lr,
            seed: self.seed.unwrap_or_default(),
            readout: self.train.readout,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            epsilon: self.train.epsilon,
        }
    }

    /// All problems found, so they can be reported together.
    pub fn problems(&self, needs_dataset: bool) -> Vec<String> {
        let mut out = Vec::new();
        if self.seed.is_none() {
            out.push("seed is required (config `seed` or --seed)".into());
        }
        if self.out.is_none() {
            out.push("output directory is required (config `out` or --out)".into());
        }
        if needs_dataset {
            match &self.dataset.path {
                None => out.push("dataset.path is required".into()),
                Some(p) if !p.is_file() => out.push(format!("dataset.path {} does not exist", p.display())),
                _ => {}
            }
        }
        if let Err(e) = schema(&self.dataset.schema) {
            out.push(e.to_string());
        }
        if let Err(e) = self.split_spec().validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.encoder_config(1).validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.train_config().validate() {
            out.push(e.to_string());
        }
        if self.detectors.is_empty() {
            out.push("detectors list is empty".into());
        }
        out.extend(self.grid.problems());
        if self.mode == Mode::Deploy {
            if self.split.contamination != 0.0 {
                out.push("split.contamination needs labels and is not available in deploy mode".into());
            }
            if self.preprocess.encoding == CategoricalEncoding::Target {
                out.push("target encoding needs labels and is not available in deploy mode".into());
            }
        }
        out
    }

    pub fn validate(&self, needs_dataset: bool) -> Result<()> {
        let problems = self.problems(needs_dataset);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems))
        }
    }

    pub fn lineage(&self) -> Lineage {
        let preprocess = hash(&(
            "preprocess",
            self.seed,
            &self.dataset,
            &self.split,
            &self.preprocess,
        ));
        let train = hash(&("train", &preprocess, &self.encoder, &self.train));
        let embed = hash(&("embed", &train));
        let detect = hash(&("detect", &embed, self.mode, &self.grid, &self.detectors));
        Lineage {
            preprocess,
            train,
            embed,
            detect,
        }
    }
}

/// Hex SHA-256 of the upstream configuration of every stage. The output
/// directory is not part of any hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lineage {
    pub preprocess: String,
    pub train: String,
    pub embed: String,
    pub detect: String,
}

fn hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serialises");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_need_seed_and_out() {
        let cfg = PipelineConfig::default();
        let p = cfg.problems(true);
        assert_eq!(p.len(), 3, "{p:?}");
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg: PipelineConfig = toml::from_str(
            "seed = 3\nout = \"o\"\n[train]\nepochs = 5\n[grid]\nhbos = [4]\n",
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 5);
        assert_eq!(cfg.grid.hbos, vec![4]);
        assert_eq!(cfg.grid.pca, GridSpec::default().pca);
        assert!(toml::from_str::<PipelineConfig>("[train]\nepoch = 5\n").is_err());
    }

    #[test]
    fn lineage_ignores_out_but_tracks_upstream() {
        let mut a = PipelineConfig {
            seed: Some(1),
            ..Default::default()
        };
        let base = a.lineage();
        a.out = Some("elsewhere".into());
        assert_eq!(a.lineage(), base);
        a.grid.hbos = vec![3];
        let l = a.lineage();
        assert_eq!(l.train, base.train);
        assert_ne!(l.detect, base.detect);
        a.seed = Some(2);
        assert_ne!(a.lineage().preprocess, base.preprocess);
    }

    #[test]
    fn deploy_rejects_label_dependent_settings() {
        let cfg = PipelineConfig {
            seed: Some(0),
            out: Some("o".into()),
            mode: Mode::Deploy,
            split: SplitConfig {
                contamination: 0.04,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(cfg.problems(false).len(), 1);
    }
}
