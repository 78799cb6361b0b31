//! Trained encoder + discriminator bundle persisted as an [`Artifact`].

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiscriminatorParams, TrainConfig, TrainOutcome};
use crate::artifact::Artifact;
use crate::encoder::{EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

pub const CHECKPOINT_KIND: &str = "encoder-checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub encoder_config: EncoderConfig,
    pub train_config: TrainConfig,
    pub encoder: EncoderParams,
    pub discriminator: DiscriminatorParams,
    pub loss_trace: Vec<f64>,
    /// Caller-supplied provenance tag, e.g. a hash of upstream configuration.
    pub lineage: String,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    encoder_config: EncoderConfig,
    train_config: TrainConfig,
    lineage: String,
}

impl Checkpoint {
    pub fn from_outcome(
        outcome: TrainOutcome,
        encoder_config: EncoderConfig,
        train_config: TrainConfig,
        lineage: impl Into<String>,
    ) -> Self {
        Self {
            encoder_config,
            train_config,
            encoder: outcome.encoder,
            discriminator: outcome.discriminator,
            loss_trace: outcome.loss_trace,
            lineage: lineage.into(),
        }
    }

    pub fn to_artifact(&self) -> Result<Artifact> {
        let mut art = Artifact::new(
            CHECKPOINT_KIND,
            Meta {
                encoder_config: self.encoder_config,
                train_config: self.train_config,
                lineage: self.lineage.clone(),
            },
        )?;
        for (k, layer) in self.encoder.layers.iter().enumerate() {
            art.push(format!("encoder.layer{k}"), layer.clone());
        }
        art.push("discriminator.w", self.discriminator.w.clone());
        let n = self.loss_trace.len();
        art.push("loss_trace", DenseMatrix::from_vec(n, 1, self.loss_trace.clone())?);
        Ok(art)
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        art.expect_kind(CHECKPOINT_KIND)?;
        let meta: Meta = art.meta_as()?;
        let layers = (0..meta.encoder_config.depth)
            .map(|k| art.array(&format!("encoder.layer{k}")).cloned())
            .collect::<Result<Vec<_>>>()?;
        let encoder = EncoderParams { layers };
        encoder.check(&meta.encoder_config)?;
        let w = art.array("discriminator.w")?.clone();
        let discriminator = DiscriminatorParams { w };
        discriminator.check(
            meta.encoder_config.edge_embedding_dim(),
            meta.train_config.summary_dim(&meta.encoder_config),
        )?;
        Ok(Self {
            encoder_config: meta.encoder_config,
            train_config: meta.train_config,
            encoder,
            discriminator,
            loss_trace: art.array("loss_trace")?.data().to_vec(),
            lineage: meta.lineage,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_artifact()?.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_artifact(&Artifact::load(path)?)
    }

    /// Writes `epoch,loss` rows.
    pub fn write_loss_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "epoch,loss").map_err(io)?;
        for (epoch, loss) in self.loss_trace.iter().enumerate() {
            writeln!(f, "{epoch},{loss:e}").map_err(io)?;
        }
        f.flush().map_err(io)
    }
}
