//! `anomale` command-line pipeline: preprocess, train, embed, detect and
//! evaluate, with every intermediate artifact written under one output
//! directory.

pub mod config;
pub mod error;
pub mod pipeline;

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{Mode, PipelineConfig};
use error::{CliError, Result};
use pipeline::{Layout, Pipeline};

#[derive(Debug, Parser)]
#[command(name = "anomale", version, about = "Self-supervised flow-graph anomaly detection")]
pub struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured mode.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    #[command(subcommand)]
    pub command: Command,
}

/// Per-stage path overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct StageIo {
    /// Stage input: the dataset CSV for `preprocess`, otherwise the
    /// upstream stage's directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory this stage writes to.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, downsample, split and encode the dataset.
    Preprocess(StageIo),
    /// Train the encoder on the training graph.
    Train(StageIo),
    /// Compute per-flow embeddings for both splits.
    Embed(StageIo),
    /// Fit detectors on raw features and embeddings.
    Detect(StageIo),
    /// Score the test split and write reports.
    Evaluate(StageIo),
    /// Run every stage in order.
    RunAll,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Preprocess(_) => "preprocess",
            Command::Train(_) => "train",
            Command::Embed(_) => "embed",
            Command::Detect(_) => "detect",
            Command::Evaluate(_) => "evaluate",
            Command::RunAll => "run-all",
        }
    }
}

/// Exclusive claim on an output directory, released on drop.
struct RunLock(PathBuf);

impl RunLock {
    fn acquire(out: &Path) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let path = out.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(CliError::io(path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => {
            if !p.is_file() {
                return Err(CliError::Config(vec![format!("config file {} does not exist", p.display())]));
            }
            PipelineConfig::load(p)?
        }
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    if let Some(m) = cli.mode {
        config.mode = m;
    }
    if let Command::Preprocess(io) = &cli.command {
        if io.input.is_some() {
            config.dataset.path = io.input.clone();
        }
    }
    let needs_dataset = matches!(cli.command, Command::Preprocess(_) | Command::RunAll);
    config.validate(needs_dataset)?;

    let out = config.out.clone().expect("validated");
    let mut layout = Layout::under(&out, config.dataset.path.clone());
    match &cli.command {
        Command::Preprocess(io) => {
            if let Some(o) = &io.output {
                layout.preprocess = o.clone();
            }
        }
        Command::Train(io) => {
            if let Some(i) = &io.input {
                layout.preprocess = i.clone();
            }
            if let Some(o) = &io.output {
                layout.train = o.clone();
            }
        }
        Command::Embed(io) => {
            if let Some(i) = &io.input {
                layout.train = i.clone();
            }
            if let Some(o) = &io.output {
                layout.embed = o.clone();
            }
        }
        Command::Detect(io) => {
            if let Some(i) = &io.input {
                layout.embed = i.clone();
            }
            if let Some(o) = &io.output {
                layout.detect = o.clone();
            }
        }
        Command::Evaluate(io) => {
            if let Some(i) = &io.input {
                layout.detect = i.clone();
            }
            if let Some(o) = &io.output {
                layout.report = o.clone();
            }
        }
        Command::RunAll => {}
    }

    let _lock = RunLock::acquire(&out)?;
    let pipeline = Pipeline::new(config, layout);
    log::info!("{}: writing under {}", cli.command.name(), out.display());
    match cli.command {
        Command::Preprocess(_) => pipeline.preprocess(),
        Command::Train(_) => pipeline.train().map(drop),
        Command::Embed(_) => pipeline.embed(),
        Command::Detect(_) => pipeline.detect(),
        Command::Evaluate(_) => pipeline.evaluate().map(drop),
        Command::RunAll => {
            pipeline.preprocess()?;
            pipeline.train()?;
            pipeline.embed()?;
            pipeline.detect()?;
            if pipeline.config.mode == Mode::Benchmark {
                pipeline.evaluate()?;
            }
            Ok(())
        }
    }
}
