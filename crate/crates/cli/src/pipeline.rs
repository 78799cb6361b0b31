//! Pipeline stages. Each stage reads the artifacts of the previous one from
//! disk and writes its own, so any stage can be rerun on its own.

use std::fs;
use std::path::{Path, PathBuf};

use anomale_core::artifact::Artifact;
use anomale_core::detectors::{grid_report_csv, grid_search, DetectorKind, DetectorModel};
use anomale_core::dgi::{self, Checkpoint};
use anomale_core::eval::{compare, reference_table, render_reference, Confusion, EvalReport, InputKind, ReportRow};
use anomale_core::graph::FlowGraph;
use anomale_core::ingest::{self, drop_ports, load_csv, Label};
use anomale_core::numeric::DenseMatrix;
use anomale_core::preprocess::{fit_encoder, transform, Normalizer};
use serde::{Deserialize, Serialize};

use crate::config::{Lineage, Mode, PipelineConfig};
use crate::error::{CliError, Result};

const FLOWS_KIND: &str = "flows";
const EMBEDDINGS_KIND: &str = "flow-embeddings";

/// Where every stage reads and writes.
#[derive(Debug, Clone)]
pub struct Layout {
    pub dataset: Option<PathBuf>,
    pub preprocess: PathBuf,
    pub train: PathBuf,
    pub embed: PathBuf,
    pub detect: PathBuf,
    pub report: PathBuf,
}

impl Layout {
    pub fn under(out: &Path, dataset: Option<PathBuf>) -> Self {
        Self {
            dataset,
            preprocess: out.join("preprocess"),
            train: out.join("train"),
            embed: out.join("embed"),
            detect: out.join("detect"),
            report: out.join("report"),
        }
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.train.join("checkpoint.bin")
    }
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub layout: Layout,
    lineage: Lineage,
}

/// Stamp carried by every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Stamp {
    lineage: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct FlowsMeta {
    #[serde(flatten)]
    stamp: Stamp,
    src: Vec<String>,
    dst: Vec<String>,
    labels: Option<Vec<Label>>,
}

/// Preprocessed split: endpoints, labels and normalised features.
pub struct Flows {
    pub src: Vec<String>,
    pub dst: Vec<String>,
    pub labels: Option<Vec<Label>>,
    pub features: DenseMatrix,
}

impl Flows {
    pub fn graph(&self) -> anomale_core::Result<FlowGraph> {
        FlowGraph::from_flows(&self.src, &self.dst, &self.features, self.labels.clone())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(flatten)]
    stamp: Stamp,
    input: InputKind,
    model: DetectorModel,
}

fn require(stage: &'static str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact {
            stage,
            path: path.to_path_buf(),
        })
    }
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn check_stamp(stage: &'static str, path: &Path, found: &Stamp, expected: &str, seed: u64) -> Result<()> {
    if found.lineage != expected || found.seed != seed {
        return Err(CliError::Lineage {
            stage,
            path: path.to_path_buf(),
            found: format!("{} (seed {})", found.lineage, found.seed),
            expected: format!("{expected} (seed {seed})"),
        });
    }
    Ok(())
}


impl Pipeline {
    pub fn new(config: PipelineConfig, layout: Layout) -> Self {
        let lineage = config.lineage();
        Self {
            config,
            layout,
            lineage,
        }
    }

    fn stamp(&self, lineage: &str) -> Stamp {
        Stamp {
            lineage: lineage.to_string(),
            seed: self.config.seed(),
        }
    }

    pub fn inputs(&self) -> Vec<InputKind> {
        vec![InputKind::Raw, InputKind::Embeddings]
    }

    // ---- preprocess

    pub fn preprocess(&self) -> Result<()> {
        let path = self.layout.dataset.as_deref().ok_or_else(|| {
            CliError::Config(vec!["dataset.path is required for preprocess".into()])
        })?;
        require("preprocess", path)?;
        let dataset = load_csv(path, &self.config.dataset.schema)?;
        log::info!("preprocess: read {} flows from {}", dataset.records.len(), path.display());
        let spec = self.config.split_spec();
        let records: Vec<_> = ingest::downsample(&dataset.records, &spec)?
            .into_iter()
            .map(drop_ports)
            .collect();
        let (train, test) = ingest::split(&records, &spec)?;
        log::info!("preprocess: {} train / {} test flows", train.len(), test.len());
        let encoder = fit_encoder(&dataset.layout, &train, self.config.preprocess.encoding)?;
        let dir = &self.layout.preprocess;
        mkdir(dir)?;
        encoder.save(dir.join("encoder.json"))?;
        for (name, part) in [("train", &train), ("test", &test)] {
            let features = transform(part, &encoder, Normalizer::L2)?;
            let meta = FlowsMeta {
                stamp: self.stamp(&self.lineage.preprocess),
                src: part.iter().map(|r| r.src_ip.clone()).collect(),
                dst: part.iter().map(|r| r.dst_ip.clone()).collect(),
                labels: part.iter().map(|r| r.label).collect(),
            };
            let mut art = Artifact::new(FLOWS_KIND, meta)?;
            art.push("features", features);
            art.save(dir.join(format!("{name}.bin")))?;
        }
        Ok(())
    }

    pub fn load_flows(&self, stage: &'static str, split: &str) -> Result<Flows> {
        let path = self.layout.preprocess.join(format!("{split}.bin"));
        require(stage, &path)?;
        let art = Artifact::load(&path)?;
        art.expect_kind(FLOWS_KIND)?;
        let meta: FlowsMeta = art.meta_as()?;
        check_stamp(stage, &path, &meta.stamp, &self.lineage.preprocess, self.config.seed())?;
        Ok(Flows {
            src: meta.src,
            dst: meta.dst,
            labels: meta.labels,
            features: art.array("features")?.clone(),
        })
    }

    // ---- train

    pub fn train(&self) -> Result<Checkpoint> {
        let flows = self.load_flows("train", "train")?;
        let graph = flows.graph()?;
        let enc_cfg = self.config.encoder_config(graph.feature_dim());
        let train_cfg = self.config.train_config();
        log::info!(
            "train: {} nodes, {} directed edges, {} epochs",
            graph.num_nodes(),
            graph.num_edges(),
            train_cfg.epochs
        );
        let outcome = dgi::train_with(&graph, &enc_cfg, &train_cfg, |epoch, loss| {
            if epoch % 20 == 0 {
                log::info!("train: epoch {epoch} loss {loss:.6}");
            }
        })?;
        let ck = Checkpoint::from_outcome(outcome, enc_cfg, train_cfg, self.lineage.train.clone());
        mkdir(&self.layout.train)?;
        ck.save(self.layout.checkpoint())?;
        ck.write_loss_csv(self.layout.train.join("loss.csv"))?;
        Ok(ck)
    }

    pub fn load_checkpoint(&self, stage: &'static str) -> Result<Checkpoint> {
        let path = self.layout.checkpoint();
        require(stage, &path)?;
        let ck = Checkpoint::load(&path)?;
        let stamp = Stamp {
            lineage: ck.lineage.clone(),
            seed: ck.train_config.seed,
        };
        check_stamp(stage, &path, &stamp, &self.lineage.train, self.config.seed())?;
        Ok(ck)
    }

    // ---- embed

    pub fn embed(&self) -> Result<()> {
        let ck = self.load_checkpoint("embed")?;
        mkdir(&self.layout.embed)?;
        for split in ["train", "test"] {
            let flows = self.load_flows("embed", split)?;
            let graph = flows.graph()?;
            let emb = dgi::embed_flows(&graph, &ck.encoder, &ck.encoder_config)?;
            log::info!("embed: {split} {}x{}", emb.rows(), emb.cols());
            let mut art = Artifact::new(EMBEDDINGS_KIND, self.stamp(&self.lineage.embed))?;
            art.push("embeddings", emb);
            art.save(self.layout.embed.join(format!("{split}.bin")))?;
        }
        Ok(())
    }

    fn load_embeddings(&self, stage: &'static str, split: &str) -> Result<DenseMatrix> {
        let path = self.layout.embed.join(format!("{split}.bin"));
        require(stage, &path)?;
        let art = Artifact::load(&path)?;
        art.expect_kind(EMBEDDINGS_KIND)?;
        let stamp: Stamp = art.meta_as()?;
        check_stamp(stage, &path, &stamp, &self.lineage.embed, self.config.seed())?;
        Ok(art.array("embeddings")?.clone())
    }

    /// `(features, labels)` of a split for one input kind.
    fn matrix(&self, stage: &'static str, input: InputKind, split: &str) -> Result<(DenseMatrix, Option<Vec<Label>>)> {
        let flows = self.load_flows(stage, split)?;
        let x = match input {
            InputKind::Raw => flows.features,
            InputKind::Embeddings => self.load_embeddings(stage, split)?,
        };
        Ok((x, flows.labels))
    }

    fn model_path(&self, input: InputKind, kind: DetectorKind) -> PathBuf {
        self.layout
            .detect
            .join(format!("{}-{}.json", input.as_str(), kind.as_str()))
    }

    // ---- detect

    pub fn detect(&self) -> Result<()> {
        let seed = self.config.seed();
        let grid = &self.config.grid;
        mkdir(&self.layout.detect)?;
        let mut grid_cells = Vec::new();
        for input in self.inputs() {
            let (train, _) = self.matrix("detect", input, "train")?;
            let (test, test_labels) = self.matrix("detect", input, "test")?;
            let mut predictions = String::from("row");
            let mut columns: Vec<(Vec<f64>, Vec<bool>)> = Vec::new();
            for &kind in &self.config.detectors {
                let model = match self.config.mode {
                    Mode::Benchmark => {
                        let labels = test_labels.as_deref().ok_or(anomale_core::Error::MissingLabels(
                            "benchmark mode needs labelled test flows",
                        ))?;
                        let result = grid_search(kind, grid.params(kind), &grid.contamination, &train, &test, labels, seed)?;
                        log::info!(
                            "detect: {} {} best {}={} c={} macro F1 {:.4}",
                            input.as_str(),
                            kind.as_str(),
                            kind.parameter_name(),
                            result.best.param,
                            result.best.contamination,
                            result.best_metrics.macro_f1
                        );
                        grid_cells.push((input, result.cells));
                        result.best
                    }
                    Mode::Deploy => {
                        DetectorModel::fit(kind, &train, grid.params(kind)[0], grid.contamination[0], seed)?
                    }
                };
                let file = ModelFile {
                    stamp: self.stamp(&self.lineage.detect),
                    input,
                    model,
                };
                write(&self.model_path(input, kind), serde_json::to_string(&file)?)?;
                predictions.push_str(&format!(",{0}_score,{0}_flag", kind.as_str()));
                columns.push(file.model.predict(&test)?);
            }
            predictions.push('\n');
            for i in 0..test.rows() {
                predictions.push_str(&i.to_string());
                for (scores, flags) in &columns {
                    predictions.push_str(&format!(",{:e},{}", scores[i], u8::from(flags[i])));
                }
                predictions.push('\n');
            }
            write(
                &self.layout.detect.join(format!("{}-predictions.csv", input.as_str())),
                predictions,
            )?;
        }
        if self.config.mode == Mode::Benchmark {
            let csv = grid_report_csv_with_input(&grid_cells);
            write(&self.layout.detect.join("grid.csv"), csv)?;
        }
        Ok(())
    }

    fn load_model(&self, stage: &'static str, input: InputKind, kind: DetectorKind) -> Result<DetectorModel> {
        let path = self.model_path(input, kind);
        require(stage, &path)?;
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        check_stamp(stage, &path, &file.stamp, &self.lineage.detect, self.config.seed())?;
        Ok(file.model)
    }

    // ---- evaluate

    pub fn evaluate(&self) -> Result<EvalReport> {
        if self.config.mode == Mode::Deploy {
            return Err(CliError::Config(vec!["evaluate needs labelled data; mode is deploy".into()]));
        }
        let mut report = EvalReport::default();
        for input in self.inputs() {
            let (test, labels) = self.matrix("evaluate", input, "test")?;
            let labels = labels.ok_or(anomale_core::Error::MissingLabels("evaluate needs labelled test flows"))?;
            for &kind in &self.config.detectors {
                let model = self.load_model("evaluate", input, kind)?;
                let (_, flags) = model.predict(&test)?;
                report.push(ReportRow::new(kind.as_str(), input, Confusion::from_flags(&flags, &labels)?));
            }
        }
        let comparison = compare(&report.filter(InputKind::Raw), &report.filter(InputKind::Embeddings))?;
        let mut text = comparison.to_text();
        let pct = (self.config.split.contamination * 100.0).round() as u32;
        if let Some(reference) = reference_table(&self.config.dataset.schema, pct) {
            text.push_str(&format!("\nPublished reference ({}, {pct}% contamination):\n", self.config.dataset.schema));
            text.push_str(&render_reference(reference));
        }
        let dir = &self.layout.report;
        mkdir(dir)?;
        write(&dir.join("report.csv"), report.to_csv())?;
        write(&dir.join("report.jsonl"), report.to_jsonl()?)?;
        write(&dir.join("comparison.csv"), comparison.to_csv())?;
        write(&dir.join("report.txt"), &text)?;
        println!("{text}");
        Ok(report)
    }
}

fn grid_report_csv_with_input(cells: &[(InputKind, Vec<anomale_core::detectors::GridCell>)]) -> String {
    let body = grid_report_csv(cells.iter().map(|(_, c)| c.as_slice()));
    // prefix each data row with its input kind
    let mut lines = body.lines();
    let mut out = format!("input,{}\n", lines.next().unwrap_or_default());
    let inputs = cells.iter().flat_map(|(i, c)| std::iter::repeat_n(*i, c.len()));
    for (line, input) in lines.zip(inputs) {
        out.push_str(input.as_str());
        out.push(',');
        out.push_str(line);
        out.push('\n');
    }
    out
}
