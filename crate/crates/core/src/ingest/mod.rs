//! NetFlow CSV ingestion, downsampling and train/test splitting.

mod schema;
mod split;

pub use schema::{schema, DatasetSchema, NF_CSE_CIC_IDS2018_V2, NF_UNSW_NB15_V2, SCHEMAS};
pub use split::{downsample, downsample_indices, split, split_indices, Contamination, SplitSpec};

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Attack,
}

impl Label {
    pub fn is_attack(self) -> bool {
        self == Label::Attack
    }

    fn parse(raw: &str) -> Option<Label> {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case("benign") || raw.eq_ignore_ascii_case("normal") {
            return Some(Label::Benign);
        }
        if raw.eq_ignore_ascii_case("attack") || raw.eq_ignore_ascii_case("malicious") {
            return Some(Label::Attack);
        }
        match raw.parse::<f64>() {
            Ok(v) if v == 0.0 => Some(Label::Benign),
            Ok(v) if v.is_finite() => Some(Label::Attack),
            _ => None,
        }
    }
}

/// Name and kind of every flow feature, in schema order. Shared by all
/// records of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub columns: Vec<FeatureColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: FeatureKind,
    /// Index into [`FlowRecord::categorical`] or [`FlowRecord::numeric`].
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Categorical,
    Numeric,
}

impl FeatureLayout {
    pub fn from_schema(schema: &DatasetSchema) -> Self {
        let (mut cat, mut num) = (0, 0);
        let columns = schema
            .features
            .iter()
            .map(|&name| {
                let (kind, slot) = if schema.is_categorical(name) {
                    cat += 1;
                    (FeatureKind::Categorical, cat - 1)
                } else {
                    num += 1;
                    (FeatureKind::Numeric, num - 1)
                };
                FeatureColumn {
                    name: name.to_string(),
                    kind,
                    slot,
                }
            })
            .collect();
        Self { columns }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn categorical_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.kind == FeatureKind::Categorical)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn numeric_count(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| c.kind == FeatureKind::Numeric)
            .count()
    }
}

/// One NetFlow row. Feature values are stored positionally; their names
/// live in the dataset's [`FeatureLayout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub src_ip: String,
    pub dst_ip: String,
    pub src_port: Option<u16>,
    pub dst_port: Option<u16>,
    pub categorical: Vec<String>,
    /// Missing cells are `NaN`.
    pub numeric: Vec<f64>,
    pub label: Option<Label>,
    pub attack_type: Option<String>,
}

impl FlowRecord {
    /// Number of flow features carried (ports are never counted).
    pub fn feature_count(&self) -> usize {
        self.categorical.len() + self.numeric.len()
    }

    pub fn has_ports(&self) -> bool {
        self.src_port.is_some() || self.dst_port.is_some()
    }
}

/// Removes port information; endpoint addresses are kept as graph keys.
pub fn drop_ports(mut record: FlowRecord) -> FlowRecord {
    record.src_port = None;
    record.dst_port = None;
    record
}

/// Records of one dataset together with their feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    pub schema_id: String,
    pub layout: FeatureLayout,
    pub records: Vec<FlowRecord>,
    pub has_labels: bool,
}

impl FlowDataset {
    pub fn labels(&self) -> Vec<Option<Label>> {
        self.records.iter().map(|r| r.label).collect()
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema_id: &str) -> Result<FlowDataset> {
    let path = path.as_ref();
    let schema = schema::schema(schema_id)?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

/// Parses NetFlow CSV from any reader. The header must contain every input
/// column of `schema` and nothing besides the optional label and attack-type
/// columns; column order is free.
pub fn read_csv<R: Read>(reader: R, schema: &DatasetSchema) -> Result<FlowDataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();

    let mismatch = |detail: String| Error::HeaderMismatch {
        schema: schema.id.to_string(),
        detail,
    };
    if index.len() != header.len() {
        return Err(mismatch("duplicate column names".into()));
    }
    let missing: Vec<&str> = schema
        .input_columns()
        .into_iter()
        .filter(|c| !index.contains_key(c))
        .collect();
    if !missing.is_empty() {
        return Err(mismatch(format!("missing columns {missing:?}")));
    }
    let known: Vec<&str> = {
        let mut k = schema.input_columns();
        k.push(schema.label);
        k.push(schema.attack_type);
        k
    };
    let unknown: Vec<&str> = header.iter().filter(|h| !known.contains(h)).collect();
    if !unknown.is_empty() {
        return Err(mismatch(format!("unexpected columns {unknown:?}")));
    }

    let layout = FeatureLayout::from_schema(schema);
    let col = |name: &str| index[name];
    let src_ip = col(schema.src_ip);
    let dst_ip = col(schema.dst_ip);
    let src_port = col(schema.src_port);
    let dst_port = col(schema.dst_port);
    let label_col = index.get(schema.label).copied();
    let attack_col = index.get(schema.attack_type).copied();
    let feature_cols: Vec<(usize, FeatureKind)> = layout
        .columns
        .iter()
        .map(|c| (col(&c.name), c.kind))
        .collect();

    let mut records = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::MalformedRow {
            row: row_no,
            detail: e.to_string(),
        })?;
        let bad = |detail: String| Error::MalformedRow {
            row: row_no,
            detail,
        };

        let mut categorical = Vec::with_capacity(schema.categorical.len());
        let mut numeric = Vec::with_capacity(feature_cols.len());
        for (&(c, kind), column) in feature_cols.iter().zip(&layout.columns) {
            let cell = &row[c];
            match kind {
                FeatureKind::Categorical => categorical.push(cell.to_string()),
                FeatureKind::Numeric => numeric.push(parse_numeric(cell).ok_or_else(|| {
                    bad(format!("column {}: `{cell}` is not numeric", column.name))
                })?),
            }
        }
        let port = |c: usize, name: &str| -> Result<Option<u16>> {
            let cell = &row[c];
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && (0.0..=65535.0).contains(v))
                .map(|v| Some(v as u16))
                .ok_or_else(|| bad(format!("column {name}: `{cell}` is not a port")))
        };
        let label = match label_col {
            Some(c) => Some(
                Label::parse(&row[c])
                    .ok_or_else(|| bad(format!("column {}: bad label `{}`", schema.label, &row[c])))?,
            ),
            None => None,
        };

        records.push(FlowRecord {
            src_ip: row[src_ip].to_string(),
            dst_ip: row[dst_ip].to_string(),
            src_port: port(src_port, schema.src_port)?,
            dst_port: port(dst_port, schema.dst_port)?,
            categorical,
            numeric,
            label,
            attack_type: attack_col.map(|c| row[c].to_string()).filter(|s| !s.is_empty()),
        });
    }

    Ok(FlowDataset {
        schema_id: schema.id.to_string(),
        layout,
        records,
        has_labels: label_col.is_some(),
    })
}

fn parse_numeric(cell: &str) -> Option<f64> {
    if cell.is_empty() {
        return Some(f64::NAN);
    }
    match cell.parse::<f64>() {
        Ok(v) => Some(v),
        Err(_) => match cell.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
    }
}
