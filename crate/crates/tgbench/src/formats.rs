//! Line-delimited JSON record files and the TOML run configuration.
//!
//! Every record file may open with a header record naming its schema and
//! version, e.g. `{"schema":"tgbench.gold","version":1}`. Blank lines are
//! ignored. Errors carry the 1-based line number and, when serde names it,
//! the offending field.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tgbench_core::meteor::MeteorParams;
use tgbench_core::metrics::DEFAULT_TOLERANCE;
use tgbench_core::objectives::SftItem;
use tgbench_core::qagen::{QAItem, QagenConfig, TrackFeatures};
use tgbench_core::rewards::RewardConfig;
use tgbench_core::sampling::{SamplingConfig, TransitionProfile};

pub const SCHEMA_VERSION: u32 = 1;
pub const GOLD_SCHEMA: &str = "tgbench.gold";
pub const PRED_SCHEMA: &str = "tgbench.pred";
pub const FEATURES_SCHEMA: &str = "tgbench.features";
pub const PROFILE_SCHEMA: &str = "tgbench.profile";
pub const SFT_SCHEMA: &str = "tgbench.sft";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub line: usize,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "line {}: field `{}`: {}", self.line, field, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Schema(#[from] SchemaError),
    /// A schema error in a named file.
    #[error("{path}: {source}")]
    SchemaIn {
        path: String,
        #[source]
        source: SchemaError,
    },
    #[error("config: {0}")]
    Config(String),
}

impl FormatError {
    /// The schema error, wherever it was raised.
    pub fn schema(&self) -> Option<&SchemaError> {
        match self {
            FormatError::Schema(e) | FormatError::SchemaIn { source: e, .. } => Some(e),
            _ => None,
        }
    }

    fn locate(self, path: &Path) -> Self {
        match self {
            FormatError::Schema(source) => FormatError::SchemaIn {
                path: path.display().to_string(),
                source,
            },
            other => other,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub version: u32,
}

impl Header {
    pub fn new(schema: &str) -> Self {
        Self {
            schema: schema.to_string(),
            version: SCHEMA_VERSION,
        }
    }
}

/// One model response to score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub item_id: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_emb: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_emb: Option<Vec<f64>>,
}

impl PredictionRecord {
    pub fn new(item_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Self {
            item_id: item_id.into(),
            raw_text: raw_text.into(),
            audio_emb: None,
            text_emb: None,
        }
    }
}

/// A transition profile keyed by track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub track_id: String,
    #[serde(flatten)]
    pub profile: TransitionProfile,
}

/// Pulls the field name out of serde messages such as
/// "missing field `gold`" or "unknown field `foo`, expected ...".
fn field_of(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    let name = &message[start..start + len];
    (!name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_')).then(|| name.to_string())
}

fn schema_error(line: usize, err: &serde_json::Error) -> SchemaError {
    let text = err.to_string();
    // drop serde_json's " at line 1 column N" suffix; the line is ours
    let message = match text.rfind(" at line ") {
        Some(i) => text[..i].to_string(),
        None => text,
    };
    SchemaError {
        line,
        field: field_of(&message),
        message,
    }
}

/// Reads records of type `T` with their 1-based line numbers.
pub fn read_records<T: DeserializeOwned, R: BufRead>(reader: R, schema: &str) -> Result<Vec<(usize, T)>, FormatError> {
    let mut out = Vec::new();
    let mut seen_record = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| SchemaError {
            line: lineno,
            field: None,
            message: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if !seen_record {
            seen_record = true;
            let value: serde_json::Value = serde_json::from_str(text).map_err(|e| schema_error(lineno, &e))?;
            if value.get("schema").is_some() {
                let header: Header = serde_json::from_value(value).map_err(|e| schema_error(lineno, &e))?;
                check_header(&header, schema, lineno)?;
                continue;
            }
        }
        let record = serde_json::from_str(text).map_err(|e| schema_error(lineno, &e))?;
        out.push((lineno, record));
    }
    Ok(out)
}

fn check_header(header: &Header, schema: &str, line: usize) -> Result<(), SchemaError> {
    if header.schema != schema {
        return Err(SchemaError {
            line,
            field: Some("schema".into()),
            message: format!("expected {schema:?}, found {:?}", header.schema),
        });
    }
    if header.version != SCHEMA_VERSION {
        return Err(SchemaError {
            line,
            field: Some("version".into()),
            message: format!("unsupported version {}", header.version),
        });
    }
    Ok(())
}

pub fn read_records_path<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<(usize, T)>, FormatError> {
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    read_records(BufReader::new(file), schema).map_err(|e| e.locate(path))
}

/// Writes a header line followed by one record per line.
pub fn write_records<T: Serialize, W: Write>(mut writer: W, schema: &str, records: &[T]) -> std::io::Result<()> {
    serde_json::to_writer(&mut writer, &Header::new(schema))?;
    writer.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_records_path<T: Serialize>(path: &Path, schema: &str, records: &[T]) -> Result<(), FormatError> {
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    write_records(BufWriter::new(file), schema, records).map_err(|e| FormatError::io(path, e))
}

/// Gold items, each validated against the item invariants.
pub fn read_gold<R: BufRead>(reader: R) -> Result<Vec<(usize, QAItem)>, FormatError> {
    let items: Vec<(usize, QAItem)> = read_records(reader, GOLD_SCHEMA)?;
    for (line, item) in &items {
        item.validate().map_err(|e| SchemaError {
            line: *line,
            field: None,
            message: e.to_string(),
        })?;
    }
    Ok(items)
}

pub fn read_gold_path(path: &Path) -> Result<Vec<(usize, QAItem)>, FormatError> {
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    read_gold(BufReader::new(file)).map_err(|e| e.locate(path))
}

pub fn read_predictions_path(path: &Path) -> Result<Vec<(usize, PredictionRecord)>, FormatError> {
    read_records_path(path, PRED_SCHEMA)
}

pub fn read_features_path(path: &Path) -> Result<Vec<(usize, TrackFeatures)>, FormatError> {
    read_records_path(path, FEATURES_SCHEMA)
}

pub fn read_profiles_path(path: &Path) -> Result<Vec<(usize, ProfileRecord)>, FormatError> {
    read_records_path(path, PROFILE_SCHEMA)
}

pub fn read_sft_path(path: &Path) -> Result<Vec<(usize, SftItem)>, FormatError> {
    read_records_path(path, SFT_SCHEMA)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Hit tolerance in seconds.
    pub tolerance: f64,
    pub meteor: MeteorParams,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            meteor: MeteorParams::default(),
        }
    }
}

/// Run configuration; every section and key is optional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub metrics: MetricsConfig,
    pub reward: RewardConfig,
    pub sampling: SamplingConfig,
    pub qagen: QagenConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, FormatError> {
        let cfg: Config = toml::from_str(text).map_err(|e| FormatError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        let cfg_err = |e: &dyn fmt::Display| FormatError::Config(e.to_string());
        if !(self.metrics.tolerance.is_finite() && self.metrics.tolerance >= 0.0) {
            return Err(FormatError::Config(format!(
                "metrics.tolerance must be a non-negative number, got {}",
                self.metrics.tolerance
            )));
        }
        self.reward.validate().map_err(|e| cfg_err(&e))?;
        self.sampling.validate().map_err(|e| cfg_err(&e))?;
        let k = self.qagen.k_options;
        if !(2..=6).contains(&k) {
            return Err(FormatError::Config(format!("qagen.k_options must be 2 to 6, got {k}")));
        }
        Ok(())
    }
}
