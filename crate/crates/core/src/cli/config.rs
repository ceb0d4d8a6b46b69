//! Flat `key = value` run configuration.
//!
//! The same setter validates config-file lines and command-line overrides,
//! so every error names the offending key.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{Channel, SplitMode};
use crate::decoding::Pruning;
use crate::encoders::{EncoderConfig, EncoderKind, Pooling};
use crate::symbols::ReplacementLevel;
use crate::training::{Objective, Optimizer, TrainConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config key '{key}': {message}")]
    Invalid { key: String, message: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("{path}:{line}: expected 'key = value'")]
    Syntax { path: String, line: usize },
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    Local,
    Global,
}

impl DecodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::Local => "local",
            DecodeMode::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub channel: Channel,
    pub out_dir: PathBuf,
    pub quiet: bool,
    pub train: TrainConfig,
    pub encoder: EncoderConfig,
    pub min_freq: u32,
    pub level: String,
    pub alpha: f64,
    pub protected: Option<PathBuf>,
    pub levels: Vec<String>,
    pub decode: DecodeMode,
    pub k: Pruning,
    pub block_rows: usize,
    pub split_mode: SplitMode,
    pub ratios: [f64; 3],
    pub strict: bool,
    pub train_path: Option<PathBuf>,
    pub dev_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub corpus_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            seed: 0,
            channel: Channel::Both,
            out_dir: PathBuf::from("."),
            quiet: false,
            train: TrainConfig::default(),
            encoder: EncoderConfig::desk(),
            min_freq: 1,
            level: "conservation".into(),
            alpha: 0.5,
            protected: None,
            levels: ReplacementLevel::STANDARD.iter().map(|s| s.to_string()).collect(),
            decode: DecodeMode::Local,
            k: Pruning::All,
            block_rows: crate::decoding::DEFAULT_BLOCK_ROWS,
            split_mode: SplitMode::Mixed,
            ratios: [0.8, 0.1, 0.1],
            strict: false,
            train_path: None,
            dev_path: None,
            test_path: None,
            corpus_path: None,
            model_path: None,
            output_path: None,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_owned(), message: message.into() }
}

fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| invalid(key, format!("expected {what}, got '{value}'")))
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected true or false, got '{value}'"))),
    }
}

fn path(value: &str) -> Option<PathBuf> {
    if value.is_empty() {
        None
    } else {
        Some(PathBuf::from(value))
    }
}

impl RunConfig {
    /// Every key accepted by [`set`](Self::set), in rendering order.
    pub const KEYS: [&'static str; 36] = [
        "seed",
        "channel",
        "out_dir",
        "quiet",
        "objective",
        "batch_size",
        "epochs",
        "lr",
        "optimizer",
        "lr_decay",
        "eval_every",
        "clip_norm",
        "encoder",
        "d",
        "layers",
        "heads",
        "d_k",
        "pooling",
        "positional",
        "min_freq",
        "level",
        "alpha",
        "protected",
        "levels",
        "decode",
        "k",
        "block_rows",
        "split_mode",
        "ratios",
        "strict",
        "train",
        "dev",
        "test",
        "corpus",
        "model",
        "output",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "seed" => {
                self.seed = num(key, value, "an unsigned integer")?;
                self.train.seed = self.seed;
            }
            "channel" => {
                self.channel = Channel::parse(value).ok_or_else(|| invalid(key, "expected both, text or math"))?
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            "quiet" => self.quiet = boolean(key, value)?,
            "objective" => {
                self.train.objective =
                    Objective::parse(value).ok_or_else(|| invalid(key, "expected local or hybrid"))?
            }
            "batch_size" => self.train.batch_size = num(key, value, "an integer")?,
            "epochs" => self.train.epochs = num(key, value, "an integer")?,
            "lr" => self.train.lr = num(key, value, "a number")?,
            "optimizer" => {
                self.train.optimizer = Optimizer::parse(value).ok_or_else(|| invalid(key, "expected sgd or asgd"))?
            }
            "lr_decay" => self.train.lr_decay = num(key, value, "a number")?,
            "eval_every" => self.train.eval_every = num(key, value, "an integer")?,
            "clip_norm" => self.train.clip_norm = num(key, value, "a number")?,
            "encoder" => {
                let kind =
                    EncoderKind::parse(value).ok_or_else(|| invalid(key, "expected tfidf, pooled or attention"))?;
                self.encoder.kind = kind;
                if kind != EncoderKind::SelfAttentive {
                    self.encoder.positional = false;
                }
            }
            "d" => self.encoder.d = num(key, value, "an integer")?,
            "layers" => self.encoder.layers = num(key, value, "an integer")?,
            "heads" => self.encoder.heads = num(key, value, "an integer")?,
            "d_k" => self.encoder.d_k = num(key, value, "an integer")?,
            "pooling" => {
                self.encoder.pooling = Pooling::parse(value).ok_or_else(|| invalid(key, "expected max or mean"))?
            }
            "positional" => self.encoder.positional = boolean(key, value)?,
            "min_freq" => self.min_freq = num(key, value, "an integer")?,
            "level" => self.level = value.to_owned(),
            "alpha" => self.alpha = num(key, value, "a number")?,
            "protected" => self.protected = path(value),
            "levels" => self.levels = value.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect(),
            "decode" => {
                self.decode = match value {
                    "local" => DecodeMode::Local,
                    "global" => DecodeMode::Global,
                    _ => return Err(invalid(key, "expected local or global")),
                }
            }
            "k" => self.k = value.parse().map_err(|e: String| invalid(key, e))?,
            "block_rows" => self.block_rows = num(key, value, "an integer")?,
            "split_mode" => {
                self.split_mode = match value {
                    "mixed" => SplitMode::Mixed,
                    "unmixed" => SplitMode::Unmixed,
                    _ => return Err(invalid(key, "expected mixed or unmixed")),
                }
            }
            "ratios" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(invalid(key, "expected three comma-separated numbers"));
                }
                for (slot, p) in self.ratios.iter_mut().zip(parts) {
                    *slot = num(key, p, "a number")?;
                }
            }
            "strict" => self.strict = boolean(key, value)?,
            "train" => self.train_path = path(value),
            "dev" => self.dev_path = path(value),
            "test" => self.test_path = path(value),
            "corpus" => self.corpus_path = path(value),
            "model" => self.model_path = path(value),
            "output" => self.output_path = path(value),
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    /// Applies a config file. Blank lines and `#` comments are skipped.
    pub fn load_file(&mut self, file: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| ConfigError::Io { path: file.display().to_string(), message: e.to_string() })?;
        self.load_str(&text, &file.display().to_string())
    }

    pub fn load_str(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError::Syntax { path: origin.to_owned(), line: i + 1 })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let p = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        match key {
            "seed" => self.seed.to_string(),
            "channel" => self.channel.as_str().to_owned(),
            "out_dir" => self.out_dir.display().to_string(),
            "quiet" => self.quiet.to_string(),
            "objective" => self.train.objective.as_str().to_owned(),
            "batch_size" => self.train.batch_size.to_string(),
            "epochs" => self.train.epochs.to_string(),
            "lr" => self.train.lr.to_string(),
            "optimizer" => self.train.optimizer.as_str().to_owned(),
            "lr_decay" => self.train.lr_decay.to_string(),
            "eval_every" => self.train.eval_every.to_string(),
            "clip_norm" => self.train.clip_norm.to_string(),
            "encoder" => self.encoder.kind.as_str().to_owned(),
            "d" => self.encoder.d.to_string(),
            "layers" => self.encoder.layers.to_string(),
            "heads" => self.encoder.heads.to_string(),
            "d_k" => self.encoder.d_k.to_string(),
            "pooling" => self.encoder.pooling.as_str().to_owned(),
            "positional" => self.encoder.positional.to_string(),
            "min_freq" => self.min_freq.to_string(),
            "level" => self.level.clone(),
            "alpha" => self.alpha.to_string(),
            "protected" => p(&self.protected),
            "levels" => self.levels.join(","),
            "decode" => self.decode.as_str().to_owned(),
            "k" => self.k.to_string(),
            "block_rows" => self.block_rows.to_string(),
            "split_mode" => match self.split_mode {
                SplitMode::Mixed => "mixed".into(),
                SplitMode::Unmixed => "unmixed".into(),
            },
            "ratios" => self.ratios.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            "strict" => self.strict.to_string(),
            "train" => p(&self.train_path),
            "dev" => p(&self.dev_path),
            "test" => p(&self.test_path),
            "corpus" => p(&self.corpus_path),
            "model" => p(&self.model_path),
            "output" => p(&self.output_path),
            _ => String::new(),
        }
    }

    /// All keys as `key = value` lines; loading the result reproduces `self`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for key in Self::KEYS {
            let value = self.get(key);
            if value.is_empty() {
                let _ = writeln!(s, "{key} =");
            } else {
                let _ = writeln!(s, "{key} = {value}");
            }
        }
        s
    }

    pub fn replacement_level(&self, name: &str) -> Result<ReplacementLevel, ConfigError> {
        ReplacementLevel::parse(name, self.alpha).map_err(|e| invalid("level", e.to_string()))
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate().map_err(|e| invalid("train", e.to_string()))?;
        self.encoder.validate().map_err(|e| invalid("encoder", e.to_string()))?;
        if self.min_freq == 0 {
            return Err(invalid("min_freq", "must be at least 1"));
        }
        if self.block_rows == 0 {
            return Err(invalid("block_rows", "must be at least 1"));
        }
        if let Pruning::TopK(0) = self.k {
            return Err(invalid("k", "must be at least 1"));
        }
        self.replacement_level(&self.level)?;
        for l in &self.levels {
            self.replacement_level(l).map_err(|_| invalid("levels", format!("unknown level '{l}'")))?;
        }
        for (key, p) in [
            ("protected", &self.protected),
            ("train", &self.train_path),
            ("dev", &self.dev_path),
            ("test", &self.test_path),
            ("corpus", &self.corpus_path),
            ("model", &self.model_path),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(invalid(key, format!("path {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}
