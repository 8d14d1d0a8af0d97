//! Run configuration: defaults, a flat `key = value` file, then overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ratnmt_core::io::read_to_string;
use ratnmt_core::model::{DecodeStrategy, HeadSharing, TransformerConfig};
use ratnmt_core::ratgen::RatConfig;
use ratnmt_core::trainer::TrainConfig;
use ratnmt_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workdir: PathBuf,
    pub tc: Option<PathBuf>,
    pub rc: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub val_topics: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub src_stoplist: String,
    pub tgt_stoplist: String,
    pub seed: u64,
    pub mu: f64,
    pub depth: usize,
    pub cap: usize,
    pub window: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub dropout: f64,
    pub sharing: HeadSharing,
    pub lr_nmt: f64,
    pub lr_we: f64,
    pub alpha: f64,
    pub batch_token_budget: usize,
    pub validate_every: u64,
    pub patience: usize,
    pub max_steps: u64,
    pub probe_pairs: usize,
    pub reshuffle: bool,
    pub we_first: bool,
    pub record_wall_time: bool,
    pub decode: DecodeStrategy,
    pub decode_max_len: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = TransformerConfig::default();
        let train = TrainConfig::default();
        let rat = RatConfig::default();
        RunConfig {
            workdir: PathBuf::from("work"),
            tc: None,
            rc: None,
            topics: None,
            val_topics: None,
            qrels: None,
            src_stoplist: "italian".into(),
            tgt_stoplist: "english".into(),
            seed: 0,
            mu: rat.mu,
            depth: 1000,
            cap: rat.cap,
            window: rat.window,
            d_model: model.d_model,
            n_heads: model.n_heads,
            n_layers: model.n_layers,
            d_ff: model.d_ff,
            max_len: model.max_len,
            dropout: model.dropout,
            sharing: HeadSharing::Shared,
            lr_nmt: train.lr_nmt,
            lr_we: train.lr_we,
            alpha: train.alpha,
            batch_token_budget: train.batch_token_budget,
            validate_every: train.validate_every,
            patience: train.patience,
            max_steps: train.max_steps,
            probe_pairs: train.probe_pairs,
            reshuffle: train.reshuffle,
            we_first: train.we_first,
            record_wall_time: train.record_wall_time,
            decode: DecodeStrategy::Greedy,
            decode_max_len: train.decode_max_len,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value {value:?} for {key}, expected true or false"
        ))),
    }
}

fn decode_name(d: DecodeStrategy) -> String {
    match d {
        DecodeStrategy::Greedy => "greedy".into(),
        DecodeStrategy::Beam(w) => format!("beam:{w}"),
    }
}

fn path_or_empty(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "workdir",
        "tc",
        "rc",
        "topics",
        "val_topics",
        "qrels",
        "src_stoplist",
        "tgt_stoplist",
        "seed",
        "mu",
        "depth",
        "cap",
        "window",
        "d_model",
        "n_heads",
        "n_layers",
        "d_ff",
        "max_len",
        "dropout",
        "sharing",
        "lr_nmt",
        "lr_we",
        "alpha",
        "batch_token_budget",
        "validate_every",
        "patience",
        "max_steps",
        "probe_pairs",
        "reshuffle",
        "we_first",
        "record_wall_time",
        "decode",
        "decode_max_len",
    ];

    const DATA_PATHS: &'static [&'static str] = &["tc", "rc", "topics", "val_topics", "qrels"];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key {
            "workdir" => self.workdir = PathBuf::from(v),
            "tc" => self.tc = path(),
            "rc" => self.rc = path(),
            "topics" => self.topics = path(),
            "val_topics" => self.val_topics = path(),
            "qrels" => self.qrels = path(),
            "src_stoplist" => self.src_stoplist = v.to_string(),
            "tgt_stoplist" => self.tgt_stoplist = v.to_string(),
            "seed" => self.seed = parse_num(key, v)?,
            "mu" => self.mu = parse_num(key, v)?,
            "depth" => self.depth = parse_num(key, v)?,
            "cap" => self.cap = parse_num(key, v)?,
            "window" => self.window = parse_num(key, v)?,
            "d_model" => self.d_model = parse_num(key, v)?,
            "n_heads" => self.n_heads = parse_num(key, v)?,
            "n_layers" => self.n_layers = parse_num(key, v)?,
            "d_ff" => self.d_ff = parse_num(key, v)?,
            "max_len" => self.max_len = parse_num(key, v)?,
            "dropout" => self.dropout = parse_num(key, v)?,
            "sharing" => self.sharing = HeadSharing::parse(v)?,
            "lr_nmt" => self.lr_nmt = parse_num(key, v)?,
            "lr_we" => self.lr_we = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "batch_token_budget" => self.batch_token_budget = parse_num(key, v)?,
            "validate_every" => self.validate_every = parse_num(key, v)?,
            "patience" => self.patience = parse_num(key, v)?,
            "max_steps" => self.max_steps = parse_num(key, v)?,
            "probe_pairs" => self.probe_pairs = parse_num(key, v)?,
            "reshuffle" => self.reshuffle = parse_bool(key, v)?,
            "we_first" => self.we_first = parse_bool(key, v)?,
            "record_wall_time" => self.record_wall_time = parse_bool(key, v)?,
            "decode" => self.decode = DecodeStrategy::parse(v)?,
            "decode_max_len" => self.decode_max_len = parse_num(key, v)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown configuration key {key:?}; known keys: {}",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "workdir" => self.workdir.display().to_string(),
            "tc" => path_or_empty(&self.tc),
            "rc" => path_or_empty(&self.rc),
            "topics" => path_or_empty(&self.topics),
            "val_topics" => path_or_empty(&self.val_topics),
            "qrels" => path_or_empty(&self.qrels),
            "src_stoplist" => self.src_stoplist.clone(),
            "tgt_stoplist" => self.tgt_stoplist.clone(),
            "seed" => self.seed.to_string(),
            "mu" => format!("{:?}", self.mu),
            "depth" => self.depth.to_string(),
            "cap" => self.cap.to_string(),
            "window" => self.window.to_string(),
            "d_model" => self.d_model.to_string(),
            "n_heads" => self.n_heads.to_string(),
            "n_layers" => self.n_layers.to_string(),
            "d_ff" => self.d_ff.to_string(),
            "max_len" => self.max_len.to_string(),
            "dropout" => format!("{:?}", self.dropout),
            "sharing" => self.sharing.as_str().to_string(),
            "lr_nmt" => format!("{:?}", self.lr_nmt),
            "lr_we" => format!("{:?}", self.lr_we),
            "alpha" => format!("{:?}", self.alpha),
            "batch_token_budget" => self.batch_token_budget.to_string(),
            "validate_every" => self.validate_every.to_string(),
            "patience" => self.patience.to_string(),
            "max_steps" => self.max_steps.to_string(),
            "probe_pairs" => self.probe_pairs.to_string(),
            "reshuffle" => self.reshuffle.to_string(),
            "we_first" => self.we_first.to_string(),
            "record_wall_time" => self.record_wall_time.to_string(),
            "decode" => decode_name(self.decode),
            "decode_max_len" => self.decode_max_len.to_string(),
            _ => String::new(),
        }
    }

    /// Applies `key = value` lines; `#` starts a comment line. Relative
    /// data paths are taken relative to the directory of `origin`.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        let base = origin.parent().unwrap_or(Path::new(""));
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            let joined;
            let v = if Self::DATA_PATHS.contains(&k) && Path::new(v).is_relative() {
                joined = base.join(v).display().to_string();
                joined.as_str()
            } else {
                v
            };
            self.set(k, v).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&read_to_string(path)?, path)
    }

    /// `key=value` override from the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Canonical `key=value` lines for the given keys, used in stage hashes.
    pub fn describe(&self, keys: &[&str]) -> String {
        let mut out = String::new();
        for k in keys {
            let _ = writeln!(out, "{k}={}", self.get(k));
        }
        out
    }

    pub fn model_config(&self, src_vocab: usize, tgt_vocab: usize) -> TransformerConfig {
        TransformerConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            n_layers: self.n_layers,
            d_ff: self.d_ff,
            max_len: self.max_len,
            dropout: self.dropout,
            src_vocab,
            tgt_vocab,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr_nmt: self.lr_nmt,
            lr_we: self.lr_we,
            alpha: self.alpha,
            batch_token_budget: self.batch_token_budget,
            validate_every: self.validate_every,
            patience: self.patience,
            max_steps: self.max_steps,
            seed: self.seed,
            window: self.window,
            reshuffle: self.reshuffle,
            we_first: self.we_first,
            decode_max_len: self.decode_max_len,
            record_wall_time: self.record_wall_time,
            probe_pairs: self.probe_pairs,
        }
    }

    pub fn rat_config(&self) -> RatConfig {
        RatConfig {
            cap: self.cap,
            window: self.window,
            mu: self.mu,
            seed: self.seed,
        }
    }

    pub fn in_workdir(&self, name: &str) -> PathBuf {
        self.workdir.join(name)
    }

    pub fn require(&self, key: &str) -> Result<PathBuf> {
        let p = match key {
            "tc" => &self.tc,
            "rc" => &self.rc,
            "topics" => &self.topics,
            "val_topics" => &self.val_topics,
            "qrels" => &self.qrels,
            _ => &None,
        };
        p.clone().ok_or_else(|| {
            Error::Config(format!(
                "no {key} path given (set it in the config file or with --{key})"
            ))
        })
    }
}
