use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Transformer shape and regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformerConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    /// Longest source sequence, and longest target sequence including the
    /// start or end marker.
    pub max_len: usize,
    pub dropout: f64,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 256,
            max_len: 64,
            dropout: 0.1,
            src_vocab: 0,
            tgt_vocab: 0,
        }
    }
}

impl TransformerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return bad(format!(
                "d_model ({}) must be a positive multiple of n_heads ({})",
                self.d_model, self.n_heads
            ));
        }
        if self.d_model % 2 != 0 {
            return bad(format!("d_model must be even, got {}", self.d_model));
        }
        if self.n_layers == 0 || self.d_ff == 0 || self.max_len < 2 {
            return bad("n_layers and d_ff must be positive and max_len at least 2".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.src_vocab <= 4 || self.tgt_vocab <= 4 {
            return bad("vocabularies must contain tokens beyond the 4 specials".into());
        }
        Ok(())
    }

    pub fn to_fields(&self) -> String {
        format!(
            "d_model={} n_heads={} n_layers={} d_ff={} max_len={} dropout={:?} src_vocab={} tgt_vocab={}",
            self.d_model,
            self.n_heads,
            self.n_layers,
            self.d_ff,
            self.max_len,
            self.dropout,
            self.src_vocab,
            self.tgt_vocab
        )
    }

    pub fn from_fields(s: &str) -> Result<Self> {
        let map: BTreeMap<&str, &str> = s.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("model config lacks {k}")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Config(format!("model config {k} is not an integer")))
        };
        let cfg = TransformerConfig {
            d_model: int("d_model")?,
            n_heads: int("n_heads")?,
            n_layers: int("n_layers")?,
            d_ff: int("d_ff")?,
            max_len: int("max_len")?,
            dropout: get("dropout")?
                .parse()
                .map_err(|_| Error::Config("model config dropout is not a number".into()))?,
            src_vocab: int("src_vocab")?,
            tgt_vocab: int("tgt_vocab")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
