use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ratnmt_autodiff::{ParamStore, Tensor};

use super::{HeadSharing, Model, Network, TransformerConfig};
use crate::error::{Error, Result};
use crate::io::{content_lines, write, ArtifactHeader};

const MAGIC: &str = "ratnmt-checkpoint 1";
const PARAM_PREFIX: &str = "param.";

/// Named `f32` tensors plus string metadata.
///
/// On disk: a text manifest (`meta <key> <value>` and
/// `tensor <name> <dims> <offset>` lines, closed by `end`) followed by the
/// tensors as row-major little-endian `f32`, offsets counted in floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: ArtifactHeader,
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    pub fn new(header: ArtifactHeader) -> Self {
        Checkpoint {
            header,
            meta: BTreeMap::new(),
            tensors: Vec::new(),
        }
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("checkpoint lacks {key:?}")))
    }

    pub fn meta_parse<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        self.meta(key)?
            .parse()
            .map_err(|_| Error::Config(format!("checkpoint field {key:?} is malformed")))
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut m = self.header.comment_line();
        let _ = writeln!(m, "{MAGIC}");
        for (k, v) in &self.meta {
            let _ = writeln!(m, "meta {k} {v}");
        }
        let mut offset = 0;
        for (name, t) in &self.tensors {
            let dims = if t.shape().is_empty() {
                "scalar".to_string()
            } else {
                t.shape().iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            };
            let _ = writeln!(m, "tensor {name} {dims} {offset}");
            offset += t.len();
        }
        m.push_str("end\n");
        let mut bytes = m.into_bytes();
        for (_, t) in &self.tensors {
            for x in t.data() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let marker = b"\nend\n";
        let split = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .map(|p| p + 1)
            .ok_or_else(|| Error::parse(origin, 1, "checkpoint manifest has no end marker"))?;
        let manifest = std::str::from_utf8(&bytes[..split])
            .map_err(|_| Error::parse(origin, 1, "checkpoint manifest is not UTF-8"))?;
        let blob = &bytes[split + 4..];
        if blob.len() % 4 != 0 {
            return Err(Error::parse(
                origin,
                1,
                "checkpoint blob is not a whole number of floats",
            ));
        }
        let floats = blob.len() / 4;
        let header = manifest
            .lines()
            .find_map(ArtifactHeader::parse_comment)
            .ok_or_else(|| Error::parse(origin, 1, "checkpoint has no artifact header"))?;
        let mut ck = Checkpoint::new(header);
        let mut lines = content_lines(manifest);
        match lines.next() {
            Some((_, MAGIC)) => {}
            Some((ln, _)) => return Err(Error::parse(origin, ln, "not a ratnmt checkpoint")),
            None => return Err(Error::parse(origin, 1, "empty checkpoint manifest")),
        }
        for (ln, line) in lines {
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                ck.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let f: Vec<&str> = rest.split(' ').collect();
                let [name, dims, off] = f.as_slice() else {
                    return Err(Error::parse(origin, ln, "expected `tensor <name> <dims> <offset>`"));
                };
                let shape: Vec<usize> = if *dims == "scalar" {
                    Vec::new()
                } else {
                    dims.split(',')
                        .map(|d| d.parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::parse(origin, ln, "bad tensor dims"))?
                };
                let off: usize = off.parse().map_err(|_| Error::parse(origin, ln, "bad tensor offset"))?;
                let n: usize = shape.iter().product();
                if off + n > floats {
                    return Err(Error::parse(
                        origin,
                        ln,
                        format!("tensor {name} runs past the end of the blob"),
                    ));
                }
                let data = (off..off + n)
                    .map(|i| f32::from_le_bytes(blob[4 * i..4 * i + 4].try_into().unwrap()))
                    .collect();
                ck.tensors.push((name.to_string(), Tensor::new(shape, data)?));
            } else {
                return Err(Error::parse(origin, ln, "unrecognized manifest line"));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

impl Model<f32> {
    /// Writes the model configuration and every parameter into `ck`.
    pub fn store_into(&self, ck: &mut Checkpoint, src_vocab_hash: &str, tgt_vocab_hash: &str) {
        ck.set_meta("model", self.net.config.to_fields());
        ck.set_meta("sharing", self.net.sharing.as_str());
        ck.set_meta("vocab_src", src_vocab_hash);
        ck.set_meta("vocab_tgt", tgt_vocab_hash);
        for (_, p) in self.store.iter() {
            ck.tensors.push((format!("{PARAM_PREFIX}{}", p.name), p.value.clone()));
        }
    }

    /// Rebuilds a model, refusing checkpoints made for other vocabularies.
    pub fn from_checkpoint(ck: &Checkpoint, src_vocab_hash: &str, tgt_vocab_hash: &str) -> Result<Self> {
        for (key, want) in [("vocab_src", src_vocab_hash), ("vocab_tgt", tgt_vocab_hash)] {
            let have = ck.meta(key)?;
            if have != want {
                return Err(Error::Config(format!(
                    "checkpoint {key} hash {have} does not match vocabulary {want}"
                )));
            }
        }
        let config = TransformerConfig::from_fields(ck.meta("model")?)?;
        let sharing = HeadSharing::parse(ck.meta("sharing")?)?;
        let mut store = ParamStore::new();
        for (name, t) in &ck.tensors {
            if let Some(p) = name.strip_prefix(PARAM_PREFIX) {
                store.add(p, t.clone())?;
            }
        }
        let net = Network::bind(config, sharing, &store)?;
        Ok(Model { net, store })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TransformerConfig {
        TransformerConfig {
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            max_len: 8,
            dropout: 0.0,
            src_vocab: 9,
            tgt_vocab: 11,
        }
    }

    #[test]
    fn model_round_trip() {
        let m = Model::<f32>::new(cfg(), HeadSharing::Shared, 3).unwrap();
        let mut ck = Checkpoint::new(ArtifactHeader::new(3, "abc"));
        ck.set_meta("step", 17);
        m.store_into(&mut ck, "s", "t");
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.meta_parse::<u64>("step").unwrap(), 17);
        let m2 = Model::from_checkpoint(&back, "s", "t").unwrap();
        assert_eq!(m2.store, m.store);
        assert!(Model::from_checkpoint(&back, "s", "other").is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 2], Path::new("mem")).is_err());
    }
}
