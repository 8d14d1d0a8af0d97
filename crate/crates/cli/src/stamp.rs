//! Stage fingerprints. A stage is skipped when its outputs exist and the
//! stamp next to the first output matches the fingerprint of its inputs.

use std::fs;
use std::path::{Path, PathBuf};

use ratnmt_core::io::{self, sha256_hex, short_hash};
use ratnmt_core::{Error, Result};

use crate::config::RunConfig;

pub struct Stage {
    name: String,
    fingerprint: String,
    outputs: Vec<PathBuf>,
}

impl Stage {
    /// Hashes the stage name, the listed config values and the content of
    /// every input. Input paths themselves are not part of the hash.
    pub fn new(name: &str, cfg: &RunConfig, keys: &[&str], inputs: &[&Path], outputs: Vec<PathBuf>) -> Result<Self> {
        let mut text = format!("stage {name}\n{}", cfg.describe(keys));
        for p in inputs {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            text.push_str(&format!("input {}\n", sha256_hex(bytes)));
        }
        Ok(Stage {
            name: name.to_string(),
            fingerprint: text,
            outputs,
        })
    }

    /// Adds material that is not a file, such as a resolved stoplist.
    pub fn with_extra(mut self, label: &str, value: &str) -> Self {
        self.fingerprint.push_str(&format!("{label} {}\n", sha256_hex(value)));
        self
    }

    pub fn config_hash(&self) -> String {
        short_hash(&self.fingerprint)
    }

    fn stamp_path(&self) -> PathBuf {
        let first = &self.outputs[0];
        let mut name = first.file_name().unwrap_or_default().to_os_string();
        name.push(".stamp");
        first.with_file_name(name)
    }

    pub fn up_to_date(&self) -> bool {
        self.outputs.iter().all(|p| p.exists())
            && fs::read_to_string(self.stamp_path()).is_ok_and(|s| s == self.fingerprint)
    }

    pub fn seal(&self) -> Result<()> {
        io::write(self.stamp_path(), &self.fingerprint)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}
