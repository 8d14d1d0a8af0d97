//! File helpers shared by the loaders and writers: comment-aware line
//! reading, artifact headers and content hashing.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "ratnmt";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance recorded at the top of every artifact this toolkit writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub seed: u64,
    pub config_hash: String,
}

impl ArtifactHeader {
    pub fn new(seed: u64, config_hash: impl Into<String>) -> Self {
        ArtifactHeader {
            seed,
            config_hash: config_hash.into(),
        }
    }

    /// `# ratnmt 0.1.0 seed=7 config=ab12...`
    pub fn comment_line(&self) -> String {
        format!(
            "# {TOOL_NAME} {TOOL_VERSION} seed={} config={}\n",
            self.seed, self.config_hash
        )
    }

    pub fn parse_comment(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# ")?;
        let mut parts = rest.split_whitespace();
        if parts.next()? != TOOL_NAME {
            return None;
        }
        parts.next()?;
        let seed = parts.next()?.strip_prefix("seed=")?.parse().ok()?;
        let config_hash = parts.next()?.strip_prefix("config=")?.to_string();
        Some(ArtifactHeader { seed, config_hash })
    }
}

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write(path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-`#` lines with their 1-based line numbers.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    })
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Short hash used in headers and compatibility checks.
pub fn short_hash(bytes: impl AsRef<[u8]>) -> String {
    sha256_hex(bytes)[..16].to_string()
}

/// Compares two identifiers treating digit runs as numbers, so `d9 < d10`
/// and `LA010194-0001 < LA010194-0002`.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let (ab, bb) = (a.as_bytes(), b.as_bytes());
    let (mut i, mut j) = (0, 0);
    while i < ab.len() && j < bb.len() {
        if ab[i].is_ascii_digit() && bb[j].is_ascii_digit() {
            let si = i;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            let sj = j;
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let na = a[si..i].trim_start_matches('0');
            let nb = b[sj..j].trim_start_matches('0');
            let ord = na
                .len()
                .cmp(&nb.len())
                .then_with(|| na.cmp(nb))
                .then_with(|| (i - si).cmp(&(j - sj)));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            let ord = ab[i].cmp(&bb[j]);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    (ab.len() - i).cmp(&(bb.len() - j)).then_with(|| a.cmp(b))
}
