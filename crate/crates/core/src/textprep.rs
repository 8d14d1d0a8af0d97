//! Text normalization shared by the translation corpus, the retrieval corpus
//! and queries.
//!
//! Pipeline: Unicode canonical decomposition, combining-mark removal,
//! lowercasing, then splitting on every non-alphabetic character. No
//! stemming is applied, so "olympic" and "olympics" stay distinct.

use std::collections::HashSet;
use std::fs;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Ordered sequence of normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];
    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl From<Vec<String>> for TokenSeq {
    fn from(v: Vec<String>) -> Self {
        TokenSeq(v)
    }
}

impl From<&[&str]> for TokenSeq {
    fn from(v: &[&str]) -> Self {
        TokenSeq(v.iter().map(|s| s.to_string()).collect())
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Stop words for one language. Entries are stored in normalized form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    pub language: String,
    terms: HashSet<String>,
}

const BUILTIN: &[(&str, &str)] = &[
    ("english", include_str!("../data/stopwords/english.txt")),
    ("italian", include_str!("../data/stopwords/italian.txt")),
    ("finnish", include_str!("../data/stopwords/finnish.txt")),
    ("synthetic", include_str!("../data/stopwords/synthetic.txt")),
];

impl StopList {
    pub fn empty(language: impl Into<String>) -> Self {
        StopList {
            language: language.into(),
            terms: HashSet::new(),
        }
    }

    pub fn from_terms<I, S>(language: impl Into<String>, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopList {
            language: language.into(),
            terms: terms.into_iter().filter_map(|t| normalize_token(t.as_ref())).collect(),
        }
    }

    /// Parses the stoplist file format: one term per line, `#` comments.
    pub fn parse(language: impl Into<String>, text: &str) -> Self {
        let lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        Self::from_terms(language, lines)
    }

    pub fn from_file(language: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(language, &text))
    }

    /// One of the lists shipped with the crate: `english`, `italian`,
    /// `finnish` or `synthetic` (empty).
    pub fn builtin(language: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(name, _)| *name == language)
            .map(|(name, text)| Self::parse(*name, text))
    }

    /// Builtin list by name, otherwise a file path.
    pub fn resolve(spec: &str) -> Result<Self> {
        if let Some(s) = Self::builtin(spec) {
            return Ok(s);
        }
        let lang = Path::new(spec)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_file(lang, spec)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

fn strip_marks(text: &str) -> impl Iterator<Item = char> + '_ {
    text.nfd().filter(|c| !is_combining_mark(*c))
}

/// Decompose, drop marks, lowercase. Lowercasing can itself introduce marks
/// (e.g. U+0130), hence the second pass.
fn fold(text: &str) -> String {
    let lowered: String = strip_marks(text).flat_map(char::to_lowercase).collect();
    strip_marks(&lowered).collect()
}

fn is_token_char(c: char) -> bool {
    c.is_alphabetic() && !is_combining_mark(c)
}

/// Normalizes one whitespace-delimited unit, deleting every character that
/// is not a letter. Returns `None` when nothing alphabetic remains.
pub fn normalize_token(raw: &str) -> Option<String> {
    let out: String = fold(raw).chars().filter(|&c| is_token_char(c)).collect();
    (!out.is_empty()).then_some(out)
}

/// Splits on any non-alphabetic character, normalizes, and drops stop words.
pub fn preprocess(text: &str, stoplist: &StopList) -> TokenSeq {
    fold(text)
        .split(|c: char| !is_token_char(c))
        .filter(|t| !t.is_empty() && !stoplist.contains(t))
        .map(str::to_owned)
        .collect::<Vec<_>>()
        .into()
}
