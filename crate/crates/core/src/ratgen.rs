//! Relevance-based augmentation of the translation corpus and the
//! context/pivot pairs of the auxiliary CBOW task.
//!
//! Each target sentence is issued as a query against the retrieval corpus;
//! its best document is merged with the sentence and shuffled, giving an
//! augmented sequence that mixes translation-corpus and retrieval-corpus
//! vocabulary.

use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{ParallelPair, Vocabulary};
use crate::error::{Error, Result};
use crate::io::{content_lines, read_to_string};
use crate::retrieval::{InvertedIndex, DEFAULT_MU};
use crate::seed::{rng_for, Stream};
use crate::textprep::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatConfig {
    /// Maximum length of an augmented sequence.
    pub cap: usize,
    pub window: usize,
    pub mu: f64,
    pub seed: u64,
}

impl Default for RatConfig {
    fn default() -> Self {
        RatConfig {
            cap: 256,
            window: 5,
            mu: DEFAULT_MU,
            seed: 0,
        }
    }
}

/// A sentence pair with its augmented target sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedTriple {
    pub id: u64,
    pub src: TokenSeq,
    pub tgt: TokenSeq,
    pub aug: TokenSeq,
    pub top_doc: Option<String>,
}

impl AugmentedTriple {
    pub fn pair(&self) -> ParallelPair {
        ParallelPair {
            id: self.id,
            source: self.src.clone(),
            target: self.tgt.clone(),
        }
    }

    /// A fresh permutation of `aug` for the given epoch.
    pub fn reshuffled(&self, seed: u64, epoch: u64) -> TokenSeq {
        let mut toks = self.aug.0.clone();
        let mut rng = rng_for(
            seed ^ epoch.wrapping_mul(0x2545_f491_4f6c_dd1d),
            Stream::Reshuffle,
            self.id,
        );
        toks.shuffle(&mut rng);
        TokenSeq(toks)
    }
}

/// One CBOW training example: vocabulary indices of the context and pivot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPivotPair {
    pub context: Vec<usize>,
    pub pivot: usize,
}

/// Merges `pair.target` with its top retrieved document and shuffles.
///
/// When the merged sequence exceeds `cap`, every sentence token is kept and
/// the document contributes a uniform sample without replacement. With no
/// retrievable document the augmented sequence is the sentence itself.
pub fn augment(pair: &ParallelPair, index: &InvertedIndex, config: &RatConfig) -> Result<AugmentedTriple> {
    let target = &pair.target;
    if config.cap < target.len() {
        return Err(Error::Config(format!(
            "augmentation cap {} is shorter than pair {} ({} target tokens)",
            config.cap,
            pair.id,
            target.len()
        )));
    }
    let top_doc = index.top_document(target, config.mu)?;
    let mut rng = rng_for(config.seed, Stream::Augment, pair.id);
    let mut aug = target.0.clone();
    if let Some(doc_id) = &top_doc {
        let doc = index
            .doc_tokens(doc_id)
            .ok_or_else(|| Error::data(format!("index lost document {doc_id}")))?;
        let room = config.cap - target.len();
        if doc.len() <= room {
            aug.extend(doc);
        } else {
            let mut picked = index::sample(&mut rng, doc.len(), room).into_vec();
            picked.sort_unstable();
            aug.extend(picked.into_iter().map(|i| doc[i].clone()));
        }
    }
    aug.shuffle(&mut rng);
    Ok(AugmentedTriple {
        id: pair.id,
        src: pair.source.clone(),
        tgt: pair.target.clone(),
        aug: TokenSeq(aug),
        top_doc,
    })
}

/// One pair per position: the pivot token and up to `window` neighbours on
/// each side, clipped at the sequence ends.
pub fn context_pivot_pairs(tokens: &[String], window: usize, vocab: &Vocabulary) -> Vec<ContextPivotPair> {
    if tokens.len() < 2 || window == 0 {
        return Vec::new();
    }
    let ids = vocab.encode(tokens);
    (0..ids.len())
        .map(|p| {
            let lo = p.saturating_sub(window);
            let hi = (p + window).min(ids.len() - 1);
            let context = (lo..=hi).filter(|&i| i != p).map(|i| ids[i]).collect();
            ContextPivotPair { context, pivot: ids[p] }
        })
        .collect()
}

/// The augmented corpus, ordered by pair id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RatDataset {
    pub triples: Vec<AugmentedTriple>,
    /// Pairs whose sentence retrieved no document.
    pub degraded: usize,
}

/// CBOW examples derived from one sentence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatGroup {
    pub id: u64,
    pub pairs: Vec<ContextPivotPair>,
}

pub fn build_tc_prime(pairs: &[ParallelPair], index: &InvertedIndex, config: &RatConfig) -> Result<RatDataset> {
    let mut triples = pairs
        .iter()
        .map(|p| augment(p, index, config))
        .collect::<Result<Vec<_>>>()?;
    triples.sort_by_key(|t| t.id);
    let degraded = triples.iter().filter(|t| t.top_doc.is_none()).count();
    Ok(RatDataset { triples, degraded })
}

impl RatDataset {
    /// Context/pivot groups, one per triple, in pair-id order. With
    /// `epoch` set the augmented sequences are freshly shuffled first.
    pub fn groups(&self, window: usize, vocab: &Vocabulary, reshuffle: Option<(u64, u64)>) -> Vec<RatGroup> {
        self.triples
            .iter()
            .map(|t| {
                let pairs = match reshuffle {
                    Some((seed, epoch)) => context_pivot_pairs(&t.reshuffled(seed, epoch), window, vocab),
                    None => context_pivot_pairs(&t.aug, window, vocab),
                };
                RatGroup { id: t.id, pairs }
            })
            .collect()
    }

    pub fn pairs(&self) -> Vec<ParallelPair> {
        self.triples.iter().map(AugmentedTriple::pair).collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&serde_json::to_string(t).expect("triples serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str, origin: &Path) -> Result<Self> {
        let mut triples = Vec::new();
        for (ln, line) in content_lines(text) {
            let t: AugmentedTriple =
                serde_json::from_str(line).map_err(|e| Error::parse(origin, ln, format!("invalid record: {e}")))?;
            triples.push(t);
        }
        triples.sort_by_key(|t| t.id);
        let degraded = triples.iter().filter(|t| t.top_doc.is_none()).count();
        Ok(RatDataset { triples, degraded })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_jsonl(&read_to_string(path)?, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq(s.split_whitespace().map(str::to_string).collect())
    }

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    fn index_of(docs: &[(&str, &str)]) -> InvertedIndex {
        let docs: Vec<Document> = docs
            .iter()
            .map(|(id, t)| Document {
                doc_id: id.to_string(),
                tokens: seq(t),
                raw_length: 0,
            })
            .collect();
        InvertedIndex::build(&docs).unwrap()
    }

    fn pair(id: u64, tgt: &str) -> ParallelPair {
        ParallelPair {
            id,
            source: seq("s"),
            target: seq(tgt),
        }
    }

    #[test]
    fn augment_preserves_multiset() {
        let idx = index_of(&[("d1", "x z"), ("d2", "q")]);
        let cfg = RatConfig {
            cap: 10,
            ..Default::default()
        };
        let t = augment(&pair(0, "x y"), &idx, &cfg).unwrap();
        assert_eq!(t.top_doc.as_deref(), Some("d1"));
        assert_eq!(sorted(t.aug.0.clone()), seq("x x y z").0);
    }

    #[test]
    fn augment_caps_document_tokens() {
        let idx = index_of(&[("d1", "x a b c d")]);
        let cfg = RatConfig {
            cap: 3,
            ..Default::default()
        };
        let t = augment(&pair(0, "x"), &idx, &cfg).unwrap();
        assert_eq!(t.aug.len(), 3);
        assert!(t.aug.contains(&"x".to_string()));
        assert!(augment(&pair(0, "x y z w"), &idx, &cfg).is_err());
    }

    #[test]
    fn augment_is_deterministic_per_seed_and_id() {
        let idx = index_of(&[("d1", "x a b c d e f g h")]);
        let cfg = RatConfig {
            cap: 100,
            seed: 5,
            ..Default::default()
        };
        let a = augment(&pair(3, "x y"), &idx, &cfg).unwrap();
        let b = augment(&pair(3, "x y"), &idx, &cfg).unwrap();
        assert_eq!(a, b);
        let c = augment(&pair(4, "x y"), &idx, &cfg).unwrap();
        assert_ne!(a.aug, c.aug);
    }

    #[test]
    fn augment_without_top_document() {
        let idx = index_of(&[("d1", "a")]);
        let t = augment(&pair(0, "zz"), &idx, &RatConfig::default()).unwrap();
        assert_eq!(t.top_doc, None);
        assert_eq!(t.aug, seq("zz"));
    }

    #[test]
    fn window_pairs() {
        let pairs = vec![pair(0, "a b c")];
        let v = Vocabulary::build(&pairs, &[]);
        let id = |t: &str| v.get(t).unwrap();
        let got = context_pivot_pairs(&seq("a b c"), 1, &v);
        assert_eq!(
            got,
            vec![
                ContextPivotPair {
                    context: vec![id("b")],
                    pivot: id("a")
                },
                ContextPivotPair {
                    context: vec![id("a"), id("c")],
                    pivot: id("b")
                },
                ContextPivotPair {
                    context: vec![id("b")],
                    pivot: id("c")
                },
            ]
        );
        assert!(context_pivot_pairs(&seq("a"), 3, &v).is_empty());
        let two = context_pivot_pairs(&seq("a b"), 5, &v);
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].context, vec![id("b")]);
        assert_eq!(two[1].context, vec![id("a")]);
        let unk = context_pivot_pairs(&seq("a nope"), 1, &v);
        assert_eq!(unk[1].pivot, crate::corpus::UNK);
    }

    #[test]
    fn dataset_groups_and_jsonl() {
        let idx = index_of(&[("d1", "x k"), ("d2", "y m")]);
        let pairs = vec![pair(0, "x"), pair(1, "y"), pair(2, "oov")];
        let ds = build_tc_prime(&pairs, &idx, &RatConfig::default()).unwrap();
        assert_eq!(ds.degraded, 1);
        let v = Vocabulary::build(&pairs, &[]);
        let groups = ds.groups(5, &v, None);
        assert_eq!(groups.len(), 3);
        assert!(!groups[0].pairs.is_empty() && !groups[1].pairs.is_empty());
        // single-token fallback sequence yields no pairs
        assert!(groups[2].pairs.is_empty());

        let back = RatDataset::parse_jsonl(&ds.to_jsonl(), Path::new("mem")).unwrap();
        assert_eq!(back, ds);
        assert!(ds.to_jsonl().contains("\"top_doc\":null"));
    }

    #[test]
    fn reshuffle_changes_order_not_content() {
        let idx = index_of(&[("d1", "x a b c d e f g")]);
        let t = augment(&pair(0, "x"), &idx, &RatConfig::default()).unwrap();
        let r1 = t.reshuffled(1, 1);
        assert_eq!(sorted(r1.0.clone()), sorted(t.aug.0.clone()));
        assert_eq!(r1, t.reshuffled(1, 1));
        assert_ne!(r1, t.reshuffled(1, 2));
    }
}
