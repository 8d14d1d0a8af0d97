//! Seeded generator for a small bilingual lexicon task whose retrieval
//! corpus names some concepts differently from the translation corpus.
//!
//! Every concept has one source word. Its renderings fall in three kinds:
//!
//! * shared: one word used by both corpora;
//! * ambiguous: the translation corpus uses two words interchangeably, and
//!   only the second of them appears in the retrieval corpus;
//! * divergent: the translation corpus and the retrieval corpus use
//!   unrelated words.
//!
//! Topics pair an ambiguous concept with another one, and the documents
//! judged relevant mention both in retrieval-corpus wording.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::corpus::{QrelSet, Topic};
use crate::error::{Error, Result};
use crate::io::{write, ArtifactHeader};
use crate::seed::{rng_for, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub concepts: usize,
    pub shared: usize,
    pub ambiguous: usize,
    pub tc_pairs: usize,
    /// Concepts per sentence, inclusive range.
    pub sentence_len: (usize, usize),
    /// Sampling weight of ambiguous concepts relative to the others.
    pub ambiguous_weight: f64,
    pub fillers: usize,
    pub background_docs: usize,
    pub relevant_per_topic: usize,
    /// Filler words per document, inclusive range.
    pub doc_fillers: (usize, usize),
    pub val_topics: usize,
    pub test_topics: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            concepts: 50,
            shared: 10,
            ambiguous: 10,
            tc_pairs: 2000,
            sentence_len: (2, 4),
            ambiguous_weight: 0.5,
            fillers: 80,
            background_docs: 400,
            relevant_per_topic: 3,
            doc_fillers: (10, 25),
            val_topics: 20,
            test_topics: 40,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.shared + self.ambiguous > self.concepts {
            return bad("shared plus ambiguous concepts exceed the concept count");
        }
        if self.ambiguous == 0 || self.concepts < 2 {
            return bad("need at least one ambiguous concept and two concepts");
        }
        let (lo, hi) = self.sentence_len;
        if lo == 0 || lo > hi || hi > self.concepts {
            return bad("bad sentence length range");
        }
        if self.doc_fillers.0 > self.doc_fillers.1 {
            return bad("bad document filler range");
        }
        if !(self.ambiguous_weight > 0.0) {
            return bad("ambiguous weight must be positive");
        }
        let pairs = self.ambiguous * (self.concepts - 1);
        if self.val_topics + self.test_topics > pairs {
            return bad("more topics requested than distinct concept pairs");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptKind {
    Shared,
    Ambiguous,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub kind: ConceptKind,
    pub source: String,
    /// Renderings in the translation corpus.
    pub tc_terms: Vec<String>,
    /// Rendering in the retrieval corpus.
    pub rc_term: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub concepts: Vec<Concept>,
    /// `(source, target)` sentences.
    pub tc: Vec<(String, String)>,
    /// `(doc_id, text)`.
    pub docs: Vec<(String, String)>,
    pub val_topics: Vec<Topic>,
    pub test_topics: Vec<Topic>,
    pub qrels: QrelSet,
}

/// Distinct pronounceable words that cannot collide with each other.
struct WordMaker {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl WordMaker {
    fn word(&mut self) -> String {
        const ONSETS: &[&str] = &[
            "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh",
        ];
        const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
        loop {
            let syllables = self.rng.gen_range(2..=3);
            let w: String = (0..syllables)
                .map(|_| {
                    format!(
                        "{}{}",
                        ONSETS.choose(&mut self.rng).unwrap(),
                        VOWELS.choose(&mut self.rng).unwrap()
                    )
                })
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn weighted_pick(rng: &mut ChaCha8Rng, weights: &[f64], exclude: &BTreeSet<usize>) -> usize {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(_, w)| w)
        .sum();
    let mut x = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        last = i;
        if x < *w {
            return i;
        }
        x -= w;
    }
    last
}

impl SynthCorpus {
    pub fn generate(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let mut words = WordMaker {
            rng: rng_for(seed, Stream::Synth, 0),
            used: HashSet::new(),
        };
        let concepts: Vec<Concept> = (0..config.concepts)
            .map(|c| {
                let source = words.word();
                let (kind, tc_terms, rc_term) = if c < config.shared {
                    let w = words.word();
                    (ConceptKind::Shared, vec![w.clone()], w)
                } else if c < config.shared + config.ambiguous {
                    let a = words.word();
                    let o = words.word();
                    (ConceptKind::Ambiguous, vec![a, o.clone()], o)
                } else {
                    (ConceptKind::Divergent, vec![words.word()], words.word())
                };
                Concept {
                    kind,
                    source,
                    tc_terms,
                    rc_term,
                }
            })
            .collect();
        let fillers: Vec<String> = (0..config.fillers).map(|_| words.word()).collect();

        let weights: Vec<f64> = concepts
            .iter()
            .map(|c| match c.kind {
                ConceptKind::Ambiguous => config.ambiguous_weight,
                _ => 1.0,
            })
            .collect();
        let mut rng = rng_for(seed, Stream::Synth, 1);
        let tc = (0..config.tc_pairs)
            .map(|_| {
                let n = rng.gen_range(config.sentence_len.0..=config.sentence_len.1);
                let mut picked = BTreeSet::new();
                let mut order = Vec::with_capacity(n);
                for _ in 0..n {
                    let c = weighted_pick(&mut rng, &weights, &picked);
                    picked.insert(c);
                    order.push(c);
                }
                let src: Vec<&str> = order.iter().map(|&c| concepts[c].source.as_str()).collect();
                let tgt: Vec<&str> = order
                    .iter()
                    .map(|&c| concepts[c].tc_terms.choose(&mut rng).unwrap().as_str())
                    .collect();
                (src.join(" "), tgt.join(" "))
            })
            .collect();

        // topics: an ambiguous concept plus one other, all pairs distinct
        let ambiguous: Vec<usize> = (config.shared..config.shared + config.ambiguous).collect();
        let mut rng = rng_for(seed, Stream::Synth, 2);
        let mut seen = HashSet::new();
        let mut topic_concepts = Vec::new();
        while topic_concepts.len() < config.val_topics + config.test_topics {
            let a = *ambiguous.choose(&mut rng).unwrap();
            let b = rng.gen_range(0..config.concepts);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            topic_concepts.push(if rng.gen() { [a, b] } else { [b, a] });
        }

        let mut rng = rng_for(seed, Stream::Synth, 3);
        let mut docs = Vec::new();
        let mut qrels = QrelSet::new();
        let make_doc = |rng: &mut ChaCha8Rng, about: &[usize]| -> String {
            let mut toks: Vec<&str> = Vec::new();
            for &c in about {
                for _ in 0..rng.gen_range(1..=3) {
                    toks.push(&concepts[c].rc_term);
                }
            }
            for _ in 0..rng.gen_range(config.doc_fillers.0..=config.doc_fillers.1) {
                toks.push(fillers.choose(rng).unwrap());
            }
            toks.shuffle(rng);
            toks.join(" ")
        };
        let mut val_topics = Vec::new();
        let mut test_topics = Vec::new();
        for (k, pair) in topic_concepts.iter().enumerate() {
            let (qid, out) = if k < config.val_topics {
                (format!("v{}", k + 1), &mut val_topics)
            } else {
                (format!("t{}", k + 1 - config.val_topics), &mut test_topics)
            };
            for _ in 0..config.relevant_per_topic {
                let id = format!("syn{}", docs.len() + 1);
                docs.push((id.clone(), make_doc(&mut rng, pair)));
                qrels.insert(qid.clone(), id, 1);
            }
            let title: Vec<&str> = pair.iter().map(|&c| concepts[c].source.as_str()).collect();
            let human: Vec<&str> = pair.iter().map(|&c| concepts[c].rc_term.as_str()).collect();
            out.push(Topic {
                qid,
                title: title.join(" "),
                description: String::new(),
                human: Some(human.join(" ")),
            });
        }
        for _ in 0..config.background_docs {
            let n = rng.gen_range(1..=2);
            let about: Vec<usize> = rand::seq::index::sample(&mut rng, config.concepts, n).into_vec();
            let id = format!("syn{}", docs.len() + 1);
            docs.push((id, make_doc(&mut rng, &about)));
        }
        // interleave relevant and background documents
        docs.shuffle(&mut rng);

        Ok(SynthCorpus {
            concepts,
            tc,
            docs,
            val_topics,
            test_topics,
            qrels,
        })
    }

    pub fn tc_tsv(&self, header: &ArtifactHeader) -> String {
        let mut out = header.comment_line();
        for (s, t) in &self.tc {
            let _ = writeln!(out, "{s}\t{t}");
        }
        out
    }

    pub fn rc_jsonl(&self, header: &ArtifactHeader) -> String {
        let mut out = header.comment_line();
        for (id, text) in &self.docs {
            let _ = writeln!(out, "{}", json!({"id": id, "text": text}));
        }
        out
    }

    pub fn topics_jsonl(topics: &[Topic], header: &ArtifactHeader) -> String {
        let mut out = header.comment_line();
        for t in topics {
            let _ = writeln!(out, "{}", serde_json::to_string(t).expect("topics serialize"));
        }
        out
    }

    /// `source kind tc_terms rc_term`, tab-separated, one concept per line.
    pub fn lexicon_tsv(&self, header: &ArtifactHeader) -> String {
        let mut out = header.comment_line();
        for c in &self.concepts {
            let kind = match c.kind {
                ConceptKind::Shared => "shared",
                ConceptKind::Ambiguous => "ambiguous",
                ConceptKind::Divergent => "divergent",
            };
            let _ = writeln!(out, "{}\t{kind}\t{}\t{}", c.source, c.tc_terms.join(","), c.rc_term);
        }
        out
    }

    /// Writes `tc.tsv`, `rc.jsonl`, `topics.val.jsonl`, `topics.test.jsonl`,
    /// `qrels.txt` and `lexicon.tsv` into `dir`.
    pub fn write_to(&self, dir: &Path, header: &ArtifactHeader) -> Result<()> {
        write(dir.join("tc.tsv"), self.tc_tsv(header))?;
        write(dir.join("rc.jsonl"), self.rc_jsonl(header))?;
        write(
            dir.join("topics.val.jsonl"),
            Self::topics_jsonl(&self.val_topics, header),
        )?;
        write(
            dir.join("topics.test.jsonl"),
            Self::topics_jsonl(&self.test_topics, header),
        )?;
        write(
            dir.join("qrels.txt"),
            format!("{}{}", header.comment_line(), self.qrels.to_trec()),
        )?;
        write(dir.join("lexicon.tsv"), self.lexicon_tsv(header))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let cfg = SynthConfig {
            seed: 7,
            ..Default::default()
        };
        let a = SynthCorpus::generate(&cfg).unwrap();
        let b = SynthCorpus::generate(&cfg).unwrap();
        assert_eq!(a, b);
        let c = SynthCorpus::generate(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.tc, c.tc);
    }

    #[test]
    fn corpora_use_their_own_wording() {
        let s = SynthCorpus::generate(&SynthConfig::default()).unwrap();
        assert_eq!(s.concepts.len(), 50);
        let tc_words: HashSet<&str> = s.tc.iter().flat_map(|(_, t)| t.split(' ')).collect();
        let rc_words: HashSet<&str> = s.docs.iter().flat_map(|(_, t)| t.split(' ')).collect();
        for c in &s.concepts {
            match c.kind {
                ConceptKind::Shared => assert_eq!(c.tc_terms, vec![c.rc_term.clone()]),
                ConceptKind::Ambiguous => assert_eq!(c.tc_terms[1], c.rc_term),
                ConceptKind::Divergent => {
                    assert!(!rc_words.contains(c.tc_terms[0].as_str()));
                    assert!(!tc_words.contains(c.rc_term.as_str()));
                }
            }
        }
        assert!(tc_words.iter().any(|w| rc_words.contains(w)));
        assert_eq!(s.val_topics.len(), 20);
        assert_eq!(s.test_topics.len(), 40);
        for t in s.val_topics.iter().chain(&s.test_topics) {
            assert_eq!(s.qrels.relevant_count(&t.qid), 3);
        }
    }
}
