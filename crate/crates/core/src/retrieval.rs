//! Inverted index and query-likelihood ranking with Dirichlet smoothing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::io::{content_lines, natural_cmp, read_to_string, write, ArtifactHeader};

pub const DEFAULT_MU: f64 = 1500.0;
pub const DEFAULT_DEPTH: usize = 1000;

const INDEX_MAGIC: &str = "ratnmt-index 1";

/// Immutable inverted index.
///
/// Documents are numbered in natural `doc_id` order and terms in
/// lexicographic order; postings lists are sorted by document number.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    doc_lookup: HashMap<String, u32>,
    terms: Vec<String>,
    term_lookup: HashMap<String, u32>,
    coll_freq: Vec<u64>,
    postings: Vec<Vec<(u32, u32)>>,
    total_tokens: u64,
    /// Per document `(term, tf)` in term order, derived from the postings.
    forward: Vec<Vec<(u32, u32)>>,
}

/// A retrieved document and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

/// Ranked retrieval output for one query; rank `i + 1` is `hits[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub qid: String,
    pub hits: Vec<Hit>,
}

impl InvertedIndex {
    pub fn build(docs: &[Document]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::data("cannot index an empty document set"));
        }
        let mut order: Vec<&Document> = docs.iter().collect();
        order.sort_by(|a, b| natural_cmp(&a.doc_id, &b.doc_id));
        if let Some(d) = order
            .iter()
            .find(|d| d.doc_id.is_empty() || d.doc_id.contains(char::is_whitespace))
        {
            return Err(Error::data(format!(
                "document id {:?} is empty or contains whitespace",
                d.doc_id
            )));
        }
        for w in order.windows(2) {
            if w[0].doc_id == w[1].doc_id {
                return Err(Error::DuplicateDocId(w[0].doc_id.clone()));
            }
        }

        let mut tf_by_term: BTreeMap<&str, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(order.len());
        for (dn, doc) in order.iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &doc.tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                tf_by_term.entry(t).or_default().push((dn as u32, n));
            }
            doc_len.push(doc.tokens.len() as u32);
        }
        let doc_ids = order.iter().map(|d| d.doc_id.clone()).collect();
        let terms = tf_by_term.keys().map(|t| t.to_string()).collect();
        let postings = tf_by_term.into_values().collect();
        Ok(Self::assemble(doc_ids, doc_len, terms, postings))
    }

    fn assemble(doc_ids: Vec<String>, doc_len: Vec<u32>, terms: Vec<String>, postings: Vec<Vec<(u32, u32)>>) -> Self {
        let coll_freq = postings
            .iter()
            .map(|p| p.iter().map(|&(_, tf)| tf as u64).sum())
            .collect();
        let total_tokens = doc_len.iter().map(|&l| l as u64).sum();
        let mut forward = vec![Vec::new(); doc_ids.len()];
        for (tn, plist) in postings.iter().enumerate() {
            for &(dn, tf) in plist {
                forward[dn as usize].push((tn as u32, tf));
            }
        }
        let doc_lookup = doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i as u32)).collect();
        let term_lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        InvertedIndex {
            doc_ids,
            doc_len,
            doc_lookup,
            terms,
            term_lookup,
            coll_freq,
            postings,
            total_tokens,
            forward,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.doc_lookup.get(doc_id).map(|&d| self.doc_len[d as usize])
    }

    pub fn coll_freq(&self, term: &str) -> u64 {
        self.term_lookup.get(term).map_or(0, |&t| self.coll_freq[t as usize])
    }

    /// `(doc_id, tf)` postings of a term, in document order.
    pub fn postings(&self, term: &str) -> Vec<(&str, u32)> {
        self.term_lookup.get(term).map_or_else(Vec::new, |&t| {
            self.postings[t as usize]
                .iter()
                .map(|&(d, tf)| (self.doc_ids[d as usize].as_str(), tf))
                .collect()
        })
    }

    pub fn tf(&self, term: &str, doc_id: &str) -> u32 {
        match (self.term_lookup.get(term), self.doc_lookup.get(doc_id)) {
            (Some(&t), Some(&d)) => self.tf_num(t, d),
            _ => 0,
        }
    }

    fn tf_num(&self, term: u32, doc: u32) -> u32 {
        let plist = &self.postings[term as usize];
        plist.binary_search_by_key(&doc, |&(d, _)| d).map_or(0, |i| plist[i].1)
    }

    /// Token multiset of a document, grouped by term in lexicographic order.
    pub fn doc_tokens(&self, doc_id: &str) -> Option<Vec<String>> {
        let &d = self.doc_lookup.get(doc_id)?;
        let mut out = Vec::with_capacity(self.doc_len[d as usize] as usize);
        for &(t, tf) in &self.forward[d as usize] {
            for _ in 0..tf {
                out.push(self.terms[t as usize].clone());
            }
        }
        Some(out)
    }

    /// Distinct scoreable query terms with their query counts, in term order.
    fn query_terms(&self, query: &[String]) -> Result<Vec<(u32, f64)>> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for q in query {
            if let Some(&t) = self.term_lookup.get(q) {
                if self.coll_freq[t as usize] > 0 {
                    *counts.entry(t).or_default() += 1;
                }
            }
        }
        if counts.is_empty() {
            return Err(Error::Unscoreable);
        }
        Ok(counts.into_iter().map(|(t, c)| (t, c as f64)).collect())
    }

    fn score_num(&self, terms: &[(u32, f64)], doc: u32, mu: f64) -> f64 {
        let total = self.total_tokens as f64;
        let denom = self.doc_len[doc as usize] as f64 + mu;
        let mut parts: Vec<f64> = terms
            .iter()
            .map(|&(t, c)| {
                let tf = self.tf_num(t, doc) as f64;
                let background = mu * self.coll_freq[t as usize] as f64 / total;
                c * ((tf + background) / denom).ln()
            })
            .collect();
        // summing in value order makes permuted contributions tie exactly
        parts.sort_by(f64::total_cmp);
        parts.iter().sum()
    }

    /// Query likelihood of `doc_id` under a Dirichlet-smoothed document
    /// model. Query terms absent from the collection are skipped.
    pub fn ql_dirichlet_score(&self, query: &[String], doc_id: &str, mu: f64) -> Result<f64> {
        check_mu(mu)?;
        let &d = self
            .doc_lookup
            .get(doc_id)
            .ok_or_else(|| Error::data(format!("unknown document {doc_id}")))?;
        let terms = self.query_terms(query)?;
        Ok(self.score_num(&terms, d, mu))
    }

    /// Top `k` documents among those containing at least one query term,
    /// by descending score with ties broken by document order.
    pub fn search(&self, query: &[String], k: usize, mu: f64) -> Result<Vec<Hit>> {
        if k == 0 {
            return Err(Error::Config("search depth k must be at least 1".into()));
        }
        check_mu(mu)?;
        let terms = self.query_terms(query)?;
        let mut candidates: Vec<u32> = terms
            .iter()
            .flat_map(|&(t, _)| self.postings[t as usize].iter().map(|&(d, _)| d))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let mut scored: Vec<(u32, f64)> = candidates
            .into_iter()
            .map(|d| (d, self.score_num(&terms, d, mu)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(d, score)| Hit {
                doc_id: self.doc_ids[d as usize].clone(),
                score,
            })
            .collect())
    }

    /// Highest-ranked document for a sentence used as a query, or `None`
    /// when no sentence token occurs in the collection.
    pub fn top_document(&self, sentence: &[String], mu: f64) -> Result<Option<String>> {
        match self.search(sentence, 1, mu) {
            Ok(mut hits) => Ok(hits.pop().map(|h| h.doc_id)),
            Err(Error::Unscoreable) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Manifest text followed by little-endian `u32` `(doc, tf)` pairs.
    pub fn to_bytes(&self, header: &ArtifactHeader) -> Vec<u8> {
        let mut m = header.comment_line();
        let _ = writeln!(m, "{INDEX_MAGIC}");
        let _ = writeln!(m, "docs {}", self.doc_ids.len());
        let _ = writeln!(m, "terms {}", self.terms.len());
        let _ = writeln!(m, "total {}", self.total_tokens);
        for (d, len) in self.doc_ids.iter().zip(&self.doc_len) {
            let _ = writeln!(m, "doc {d} {len}");
        }
        let mut offset = 0usize;
        for (t, plist) in self.terms.iter().zip(&self.postings) {
            let _ = writeln!(m, "term {t} {} {offset}", plist.len());
            offset += plist.len();
        }
        m.push_str("end\n");
        let mut bytes = m.into_bytes();
        for plist in &self.postings {
            for &(d, tf) in plist {
                bytes.extend_from_slice(&d.to_le_bytes());
                bytes.extend_from_slice(&tf.to_le_bytes());
            }
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let split =
            find_manifest_end(bytes).ok_or_else(|| Error::parse(origin, 1, "index manifest has no end marker"))?;
        let manifest =
            std::str::from_utf8(&bytes[..split]).map_err(|_| Error::parse(origin, 1, "index manifest is not UTF-8"))?;
        let blob = &bytes[split + "end\n".len()..];

        let mut lines = content_lines(manifest);
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(origin, 1, format!("index manifest truncated before {what}")))
        };
        let (ln, magic) = next("magic")?;
        if magic != INDEX_MAGIC {
            return Err(Error::parse(origin, ln, "not a ratnmt index"));
        }
        let count = |(ln, line): (usize, &str), key: &str| -> Result<u64> {
            line.strip_prefix(key)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| Error::parse(origin, ln, format!("expected `{key} <n>`")))
        };
        let n_docs = count(next("docs")?, "docs")? as usize;
        let n_terms = count(next("terms")?, "terms")? as usize;
        let total = count(next("total")?, "total")?;

        let mut doc_ids = Vec::with_capacity(n_docs);
        let mut doc_len = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            let (ln, line) = next("doc table")?;
            let f: Vec<&str> = line.split(' ').collect();
            match f.as_slice() {
                ["doc", id, len] => {
                    doc_ids.push(id.to_string());
                    doc_len.push(len.parse().map_err(|_| Error::parse(origin, ln, "bad doc length"))?);
                }
                _ => return Err(Error::parse(origin, ln, "expected `doc <id> <len>`")),
            }
        }
        let mut terms = Vec::with_capacity(n_terms);
        let mut postings = Vec::with_capacity(n_terms);
        let pairs = blob.len() / 8;
        if blob.len() % 8 != 0 {
            return Err(Error::parse(origin, 1, "postings blob is not a whole number of pairs"));
        }
        let read_u32 = |i: usize| u32::from_le_bytes(blob[i * 4..i * 4 + 4].try_into().unwrap());
        for _ in 0..n_terms {
            let (ln, line) = next("term table")?;
            let f: Vec<&str> = line.split(' ').collect();
            let (term, df, off) = match f.as_slice() {
                ["term", t, df, off] => (
                    t.to_string(),
                    df.parse::<usize>().map_err(|_| Error::parse(origin, ln, "bad df"))?,
                    off.parse::<usize>()
                        .map_err(|_| Error::parse(origin, ln, "bad offset"))?,
                ),
                _ => return Err(Error::parse(origin, ln, "expected `term <t> <df> <offset>`")),
            };
            if off + df > pairs {
                return Err(Error::parse(origin, ln, "postings offset out of range"));
            }
            let plist: Vec<(u32, u32)> = (off..off + df)
                .map(|p| (read_u32(2 * p), read_u32(2 * p + 1)))
                .collect();
            if plist.iter().any(|&(d, _)| d as usize >= n_docs) {
                return Err(Error::parse(origin, ln, "posting refers to an unknown document"));
            }
            terms.push(term);
            postings.push(plist);
        }
        let idx = Self::assemble(doc_ids, doc_len, terms, postings);
        if idx.total_tokens != total {
            return Err(Error::parse(
                origin,
                1,
                "total token count does not match document table",
            ));
        }
        Ok(idx)
    }

    pub fn save(&self, path: impl AsRef<Path>, header: &ArtifactHeader) -> Result<()> {
        write(path, self.to_bytes(header))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

fn find_manifest_end(bytes: &[u8]) -> Option<usize> {
    let marker = b"\nend\n";
    bytes.windows(marker.len()).position(|w| w == marker).map(|p| p + 1)
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("mu must be positive, got {mu}")))
    }
}

impl RankedList {
    pub fn new(qid: impl Into<String>, hits: Vec<Hit>) -> Self {
        RankedList { qid: qid.into(), hits }
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.doc_id.as_str())
    }
}

/// TREC run lines: `qid Q0 doc_id rank score tag`.
pub fn format_run(lists: &[RankedList], tag: &str) -> String {
    let mut out = String::new();
    for list in lists {
        for (i, h) in list.hits.iter().enumerate() {
            let _ = writeln!(out, "{} Q0 {} {} {:.10} {tag}", list.qid, h.doc_id, i + 1, h.score);
        }
    }
    out
}

/// Parses a TREC run. Lists come back in order of first appearance, hits
/// ordered by rank.
pub fn parse_run(text: &str, origin: &Path) -> Result<Vec<RankedList>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_qid: HashMap<String, Vec<(usize, Hit)>> = HashMap::new();
    for (ln, line) in content_lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::parse(
                origin,
                ln,
                format!("expected 6 fields, found {}", f.len()),
            ));
        }
        let rank: usize = f[3]
            .parse()
            .map_err(|_| Error::parse(origin, ln, format!("invalid rank {:?}", f[3])))?;
        let score: f64 = f[4]
            .parse()
            .map_err(|_| Error::parse(origin, ln, format!("invalid score {:?}", f[4])))?;
        let qid = f[0].to_string();
        if !by_qid.contains_key(&qid) {
            order.push(qid.clone());
        }
        by_qid.entry(qid).or_default().push((
            rank,
            Hit {
                doc_id: f[2].to_string(),
                score,
            },
        ));
    }
    Ok(order
        .into_iter()
        .map(|q| {
            let mut hits = by_qid.remove(&q).unwrap_or_default();
            hits.sort_by_key(|(r, _)| *r);
            let mut seen = HashSet::new();
            let hits = hits
                .into_iter()
                .map(|(_, h)| h)
                .filter(|h| seen.insert(h.doc_id.clone()))
                .collect();
            RankedList::new(q, hits)
        })
        .collect())
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RankedList>> {
    let path = path.as_ref();
    parse_run(&read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::TokenSeq;

    fn doc(id: &str, toks: &str) -> Document {
        let tokens: Vec<String> = toks.split_whitespace().map(str::to_string).collect();
        Document {
            doc_id: id.into(),
            raw_length: tokens.len(),
            tokens: TokenSeq(tokens),
        }
    }

    fn q(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn toy() -> InvertedIndex {
        InvertedIndex::build(&[doc("d1", "a a b"), doc("d2", "b c")]).unwrap()
    }

    #[test]
    fn toy_statistics() {
        let idx = toy();
        assert_eq!(idx.coll_freq("a"), 2);
        assert_eq!(idx.coll_freq("b"), 2);
        assert_eq!(idx.coll_freq("c"), 1);
        assert_eq!(idx.total_tokens(), 5);
        assert_eq!(idx.doc_len("d1"), Some(3));
        assert_eq!(idx.doc_len("d2"), Some(2));

        let single = InvertedIndex::build(&[doc("d", "x")]).unwrap();
        assert_eq!(single.postings("x"), vec![("d", 1)]);
        assert!(InvertedIndex::build(&[doc("d", "x"), doc("d", "y")]).is_err());
        assert!(InvertedIndex::build(&[]).is_err());
    }

    #[test]
    fn toy_scores() {
        let idx = toy();
        let s1 = idx.ql_dirichlet_score(&q("a"), "d1", 2.0).unwrap();
        let s2 = idx.ql_dirichlet_score(&q("a"), "d2", 2.0).unwrap();
        assert!((s1 - (2.8f64 / 5.0).ln()).abs() < 1e-12);
        assert!((s2 - (0.8f64 / 4.0).ln()).abs() < 1e-12);
        let s11 = idx.ql_dirichlet_score(&q("a a"), "d1", 2.0).unwrap();
        assert!((s11 - 2.0 * s1).abs() < 1e-12);
        assert!(matches!(
            idx.ql_dirichlet_score(&q("zzz"), "d1", 2.0),
            Err(Error::Unscoreable)
        ));
    }

    #[test]
    fn search_and_top_document() {
        let idx = toy();
        let hits = idx.search(&q("a"), 2, 2.0).unwrap();
        // d2 has no `a`, so it is not a candidate
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc_id, "d1");
        let hits = idx.search(&q("a b"), 2, 2.0).unwrap();
        assert_eq!(hits.iter().map(|h| h.doc_id.as_str()).collect::<Vec<_>>(), ["d1", "d2"]);
        assert_eq!(idx.top_document(&q("a"), 2.0).unwrap().as_deref(), Some("d1"));
        assert_eq!(idx.top_document(&q("c"), 2.0).unwrap().as_deref(), Some("d2"));
        assert_eq!(idx.top_document(&q("oov"), 2.0).unwrap(), None);
        assert!(idx.search(&q("a"), 0, 2.0).is_err());
    }

    #[test]
    fn ties_follow_natural_doc_order() {
        let idx = InvertedIndex::build(&[doc("d10", "x y"), doc("d9", "x y")]).unwrap();
        let hits = idx.search(&q("x"), 10, DEFAULT_MU).unwrap();
        assert_eq!(hits[0].score, hits[1].score);
        assert_eq!(hits[0].doc_id, "d9");
        assert_eq!(hits[1].doc_id, "d10");
    }

    #[test]
    fn permuted_contributions_tie_exactly() {
        let idx = InvertedIndex::build(&[doc("d3", "x z w"), doc("d1", "y z v"), doc("d2", "x y w v")]).unwrap();
        for mu in [0.7, 13.0, DEFAULT_MU] {
            let hits = idx.search(&q("w x y v z"), 10, mu).unwrap();
            let d1 = hits.iter().find(|h| h.doc_id == "d1").unwrap();
            let d3 = hits.iter().find(|h| h.doc_id == "d3").unwrap();
            assert_eq!(d1.score.to_bits(), d3.score.to_bits());
        }
    }

    #[test]
    fn index_round_trip() {
        let idx = InvertedIndex::build(&[doc("d1", "a a b"), doc("d2", "b c"), doc("d10", "c")]).unwrap();
        let bytes = idx.to_bytes(&ArtifactHeader::new(1, "h"));
        let back = InvertedIndex::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(idx, back);
        assert!(InvertedIndex::from_bytes(&bytes[..bytes.len() - 3], Path::new("mem")).is_err());
        let mut toks = back.doc_tokens("d1").unwrap();
        toks.sort();
        assert_eq!(toks, q("a a b"));
    }

    #[test]
    fn run_round_trip() {
        let lists = vec![RankedList::new(
            "41",
            vec![
                Hit {
                    doc_id: "d1".into(),
                    score: -1.5,
                },
                Hit {
                    doc_id: "d2".into(),
                    score: -2.25,
                },
            ],
        )];
        let text = format_run(&lists, "x");
        assert!(text.starts_with("41 Q0 d1 1 -1.5000000000 x\n"));
        let back = parse_run(&text, Path::new("mem")).unwrap();
        assert_eq!(back, lists);
        assert!(parse_run("41 Q0 d1 1\n", Path::new("mem")).is_err());
    }
}
