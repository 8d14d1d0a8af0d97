//! Corpus ingestion: parallel sentences, retrieval documents, topics and
//! relevance judgments, plus the union vocabulary over target-side tokens.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::{content_lines, natural_cmp, read_to_string, short_hash};
use crate::textprep::{preprocess, StopList, TokenSeq};

/// One sentence pair `(s_i, t_i)` of the translation corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: u64,
    pub source: TokenSeq,
    pub target: TokenSeq,
}

#[derive(Debug, Clone, Default)]
pub struct ParallelCorpus {
    pub pairs: Vec<ParallelPair>,
    /// Rows dropped because one side was empty after preprocessing.
    pub dropped: usize,
}

/// Pair ids are the 0-based index of the row among content lines.
pub fn parse_parallel(text: &str, origin: &Path, src_stop: &StopList, tgt_stop: &StopList) -> Result<ParallelCorpus> {
    let mut out = ParallelCorpus::default();
    for (row, (line_no, line)) in content_lines(text).enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 2 tab-separated columns, found {}", cols.len()),
            ));
        }
        let source = preprocess(cols[0], src_stop);
        let target = preprocess(cols[1], tgt_stop);
        if source.is_empty() || target.is_empty() {
            out.dropped += 1;
            continue;
        }
        out.pairs.push(ParallelPair {
            id: row as u64,
            source,
            target,
        });
    }
    Ok(out)
}

/// One JSON object per pair, the canonical form written by `prep`.
pub fn pairs_to_jsonl(pairs: &[ParallelPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pairs serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_pairs_jsonl(text: &str, origin: &Path) -> Result<Vec<ParallelPair>> {
    content_lines(text)
        .map(|(ln, line)| {
            serde_json::from_str(line).map_err(|e| Error::parse(origin, ln, format!("invalid pair: {e}")))
        })
        .collect()
}

/// Loads a `source<TAB>target` file.
pub fn load_parallel(path: impl AsRef<Path>, src_stop: &StopList, tgt_stop: &StopList) -> Result<ParallelCorpus> {
    let path = path.as_ref();
    parse_parallel(&read_to_string(path)?, path, src_stop, tgt_stop)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub tokens: TokenSeq,
    /// Whitespace-delimited units in the raw text.
    pub raw_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocFormat {
    Jsonl,
    TrecSgml,
}

fn detect_format(text: &str) -> Option<DocFormat> {
    let first = text
        .lines()
        .map(str::trim_start)
        .find(|l| !l.is_empty() && !l.starts_with('#'))?;
    match first.as_bytes()[0] {
        b'{' => Some(DocFormat::Jsonl),
        b'<' => Some(DocFormat::TrecSgml),
        _ => None,
    }
}

fn json_id(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn make_doc(doc_id: String, text: &str, stoplist: &StopList) -> Document {
    Document {
        doc_id,
        tokens: preprocess(text, stoplist),
        raw_length: text.split_whitespace().count(),
    }
}

fn parse_jsonl_docs(text: &str, origin: &Path, stoplist: &StopList) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (line_no, line) in content_lines(text) {
        let v: Value =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, line_no, format!("invalid JSON: {e}")))?;
        let id = v
            .get("id")
            .and_then(json_id)
            .ok_or_else(|| Error::parse(origin, line_no, "missing \"id\""))?;
        let body = v
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::parse(origin, line_no, "missing \"text\""))?;
        docs.push(make_doc(id, body, stoplist));
    }
    Ok(docs)
}

fn line_of(text: &str, byte: usize) -> usize {
    text[..byte].bytes().filter(|&b| b == b'\n').count() + 1
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

fn parse_trec_docs(text: &str, origin: &Path, stoplist: &StopList) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut pos = 0;
    while let Some(rel) = text[pos..].find("<DOC>") {
        let start = pos + rel;
        let body_start = start + "<DOC>".len();
        let end = text[body_start..]
            .find("</DOC>")
            .map(|e| body_start + e)
            .ok_or_else(|| Error::parse(origin, line_of(text, start), "unterminated <DOC>"))?;
        let block = &text[body_start..end];
        let docno = block
            .find("<DOCNO>")
            .and_then(|a| {
                let a = a + "<DOCNO>".len();
                block[a..].find("</DOCNO>").map(|b| block[a..a + b].trim())
            })
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(origin, line_of(text, start), "missing <DOCNO>"))?;
        let mut body = String::new();
        let mut tpos = 0;
        while let Some(a) = block[tpos..].find("<TEXT>") {
            let a = tpos + a + "<TEXT>".len();
            let b = block[a..]
                .find("</TEXT>")
                .map(|b| a + b)
                .ok_or_else(|| Error::parse(origin, line_of(text, body_start + a), "unterminated <TEXT>"))?;
            body.push_str(&strip_tags(&block[a..b]));
            body.push(' ');
            tpos = b + "</TEXT>".len();
        }
        docs.push(make_doc(docno.to_string(), &body, stoplist));
        pos = end + "</DOC>".len();
    }
    Ok(docs)
}

/// Parses documents in JSONL (`{"id", "text"}` per line) or TREC SGML; the
/// format is chosen by the first non-blank byte. Documents with no tokens
/// after preprocessing are dropped.
pub fn parse_documents(text: &str, origin: &Path, stoplist: &StopList) -> Result<Vec<Document>> {
    let docs = match detect_format(text) {
        None if text.trim().is_empty() => Vec::new(),
        None => {
            return Err(Error::parse(
                origin,
                1,
                "unrecognized document format (expected JSONL or TREC SGML)",
            ))
        }
        Some(DocFormat::Jsonl) => parse_jsonl_docs(text, origin, stoplist)?,
        Some(DocFormat::TrecSgml) => parse_trec_docs(text, origin, stoplist)?,
    };
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.doc_id.as_str()) {
            return Err(Error::DuplicateDocId(d.doc_id.clone()));
        }
    }
    Ok(docs.into_iter().filter(|d| !d.tokens.is_empty()).collect())
}

pub fn load_documents(path: impl AsRef<Path>, stoplist: &StopList) -> Result<Vec<Document>> {
    let path = path.as_ref();
    parse_documents(&read_to_string(path)?, path, stoplist)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub qid: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    /// Reference target-language rendering of the topic, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<String>,
}

pub fn parse_topics(text: &str, origin: &Path) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in content_lines(text) {
        let v: Value =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, line_no, format!("invalid JSON: {e}")))?;
        let qid = v
            .get("qid")
            .and_then(json_id)
            .ok_or_else(|| Error::parse(origin, line_no, "missing \"qid\""))?;
        let title = v
            .get("title")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::parse(origin, line_no, "missing \"title\""))?
            .to_string();
        let description = match v.get("description") {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::parse(origin, line_no, "\"description\" must be a string")),
        };
        let human = v.get("human").and_then(Value::as_str).map(str::to_string);
        if !seen.insert(qid.clone()) {
            return Err(Error::parse(origin, line_no, format!("duplicate qid {qid}")));
        }
        topics.push(Topic {
            qid,
            title,
            description,
            human,
        });
    }
    Ok(topics)
}

pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    parse_topics(&read_to_string(path)?, path)
}

/// Query tokens from the longer topic form: title followed by description.
pub fn topic_query_tokens(topic: &Topic, stoplist: &StopList) -> Result<TokenSeq> {
    let toks = preprocess(&format!("{} {}", topic.title, topic.description), stoplist);
    if toks.is_empty() {
        return Err(Error::data(format!(
            "topic {} has no tokens after preprocessing",
            topic.qid
        )));
    }
    Ok(toks)
}

/// Relevance judgments, `(qid, doc_id) -> grade`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelSet {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl QrelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.judgments
            .entry(qid.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn grade(&self, qid: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(qid)?.get(doc_id).copied()
    }

    pub fn is_relevant(&self, qid: &str, doc_id: &str) -> bool {
        self.grade(qid, doc_id).is_some_and(|g| g > 0)
    }

    pub fn relevant_count(&self, qid: &str) -> usize {
        self.judgments
            .get(qid)
            .map_or(0, |m| m.values().filter(|&&g| g > 0).count())
    }

    pub fn relevant_docs(&self, qid: &str) -> Vec<&str> {
        self.judgments.get(qid).map_or_else(Vec::new, |m| {
            m.iter().filter(|(_, &g)| g > 0).map(|(d, _)| d.as_str()).collect()
        })
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    /// Judged queries without any positively graded document; these are
    /// excluded from evaluation.
    pub fn queries_without_relevant(&self) -> Vec<&str> {
        self.queries().filter(|q| self.relevant_count(q) == 0).collect()
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (q, docs) in &self.judgments {
            let mut ds: Vec<_> = docs.iter().collect();
            ds.sort_by(|a, b| natural_cmp(a.0, b.0));
            for (d, g) in ds {
                out.push_str(&format!("{q} 0 {d} {g}\n"));
            }
        }
        out
    }
}

/// Parses TREC qrels: `qid iteration doc_id grade`.
pub fn parse_qrels(text: &str, origin: &Path) -> Result<QrelSet> {
    let mut q = QrelSet::new();
    for (line_no, line) in content_lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        let grade: i64 = f[3]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("invalid grade {:?}", f[3])))?;
        if grade < 0 {
            return Err(Error::parse(origin, line_no, format!("negative grade {grade}")));
        }
        let grade =
            u32::try_from(grade).map_err(|_| Error::parse(origin, line_no, format!("grade {grade} too large")))?;
        q.insert(f[0], f[2], grade);
    }
    Ok(q)
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<QrelSet> {
    let path = path.as_ref();
    parse_qrels(&read_to_string(path)?, path)
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub token: String,
    pub count_tc: u64,
    pub count_rc: u64,
}

/// Token space with per-corpus counts.
///
/// The target vocabulary is the union of translation-corpus target tokens
/// and retrieval-corpus tokens; the source vocabulary reuses the type with
/// source counts in `count_tc`. Indices 0-3 are the specials, the rest are
/// ordered by descending total count with lexicographic ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    total_tc: u64,
    total_rc: u64,
}

impl Vocabulary {
    fn from_counts(counts: BTreeMap<&str, (u64, u64)>) -> Self {
        let mut words: Vec<(&str, (u64, u64))> = counts.into_iter().collect();
        words.sort_by(|a, b| (b.1 .0 + b.1 .1).cmp(&(a.1 .0 + a.1 .1)).then(a.0.cmp(b.0)));
        let mut entries: Vec<VocabEntry> = SPECIALS
            .iter()
            .map(|s| VocabEntry {
                token: s.to_string(),
                count_tc: 0,
                count_rc: 0,
            })
            .collect();
        entries.extend(words.into_iter().map(|(t, (tc, rc))| VocabEntry {
            token: t.to_string(),
            count_tc: tc,
            count_rc: rc,
        }));
        Self::from_entries(entries)
    }

    fn from_entries(entries: Vec<VocabEntry>) -> Self {
        let index = entries.iter().enumerate().map(|(i, e)| (e.token.clone(), i)).collect();
        let total_tc = entries.iter().map(|e| e.count_tc).sum();
        let total_rc = entries.iter().map(|e| e.count_rc).sum();
        Vocabulary {
            entries,
            index,
            total_tc,
            total_rc,
        }
    }

    /// Union vocabulary of TC target sides and RC documents.
    pub fn build(pairs: &[ParallelPair], docs: &[Document]) -> Self {
        let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        for p in pairs {
            for t in &p.target {
                counts.entry(t).or_default().0 += 1;
            }
        }
        for d in docs {
            for t in &d.tokens {
                counts.entry(t).or_default().1 += 1;
            }
        }
        Self::from_counts(counts)
    }

    /// Vocabulary of TC source sides.
    pub fn build_source(pairs: &[ParallelPair]) -> Self {
        let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        for p in pairs {
            for t in &p.source {
                counts.entry(t).or_default().0 += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn index_or_unk(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.index_or_unk(t)).collect()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.entries[index].token
    }

    pub fn entry(&self, index: usize) -> &VocabEntry {
        &self.entries[index]
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn total_tc(&self) -> u64 {
        self.total_tc
    }

    pub fn total_rc(&self) -> u64 {
        self.total_rc
    }

    pub fn is_special(index: usize) -> bool {
        index < SPECIALS.len()
    }

    /// Maps indices back to tokens, dropping the specials.
    pub fn decode(&self, indices: &[usize]) -> TokenSeq {
        indices
            .iter()
            .filter(|&&i| !Self::is_special(i) && i < self.len())
            .map(|&i| self.entries[i].token.clone())
            .collect::<Vec<_>>()
            .into()
    }

    /// `token<TAB>index<TAB>count_tc<TAB>count_rc`, one entry per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.token, i, e.count_tc, e.count_rc));
        }
        out
    }

    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (line_no, line) in content_lines(text) {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |msg: &str| Error::parse(origin, line_no, msg.to_string());
            if f.len() != 4 {
                return Err(bad("expected token, index, count_tc, count_rc"));
            }
            let idx: usize = f[1].parse().map_err(|_| bad("invalid index"))?;
            if idx != entries.len() {
                return Err(bad("indices must be dense and ascending"));
            }
            entries.push(VocabEntry {
                token: f[0].to_string(),
                count_tc: f[2].parse().map_err(|_| bad("invalid count_tc"))?,
                count_rc: f[3].parse().map_err(|_| bad("invalid count_rc"))?,
            });
        }
        if entries.len() < SPECIALS.len() || entries.iter().zip(SPECIALS).any(|(e, s)| e.token != s) {
            return Err(Error::parse(
                origin,
                1,
                "vocabulary must start with the 4 special tokens",
            ));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_tsv(&read_to_string(path)?, path)
    }

    /// Identity of the token space, stored in checkpoints.
    pub fn hash(&self) -> String {
        short_hash(self.to_tsv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    fn seq(s: &str) -> TokenSeq {
        TokenSeq(s.split_whitespace().map(str::to_string).collect())
    }

    #[test]
    fn parallel_rows() {
        let sl = StopList::empty("x");
        let c = parse_parallel("ciao mondo\thello world\nsolo\t\n", p(), &sl, &sl).unwrap();
        assert_eq!(c.pairs.len(), 1);
        assert_eq!(c.pairs[0].source, seq("ciao mondo"));
        assert_eq!(c.pairs[0].target, seq("hello world"));
        assert_eq!(c.dropped, 1);

        let err = parse_parallel("a\tb\nx\ty\tz\n", p(), &sl, &sl).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn jsonl_and_trec_documents() {
        let sl = StopList::empty("x");
        let d = parse_documents(r#"{"id":"d1","text":"Winter games."}"#, p(), &sl).unwrap();
        assert_eq!(d[0].doc_id, "d1");
        assert_eq!(d[0].tokens, seq("winter games"));

        let trec = "<DOC>\n<DOCNO> LA010194-0001 </DOCNO>\n<TEXT>\n<P>Gold medal</P>\n</TEXT>\n</DOC>\n";
        let d = parse_documents(trec, p(), &sl).unwrap();
        assert_eq!(d[0].doc_id, "LA010194-0001");
        assert_eq!(d[0].tokens, seq("gold medal"));

        let dup = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"b\"}\n";
        assert!(matches!(parse_documents(dup, p(), &sl), Err(Error::DuplicateDocId(_))));

        let bad = "{\"id\":\"d1\",\"text\":\"a\"}\n{oops\n";
        assert!(matches!(
            parse_documents(bad, p(), &sl),
            Err(Error::Parse { line: 2, .. })
        ));

        let unterminated = "<DOC>\n<DOCNO>x</DOCNO>\n";
        assert!(parse_documents(unterminated, p(), &sl).is_err());
    }

    #[test]
    fn empty_documents_are_dropped() {
        let sl = StopList::from_terms("x", ["the"]);
        let d = parse_documents(
            "{\"id\":\"d1\",\"text\":\"the 1999\"}\n{\"id\":2,\"text\":\"ok\"}",
            p(),
            &sl,
        )
        .unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].doc_id, "2");
    }

    #[test]
    fn qrels_and_topics() {
        let q = parse_qrels("41 0 LA011094-0123 1\n41 0 LA011094-0124 0\n", p()).unwrap();
        assert_eq!(q.grade("41", "LA011094-0123"), Some(1));
        assert_eq!(q.relevant_count("41"), 1);
        assert!(matches!(
            parse_qrels("41 0 d -1\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_qrels("41 0 d\n", p()).is_err());

        let q2 = parse_qrels("1 0 a 0\n2 0 b 2\n", p()).unwrap();
        assert_eq!(q2.queries_without_relevant(), vec!["1"]);

        let t = parse_topics(r#"{"qid":"41","title":"Winter Olympics","description":""}"#, p()).unwrap();
        assert_eq!(t[0].description, "");
        let t2 = parse_topics(r#"{"qid":7,"title":"x"}"#, p()).unwrap();
        assert_eq!(t2[0].qid, "7");
    }

    #[test]
    fn topic_tokens_use_title_and_description() {
        let sl = StopList::from_terms("en", ["at"]);
        let t = Topic {
            qid: "1".into(),
            title: "Winter Olympics".into(),
            description: "Medals won at Lillehammer".into(),
            human: None,
        };
        assert_eq!(
            topic_query_tokens(&t, &sl).unwrap(),
            seq("winter olympics medals won lillehammer")
        );
        let t2 = Topic {
            description: String::new(),
            ..t.clone()
        };
        assert_eq!(topic_query_tokens(&t2, &sl).unwrap(), seq("winter olympics"));
        let t3 = Topic {
            title: "at".into(),
            description: "at at".into(),
            ..t
        };
        assert!(topic_query_tokens(&t3, &sl).is_err());
    }

    #[test]
    fn vocab_counts_and_order() {
        let pairs = vec![
            ParallelPair {
                id: 0,
                source: seq("x"),
                target: seq("a b"),
            },
            ParallelPair {
                id: 1,
                source: seq("y"),
                target: seq("a"),
            },
        ];
        let docs = vec![Document {
            doc_id: "d".into(),
            tokens: seq("b c"),
            raw_length: 2,
        }];
        let v = Vocabulary::build(&pairs, &docs);
        assert_eq!(v.len(), 3 + 4);
        let e = |t: &str| {
            let x = v.entry(v.get(t).unwrap());
            (x.count_tc, x.count_rc)
        };
        assert_eq!(e("a"), (2, 0));
        assert_eq!(e("b"), (1, 1));
        assert_eq!(e("c"), (0, 1));
        // a and b tie on total count 2; lexicographic order breaks the tie
        assert_eq!(v.get("a"), Some(4));
        assert_eq!(v.get("b"), Some(5));
        assert_eq!(v.get("c"), Some(6));
        assert_eq!(v.total_tc(), 3);
        assert_eq!(v.total_rc(), 2);
        assert_eq!(v.index_or_unk("zzz"), UNK);

        let v2 = Vocabulary::parse_tsv(&v.to_tsv(), p()).unwrap();
        assert_eq!(v, v2);
        assert_eq!(v.hash(), v2.hash());
    }

    #[test]
    fn vocab_without_rc() {
        let pairs = vec![ParallelPair {
            id: 0,
            source: seq("x"),
            target: seq("a b"),
        }];
        let v = Vocabulary::build(&pairs, &[]);
        assert!(v.entries().iter().all(|e| e.count_rc == 0));
    }
}
