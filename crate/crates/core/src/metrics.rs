//! Evaluation measures: average precision, the balance of translation terms
//! between the translation and retrieval corpora, and translation
//! precision/recall against a reference rendering.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{QrelSet, Vocabulary};
use crate::error::{Error, Result};
use crate::io::{content_lines, read_to_string};
use crate::retrieval::RankedList;

/// Average precision of one ranked list. Relevance means grade > 0.
pub fn average_precision<'a>(ranking: impl IntoIterator<Item = &'a str>, qid: &str, qrels: &QrelSet) -> Result<f64> {
    let relevant = qrels.relevant_count(qid);
    if relevant == 0 {
        return Err(Error::data(format!("query {qid} has no relevant documents")));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, doc) in ranking.into_iter().enumerate() {
        if qrels.is_relevant(qid, doc) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / relevant as f64)
}

/// Arithmetic mean of per-query values.
pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::data("cannot average an empty set of values"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// MAP over every judged query with at least one relevant document; a
/// query missing from `runs` scores 0.
pub fn mean_average_precision(runs: &[RankedList], qrels: &QrelSet) -> Result<Vec<(String, f64)>> {
    let by_qid: HashMap<&str, &RankedList> = runs.iter().map(|r| (r.qid.as_str(), r)).collect();
    let mut out = Vec::new();
    for q in qrels.queries().filter(|q| qrels.relevant_count(q) > 0) {
        let ap = match by_qid.get(q) {
            Some(run) => average_precision(run.doc_ids(), q, qrels)?,
            None => 0.0,
        };
        out.push((q.to_string(), ap));
    }
    if out.is_empty() {
        return Err(Error::data("no query has a relevant document; nothing to evaluate"));
    }
    Ok(out)
}

/// Per-term corpus counts backing the balance measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TermStats {
    counts: HashMap<String, (u64, u64)>,
    total_tc: u64,
    total_rc: u64,
    vocab_size: usize,
    pseudo_count: f64,
}

impl TermStats {
    /// Add-one smoothing over `counts.len()` terms.
    pub fn new(counts: HashMap<String, (u64, u64)>) -> Self {
        let total_tc = counts.values().map(|c| c.0).sum();
        let total_rc = counts.values().map(|c| c.1).sum();
        let vocab_size = counts.len();
        TermStats {
            counts,
            total_tc,
            total_rc,
            vocab_size,
            pseudo_count: 1.0,
        }
    }

    pub fn from_vocab(vocab: &Vocabulary) -> Self {
        let counts = vocab
            .entries()
            .iter()
            .enumerate()
            .filter(|(i, _)| !Vocabulary::is_special(*i))
            .map(|(_, e)| (e.token.clone(), (e.count_tc, e.count_rc)))
            .collect();
        Self::new(counts)
    }

    pub fn with_pseudo_count(mut self, pseudo_count: f64) -> Result<Self> {
        if !(pseudo_count.is_finite() && pseudo_count > 0.0) {
            return Err(Error::Config(format!(
                "smoothing pseudo-count must be positive, got {pseudo_count}"
            )));
        }
        self.pseudo_count = pseudo_count;
        Ok(self)
    }

    /// The same statistics with the two corpora exchanged.
    pub fn swapped(&self) -> Self {
        TermStats {
            counts: self.counts.iter().map(|(t, &(a, b))| (t.clone(), (b, a))).collect(),
            total_tc: self.total_rc,
            total_rc: self.total_tc,
            ..self.clone()
        }
    }

    fn smoothed(&self, count: u64, total: u64) -> f64 {
        (count as f64 + self.pseudo_count) / (total as f64 + self.pseudo_count * self.vocab_size as f64)
    }

    pub fn p_tc(&self, term: &str) -> f64 {
        self.smoothed(self.counts.get(term).map_or(0, |c| c.0), self.total_tc)
    }

    pub fn p_rc(&self, term: &str) -> f64 {
        self.smoothed(self.counts.get(term).map_or(0, |c| c.1), self.total_rc)
    }

    /// `P_TC(t) / P_RC(t)`.
    pub fn ratio(&self, term: &str) -> f64 {
        self.p_tc(term) / self.p_rc(term)
    }
}

/// Mean TC/RC probability ratio over the distinct terms. Values near 1 mean
/// the terms are as likely in one corpus as in the other.
pub fn balance<S: AsRef<str>>(terms: &[S], stats: &TermStats) -> Result<f64> {
    let unique: BTreeSet<&str> = terms.iter().map(AsRef::as_ref).collect();
    if unique.is_empty() {
        return Err(Error::data("balance of an empty term set is undefined"));
    }
    Ok(unique.iter().map(|t| stats.ratio(t)).sum::<f64>() / unique.len() as f64)
}

/// `(|M ∩ H| / |M|, |M ∩ H| / |H|)` over distinct model and human terms.
pub fn translation_pr<S: AsRef<str>>(model_terms: &[S], human_terms: &[S]) -> Result<(f64, f64)> {
    let m: BTreeSet<&str> = model_terms.iter().map(AsRef::as_ref).collect();
    let h: BTreeSet<&str> = human_terms.iter().map(AsRef::as_ref).collect();
    if m.is_empty() || h.is_empty() {
        return Err(Error::data("precision/recall need non-empty model and human term sets"));
    }
    let common = m.intersection(&h).count() as f64;
    Ok((common / m.len() as f64, common / h.len() as f64))
}

/// A translated query with its optional reference translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub qid: String,
    /// Distinct output terms in order of first appearance.
    pub model_terms: Vec<String>,
    #[serde(default)]
    pub human_terms: Vec<String>,
    /// Raw decoder output, duplicates included; this is what gets retrieved.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub translation: Vec<String>,
}

impl TranslationRecord {
    pub fn new(qid: impl Into<String>, translation: Vec<String>, human_terms: Vec<String>) -> Self {
        let dedup = |v: &[String]| {
            let mut seen = BTreeSet::new();
            v.iter()
                .filter(|t| seen.insert(t.as_str()))
                .cloned()
                .collect::<Vec<_>>()
        };
        TranslationRecord {
            qid: qid.into(),
            model_terms: dedup(&translation),
            human_terms: dedup(&human_terms),
            translation,
        }
    }

    /// Tokens to issue as a query: the raw output when recorded.
    pub fn query(&self) -> &[String] {
        if self.translation.is_empty() {
            &self.model_terms
        } else {
            &self.translation
        }
    }
}

pub fn format_translations(records: &[TranslationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_translations(text: &str, origin: &Path) -> Result<Vec<TranslationRecord>> {
    content_lines(text)
        .map(|(ln, line)| {
            serde_json::from_str(line).map_err(|e| Error::parse(origin, ln, format!("invalid translation record: {e}")))
        })
        .collect()
}

pub fn load_translations(path: impl AsRef<Path>) -> Result<Vec<TranslationRecord>> {
    let path = path.as_ref();
    parse_translations(&read_to_string(path)?, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryScores {
    pub qid: String,
    pub ap: Option<f64>,
    pub balance: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub map: f64,
    pub mean_balance: Option<f64>,
    pub mean_p: Option<f64>,
    pub mean_r: Option<f64>,
    pub per_query: Vec<QueryScores>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    mean(&v).ok()
}

/// MAP plus, when translations are given, balance and precision/recall.
pub fn evaluate(
    runs: &[RankedList],
    qrels: &QrelSet,
    translations: Option<(&[TranslationRecord], &TermStats)>,
) -> Result<EvalSummary> {
    let aps = mean_average_precision(runs, qrels)?;
    let mut per_query: Vec<QueryScores> = aps
        .iter()
        .map(|(q, ap)| QueryScores {
            qid: q.clone(),
            ap: Some(*ap),
            balance: None,
            precision: None,
            recall: None,
        })
        .collect();
    if let Some((records, stats)) = translations {
        for r in records {
            let row = match per_query.iter().position(|s| s.qid == r.qid) {
                Some(i) => &mut per_query[i],
                None => {
                    per_query.push(QueryScores {
                        qid: r.qid.clone(),
                        ap: None,
                        balance: None,
                        precision: None,
                        recall: None,
                    });
                    per_query.last_mut().unwrap()
                }
            };
            row.balance = balance(&r.model_terms, stats).ok();
            if let Ok((p, rc)) = translation_pr(&r.model_terms, &r.human_terms) {
                row.precision = Some(p);
                row.recall = Some(rc);
            }
        }
    }
    let map = mean(&aps.iter().map(|(_, ap)| *ap).collect::<Vec<_>>())?;
    Ok(EvalSummary {
        map,
        mean_balance: mean_of(per_query.iter().map(|s| s.balance)),
        mean_p: mean_of(per_query.iter().map(|s| s.precision)),
        mean_r: mean_of(per_query.iter().map(|s| s.recall)),
        per_query,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl EvalSummary {
    pub fn per_query_csv(&self) -> String {
        let mut out = String::from("qid,ap,balance,precision,recall\n");
        for s in &self.per_query {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.qid,
                cell(s.ap),
                cell(s.balance),
                cell(s.precision),
                cell(s.recall)
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        format!(
            "map,mean_balance,mean_p,mean_r\n{},{},{},{}\n",
            cell(Some(self.map)),
            cell(self.mean_balance),
            cell(self.mean_p),
            cell(self.mean_r)
        )
    }
}
