use std::cmp::Ordering;

use proptest::prelude::*;
use ratnmt_core::corpus::Document;
use ratnmt_core::io::natural_cmp;
use ratnmt_core::retrieval::InvertedIndex;
use ratnmt_core::textprep::TokenSeq;

const ALPHABET: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];

fn docs_from(raw: &[Vec<usize>]) -> Vec<Document> {
    raw.iter()
        .enumerate()
        .map(|(i, toks)| Document {
            doc_id: format!("d{i}"),
            tokens: TokenSeq(toks.iter().map(|&t| ALPHABET[t].to_string()).collect()),
            raw_length: toks.len(),
        })
        .collect()
}

/// Scores every document straight from the token lists.
fn exhaustive(docs: &[Document], query: &[String], mu: f64) -> Option<Vec<(String, f64)>> {
    let total: usize = docs.iter().map(|d| d.tokens.len()).sum();
    let cf = |w: &str| docs.iter().flat_map(|d| d.tokens.iter()).filter(|t| *t == w).count();
    let mut distinct: Vec<&String> = query.iter().filter(|w| cf(w) > 0).collect();
    distinct.sort();
    distinct.dedup();
    if distinct.is_empty() {
        return None;
    }
    let mut out = Vec::new();
    for d in docs {
        if !distinct.iter().any(|w| d.tokens.contains(*w)) {
            continue;
        }
        let mut s = 0.0;
        for w in &distinct {
            let c = query.iter().filter(|q| q == w).count() as f64;
            let tf = d.tokens.iter().filter(|t| t == w).count() as f64;
            let p = mu * cf(w) as f64 / total as f64;
            s += c * ((tf + p) / (d.tokens.len() as f64 + mu)).ln();
        }
        out.push((d.doc_id.clone(), s));
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    Some(order_ties(out))
}

/// Scores within rounding of each other count as tied and go in id order.
fn order_ties(scored: Vec<(String, f64)>) -> Vec<(String, f64)> {
    let mut ordered = Vec::with_capacity(scored.len());
    let mut group: Vec<(String, f64)> = Vec::new();
    for entry in scored {
        if group.last().is_some_and(|last| last.1 - entry.1 > 1e-12) {
            group.sort_by(|a, b| natural_cmp(&a.0, &b.0));
            ordered.append(&mut group);
        }
        group.push(entry);
    }
    group.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    ordered.append(&mut group);
    ordered
}

fn corpus() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..ALPHABET.len(), 1..15), 1..100)
}

fn query() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0..ALPHABET.len() + 3, 1..=20).prop_map(|v| {
        v.into_iter()
            .map(|i| ALPHABET.get(i).map_or_else(|| format!("oov{i}"), |s| s.to_string()))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_matches_exhaustive_scorer(raw in corpus(), q in query(), k in 1usize..120, mu in 0.5f64..3000.0) {
        let docs = docs_from(&raw);
        let idx = InvertedIndex::build(&docs).unwrap();
        match exhaustive(&docs, &q, mu) {
            None => prop_assert!(idx.search(&q, k, mu).is_err()),
            Some(mut expected) => {
                expected.truncate(k);
                let got = idx.search(&q, k, mu).unwrap();
                prop_assert_eq!(got.len(), expected.len());
                for (g, e) in got.iter().zip(&expected) {
                    prop_assert_eq!(&g.doc_id, &e.0);
                    prop_assert!((g.score - e.1).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn postings_are_consistent(raw in corpus()) {
        let docs = docs_from(&raw);
        let idx = InvertedIndex::build(&docs).unwrap();
        let total: u64 = docs.iter().map(|d| d.tokens.len() as u64).sum();
        prop_assert_eq!(idx.total_tokens(), total);
        for t in ALPHABET {
            let p = idx.postings(t);
            let sum: u64 = p.iter().map(|&(_, tf)| tf as u64).sum();
            prop_assert_eq!(sum, idx.coll_freq(t));
            prop_assert!(p.windows(2).all(|w| natural_cmp(w[0].0, w[1].0) == Ordering::Less));
        }
    }

    #[test]
    fn more_query_term_occurrences_raise_the_score(
        raw in corpus(),
        q in query(),
        pick in any::<prop::sample::Index>(),
        pos in any::<prop::sample::Index>(),
    ) {
        let docs = docs_from(&raw);
        let idx = InvertedIndex::build(&docs).unwrap();
        let Ok(hits) = idx.search(&q, 1000, 1500.0) else { return Ok(()); };
        let target = &hits[pick.index(hits.len())].doc_id;
        let d = docs.iter().position(|d| &d.doc_id == target).unwrap();
        let replaceable: Vec<usize> = (0..docs[d].tokens.len()).filter(|&i| !q.contains(&docs[d].tokens[i])).collect();
        prop_assume!(!replaceable.is_empty());
        let w = q.iter().find(|w| idx.coll_freq(w) > 0).unwrap().clone();

        // Swap a non-query token for a query term: doc length and
        // collection size stay fixed, tf(w, d) grows by one.
        let mut bumped = docs.clone();
        bumped[d].tokens.0[replaceable[pos.index(replaceable.len())]] = w;
        let idx2 = InvertedIndex::build(&bumped).unwrap();
        let before = idx.ql_dirichlet_score(&q, target, 1500.0).unwrap();
        let after = idx2.ql_dirichlet_score(&q, target, 1500.0).unwrap();
        prop_assert!(after > before);
    }

    #[test]
    fn unrelated_documents_do_not_disturb_ranking(raw in corpus(), q in query(), len in 1usize..10) {
        // Two indexes differing only in one query-disjoint document of equal
        // length, so collection size is held fixed.
        let mut a = docs_from(&raw);
        let mut b = a.clone();
        let extra = |tok: &str| Document {
            doc_id: "zextra".into(),
            tokens: TokenSeq(vec![tok.to_string(); len]),
            raw_length: len,
        };
        a.push(extra("unrelatedx"));
        b.push(extra("unrelatedy"));
        let ia = InvertedIndex::build(&a).unwrap();
        let ib = InvertedIndex::build(&b).unwrap();
        match (ia.search(&q, 1000, 1500.0), ib.search(&q, 1000, 1500.0)) {
            (Ok(ha), Ok(hb)) => {
                prop_assert!(ha.iter().all(|h| h.doc_id != "zextra"));
                prop_assert_eq!(ha, hb);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "scoreability differs"),
        }
    }

    #[test]
    fn index_survives_serialization(raw in corpus()) {
        let idx = InvertedIndex::build(&docs_from(&raw)).unwrap();
        let header = ratnmt_core::io::ArtifactHeader::new(3, "cfg");
        let back = InvertedIndex::from_bytes(&idx.to_bytes(&header), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(idx, back);
    }
}
