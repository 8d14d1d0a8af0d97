use std::collections::HashMap;

use proptest::prelude::*;
use ratnmt_core::corpus::QrelSet;
use ratnmt_core::metrics::{average_precision, balance, translation_pr, TermStats};

/// Recomputes precision at every rank from scratch.
fn ap_oracle(ranking: &[String], relevant: &[String]) -> f64 {
    let mut total = 0.0;
    for k in 1..=ranking.len() {
        if relevant.contains(&ranking[k - 1]) {
            let rel_in_top_k = ranking[..k].iter().filter(|d| relevant.contains(d)).count();
            total += rel_in_top_k as f64 / k as f64;
        }
    }
    total / relevant.len() as f64
}

fn ranking_and_qrels() -> impl Strategy<Value = (Vec<String>, Vec<(String, u32)>)> {
    (1usize..=50, 1usize..=60).prop_flat_map(|(n, pool)| {
        let pool = pool.max(n);
        (
            Just((0..pool).map(|i| format!("d{i}")).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(0u32..3, pool),
        )
            .prop_map(move |(docs, grades)| {
                let judged = docs.iter().cloned().zip(grades).collect();
                (docs[..n].to_vec(), judged)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ap_matches_rank_by_rank_oracle((ranking, judged) in ranking_and_qrels()) {
        let mut q = QrelSet::new();
        for (d, g) in &judged {
            q.insert("q", d.clone(), *g);
        }
        let relevant: Vec<String> = judged.iter().filter(|(_, g)| *g > 0).map(|(d, _)| d.clone()).collect();
        let got = average_precision(ranking.iter().map(String::as_str), "q", &q);
        if relevant.is_empty() {
            prop_assert!(got.is_err());
        } else {
            let ap = got.unwrap();
            prop_assert!((ap - ap_oracle(&ranking, &relevant)).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ap));
        }
    }
}

fn stats() -> impl Strategy<Value = HashMap<String, (u64, u64)>> {
    prop::collection::vec((0u64..50, 0u64..50), 1..30).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, c)| (format!("t{i}"), c))
            .filter(|(_, (a, b))| a + b > 0)
            .collect()
    })
}

proptest! {
    #[test]
    fn balance_is_positive_and_set_valued(counts in stats(), picks in prop::collection::vec(0usize..40, 1..20)) {
        prop_assume!(!counts.is_empty());
        let s = TermStats::new(counts);
        let terms: Vec<String> = picks.iter().map(|i| format!("t{i}")).collect();
        let b = balance(&terms, &s).unwrap();
        prop_assert!(b > 0.0 && b.is_finite());
        let mut doubled = terms.clone();
        doubled.extend(terms.iter().cloned());
        prop_assert_eq!(balance(&doubled, &s).unwrap(), b);
    }

    #[test]
    fn swapping_corpora_inverts_each_ratio(counts in stats()) {
        prop_assume!(!counts.is_empty());
        let s = TermStats::new(counts.clone());
        let w = s.swapped();
        for t in counts.keys() {
            prop_assert!((s.ratio(t) * w.ratio(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn precision_recall_bounded(m in prop::collection::vec("[a-e]", 1..8), h in prop::collection::vec("[a-e]", 1..8)) {
        let (p, r) = translation_pr(&m, &h).unwrap();
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&r));
    }
}
