use std::collections::HashMap;

use gnrr_core::corpus::{tokenize, Collection};
use gnrr_core::lexical::{InvertedIndex, DEFAULT_B, DEFAULT_K1};
use proptest::prelude::*;

const WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu"];

fn corpus(max_docs: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(WORDS), 1..15).prop_map(|w| w.join(" ")), 1..max_docs)
}

fn query() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(WORDS).prop_map(String::from), 0..5)
}

fn collection(texts: &[String]) -> Collection {
    // zero-padded ids so id order and index order coincide only by accident
    Collection::from_pairs(texts.iter().enumerate().map(|(i, t)| (format!("doc{:03}", (i * 7) % 1000), t.clone())).collect())
        .unwrap()
}

/// Scores every document straight from the formula, no index.
fn oracle_scores(texts: &[String], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    docs.iter()
        .map(|d| {
            let mut tf: HashMap<&str, f64> = HashMap::new();
            for t in d {
                *tf.entry(t).or_default() += 1.0;
            }
            query
                .iter()
                .map(|t| {
                    let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                    let f = tf.get(t.as_str()).copied().unwrap_or(0.0);
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * d.len() as f64 / avg))
                })
                .sum()
        })
        .collect()
}

fn oracle_topk(c: &Collection, scores: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> =
        scores.iter().enumerate().filter(|(_, &s)| s > 0.0).map(|(i, &s)| (c.id(i).to_string(), s)).collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn topk_matches_exhaustive_oracle(texts in corpus(50), q in query(), k in 1usize..20) {
        let c = collection(&texts);
        let idx = InvertedIndex::build(&c, DEFAULT_K1, DEFAULT_B).unwrap();
        let expected = oracle_topk(&c, &oracle_scores(&texts, &q, DEFAULT_K1, DEFAULT_B), k);
        let got = idx.retrieve("q", &q, k).unwrap();
        prop_assert_eq!(got.entries.len(), expected.len());
        for ((gd, gs), (ed, es)) in got.entries.iter().zip(&expected) {
            prop_assert!((gs - es).abs() < 1e-9, "{} vs {}", gs, es);
            // equal scores up to rounding may legitimately swap
            if (gs - es).abs() < 1e-12 { prop_assert_eq!(gd, ed); }
        }
    }

    #[test]
    fn smaller_k_is_a_prefix(texts in corpus(40), q in query(), k in 1usize..10, extra in 0usize..30) {
        let idx = InvertedIndex::build(&collection(&texts), 1.2, 0.75).unwrap();
        let small = idx.retrieve("q", &q, k).unwrap();
        let large = idx.retrieve("q", &q, k + extra).unwrap();
        prop_assert_eq!(&large.entries[..small.entries.len()], &small.entries[..]);
    }

    #[test]
    fn stored_scores_recompute(texts in corpus(40), q in query()) {
        let c = collection(&texts);
        let idx = InvertedIndex::build(&c, DEFAULT_K1, DEFAULT_B).unwrap();
        for (d, s) in &idx.retrieve("q", &q, 1000).unwrap().entries {
            let doc = c.index_of(d).unwrap();
            prop_assert!((idx.score(&q, doc) - s).abs() < 1e-9);
            prop_assert!(*s > 0.0);
        }
    }

    #[test]
    fn postings_are_consistent(texts in corpus(30)) {
        let idx = InvertedIndex::build(&collection(&texts), DEFAULT_K1, DEFAULT_B).unwrap();
        let mut per_doc = vec![0u32; idx.n_docs()];
        for (_, postings) in idx.terms() {
            prop_assert!(postings.windows(2).all(|w| w[0].doc < w[1].doc));
            for p in postings { per_doc[p.doc as usize] += p.tf; }
        }
        prop_assert_eq!(&per_doc[..], idx.doc_len());
        let mean = idx.doc_len().iter().map(|&l| l as f64).sum::<f64>() / idx.n_docs() as f64;
        prop_assert!((idx.avg_dl() - mean).abs() < 1e-12);
    }

    #[test]
    fn index_bytes_round_trip(texts in corpus(20)) {
        let idx = InvertedIndex::build(&collection(&texts), 0.9, 0.4).unwrap();
        let bytes = idx.to_bytes().unwrap();
        let back = InvertedIndex::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        prop_assert_eq!(back, idx);
    }

    /// A new document that shares no query term, has average length and
    /// therefore leaves df and avg_dl unchanged, cannot reorder the
    /// matched documents.
    #[test]
    fn unrelated_average_document_keeps_order(texts in corpus(30), term in prop::sample::select(WORDS)) {
        let q = vec![term.to_string()];
        // pad the first document so the average length is an integer
        let mut texts = texts;
        let total: usize = texts.iter().map(|t| tokenize(t).len()).sum();
        let pad = (texts.len() - total % texts.len()) % texts.len();
        texts[0].push_str(&" pad".repeat(pad));
        let c = collection(&texts);
        let idx = InvertedIndex::build(&c, DEFAULT_K1, DEFAULT_B).unwrap();
        let avg = idx.avg_dl();
        prop_assert_eq!(avg.fract(), 0.0);
        let filler = vec!["omega"; avg as usize].join(" ");
        let mut more = texts.clone();
        more.push(filler);
        let idx2 = InvertedIndex::build(&collection(&more), DEFAULT_K1, DEFAULT_B).unwrap();
        let before: Vec<String> = idx.retrieve("q", &q, 1000).unwrap().doc_ids().map(String::from).collect();
        let after: Vec<String> = idx2.retrieve("q", &q, 1000).unwrap().doc_ids().map(String::from).collect();
        prop_assert_eq!(before, after);
    }
}

#[test]
fn short_and_empty_queries() {
    let c = Collection::from_pairs(vec![("a".into(), "x y".into()), ("b".into(), "y z".into())]).unwrap();
    let idx = InvertedIndex::build(&c, DEFAULT_K1, DEFAULT_B).unwrap();
    assert!(idx.retrieve_text("q", "", 10).unwrap().is_empty());
    assert!(idx.retrieve_text("q", "unknown", 10).unwrap().is_empty());
    // k larger than the match count returns every match
    assert_eq!(idx.retrieve_text("q", "x z", 10).unwrap().len(), 2);
    assert_eq!(idx.score(&["nothing"], 0), 0.0);
}

#[test]
fn single_document_average_is_its_length() {
    let c = Collection::from_pairs(vec![("a".into(), "one two three".into())]).unwrap();
    assert_eq!(InvertedIndex::build(&c, DEFAULT_K1, DEFAULT_B).unwrap().avg_dl(), 3.0);
    assert!(InvertedIndex::build(&Collection::parse("").unwrap(), DEFAULT_K1, DEFAULT_B).is_err());
}

#[test]
fn corrupt_index_bytes_are_rejected() {
    let c = Collection::from_pairs(vec![("a".into(), "x y".into())]).unwrap();
    let bytes = InvertedIndex::build(&c, DEFAULT_K1, DEFAULT_B).unwrap().to_bytes().unwrap();
    assert!(InvertedIndex::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    assert!(InvertedIndex::from_bytes(b"XXXX").is_err());
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(InvertedIndex::from_bytes(&longer).is_err());
}
