use gnrr_core::corpus::{Qrels, RunFile};
use gnrr_core::metrics::{ap, evaluate_run, ndcg_at_k, precision_at_k, rr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// A query with `n` retrieved docs and a few judged-but-unretrieved ones.
fn instance(rng: &mut ChaCha8Rng, n: usize) -> (Vec<String>, Qrels) {
    let docs: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
    let mut qrels = Qrels::new();
    for d in &docs {
        if rng.random_bool(0.8) {
            qrels.insert("q", d, rng.random_range(0..4)).unwrap();
        }
    }
    for extra in 0..rng.random_range(0..3) {
        qrels.insert("q", &format!("missing{extra}"), rng.random_range(0..4)).unwrap();
    }
    (docs, qrels)
}

fn grade(qrels: &Qrels, d: &str) -> u32 {
    qrels.grade("q", d).unwrap_or(0)
}

fn oracle_dcg(grades: &[u32], k: usize) -> f64 {
    grades.iter().take(k).enumerate().map(|(i, &g)| g as f64 / ((i + 2) as f64).log2()).sum()
}

#[test]
fn agree_with_exhaustive_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=6 {
        let perms = permutations(n);
        for _ in 0..20 {
            let (docs, qrels) = instance(&mut rng, n);
            let judged: Vec<u32> = qrels.for_query("q").map(|m| m.values().copied().collect()).unwrap_or_default();
            let r_total = judged.iter().filter(|&&g| g >= 2).count();
            // IDCG by brute force: the best DCG over every ordering of the judged pool
            let pool_perms = permutations(judged.len().min(7));
            for k in [1, 3, 5, 10] {
                let idcg = pool_perms
                    .iter()
                    .map(|p| oracle_dcg(&p.iter().map(|&i| judged[i]).collect::<Vec<_>>(), k))
                    .fold(0.0, f64::max);
                let mut best = f64::NEG_INFINITY;
                let mut best_at_ideal = true;
                for p in &perms {
                    let ranking: Vec<&str> = p.iter().map(|&i| docs[i].as_str()).collect();
                    let grades: Vec<u32> = ranking.iter().map(|d| grade(&qrels, d)).collect();
                    let rel: Vec<bool> = grades.iter().map(|&g| g >= 2).collect();

                    let want_ndcg = if idcg > 0.0 { oracle_dcg(&grades, k) / idcg } else { 0.0 };
                    let got = ndcg_at_k(&ranking, &qrels, "q", k);
                    assert!((got - want_ndcg).abs() < 1e-9);
                    best = best.max(got);

                    let hits = rel.iter().take(k).filter(|&&r| r).count();
                    assert!((precision_at_k(&ranking, &qrels, "q", k) - hits as f64 / k as f64).abs() < 1e-12);

                    // ndcg reaches 1 exactly when the prefix is a descending-grade sort
                    // of the judged pool
                    let mut sorted = judged.clone();
                    sorted.sort_unstable_by(|a, b| b.cmp(a));
                    let prefix_ideal = (0..k.min(n)).all(|i| grades[i] == sorted.get(i).copied().unwrap_or(0))
                        && (n >= k || sorted.iter().skip(n).take(k - n).all(|&g| g == 0));
                    if idcg > 0.0 {
                        assert_eq!((got - 1.0).abs() < 1e-12, prefix_ideal, "{grades:?} {judged:?} k={k}");
                        if prefix_ideal {
                            best_at_ideal &= got >= best - 1e-12;
                        }
                    }
                }
                assert!(best_at_ideal);
            }
            for p in &perms {
                let ranking: Vec<&str> = p.iter().map(|&i| docs[i].as_str()).collect();
                let rel: Vec<bool> = ranking.iter().map(|d| grade(&qrels, d) >= 2).collect();
                let mut sum = 0.0;
                for i in 0..n {
                    if rel[i] {
                        sum += rel[..=i].iter().filter(|&&r| r).count() as f64 / (i + 1) as f64;
                    }
                }
                let want_ap = if r_total == 0 { 0.0 } else { sum / r_total as f64 };
                assert!((ap(&ranking, &qrels, "q") - want_ap).abs() < 1e-9);
                let want_rr = rel.iter().position(|&r| r).map_or(0.0, |i| 1.0 / (i + 1) as f64);
                assert!((rr(&ranking, &qrels, "q") - want_rr).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn promoting_a_relevant_document_never_hurts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let (docs, qrels) = instance(&mut rng, 6);
        let i = rng.random_range(1..6);
        if grade(&qrels, &docs[i]) < 2 || grade(&qrels, &docs[i - 1]) >= 2 {
            continue;
        }
        let mut up = docs.clone();
        up.swap(i - 1, i);
        assert!(ap(&up, &qrels, "q") >= ap(&docs, &qrels, "q"));
        assert!(rr(&up, &qrels, "q") >= rr(&docs, &qrels, "q"));
        for k in 1..=6 {
            assert!(precision_at_k(&up, &qrels, "q", k) >= precision_at_k(&docs, &qrels, "q", k));
        }
    }
}

#[test]
fn monotone_score_transforms_change_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut qrels = Qrels::new();
    let mut rows = Vec::new();
    let mut squashed = Vec::new();
    for q in 0..5 {
        let qid = format!("q{q}");
        let mut scores: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
        scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let docs: Vec<String> = (0..8).map(|i| format!("d{}", (i * 5) % 8)).collect();
        for d in &docs {
            qrels.insert(&qid, d, rng.random_range(0..4)).unwrap();
        }
        rows.extend(RunFile::ranked_rows(&qid, docs.iter().map(String::as_str).zip(scores.iter().copied()), "a"));
        squashed.extend(RunFile::ranked_rows(&qid, docs.iter().map(String::as_str).zip(scores.iter().map(|s| s.exp())), "b"));
    }
    let a = evaluate_run(&RunFile::new(rows), &qrels, &[3, 10]).unwrap();
    let b = evaluate_run(&RunFile::new(squashed), &qrels, &[3, 10]).unwrap();
    for m in a.metric_names() {
        assert_eq!(a.values(m), b.values(m));
    }
}

#[test]
fn hand_values() {
    let mut q = Qrels::new();
    for (d, g) in [("a", 2), ("b", 0), ("c", 3)] {
        q.insert("q", d, g).unwrap();
    }
    assert_eq!(format!("{:.6}", ap(&["a", "b", "c"], &q, "q")), "0.833333");
    let mut q = Qrels::new();
    for (d, g) in [("a", 3), ("b", 0), ("c", 1)] {
        q.insert("q", d, g).unwrap();
    }
    assert_eq!(format!("{:.6}", ndcg_at_k(&["a", "b", "c"], &q, "q", 3)), "0.963940");
}

#[test]
fn report_means_and_csv_shape() {
    let qrels = Qrels::parse("q1 0 a 2\nq1 0 b 0\nq2 0 c 3\nq2 0 d 1\n").unwrap();
    let run = RunFile::new(
        [("q1", ["a", "b"]), ("q2", ["d", "c"])]
            .iter()
            .flat_map(|(q, ds)| RunFile::ranked_rows(q, ds.iter().copied().zip([2.0, 1.0]), "t"))
            .collect(),
    );
    let r = evaluate_run(&run, &qrels, &[1]).unwrap();
    assert_eq!(r.n_queries("ap"), 2);
    assert_eq!(r.mean("rr"), (1.0 + 0.5) / 2.0);
    assert_eq!(r.mean("p@1"), 0.5);
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("metric,query_id,value"));
    let rest: Vec<&str> = lines.collect();
    assert!(rest.iter().all(|l| l.split(',').count() == 3));
    assert!(rest.iter().any(|l| l.starts_with("rr,ALL,")));
    let perfect = RunFile::new(RunFile::ranked_rows("q1", [("a", 1.0), ("b", 0.5)], "t"));
    let p = evaluate_run(&perfect, &Qrels::parse("q1 0 a 2\nq1 0 b 0\n").unwrap(), &[1]).unwrap();
    for m in p.metric_names() {
        assert_eq!(p.mean(m), 1.0, "{m}");
    }
    assert!(evaluate_run(&perfect, &Qrels::parse("zz 0 a 2\n").unwrap(), &[1]).is_err());
}
