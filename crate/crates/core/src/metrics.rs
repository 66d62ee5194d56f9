//! AP, RR, P@k and nDCG@k.
//!
//! AP, RR and P@k binarize at grade ≥ [`RELEVANCE_THRESHOLD`]; nDCG uses
//! the raw grades with linear gain and `log2(i + 1)` discount. Unjudged
//! documents count as grade 0.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::corpus::{Qrels, RunFile};
use crate::{Error, Result};

pub const RELEVANCE_THRESHOLD: u32 = 2;

#[inline]
pub fn is_relevant(grade: u32) -> bool {
    grade >= RELEVANCE_THRESHOLD
}

/// Grades of a ranking, in ranked order.
pub fn ranked_grades<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, query_id: &str) -> Vec<u32> {
    ranking.iter().map(|d| qrels.grade_or_zero(query_id, d.as_ref())).collect()
}

fn judged_grades(qrels: &Qrels, query_id: &str) -> Vec<u32> {
    qrels.for_query(query_id).map(|m| m.values().copied().collect()).unwrap_or_default()
}

fn total_relevant(qrels: &Qrels, query_id: &str) -> usize {
    judged_grades(qrels, query_id).into_iter().filter(|&g| is_relevant(g)).count()
}

/// Average precision with `total_relevant` as the recall base.
pub fn ap_from_grades(grades: &[u32], total_relevant: usize) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &g) in grades.iter().enumerate() {
        if is_relevant(g) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

pub fn rr_from_grades(grades: &[u32]) -> f64 {
    grades.iter().position(|&g| is_relevant(g)).map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Rankings shorter than `k` count as padded with non-relevant documents.
pub fn precision_from_grades(grades: &[u32], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    grades.iter().take(k).filter(|&&g| is_relevant(g)).count() as f64 / k as f64
}

pub fn dcg(grades: &[u32], k: usize) -> f64 {
    grades.iter().take(k).enumerate().map(|(i, &g)| f64::from(g) / libm::log2((i + 2) as f64)).sum()
}

/// nDCG@k with the ideal ordering taken over `ideal_pool`; `None` when
/// the pool has no positive grade.
pub fn ndcg_from_grades(grades: &[u32], ideal_pool: &[u32], k: usize) -> Option<f64> {
    let mut ideal = ideal_pool.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal, k);
    if idcg <= 0.0 {
        return None;
    }
    Some((dcg(grades, k) / idcg).min(1.0))
}

pub fn ap<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, query_id: &str) -> f64 {
    ap_from_grades(&ranked_grades(ranking, qrels, query_id), total_relevant(qrels, query_id))
}

pub fn rr<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, query_id: &str) -> f64 {
    rr_from_grades(&ranked_grades(ranking, qrels, query_id))
}

pub fn precision_at_k<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, query_id: &str, k: usize) -> f64 {
    precision_from_grades(&ranked_grades(ranking, qrels, query_id), k)
}

/// 0.0 for a query with no positive judgment; [`evaluate_run`] skips
/// those instead.
pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], qrels: &Qrels, query_id: &str, k: usize) -> f64 {
    ndcg_from_grades(&ranked_grades(ranking, qrels, query_id), &judged_grades(qrels, query_id), k).unwrap_or(0.0)
}

/// Per-query values and macro-averages, metrics in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    names: Vec<String>,
    per_query: BTreeMap<String, BTreeMap<String, f64>>,
}

impl MetricReport {
    pub fn metric_names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self, metric: &str) -> Option<&BTreeMap<String, f64>> {
        self.per_query.get(metric)
    }

    pub fn value(&self, metric: &str, query_id: &str) -> Option<f64> {
        self.per_query.get(metric)?.get(query_id).copied()
    }

    /// Number of queries a metric was evaluated on.
    pub fn n_queries(&self, metric: &str) -> usize {
        self.per_query.get(metric).map_or(0, BTreeMap::len)
    }

    /// Arithmetic mean over evaluated queries (0 when none).
    pub fn mean(&self, metric: &str) -> f64 {
        match self.per_query.get(metric) {
            Some(v) if !v.is_empty() => v.values().sum::<f64>() / v.len() as f64,
            _ => 0.0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,query_id,value\n");
        for name in &self.names {
            for (q, v) in &self.per_query[name] {
                let _ = writeln!(out, "{name},{q},{v:.6}");
            }
            let _ = writeln!(out, "{name},ALL,{:.6}", self.mean(name));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let width = self.names.iter().map(String::len).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>7}", "metric", "value", "queries");
        for name in &self.names {
            let _ = writeln!(out, "{:<width$}  {:>8.4}  {:>7}", name, self.mean(name), self.n_queries(name));
        }
        out
    }
}

/// Evaluates every query in `qrels`. Queries missing from the run score
/// 0; queries without relevant documents are skipped for the binarized
/// metrics, and those without any positive grade for nDCG.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels, ks: &[usize]) -> Result<MetricReport> {
    let rankings = run.rankings();
    if !qrels.query_ids().any(|q| rankings.contains_key(q)) {
        return Err(Error::InvalidArgument("run and qrels share no query".into()));
    }
    let mut names = alloc::vec![String::from("ap"), String::from("rr")];
    names.extend(ks.iter().map(|k| alloc::format!("p@{k}")));
    names.extend(ks.iter().map(|k| alloc::format!("ndcg@{k}")));
    let mut per_query: BTreeMap<String, BTreeMap<String, f64>> =
        names.iter().map(|n| (n.clone(), BTreeMap::new())).collect();
    let empty = Vec::new();
    for q in qrels.query_ids() {
        let ranking = rankings.get(q).unwrap_or(&empty);
        let grades = ranked_grades(ranking, qrels, q);
        let pool = judged_grades(qrels, q);
        let relevant = pool.iter().filter(|&&g| is_relevant(g)).count();
        let mut put = |name: String, v: f64| {
            per_query.get_mut(&name).expect("metric registered").insert(q.to_string(), v);
        };
        if relevant > 0 {
            put("ap".into(), ap_from_grades(&grades, relevant));
            put("rr".into(), rr_from_grades(&grades));
            for &k in ks {
                put(alloc::format!("p@{k}"), precision_from_grades(&grades, k));
            }
        }
        for &k in ks {
            if let Some(v) = ndcg_from_grades(&grades, &pool, k) {
                put(alloc::format!("ndcg@{k}"), v);
            }
        }
    }
    Ok(MetricReport { names, per_query })
}
