//! Collections, query sets, graded judgments and TREC run files.
//!
//! Collections and queries are `id<TAB>text` lines, judgments are the
//! four-column qrels layout (`query_id 0 doc_id grade`) and runs are the
//! six-column TREC layout (`query_id Q0 doc_id rank score tag`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::{Error, Result};

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Non-empty lines with their 1-based line numbers, `\r` stripped.
fn lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_tsv_pairs(src: &str) -> Result<Vec<(String, String)>> {
    lines(src)
        .map(|(line, l)| {
            let (id, text) = l.split_once('\t').ok_or_else(|| Error::Parse {
                line,
                msg: "expected `id<TAB>text`".into(),
            })?;
            if id.is_empty() {
                return Err(Error::Parse { line, msg: "empty id".into() });
            }
            Ok((id.to_string(), text.to_string()))
        })
        .collect()
}

fn index_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<BTreeMap<String, u32>> {
    let mut index = BTreeMap::new();
    for (i, id) in ids.enumerate() {
        let i = u32::try_from(i).map_err(|_| Error::InvalidArgument("more than u32::MAX entries".into()))?;
        if index.insert(id.to_string(), i).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(index)
}

/// Documents in file order with a dense `doc_id → index` map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collection {
    docs: Vec<(String, String)>,
    id_index: BTreeMap<String, u32>,
}

impl Collection {
    pub fn from_pairs(docs: Vec<(String, String)>) -> Result<Self> {
        let id_index = index_ids(docs.iter().map(|(id, _)| id.as_str()))?;
        Ok(Self { docs, id_index })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::from_pairs(parse_tsv_pairs(src)?)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.docs[index].0
    }

    pub fn text(&self, index: usize) -> &str {
        &self.docs[index].1
    }

    pub fn index_of(&self, doc_id: &str) -> Option<usize> {
        self.id_index.get(doc_id).map(|&i| i as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.docs.iter().map(|(id, text)| (id.as_str(), text.as_str()))
    }

    pub fn to_tsv(&self) -> String {
        to_tsv(self.iter())
    }
}

fn to_tsv<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    for (id, text) in pairs {
        out.push_str(id);
        out.push('\t');
        out.push_str(text);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuerySet {
    queries: Vec<(String, String)>,
}

impl QuerySet {
    pub fn from_pairs(queries: Vec<(String, String)>) -> Result<Self> {
        index_ids(queries.iter().map(|(id, _)| id.as_str()))?;
        Ok(Self { queries })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::from_pairs(parse_tsv_pairs(src)?)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.queries.iter().map(|(id, text)| (id.as_str(), text.as_str()))
    }

    pub fn get(&self, query_id: &str) -> Option<&str> {
        self.iter().find(|(id, _)| *id == query_id).map(|(_, t)| t)
    }

    pub fn to_tsv(&self) -> String {
        to_tsv(self.iter())
    }
}

/// Graded judgments, stored as given (no binarization).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let per_query = self.judgments.entry(query_id.to_string()).or_default();
        if per_query.insert(doc_id.to_string(), grade).is_some() {
            return Err(Error::DuplicateJudgment { query_id: query_id.into(), doc_id: doc_id.into() });
        }
        Ok(())
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut qrels = Self::new();
        for (line, l) in lines(src) {
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [query_id, _iter, doc_id, grade] = fields[..] else {
                return Err(Error::Parse { line, msg: format!("expected 4 fields, found {}", fields.len()) });
            };
            let grade: u32 = grade
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("grade `{grade}` is not a non-negative integer") })?;
            qrels.insert(query_id, doc_id, grade).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        Ok(qrels)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    /// Grade with unjudged documents counted as 0.
    pub fn grade_or_zero(&self, query_id: &str, doc_id: &str) -> u32 {
        self.grade(query_id, doc_id).unwrap_or(0)
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keeps only the given queries.
    pub fn restrict<'a>(&self, query_ids: impl IntoIterator<Item = &'a str>) -> Qrels {
        let keep: BTreeSet<&str> = query_ids.into_iter().collect();
        Qrels {
            judgments: self
                .judgments
                .iter()
                .filter(|(q, _)| keep.contains(q.as_str()))
                .map(|(q, m)| (q.clone(), m.clone()))
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (q, docs) in &self.judgments {
            for (d, g) in docs {
                let _ = writeln!(out, "{q} 0 {d} {g}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub tag: String,
}

/// Ranked output, one row per (query, document).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    pub rows: Vec<RunRow>,
}

impl RunFile {
    pub fn new(rows: Vec<RunRow>) -> Self {
        Self { rows }
    }

    /// Rows for one query from an already ordered `(doc_id, score)` list.
    pub fn ranked_rows<'a>(
        query_id: &str,
        ranked: impl IntoIterator<Item = (&'a str, f64)>,
        tag: &str,
    ) -> Vec<RunRow> {
        ranked
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RunRow {
                query_id: query_id.to_string(),
                doc_id: doc_id.to_string(),
                rank: i as u32 + 1,
                score,
                tag: tag.to_string(),
            })
            .collect()
    }

    /// Rows grouped by query and sorted by rank.
    pub fn by_query(&self) -> BTreeMap<&str, Vec<&RunRow>> {
        let mut out: BTreeMap<&str, Vec<&RunRow>> = BTreeMap::new();
        for row in &self.rows {
            out.entry(row.query_id.as_str()).or_default().push(row);
        }
        for rows in out.values_mut() {
            rows.sort_by_key(|r| r.rank);
        }
        out
    }

    /// Ranked doc ids per query.
    pub fn rankings(&self) -> BTreeMap<String, Vec<String>> {
        self.by_query()
            .into_iter()
            .map(|(q, rows)| (q.to_string(), rows.into_iter().map(|r| r.doc_id.clone()).collect()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (q, rows) in self.by_query() {
            let mut seen = BTreeSet::new();
            for (i, row) in rows.iter().enumerate() {
                if row.rank as usize != i + 1 {
                    return Err(Error::InvalidRun(format!("query {q}: expected rank {}, found {}", i + 1, row.rank)));
                }
                if !row.score.is_finite() {
                    return Err(Error::InvalidRun(format!("query {q}: non-finite score at rank {}", row.rank)));
                }
                if i > 0 && row.score > rows[i - 1].score {
                    return Err(Error::InvalidRun(format!("query {q}: score increases at rank {}", row.rank)));
                }
                if !seen.insert(row.doc_id.as_str()) {
                    return Err(Error::InvalidRun(format!("query {q}: duplicate doc {}", row.doc_id)));
                }
                if row.tag.is_empty() || row.tag.contains(char::is_whitespace) {
                    return Err(Error::InvalidRun(format!("query {q}: tag must be a single non-empty word")));
                }
            }
        }
        Ok(())
    }

    /// Validates, then renders `query_id Q0 doc_id rank score tag` lines.
    pub fn to_trec(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(out, "{} Q0 {} {} {:.6} {}", r.query_id, r.doc_id, r.rank, r.score, r.tag);
        }
        Ok(out)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (line, l) in lines(src) {
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [query_id, _q0, doc_id, rank, score, tag] = fields[..] else {
                return Err(Error::Parse { line, msg: format!("expected 6 fields, found {}", fields.len()) });
            };
            let rank = rank.parse().map_err(|_| Error::Parse { line, msg: format!("bad rank `{rank}`") })?;
            let score = score.parse().map_err(|_| Error::Parse { line, msg: format!("bad score `{score}`") })?;
            rows.push(RunRow { query_id: query_id.into(), doc_id: doc_id.into(), rank, score, tag: tag.into() });
        }
        let run = RunFile { rows };
        run.validate()?;
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Hello, World!"), vec!["hello", "world"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("BM25-scores"), vec!["bm25", "scores"]);
    }

    #[test]
    fn collection_loading() {
        let c = Collection::parse("d1\thello world\nd2\tfoo").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.index_of("d1"), Some(0));
        assert_eq!(c.index_of("d2"), Some(1));
        assert_eq!(c.text(0), "hello world");
        assert!(Collection::parse("").unwrap().is_empty());
        assert_eq!(Collection::parse("d1\ta\r\nd1\tb\n"), Err(Error::DuplicateId("d1".into())));
        match Collection::parse("d1\ta\nno tab here\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn query_loading() {
        let q = QuerySet::parse("q1\twhat is bm25\n").unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.get("q1"), Some("what is bm25"));
        assert!(QuerySet::parse("").unwrap().is_empty());
        assert!(matches!(QuerySet::parse("q1\ta\nq1\tb"), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn qrels_loading() {
        let q = Qrels::parse("q1 0 d1 2\nq1 0 d2 0\n").unwrap();
        assert_eq!(q.grade("q1", "d1"), Some(2));
        assert_eq!(q.grade("q1", "d2"), Some(0));
        assert_eq!(q.grade("q1", "d3"), None);
        assert!(matches!(Qrels::parse("q1 0 d1 x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Qrels::parse("q1 0 d1 -1"), Err(Error::Parse { .. })));
        assert!(matches!(Qrels::parse("q1 0 d1 1\nq1 0 d1 2"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn run_format() {
        let run = RunFile::new(RunFile::ranked_rows("q1", [("d7", 3.5)], "gnrr"));
        assert_eq!(run.to_trec().unwrap(), "q1 Q0 d7 1 3.500000 gnrr\n");
        assert_eq!(RunFile::parse(&run.to_trec().unwrap()).unwrap(), run);
    }

    #[test]
    fn run_rank_gap_rejected() {
        let mut rows = RunFile::ranked_rows("q1", [("a", 2.0), ("b", 1.0)], "t");
        rows[1].rank = 3;
        assert!(matches!(RunFile::new(rows).to_trec(), Err(Error::InvalidRun(_))));
        let rows = RunFile::ranked_rows("q1", [("a", 1.0), ("b", 2.0)], "t");
        assert!(RunFile::new(rows).to_trec().is_err());
        let rows = RunFile::ranked_rows("q1", [("a", 1.0), ("a", 1.0)], "t");
        assert!(RunFile::new(rows).to_trec().is_err());
    }
}
