//! Okapi BM25 over an in-memory inverted index, exhaustive
//! term-at-a-time scoring.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::codec::{Reader, Writer};
use crate::corpus::{tokenize, Collection};
use crate::{Error, Result};

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;
pub const DEFAULT_TOP_K: usize = 1000;

const MAGIC: &str = "BMI1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    k1: f64,
    b: f64,
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    avg_dl: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    pub fn build(collection: &Collection, k1: f64, b: f64) -> Result<Self> {
        if !(k1 >= 0.0 && k1.is_finite()) || !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidArgument(alloc::format!("BM25 parameters k1={k1}, b={b}")));
        }
        if collection.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(collection.len());
        let mut doc_ids = Vec::with_capacity(collection.len());
        for (doc, (id, text)) in collection.iter().enumerate() {
            let tokens = tokenize(text);
            doc_len.push(tokens.len() as u32);
            doc_ids.push(id.to_string());
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_default() += 1;
            }
            // docs visited in index order, so every list stays sorted
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { doc: doc as u32, tf });
            }
        }
        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        let avg_dl = total as f64 / doc_len.len() as f64;
        Ok(Self { k1, b, doc_ids, doc_len, avg_dl, postings })
    }

    pub fn n_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn avg_dl(&self) -> f64 {
        self.avg_dl
    }

    pub fn params(&self) -> (f64, f64) {
        (self.k1, self.b)
    }

    pub fn doc_len(&self) -> &[u32] {
        &self.doc_len
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.doc_ids[doc]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    /// `ln(1 + (N − df + 0.5) / (df + 0.5))`, never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.postings(term).len() as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    fn term_weight(&self, idf: f64, tf: u32, doc: usize) -> f64 {
        let tf = f64::from(tf);
        let dl = f64::from(self.doc_len[doc]);
        let norm = self.k1 * (1.0 - self.b + self.b * dl / self.avg_dl);
        idf * tf * (self.k1 + 1.0) / (tf + norm)
    }

    /// BM25 of one document; repeated query tokens each contribute.
    pub fn score<S: AsRef<str>>(&self, query_tokens: &[S], doc: usize) -> f64 {
        let mut score = 0.0;
        for t in query_tokens {
            let plist = self.postings(t.as_ref());
            if let Ok(pos) = plist.binary_search_by_key(&(doc as u32), |p| p.doc) {
                score += self.term_weight(self.idf(t.as_ref()), plist[pos].tf, doc);
            }
        }
        score
    }

    /// The `k` highest-scoring documents with positive score, ties by
    /// doc id ascending.
    pub fn retrieve<S: AsRef<str>>(&self, query_id: &str, query_tokens: &[S], k: usize) -> Result<ScoredList> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let mut acc = vec![0.0f64; self.n_docs()];
        for t in query_tokens {
            let idf = self.idf(t.as_ref());
            for p in self.postings(t.as_ref()) {
                acc[p.doc as usize] += self.term_weight(idf, p.tf, p.doc as usize);
            }
        }
        let mut hits: Vec<(usize, f64)> = acc.into_iter().enumerate().filter(|&(_, s)| s > 0.0).collect();
        let order = |a: &(usize, f64), b: &(usize, f64)| {
            b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| self.doc_ids[a.0].cmp(&self.doc_ids[b.0]))
        };
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, order);
            hits.truncate(k);
        }
        hits.sort_by(order);
        Ok(ScoredList {
            query_id: query_id.to_string(),
            entries: hits.into_iter().map(|(d, s)| (self.doc_ids[d].clone(), s)).collect(),
        })
    }

    pub fn retrieve_text(&self, query_id: &str, text: &str, k: usize) -> Result<ScoredList> {
        self.retrieve(query_id, &tokenize(text), k)
    }

    /// `BMI1` binary layout: k1, b (f64), n_docs (u32), doc lengths
    /// (u32 each), doc ids (u16-prefixed UTF-8), term count (u32), then
    /// per term its u16-prefixed text, posting count (u32) and
    /// `(doc u32, tf u32)` pairs.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.bytes(MAGIC.as_bytes());
        w.f64(self.k1);
        w.f64(self.b);
        w.len_u32(self.n_docs())?;
        for &l in &self.doc_len {
            w.u32(l);
        }
        for id in &self.doc_ids {
            w.str16(id)?;
        }
        w.len_u32(self.postings.len())?;
        for (term, plist) in &self.postings {
            w.str16(term)?;
            w.len_u32(plist.len())?;
            for p in plist {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let k1 = r.f64()?;
        let b = r.f64()?;
        let n = r.u32()? as usize;
        if n == 0 {
            return Err(Error::EmptyCollection);
        }
        let doc_len = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let doc_ids = (0..n).map(|_| r.str16()).collect::<Result<Vec<_>>>()?;
        let n_terms = r.u32()?;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = r.str16()?;
            let count = r.u32()? as usize;
            let mut plist = Vec::with_capacity(count.min(n));
            for _ in 0..count {
                let doc = r.u32()?;
                if doc as usize >= n {
                    return Err(Error::Malformed(alloc::format!("posting doc {doc} out of range")));
                }
                plist.push(Posting { doc, tf: r.u32()? });
            }
            postings.insert(term, plist);
        }
        r.expect_end()?;
        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        Ok(Self { k1, b, doc_ids, doc_len, avg_dl: total as f64 / n as f64, postings })
    }
}

/// First-stage candidates for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
}

impl ScoredList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(d, _)| d.as_str())
    }
}
