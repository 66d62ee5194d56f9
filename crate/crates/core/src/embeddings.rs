//! Dense encodings keyed by id.
//!
//! Vectors are kept as `f32` (the on-disk width) and promoted to `f64`
//! whenever they enter a computation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::corpus::tokenize;
use crate::linalg::{dot, norm};
use crate::rng;
use crate::{Error, Result};

const MAGIC: &str = "EMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    normalized: bool,
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self { dim, normalized: false, ids: Vec::new(), index: BTreeMap::new(), data: Vec::new() }
    }

    pub fn insert(&mut self, id: &str, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(id.to_string()));
        }
        if self.index.insert(id.to_string(), self.ids.len()).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
        self.ids.push(id.to_string());
        self.data.extend_from_slice(vector);
        self.normalized = false;
        Ok(())
    }

    /// Stores an `f64` vector rounded to `f32`.
    pub fn insert_f64(&mut self, id: &str, vector: &[f64]) -> Result<()> {
        let v: Vec<f32> = vector.iter().map(|&x| x as f32).collect();
        self.insert(id, &v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn raw(&self, id: &str) -> Option<&[f32]> {
        let i = *self.index.get(id)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn get(&self, id: &str) -> Option<Vec<f64>> {
        self.raw(id).map(|v| v.iter().map(|&x| f64::from(x)).collect())
    }

    pub fn require(&self, id: &str) -> Result<Vec<f64>> {
        self.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    /// Rescales every vector to unit L2 norm.
    pub fn normalize(&mut self) -> Result<()> {
        for (i, chunk) in self.data.chunks_mut(self.dim.max(1)).enumerate() {
            let v: Vec<f64> = chunk.iter().map(|&x| f64::from(x)).collect();
            let n = norm(&v);
            if n == 0.0 {
                return Err(Error::InvalidArgument(alloc::format!("zero vector for `{}`", self.ids[i])));
            }
            for (c, x) in chunk.iter_mut().zip(v) {
                *c = (x / n) as f32;
            }
        }
        self.normalized = true;
        Ok(())
    }

    /// Marks the store as holding unit vectors without touching the data.
    pub fn set_normalized_flag(&mut self, flag: bool) {
        self.normalized = flag;
    }

    /// `EMB1`, count (u32), dim (u32), normalized flag (u8), then per
    /// record a u16-prefixed UTF-8 id and `dim` f32 values, all
    /// little-endian.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.bytes(MAGIC.as_bytes());
        w.len_u32(self.len())?;
        w.len_u32(self.dim)?;
        w.u8(u8::from(self.normalized));
        for (i, id) in self.ids.iter().enumerate() {
            w.str16(id)?;
            for &x in &self.data[i * self.dim..(i + 1) * self.dim] {
                w.f32(x);
            }
        }
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let count = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let flag = r.u8()?;
        if flag > 1 {
            return Err(Error::Malformed(alloc::format!("normalized flag {flag}")));
        }
        if dim == 0 {
            return Err(Error::Malformed("dim 0".into()));
        }
        let mut store = EmbeddingStore::new(dim);
        let mut buf = vec![0f32; dim];
        for _ in 0..count {
            let id = r.str16()?;
            for x in buf.iter_mut() {
                *x = r.f32()?;
            }
            store.insert(&id, &buf)?;
        }
        r.expect_end()?;
        store.normalized = flag == 1;
        Ok(store)
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch { expected: u.len(), found: v.len() });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Deterministic bag-of-tokens encoder, a stand-in for a trained text
/// encoder.
///
/// Each distinct token gets a Gaussian vector from a ChaCha stream keyed
/// by `(fnv1a(token), seed)`; the text's vector is the normalized sum
/// over its token multiset. Tokens are summed in sorted order so the
/// result does not depend on word order.
pub fn pseudo_encode(text: &str, dim: usize, seed: u64) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    let mut tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::NoTokens);
    }
    tokens.sort_unstable();
    let mut acc = vec![0.0; dim];
    for token in &tokens {
        let mut stream = rng::stream(seed, rng::fnv1a(token.as_bytes()));
        for a in acc.iter_mut() {
            *a += rng::standard_normal(&mut stream);
        }
    }
    let n = norm(&acc);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}
