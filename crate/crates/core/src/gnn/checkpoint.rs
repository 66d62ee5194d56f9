//! Checkpoint layout: `key=value` header lines, a blank line, then every
//! parameter as f64 little-endian in declaration order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::model::{ModelConfig, RerankModel};
use crate::{Error, Result};

const FORMAT: &str = "gnrr-checkpoint-1";

impl RerankModel {
    pub fn to_checkpoint(&self) -> Vec<u8> {
        let c = &self.config;
        let mut header = String::new();
        let _ = writeln!(header, "format={FORMAT}");
        let _ = writeln!(header, "kind={}", c.kind);
        let _ = writeln!(header, "layers={}", c.layers);
        let _ = writeln!(header, "input_dim={}", c.input_dim);
        let _ = writeln!(header, "hidden={}", c.hidden);
        let _ = writeln!(header, "individual={}", c.individual);
        let _ = writeln!(header, "individual_width={}", c.individual_width);
        let _ = writeln!(header, "scorer_hidden={}", c.scorer_hidden);
        let _ = writeln!(header, "negatives={}", c.negatives);
        let _ = writeln!(header, "seed={}", c.seed);
        let _ = writeln!(header, "params={}", self.param_count());
        header.push('\n');
        let mut out = header.into_bytes();
        for v in self.flat_params() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| Error::Malformed("checkpoint header not terminated".into()))?;
        let header = core::str::from_utf8(&bytes[..split])
            .map_err(|_| Error::Malformed("checkpoint header is not UTF-8".into()))?;
        let body = &bytes[split + 2..];
        let mut fields = BTreeMap::new();
        for (i, line) in header.lines().enumerate() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected key=value".into() })?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Malformed(alloc::format!("missing `{k}`")));
        let num = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|_| Error::Malformed(alloc::format!("bad value for `{k}`")))
        };
        if get("format")? != FORMAT {
            return Err(Error::BadMagic { expected: FORMAT });
        }
        let config = ModelConfig {
            kind: get("kind")?.parse()?,
            layers: num("layers")? as usize,
            input_dim: num("input_dim")? as usize,
            hidden: num("hidden")? as usize,
            individual: get("individual")?.parse()?,
            individual_width: num("individual_width")? as usize,
            scorer_hidden: num("scorer_hidden")? as usize,
            negatives: num("negatives")? as usize,
            seed: num("seed")?,
        };
        let mut model = RerankModel::new(config)?;
        let count = num("params")? as usize;
        if count != model.param_count() || body.len() != count * 8 {
            return Err(Error::Malformed(alloc::format!(
                "expected {} parameters, header says {count}, body holds {} bytes",
                model.param_count(),
                body.len()
            )));
        }
        let flat: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("checkpoint".into()));
        }
        model.set_flat_params(&flat)?;
        Ok(model)
    }
}
