//! Versioned binary checkpoint container.
//!
//! Layout: magic `CAPSTAGE`, u32 LE format version, u64 LE header length,
//! UTF-8 JSON header, then every tensor of every group as f64 LE in header
//! order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::corpus::Vocabulary;

pub const MAGIC: &[u8; 8] = b"CAPSTAGE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorSpec {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    config: ModelConfig,
    vocab: Vocabulary,
    tensors: Vec<TensorSpec>,
    /// Names of the tensor groups stored after the header, e.g. `params`,
    /// `adam_m`, `adam_v`.
    groups: Vec<String>,
    state: serde_json::Value,
}

/// Model plus optional extra tensor groups (optimizer moments) and an
/// opaque training-state document.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ModelParams,
    pub extra: Vec<(String, ModelParams)>,
    pub state: serde_json::Value,
}

impl Checkpoint {
    pub fn encode(&self) -> crate::Result<Vec<u8>> {
        let tensors = self
            .params
            .tensors()
            .iter()
            .map(|t| TensorSpec {
                name: t.name.to_string(),
                shape: t.shape.to_vec(),
            })
            .collect();
        let mut groups = vec!["params".to_string()];
        groups.extend(self.extra.iter().map(|(n, _)| n.clone()));
        let header = Header {
            format: format!("capstage-checkpoint/{FORMAT_VERSION}"),
            config: self.config,
            vocab: self.vocab.clone(),
            tensors,
            groups,
            state: self.state.clone(),
        };
        let header = serde_json::to_vec(&header)?;
        let n = self.params.n_scalars() * (1 + self.extra.len());
        let mut out = Vec::with_capacity(20 + header.len() + 8 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for group in std::iter::once(&self.params).chain(self.extra.iter().map(|(_, p)| p)) {
            for t in group.tensors() {
                for v in t.data {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> crate::Result<Self> {
        let bad = |m: &str| crate::Error::format("checkpoint", m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("missing CAPSTAGE magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let body = &bytes[20..];
        if header_len > body.len() as u64 {
            return Err(bad("truncated header"));
        }
        let (header_bytes, mut payload) = body.split_at(header_len as usize);
        let header: Header = serde_json::from_slice(header_bytes)?;
        header.config.validate()?;
        if header.vocab.len() != header.config.vocab_size {
            return Err(bad("vocabulary size does not match config"));
        }
        if header.groups.first().map(String::as_str) != Some("params") {
            return Err(bad("first tensor group must be `params`"));
        }
        let template = ModelParams::zeros(&header.config);
        let expected: Vec<_> = template.tensors().iter().map(|t| (t.name, t.shape.to_vec())).collect();
        if header.tensors.len() != expected.len()
            || header
                .tensors
                .iter()
                .zip(&expected)
                .any(|(a, (n, s))| a.name != *n || &a.shape != s)
        {
            return Err(bad("tensor table does not match config"));
        }
        let per_group = template.n_scalars() as u64 * 8;
        if payload.len() as u64 != per_group * header.groups.len() as u64 {
            return Err(bad(&format!(
                "payload is {} bytes, expected {}",
                payload.len(),
                per_group * header.groups.len() as u64
            )));
        }
        let mut groups = Vec::with_capacity(header.groups.len());
        for name in &header.groups {
            let mut p = template.clone();
            for t in p.tensors_mut() {
                let (chunk, rest) = payload.split_at(t.data.len() * 8);
                for (v, b) in t.data.iter_mut().zip(chunk.chunks_exact(8)) {
                    *v = f64::from_le_bytes(b.try_into().unwrap());
                }
                payload = rest;
            }
            groups.push((name.clone(), p));
        }
        let (_, params) = groups.remove(0);
        Ok(Checkpoint {
            config: header.config,
            vocab: header.vocab,
            params,
            extra: groups,
            state: header.state,
        })
    }

    pub fn save(&self, path: &Path) -> crate::Result<()> {
        let bytes = self.encode()?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).map_err(|e| crate::Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| crate::Error::io(path, e))
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let bytes = fs::read(path).map_err(|e| crate::Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn group(&self, name: &str) -> Option<&ModelParams> {
        self.extra.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }
}
