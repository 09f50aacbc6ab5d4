//! Binary checkpoint container.
//!
//! Layout: the 5-byte magic `ALCR1`, a little-endian `u32` metadata length,
//! UTF-8 JSON metadata, then every parameter's values as little-endian `f64`
//! in metadata order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"ALCR1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub config_hash: String,
    pub params: Vec<ParamEntry>,
    /// Owner-specific payload (model config, vocabulary, ...).
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    params: &ParamStore,
    config_hash: &str,
    extra: serde_json::Value,
) -> Result<()> {
    let meta = CheckpointMeta {
        version: FORMAT_VERSION,
        config_hash: config_hash.to_string(),
        params: params
            .iter()
            .map(|(_, name, t)| ParamEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
        extra,
    };
    let text = serde_json::to_string(&meta)?;
    let len = u32::try_from(text.len()).map_err(|_| Error::Checkpoint("metadata too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(text.as_bytes())?;
    for (_, _, t) in params.iter() {
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ParamStore, CheckpointMeta)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut text = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut text)?;
    let text = String::from_utf8(text).map_err(|_| Error::Checkpoint("metadata is not UTF-8".into()))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    if meta.version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", meta.version)));
    }
    let mut store = ParamStore::new();
    let mut buf = [0u8; 8];
    for e in &meta.params {
        let n: usize = e.shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        store.insert(e.name.clone(), Tensor::new(e.shape.clone(), data)?)?;
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok((store, meta))
}
