use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embed::PromptIndex;
use super::model::{ModelConfig, VelocityModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RMCK";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    prompt_index: PromptIndex,
    frame_len: usize,
    tensors: Vec<(String, usize)>,
}

/// Writes `magic | version u32 | header length u64 | JSON header | f64 LE tensor data`.
pub fn save_checkpoint(model: &VelocityModel, frame_len: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tensors = model.params.tensors();
    let header = Header {
        config: model.config.clone(),
        prompt_index: model.prompt_index.clone(),
        frame_len,
        tensors: tensors.iter().map(|(n, t)| (n.clone(), t.len())).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(16 + json.len() + 8 * model.params.num_values());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for (_, t) in tensors {
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint, returning the model and the codec frame length it was trained with.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(VelocityModel, usize)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Checkpoint(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("not a checkpoint"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..).ok_or_else(|| bad("truncated"))?;
    let header: Header = serde_json::from_slice(body.get(..hlen).ok_or_else(|| bad("truncated header"))?)?;
    let mut model = VelocityModel::new(header.config, header.prompt_index)?;
    let mut data = &body[hlen..];
    let expected: Vec<(String, usize)> = model.params.tensors().iter().map(|(n, t)| (n.clone(), t.len())).collect();
    if expected != header.tensors {
        return Err(bad("tensor layout does not match the model config"));
    }
    for (_, t) in model.params.tensors_mut() {
        for v in t.iter_mut() {
            let (chunk, rest) = data.split_at_checked(8).ok_or_else(|| bad("truncated tensor data"))?;
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            data = rest;
        }
    }
    if !data.is_empty() {
        return Err(bad("trailing bytes"));
    }
    if !model.params.is_finite() {
        return Err(bad("non-finite parameters"));
    }
    Ok((model, header.frame_len))
}
