//! Binary checkpoints: magic, format version, JSON config header, then the
//! flat parameter vector as little-endian `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::network::Model;
use crate::{ModelConfig, ModelError, Result};

pub const MAGIC: &[u8; 8] = b"RDORDER\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &Model<f32>, mut w: W) -> Result<()> {
    let header = serde_json::to_vec(&model.config)?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(model.params.len() as u64).to_le_bytes())?;
    for v in &model.params {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| ModelError::Checkpoint(format!("truncated checkpoint: {e}")))?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model<f32>> {
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(ModelError::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != FORMAT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported format version {version}")));
    }
    let header_len = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header)
        .map_err(|e| ModelError::Checkpoint(format!("truncated header: {e}")))?;
    let config: ModelConfig = serde_json::from_slice(&header)?;
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 4 {
        return Err(ModelError::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            count * 4,
            bytes.len()
        )));
    }
    let params = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Model::from_params(config, params)
}

pub fn save(model: &Model<f32>, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(model, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<Model<f32>> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
