//! Binary checkpoints: magic, format version, a JSON header, then raw
//! little-endian tensors (parameters, Adam first and second moments).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::Float;
use crate::model::{Model, ModelConfig};
use crate::tape::Tensor;
use crate::train::{AdamW, EpochLog, TrainConfig, Trainer};
use crate::vocab::LAYOUT_VERSION;

pub const MAGIC: &[u8; 8] = b"GRIDMLC\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint holds {found} values, expected {expected}")]
    DType { found: String, expected: String },
    #[error("malformed header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("tensor {name} has shape {found:?}, the configuration implies {expected:?}")]
    Shape { name: String, found: (usize, usize), expected: (usize, usize) },
    #[error("sequence layout {found} differs from {expected}")]
    Layout { found: u32, expected: u32 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Header {
    dtype: String,
    layout_version: u32,
    model: ModelConfig,
    train: TrainConfig,
    epoch: usize,
    step: usize,
    adam_t: u64,
    rng: ChaCha8Rng,
    log: Vec<EpochLog>,
    tensors: Vec<TensorInfo>,
}

fn write_tensors<T: Float>(out: &mut Vec<u8>, tensors: impl Iterator<Item = impl AsRef<[T]>>) {
    for t in tensors {
        for &v in t.as_ref() {
            v.write_le(out);
        }
    }
}

pub fn save<T: Float>(path: &Path, trainer: &Trainer<T>) -> Result<(), CheckpointError> {
    let params = &trainer.model.params;
    let header = Header {
        dtype: T::DTYPE.to_string(),
        layout_version: LAYOUT_VERSION,
        model: trainer.model.config.clone(),
        train: trainer.cfg.clone(),
        epoch: trainer.epoch,
        step: trainer.step,
        adam_t: trainer.opt.t,
        rng: trainer.rng.clone(),
        log: trainer.log.clone(),
        tensors: params
            .list
            .iter()
            .map(|p| TensorInfo { name: p.name.clone(), rows: p.value.rows, cols: p.value.cols })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut body = Vec::with_capacity(3 * params.count() * T::BYTES);
    write_tensors::<T>(&mut body, params.list.iter().map(|p| &p.value.data));
    write_tensors::<T>(&mut body, trainer.opt.m.iter().map(|t| &t.data));
    write_tensors::<T>(&mut body, trainer.opt.v.iter().map(|t| &t.data));
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn load<T: Float>(path: &Path) -> Result<Trainer<T>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b)?;
    let version = u32::from_le_bytes(u32b);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u64b)?;
    let mut json = vec![0u8; u64::from_le_bytes(u64b) as usize];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.dtype != T::DTYPE {
        return Err(CheckpointError::DType { found: header.dtype, expected: T::DTYPE.to_string() });
    }
    if header.layout_version != LAYOUT_VERSION {
        return Err(CheckpointError::Layout { found: header.layout_version, expected: LAYOUT_VERSION });
    }
    let mut model: Model<T> = Model::new(header.model.clone(), 0);
    if model.params.list.len() != header.tensors.len() {
        return Err(CheckpointError::Shape { name: "<count>".into(), found: (header.tensors.len(), 0), expected: (model.params.list.len(), 0) });
    }
    for (p, info) in model.params.list.iter().zip(&header.tensors) {
        if (p.value.rows, p.value.cols) != (info.rows, info.cols) || p.name != info.name {
            return Err(CheckpointError::Shape { name: info.name.clone(), found: (info.rows, info.cols), expected: (p.value.rows, p.value.cols) });
        }
    }
    let mut read_tensor = |t: &mut Tensor<T>| -> Result<(), CheckpointError> {
        let mut buf = vec![0u8; t.len() * T::BYTES];
        r.read_exact(&mut buf)?;
        for (v, b) in t.data.iter_mut().zip(buf.chunks_exact(T::BYTES)) {
            *v = T::read_le(b);
        }
        Ok(())
    };
    for p in model.params.list.iter_mut() {
        read_tensor(&mut p.value)?;
    }
    let mut opt = AdamW::new(&model.params);
    opt.t = header.adam_t;
    for t in opt.m.iter_mut().chain(opt.v.iter_mut()) {
        read_tensor(t)?;
    }
    Ok(Trainer { model, cfg: header.train, opt, rng: header.rng, epoch: header.epoch, step: header.step, log: header.log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridcomp_core::episodes::{generate_dataset, GenConfig, Setup};

    #[test]
    fn resume_reproduces_next_epoch() {
        let gc = GenConfig { setup: Setup::ThreeShot, ..GenConfig::default() };
        let eps = generate_dataset(8, 4, &gc).unwrap();
        let mc = ModelConfig { d_model: 16, heads: 2, enc_layers: 1, dec_layers: 1, ff_dim: 32, ..ModelConfig::default() };
        let tc = TrainConfig { epochs: 3, batch_episodes: 1, seed: 5, ..TrainConfig::default() };
        let mut a: Trainer<f32> = Trainer::new(Model::new(mc.clone(), 2), tc.clone());
        a.run_epoch(&eps).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        save(&path, &a).unwrap();
        let next = a.run_epoch(&eps).unwrap();
        let mut b: Trainer<f32> = load(&path).unwrap();
        assert_eq!(b.epoch, 1);
        let resumed = b.run_epoch(&eps).unwrap();
        assert!((next - resumed).abs() < 1e-6, "{next} vs {resumed}");
        assert_eq!(a.model.params.list[3].value, b.model.params.list[3].value);
    }

    #[test]
    fn wrong_dtype_is_rejected() {
        let mc = ModelConfig { vocab_size: 20, d_model: 8, heads: 2, enc_layers: 1, dec_layers: 1, ff_dim: 8, ..ModelConfig::default() };
        let t: Trainer<f32> = Trainer::new(Model::new(mc, 0), TrainConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ckpt");
        save(&path, &t).unwrap();
        assert!(matches!(load::<f64>(&path), Err(CheckpointError::DType { .. })));
        std::fs::write(&path, b"nonsense").unwrap();
        assert!(matches!(load::<f32>(&path), Err(CheckpointError::BadMagic)));
    }
}
