//! Binary checkpoint format, all integers little-endian:
//!
//! ```text
//! "PCON" | u32 version | u32 record count
//! per record: u16 name length | name (UTF-8) | u8 rank | u32 dims[rank] | f32 data
//! u8 optimizer flag
//! if 1: u64 Adam step | u32 epoch | per record: f32 m | f32 v
//! ```

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{Model, ModelError, ModelSpec};
use crate::nn::InitPolicy;
use crate::optim::{AdamConfig, AdamState, Moments};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PCON";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CheckpointError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    BadMagic([u8; 4]),
    UnsupportedVersion(u32),
    Truncated {
        offset: usize,
        needed: usize,
    },
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    /// The file does not list the parameters the model expects.
    RecordMismatch {
        expected: String,
        found: String,
    },
    InvalidName {
        offset: usize,
    },
    TrailingBytes(usize),
    Model(ModelError),
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CheckpointError::BadMagic(m) => write!(f, "not a checkpoint file (magic {m:02x?})"),
            CheckpointError::UnsupportedVersion(v) => {
                write!(f, "unsupported checkpoint version {v} (expected {CHECKPOINT_VERSION})")
            }
            CheckpointError::Truncated { offset, needed } => {
                write!(f, "checkpoint truncated: needed {needed} bytes at offset {offset}")
            }
            CheckpointError::ShapeMismatch { name, expected, found } => {
                write!(
                    f,
                    "checkpoint tensor {name} has shape {found:?}, model expects {expected:?}"
                )
            }
            CheckpointError::RecordMismatch { expected, found } => {
                write!(f, "checkpoint record {found} found where {expected} was expected")
            }
            CheckpointError::InvalidName { offset } => {
                write!(f, "checkpoint record name at offset {offset} is not UTF-8")
            }
            CheckpointError::TrailingBytes(n) => write!(f, "checkpoint has {n} unexpected trailing bytes"),
            CheckpointError::Model(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CheckpointError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CheckpointError::Io { source, .. } => Some(source),
            CheckpointError::Model(e) => Some(e),
            _ => None,
        }
    }
}

/// Optimizer progress stored alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub adam: AdamState<f32>,
    pub epoch: u32,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model<f32>,
    pub training: Option<TrainingState>,
}

fn put_f32s(buf: &mut Vec<u8>, data: &[f32]) {
    buf.reserve(data.len() * 4);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn encode(model: &Model<f32>, training: Option<&TrainingState>) -> Vec<u8> {
    let params = model.named_params();
    let mut buf = Vec::new();
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in &params {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(t.rank() as u8);
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        put_f32s(&mut buf, t.data());
    }
    match training {
        None => buf.push(0),
        Some(state) => {
            buf.push(1);
            buf.extend_from_slice(&state.adam.step_count().to_le_bytes());
            buf.extend_from_slice(&state.epoch.to_le_bytes());
            let moments = state.adam.moments();
            for (i, (_, t)) in params.iter().enumerate() {
                match moments.get(i) {
                    Some(mo) => {
                        put_f32s(&mut buf, mo.m.data());
                        put_f32s(&mut buf, mo.v.data());
                    }
                    None => put_f32s(&mut buf, &vec![0.0; 2 * t.len()]),
                }
            }
        }
    }
    buf
}

/// Writes weights only.
pub fn save_checkpoint(model: &Model<f32>, path: &Path) -> Result<(), CheckpointError> {
    save_checkpoint_full(model, None, path)
}

/// Writes weights and, when given, the optimizer state. The file is written
/// beside the target and renamed into place.
pub fn save_checkpoint_full(
    model: &Model<f32>,
    training: Option<&TrainingState>,
    path: &Path,
) -> Result<(), CheckpointError> {
    let io_err = |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = encode(model, training);
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(&bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::Truncated {
                offset: self.pos,
                needed: n,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let raw = self.take(n.checked_mul(4).ok_or(CheckpointError::Truncated {
            offset: self.pos,
            needed: usize::MAX,
        })?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn decode(bytes: &[u8], spec: ModelSpec) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let mut model = Model::new(spec, InitPolicy::glorot(0)).map_err(CheckpointError::Model)?;
    let count = r.u32()? as usize;
    let mut params = model.named_params_mut();
    if count != params.len() {
        return Err(CheckpointError::RecordMismatch {
            expected: format!("{} records", params.len()),
            found: format!("{count} records"),
        });
    }
    let mut shapes = Vec::with_capacity(count);
    for (expected_name, target) in params.iter_mut() {
        let len = r.u16()? as usize;
        let offset = r.pos;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| CheckpointError::InvalidName { offset })?;
        if name != expected_name {
            return Err(CheckpointError::RecordMismatch {
                expected: expected_name.clone(),
                found: name.to_string(),
            });
        }
        let rank = r.u8()? as usize;
        let dims = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != target.shape() {
            return Err(CheckpointError::ShapeMismatch {
                name: name.to_string(),
                expected: target.shape().to_vec(),
                found: dims,
            });
        }
        let data = r.f32s(target.len())?;
        target.data_mut().copy_from_slice(&data);
        shapes.push((expected_name.clone(), dims));
    }
    drop(params);

    let training = match r.u8()? {
        0 => None,
        _ => {
            let step = r.u64()?;
            let epoch = r.u32()?;
            let mut moments = Vec::with_capacity(shapes.len());
            for (name, dims) in shapes {
                let n: usize = dims.iter().product();
                let m = Tensor::new(&dims, r.f32s(n)?).expect("shape checked against the model");
                let v = Tensor::new(&dims, r.f32s(n)?).expect("shape checked against the model");
                moments.push(Moments { name, m, v });
            }
            if step == 0 {
                moments.clear();
            }
            Some(TrainingState {
                adam: AdamState::from_parts(AdamConfig::default(), step, moments),
                epoch,
            })
        }
    };
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(Checkpoint { model, training })
}

fn read(path: &Path) -> Result<Vec<u8>, CheckpointError> {
    fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads PCONet weights, ignoring any optimizer state.
pub fn load_checkpoint(path: &Path) -> Result<Model<f32>, CheckpointError> {
    Ok(load_checkpoint_full(path)?.model)
}

pub fn load_checkpoint_full(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode(&read(path)?, ModelSpec::pconet())
}

/// Loads a checkpoint written for an arbitrary layer stack.
pub fn load_checkpoint_with_spec(path: &Path, spec: ModelSpec) -> Result<Checkpoint, CheckpointError> {
    decode(&read(path)?, spec)
}
