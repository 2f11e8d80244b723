//! Binary parameter and dataset files.
//!
//! Parameter file: magic `DREXENER`, a little-endian `u32` model tag, then
//! `u32` dimensions and row-major little-endian `f64` payloads.
//!
//! * tag 1, RBM: `m`, `d`, then `W` (`m × d`), `c` (`m`), `b` (`d`).
//! * tag 2, quadratic on spins: `d`, then `w`, `J` (`d × d`), `b` (`d`).
//!
//! Dataset file: magic `DREXDATA`, `u32` rows, `u32` dim, then `rows × dim`
//! bytes each 0 or 1.

use std::fs;
use std::path::Path;

use drexel_core::energy::QuadraticEnergy;
use drexel_core::rbm::BinaryDataset;
use drexel_core::{DomainSpec, RbmFreeEnergy};

pub const MODEL_MAGIC: &[u8; 8] = b"DREXENER";
pub const DATA_MAGIC: &[u8; 8] = b"DREXDATA";
const TAG_RBM: u32 = 1;
const TAG_QUADRATIC: u32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("file truncated: needed {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("header declares {declared} payload bytes but {actual} follow")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("unknown model tag {0}")]
    UnknownTag(u32),
    #[error("expected a {expected} file, found a {found} file")]
    WrongModel { expected: &'static str, found: &'static str },
    #[error("invalid contents: {0}")]
    Invalid(#[from] drexel_core::Error),
}

/// Either model a parameter file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Rbm(RbmFreeEnergy),
    Quadratic(QuadraticEnergy),
}

impl ModelFile {
    fn kind(&self) -> &'static str {
        match self {
            ModelFile::Rbm(_) => "RBM",
            ModelFile::Quadratic(_) => "quadratic",
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.buf.len() - self.pos < n {
            return Err(FormatError::Truncated {
                needed: self.pos + n,
                have: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn check_magic(r: &mut Reader<'_>, magic: &[u8; 8]) -> Result<(), FormatError> {
    let found = r.take(8).map_err(|_| FormatError::BadMagic {
        expected: String::from_utf8_lossy(magic).into_owned(),
        found: String::from_utf8_lossy(r.buf).into_owned(),
    })?;
    if found != magic {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(found).into_owned(),
        });
    }
    Ok(())
}

fn check_payload(r: &Reader<'_>, declared: usize) -> Result<(), FormatError> {
    if r.remaining() != declared {
        return Err(FormatError::LengthMismatch {
            declared,
            actual: r.remaining(),
        });
    }
    Ok(())
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_model(model: &ModelFile) -> Vec<u8> {
    let mut out = MODEL_MAGIC.to_vec();
    match model {
        ModelFile::Rbm(r) => {
            out.extend_from_slice(&TAG_RBM.to_le_bytes());
            out.extend_from_slice(&(r.hidden() as u32).to_le_bytes());
            out.extend_from_slice(&(r.visible() as u32).to_le_bytes());
            put_f64s(&mut out, r.weights());
            put_f64s(&mut out, r.hidden_bias());
            put_f64s(&mut out, r.visible_bias());
        }
        ModelFile::Quadratic(q) => {
            out.extend_from_slice(&TAG_QUADRATIC.to_le_bytes());
            out.extend_from_slice(&(q.bias().len() as u32).to_le_bytes());
            put_f64s(&mut out, &[q.strength()]);
            put_f64s(&mut out, q.coupling());
            put_f64s(&mut out, q.bias());
        }
    }
    out
}

pub fn decode_model(buf: &[u8]) -> Result<ModelFile, FormatError> {
    let mut r = Reader { buf, pos: 0 };
    check_magic(&mut r, MODEL_MAGIC)?;
    match r.u32()? {
        TAG_RBM => {
            let m = r.u32()? as usize;
            let d = r.u32()? as usize;
            check_payload(&r, 8 * (m * d + m + d))?;
            let w = r.f64s(m * d)?;
            let c = r.f64s(m)?;
            let b = r.f64s(d)?;
            Ok(ModelFile::Rbm(RbmFreeEnergy::new(w, c, b)?))
        }
        TAG_QUADRATIC => {
            let d = r.u32()? as usize;
            check_payload(&r, 8 * (1 + d * d + d))?;
            let w = r.f64s(1)?[0];
            let j = r.f64s(d * d)?;
            let b = r.f64s(d)?;
            Ok(ModelFile::Quadratic(QuadraticEnergy::new(DomainSpec::spin(d)?, j, b, w)?))
        }
        t => Err(FormatError::UnknownTag(t)),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<(), FormatError> {
    write(path, &encode_model(model))
}

pub fn load_model(path: &Path) -> Result<ModelFile, FormatError> {
    decode_model(&read(path)?)
}

pub fn save_rbm(model: &RbmFreeEnergy, path: &Path) -> Result<(), FormatError> {
    save_model(&ModelFile::Rbm(model.clone()), path)
}

pub fn load_rbm(path: &Path) -> Result<RbmFreeEnergy, FormatError> {
    match load_model(path)? {
        ModelFile::Rbm(r) => Ok(r),
        other => Err(FormatError::WrongModel {
            expected: "RBM",
            found: other.kind(),
        }),
    }
}

pub fn encode_dataset(data: &BinaryDataset) -> Vec<u8> {
    let mut out = DATA_MAGIC.to_vec();
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(&(data.dim() as u32).to_le_bytes());
    out.extend_from_slice(data.as_bytes());
    out
}

pub fn decode_dataset(buf: &[u8]) -> Result<BinaryDataset, FormatError> {
    let mut r = Reader { buf, pos: 0 };
    check_magic(&mut r, DATA_MAGIC)?;
    let rows = r.u32()? as usize;
    let dim = r.u32()? as usize;
    check_payload(&r, rows * dim)?;
    Ok(BinaryDataset::new(dim, r.take(rows * dim)?.to_vec())?)
}

pub fn save_dataset(data: &BinaryDataset, path: &Path) -> Result<(), FormatError> {
    write(path, &encode_dataset(data))
}

pub fn load_dataset(path: &Path) -> Result<BinaryDataset, FormatError> {
    decode_dataset(&read(path)?)
}
