//! Binary checkpoint files.
//!
//! Layout (little endian): magic `MFGPCKPT`, format version `u32`, the three
//! widths as `u32`, training step `u64`, Adam hyperparameters as four `f64`,
//! Adam step count `u64`, parameter count `u64`, then parameters, first
//! moments and second moments as `f64` arrays, and a trailing FNV-1a `u64`
//! over every preceding byte. Values are stored as raw bit patterns so a
//! round trip is exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::adam::{AdamHyper, AdamState};
use crate::nn::params::{NetDims, NetParams};

const MAGIC: &[u8; 8] = b"MFGPCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NetParams,
    pub adam: AdamState,
    /// Number of completed training steps.
    pub step: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.params.dims();
        let n = self.params.len();
        let mut out = Vec::with_capacity(8 + 4 * 4 + 8 * 8 + 3 * 8 * n + 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for d in [dims.d_h, dims.d_1, dims.d_2] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        let h = self.adam.hyper;
        for v in [h.learning_rate, h.beta1, h.beta2, h.eps] {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        out.extend_from_slice(&self.adam.step_count.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for arr in [
            self.params.values(),
            &self.adam.first_moment[..],
            &self.adam.second_moment[..],
        ] {
            for v in arr {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        let sum = fnv1a(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: &str| Error::CheckpointCorrupt {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8).ok_or_else(|| corrupt("truncated header"))?;
        if magic != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = r.u32().ok_or_else(|| corrupt("truncated header"))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                path: path.to_path_buf(),
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let header = (|| {
            let d_h = r.u32()? as usize;
            let d_1 = r.u32()? as usize;
            let d_2 = r.u32()? as usize;
            let step = r.u64()?;
            let hyper = AdamHyper {
                learning_rate: r.f64()?,
                beta1: r.f64()?,
                beta2: r.f64()?,
                eps: r.f64()?,
            };
            let adam_steps = r.u64()?;
            let n = r.u64()? as usize;
            Some((d_h, d_1, d_2, step, hyper, adam_steps, n))
        })();
        let (d_h, d_1, d_2, step, hyper, adam_steps, n) = header.ok_or_else(|| corrupt("truncated header"))?;
        let dims = NetDims::new(d_h, d_1, d_2).map_err(|_| corrupt("zero network width"))?;
        if dims.parameter_count() != n {
            return Err(corrupt("parameter count does not match widths"));
        }
        let body_len = r.pos + 3 * 8 * n;
        if bytes.len() != body_len + 8 {
            return Err(corrupt(&format!(
                "expected {} bytes, found {}",
                body_len + 8,
                bytes.len()
            )));
        }
        let stored = u64::from_le_bytes(bytes[body_len..].try_into().expect("8 bytes"));
        if stored != fnv1a(&bytes[..body_len]) {
            return Err(corrupt("checksum mismatch"));
        }
        let mut read_array = || (0..n).map(|_| r.f64().expect("length checked")).collect::<Vec<_>>();
        let values = read_array();
        let first_moment = read_array();
        let second_moment = read_array();
        Ok(Self {
            params: NetParams::from_values(dims, values)?,
            adam: AdamState {
                hyper,
                first_moment,
                second_moment,
                step_count: adam_steps,
            },
            step,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.u64().map(f64::from_bits)
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, checkpoint.to_bytes())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    Checkpoint::from_bytes(&bytes, path)
}
