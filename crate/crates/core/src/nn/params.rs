use std::ops::{Deref, DerefMut, Range};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-state width and the widths of the two sigmoid layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetDims {
    pub d_h: usize,
    pub d_1: usize,
    pub d_2: usize,
}

impl Default for NetDims {
    fn default() -> Self {
        Self {
            d_h: 32,
            d_1: 32,
            d_2: 32,
        }
    }
}

impl NetDims {
    pub fn new(d_h: usize, d_1: usize, d_2: usize) -> Result<Self> {
        if d_h == 0 || d_1 == 0 || d_2 == 0 {
            return Err(Error::param(format!(
                "network widths must be positive, got ({d_h}, {d_1}, {d_2})"
            )));
        }
        Ok(Self { d_h, d_1, d_2 })
    }

    /// `(rows, cols)` of a block; biases are single columns.
    pub fn shape(&self, block: Block) -> (usize, usize) {
        let NetDims { d_h, d_1, d_2 } = *self;
        match block {
            Block::Wh => (d_h, 2 + d_h),
            Block::Bh => (d_h, 1),
            Block::W1 => (d_1, 1 + d_h),
            Block::B1 => (d_1, 1),
            Block::W2 => (d_2, d_1),
            Block::B2 => (d_2, 1),
            Block::W3 => (1, d_2),
            Block::B3 => (1, 1),
        }
    }

    pub fn range(&self, block: Block) -> Range<usize> {
        let mut start = 0;
        for b in Block::ALL {
            let (r, c) = self.shape(b);
            if b == block {
                return start..start + r * c;
            }
            start += r * c;
        }
        unreachable!()
    }

    pub fn parameter_count(&self) -> usize {
        Block::ALL
            .iter()
            .map(|&b| {
                let (r, c) = self.shape(b);
                r * c
            })
            .sum()
    }

    /// Block containing flat index `idx` and the offset inside it.
    pub fn locate(&self, idx: usize) -> Option<(Block, usize)> {
        Block::ALL.into_iter().find_map(|b| {
            let r = self.range(b);
            r.contains(&idx).then(|| (b, idx - r.start))
        })
    }
}

/// Named parameter blocks, stored contiguously in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Wh,
    Bh,
    W1,
    B1,
    W2,
    B2,
    W3,
    B3,
}

impl Block {
    pub const ALL: [Block; 8] = [
        Block::Wh,
        Block::Bh,
        Block::W1,
        Block::B1,
        Block::W2,
        Block::B2,
        Block::W3,
        Block::B3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Wh => "W_h",
            Block::Bh => "b_h",
            Block::W1 => "W1",
            Block::B1 => "b1",
            Block::W2 => "W2",
            Block::B2 => "b2",
            Block::W3 => "W3",
            Block::B3 => "b3",
        }
    }

    pub fn is_bias(self) -> bool {
        matches!(self, Block::Bh | Block::B1 | Block::B2 | Block::B3)
    }
}

/// All weights and biases of the recurrent cell and the dense head, one
/// flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    dims: NetDims,
    values: Vec<f64>,
}

impl NetParams {
    pub fn zeros(dims: NetDims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.parameter_count()],
        }
    }

    pub fn from_values(dims: NetDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.parameter_count() {
            return Err(Error::shape(format!(
                "{} parameter values for dims {:?} (need {})",
                values.len(),
                dims,
                dims.parameter_count()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> NetDims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.values[self.dims.range(block)]
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        let r = self.dims.range(block);
        &mut self.values[r]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
pub fn init_params(dims: NetDims, seed: u64) -> NetParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = NetParams::zeros(dims);
    for block in Block::ALL.into_iter().filter(|b| !b.is_bias()) {
        let bound = glorot_bound(dims, block);
        for w in p.block_mut(block) {
            *w = rng.random_range(-bound..bound);
        }
    }
    p
}

/// `sqrt(6 / (fan_in + fan_out))` for a weight block.
pub fn glorot_bound(dims: NetDims, block: Block) -> f64 {
    let (fan_out, fan_in) = dims.shape(block);
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Partial derivatives of a scalar loss, shaped like [`NetParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator(NetParams);

impl GradientAccumulator {
    pub fn zeros(dims: NetDims) -> Self {
        Self(NetParams::zeros(dims))
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.values.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn add_assign(&mut self, other: &GradientAccumulator) {
        for (a, b) in self.0.values.iter_mut().zip(&other.0.values) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.values.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl Deref for GradientAccumulator {
    type Target = NetParams;
    fn deref(&self) -> &NetParams {
        &self.0
    }
}

impl DerefMut for GradientAccumulator {
    fn deref_mut(&mut self) -> &mut NetParams {
        &mut self.0
    }
}
