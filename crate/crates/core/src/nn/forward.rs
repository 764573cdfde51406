use crate::domain::{GridSpec, PotentialField};
use crate::error::{Error, Result};
use crate::nn::params::{Block, NetParams};
use crate::supply::SupplyPath;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out = W x + b` for a row-major `rows x x.len()` matrix.
#[inline]
pub(crate) fn affine(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for ((row, o), bias) in w.chunks_exact(cols).zip(out.iter_mut()).zip(b) {
        *o = bias + dot(row, x);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One recurrent step: `tanh(W_h (t, q, h_prev) + b_h)`.
pub fn rnn_cell_step(params: &NetParams, t: f64, q: f64, h_prev: &[f64]) -> Vec<f64> {
    let d_h = params.dims().d_h;
    assert_eq!(h_prev.len(), d_h, "hidden state width");
    let mut y = Vec::with_capacity(2 + d_h);
    y.push(t);
    y.push(q);
    y.extend_from_slice(h_prev);
    let mut h = vec![0.0; d_h];
    affine(params.block(Block::Wh), &y, params.block(Block::Bh), &mut h);
    h.iter_mut().for_each(|v| *v = v.tanh());
    h
}

/// Dense head: `W3 S(W2 S(W1 (x, h) + b1) + b2) + b3`.
pub fn head_forward(params: &NetParams, x: f64, h: &[f64]) -> f64 {
    let dims = params.dims();
    assert_eq!(h.len(), dims.d_h, "hidden state width");
    let mut input = Vec::with_capacity(1 + dims.d_h);
    input.push(x);
    input.extend_from_slice(h);
    let mut z1 = vec![0.0; dims.d_1];
    affine(params.block(Block::W1), &input, params.block(Block::B1), &mut z1);
    z1.iter_mut().for_each(|v| *v = sigmoid(*v));
    let mut z2 = vec![0.0; dims.d_2];
    affine(params.block(Block::W2), &z1, params.block(Block::B2), &mut z2);
    z2.iter_mut().for_each(|v| *v = sigmoid(*v));
    params.block(Block::B3)[0] + dot(params.block(Block::W3), &z2)
}

/// Activations of one forward evaluation, kept for the reverse sweep.
#[derive(Debug, Clone)]
pub struct ForwardTape {
    pub(crate) grid: GridSpec,
    /// `(t_k, Q_k)` per extended level.
    pub(crate) inputs: Vec<(f64, f64)>,
    /// Hidden state per extended level, `ext_t x d_h`.
    pub(crate) hidden: Vec<f64>,
    /// First sigmoid layer per extended point, `ext_t x ext_x x d_1`.
    pub(crate) z1: Vec<f64>,
    /// Second sigmoid layer per extended point, `ext_t x ext_x x d_2`.
    pub(crate) z2: Vec<f64>,
}

impl ForwardTape {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hidden(&self, k: usize) -> &[f64] {
        let d_h = self.hidden.len() / self.grid.ext_t();
        &self.hidden[k * d_h..(k + 1) * d_h]
    }
}

/// Evaluates the potential on the extended grid. The hidden state starts
/// at zero and level `k` sees only `Q_0..=Q_k`.
pub fn forward_field(params: &NetParams, grid: &GridSpec, path: &SupplyPath) -> Result<PotentialField> {
    forward_recorded(params, grid, path).map(|(field, _)| field)
}

/// [`forward_field`] that also returns the activations for [`crate::nn::backward`].
pub fn forward_recorded(
    params: &NetParams,
    grid: &GridSpec,
    path: &SupplyPath,
) -> Result<(PotentialField, ForwardTape)> {
    path.check_grid(grid)?;
    let dims = params.dims();
    let (d_h, d_1, d_2) = (dims.d_h, dims.d_1, dims.d_2);
    let (ext_t, ext_x) = (grid.ext_t(), grid.ext_x());

    let w_h = params.block(Block::Wh);
    let b_h = params.block(Block::Bh);
    let w1 = params.block(Block::W1);
    let b1 = params.block(Block::B1);
    let w2 = params.block(Block::W2);
    let b2 = params.block(Block::B2);
    let w3 = params.block(Block::W3);
    let b3 = params.block(Block::B3)[0];

    let mut inputs = Vec::with_capacity(ext_t);
    let mut hidden = vec![0.0; ext_t * d_h];
    let mut z1_all = vec![0.0; ext_t * ext_x * d_1];
    let mut z2_all = vec![0.0; ext_t * ext_x * d_2];
    let mut phi = vec![0.0; ext_t * ext_x];

    let mut y = vec![0.0; 2 + d_h];
    let mut base1 = vec![0.0; d_1];
    let w1_x: Vec<f64> = w1.chunks_exact(1 + d_h).map(|row| row[0]).collect();

    for k in 0..ext_t {
        let (t, q) = (grid.t(k), path.at(k));
        inputs.push((t, q));
        y[0] = t;
        y[1] = q;
        if k > 0 {
            y[2..].copy_from_slice(&hidden[(k - 1) * d_h..k * d_h]);
        }
        let h = &mut hidden[k * d_h..(k + 1) * d_h];
        affine(w_h, &y, b_h, h);
        for (j, v) in h.iter_mut().enumerate() {
            *v = v.tanh();
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    node: format!("hidden[k={k}][{j}]"),
                });
            }
        }
        let h = &hidden[k * d_h..(k + 1) * d_h];

        // The hidden-state part of the first dense layer is shared by the level.
        for ((row, o), bias) in w1.chunks_exact(1 + d_h).zip(base1.iter_mut()).zip(b1) {
            *o = bias + dot(&row[1..], h);
        }

        for i in 0..ext_x {
            let x = grid.x(i);
            let p = k * ext_x + i;
            let z1 = &mut z1_all[p * d_1..(p + 1) * d_1];
            for ((z, base), wx) in z1.iter_mut().zip(&base1).zip(&w1_x) {
                *z = sigmoid(base + wx * x);
            }
            let z1 = &z1_all[p * d_1..(p + 1) * d_1];
            let z2 = &mut z2_all[p * d_2..(p + 1) * d_2];
            affine(w2, z1, b2, z2);
            z2.iter_mut().for_each(|v| *v = sigmoid(*v));
            let value = b3 + dot(w3, z2);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    node: format!("phi[k={k}][i={i}]"),
                });
            }
            phi[p] = value;
        }
    }

    let field = PotentialField::from_values(*grid, phi)?;
    let tape = ForwardTape {
        grid: *grid,
        inputs,
        hidden,
        z1: z1_all,
        z2: z2_all,
    };
    Ok((field, tape))
}
