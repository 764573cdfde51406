use crate::error::{Error, Result};
use crate::nn::forward::ForwardTape;
use crate::nn::params::{Block, GradientAccumulator, NetParams};

/// Reverse sweep through the dense head at every grid point and then
/// through the recurrence (backpropagation through time).
///
/// `field_grad[k * ext_x + i]` is the derivative of the scalar loss with
/// respect to the potential at extended point `(k, i)`.
pub fn backward(params: &NetParams, tape: &ForwardTape, field_grad: &[f64]) -> Result<GradientAccumulator> {
    let grid = tape.grid;
    let (ext_t, ext_x) = (grid.ext_t(), grid.ext_x());
    if field_grad.len() != ext_t * ext_x {
        return Err(Error::shape(format!(
            "field gradient has {} entries, extended grid has {}",
            field_grad.len(),
            ext_t * ext_x
        )));
    }
    let dims = params.dims();
    let (d_h, d_1, d_2) = (dims.d_h, dims.d_1, dims.d_2);

    let w_h = params.block(Block::Wh);
    let w1 = params.block(Block::W1);
    let w2 = params.block(Block::W2);
    let w3 = params.block(Block::W3);

    let mut g_wh = vec![0.0; d_h * (2 + d_h)];
    let mut g_bh = vec![0.0; d_h];
    let mut g_w1 = vec![0.0; d_1 * (1 + d_h)];
    let mut g_b1 = vec![0.0; d_1];
    let mut g_w2 = vec![0.0; d_2 * d_1];
    let mut g_b2 = vec![0.0; d_2];
    let mut g_w3 = vec![0.0; d_2];
    let mut g_b3 = 0.0;

    let mut dh_head = vec![0.0; ext_t * d_h];
    let mut da2 = vec![0.0; d_2];
    let mut dz1 = vec![0.0; d_1];
    let mut sum_da1 = vec![0.0; d_1];

    for k in 0..ext_t {
        sum_da1.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..ext_x {
            let p = k * ext_x + i;
            let g = field_grad[p];
            if g == 0.0 {
                continue;
            }
            let x = grid.x(i);
            let z1 = &tape.z1[p * d_1..(p + 1) * d_1];
            let z2 = &tape.z2[p * d_2..(p + 1) * d_2];

            g_b3 += g;
            for (((gw, &z), &w), d) in g_w3.iter_mut().zip(z2).zip(w3).zip(da2.iter_mut()) {
                *gw += g * z;
                *d = g * w * z * (1.0 - z);
            }

            dz1.iter_mut().for_each(|v| *v = 0.0);
            for ((row_g, row_w), (&d, gb)) in g_w2
                .chunks_exact_mut(d_1)
                .zip(w2.chunks_exact(d_1))
                .zip(da2.iter().zip(g_b2.iter_mut()))
            {
                *gb += d;
                for (((gw, &w), &z), dz) in row_g.iter_mut().zip(row_w).zip(z1).zip(dz1.iter_mut()) {
                    *gw += d * z;
                    *dz += d * w;
                }
            }

            for (((s, &dz), &z), row_g) in sum_da1
                .iter_mut()
                .zip(&dz1)
                .zip(z1)
                .zip(g_w1.chunks_exact_mut(1 + d_h))
            {
                let da1 = dz * z * (1.0 - z);
                *s += da1;
                row_g[0] += da1 * x;
            }
        }

        let h = tape.hidden(k);
        let dh = &mut dh_head[k * d_h..(k + 1) * d_h];
        for ((&s, row_g), (row_w, gb)) in sum_da1
            .iter()
            .zip(g_w1.chunks_exact_mut(1 + d_h))
            .zip(w1.chunks_exact(1 + d_h).zip(g_b1.iter_mut()))
        {
            if s == 0.0 {
                continue;
            }
            *gb += s;
            for ((gw, &hv), (&w, d)) in row_g[1..].iter_mut().zip(h).zip(row_w[1..].iter().zip(dh.iter_mut())) {
                *gw += s * hv;
                *d += s * w;
            }
        }
    }

    let mut carry = vec![0.0; d_h];
    let mut da = vec![0.0; d_h];
    for k in (0..ext_t).rev() {
        let h = tape.hidden(k);
        for j in 0..d_h {
            let dh = dh_head[k * d_h + j] + carry[j];
            da[j] = dh * (1.0 - h[j] * h[j]);
        }
        let (t, q) = tape.inputs[k];
        let h_prev = (k > 0).then(|| tape.hidden(k - 1));
        carry.iter_mut().for_each(|v| *v = 0.0);
        for (j, (&d, gb)) in da.iter().zip(g_bh.iter_mut()).enumerate() {
            if d == 0.0 {
                continue;
            }
            *gb += d;
            let row_g = &mut g_wh[j * (2 + d_h)..(j + 1) * (2 + d_h)];
            let row_w = &w_h[j * (2 + d_h)..(j + 1) * (2 + d_h)];
            row_g[0] += d * t;
            row_g[1] += d * q;
            if let Some(hp) = h_prev {
                for (gw, &hv) in row_g[2..].iter_mut().zip(hp) {
                    *gw += d * hv;
                }
            }
            for (c, &w) in carry.iter_mut().zip(&row_w[2..]) {
                *c += d * w;
            }
        }
    }

    let mut grads = GradientAccumulator::zeros(dims);
    grads.block_mut(Block::Wh).copy_from_slice(&g_wh);
    grads.block_mut(Block::Bh).copy_from_slice(&g_bh);
    grads.block_mut(Block::W1).copy_from_slice(&g_w1);
    grads.block_mut(Block::B1).copy_from_slice(&g_b1);
    grads.block_mut(Block::W2).copy_from_slice(&g_w2);
    grads.block_mut(Block::B2).copy_from_slice(&g_b2);
    grads.block_mut(Block::W3).copy_from_slice(&g_w3);
    grads.block_mut(Block::B3)[0] = g_b3;

    if let Some(idx) = grads.values().iter().position(|g| !g.is_finite()) {
        let (block, offset) = dims.locate(idx).expect("index within layout");
        return Err(Error::NonFinite {
            node: format!("gradient {}[{offset}]", block.name()),
        });
    }
    Ok(grads)
}
