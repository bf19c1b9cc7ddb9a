//! Straight-line per-row kernels over contiguous data. The transcendental
//! stage runs four rows per step on SIMD lanes.

use wide::f64x4;

/// Counted operations per row for the transcendental stage (exp, log1p and
/// the surrounding arithmetic) in the analytic flop model.
pub const TR_FLOPS: u64 = 5;
/// Extra per-row operations to form the gradient factor.
pub const GRAD_TR_FLOPS: u64 = 3;

/// `log(1 + exp(-t))` on four lanes, without overflow for large negative `t`.
#[inline(always)]
fn softplus_neg_x4(t: f64x4) -> f64x4 {
    (-t).max(f64x4::ZERO) + (f64x4::ONE + (-t.abs()).exp()).ln()
}

/// Per-row log-likelihood terms `-( (1 - y) t + log(1 + exp(-t)) )`.
#[inline(always)]
fn row_loglike_x4(t: f64x4, y: f64x4) -> f64x4 {
    -((f64x4::ONE - y) * t + softplus_neg_x4(t))
}

#[inline(always)]
fn sigmoid_x4(t: f64x4) -> f64x4 {
    let e = (-t.abs()).exp();
    t.simd_ge(f64x4::ZERO).select(f64x4::ONE, e) / (f64x4::ONE + e)
}

/// Loads up to four values, padding with `pad`.
#[inline(always)]
fn load(v: &[f64], pad: f64) -> f64x4 {
    let mut a = [pad; 4];
    a[..v.len()].copy_from_slice(v);
    f64x4::new(a)
}

/// Scalar form of the row term, through the same lane kernel so that a row
/// gets the same value whichever path evaluates it.
#[inline]
pub fn row_loglike(t: f64, y: f64) -> f64 {
    row_loglike_x4(f64x4::splat(t), f64x4::splat(y)).to_array()[0]
}

pub fn softplus_neg(t: f64) -> f64 {
    softplus_neg_x4(f64x4::splat(t)).to_array()[0]
}

/// `1 / (1 + exp(-t))`, overflow-safe on both tails.
#[inline(always)]
pub fn sigmoid(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    let num = if t >= 0.0 { 1.0 } else { e };
    num / (1.0 + e)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `out[i] = x_i . beta` for the rows of a row-major block.
pub fn la_map(x: &[f64], k: usize, beta: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(x.chunks_exact(k)) {
        *o = dot(row, beta);
    }
}

pub fn tr_reduce(xb: &[f64], y: &[f64]) -> f64 {
    let mut acc = f64x4::ZERO;
    let (tc, yc) = (xb.chunks_exact(4), y.chunks_exact(4));
    let (tr, yr) = (tc.remainder(), yc.remainder());
    for (t, yy) in tc.zip(yc) {
        acc += row_loglike_x4(load(t, 0.0), load(yy, 0.0));
    }
    let tail = row_loglike_x4(load(tr, 0.0), load(yr, 0.0)).to_array();
    acc.reduce_add() + tail[..tr.len()].iter().sum::<f64>()
}

/// Sum of row terms at `t + delta * x`, for a single-coordinate change.
pub fn tr_reduce_shifted(xb: &[f64], x: &[f64], delta: f64, y: &[f64]) -> f64 {
    let d = f64x4::splat(delta);
    let mut acc = f64x4::ZERO;
    let (tc, xc, yc) = (xb.chunks_exact(4), x.chunks_exact(4), y.chunks_exact(4));
    let (tr, xr, yr) = (tc.remainder(), xc.remainder(), yc.remainder());
    for ((t, xx), yy) in tc.zip(xc).zip(yc) {
        acc += row_loglike_x4(load(t, 0.0) + d * load(xx, 0.0), load(yy, 0.0));
    }
    let tail = row_loglike_x4(load(tr, 0.0) + d * load(xr, 0.0), load(yr, 0.0)).to_array();
    acc.reduce_add() + tail[..tr.len()].iter().sum::<f64>()
}

/// Writes `gf[i] = y_i - sigmoid(t_i)` and returns the log-likelihood sum.
pub fn tr_grad_map(xb: &[f64], y: &[f64], gf: &mut [f64]) -> f64 {
    let mut acc = f64x4::ZERO;
    let mut f_tail = 0.0;
    for ((g, t), yy) in gf.chunks_mut(4).zip(xb.chunks(4)).zip(y.chunks(4)) {
        let (tv, yv) = (load(t, 0.0), load(yy, 0.0));
        let terms = row_loglike_x4(tv, yv);
        let w = (yv - sigmoid_x4(tv)).to_array();
        g.copy_from_slice(&w[..g.len()]);
        if g.len() == 4 {
            acc += terms;
        } else {
            f_tail = terms.to_array()[..g.len()].iter().sum();
        }
    }
    acc.reduce_add() + f_tail
}

/// `g += X_block^T gf`.
pub fn la_t_accumulate(x: &[f64], k: usize, gf: &[f64], g: &mut [f64]) {
    for (row, &w) in x.chunks_exact(k).zip(gf) {
        for (gj, &xj) in g.iter_mut().zip(row) {
            *gj += w * xj;
        }
    }
}

/// All stages fused, four rows at a time. Adds the gradient into `g` when
/// given.
pub fn fused_rows(x: &[f64], y: &[f64], k: usize, beta: &[f64], mut g: Option<&mut [f64]>) -> f64 {
    let mut acc = f64x4::ZERO;
    let mut f_tail = 0.0;
    for (rows, yy) in x.chunks(4 * k).zip(y.chunks(4)) {
        let mut t = [0.0; 4];
        for (tl, row) in t.iter_mut().zip(rows.chunks_exact(k)) {
            *tl = dot(row, beta);
        }
        let (tv, yv) = (f64x4::new(t), load(yy, 0.0));
        let terms = row_loglike_x4(tv, yv);
        if yy.len() == 4 {
            acc += terms;
        } else {
            f_tail = terms.to_array()[..yy.len()].iter().sum();
        }
        if let Some(g) = g.as_deref_mut() {
            let w = (yv - sigmoid_x4(tv)).to_array();
            for (row, &wl) in rows.chunks_exact(k).zip(&w) {
                for (gj, &xj) in g.iter_mut().zip(row) {
                    *gj += wl * xj;
                }
            }
        }
    }
    acc.reduce_add() + f_tail
}
