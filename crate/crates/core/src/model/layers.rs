//! Forward and backward passes of the building blocks.
//!
//! Activations are row matrices (one row per sequence position). Backward
//! functions accumulate parameter gradients into a [`ParamStore`] and return
//! the gradient with respect to their input.

use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::store::{LinearIds, NormIds, ParamStore};
use super::Real;

pub const LN_EPS: f64 = 1e-5;

pub fn linear<T: Real>(x: ArrayView2<'_, T>, p: &ParamStore<T>, ids: LinearIds) -> Array2<T> {
    let mut y = x.dot(&p.mat(ids.weight));
    if let Some(b) = ids.bias {
        y += &p.vec(b);
    }
    y
}

/// Accumulates `dW += xᵀ dy`, `db += Σ dy` and returns `dy Wᵀ` when asked.
pub fn linear_backward<T: Real>(
    x: ArrayView2<'_, T>,
    dy: ArrayView2<'_, T>,
    p: &ParamStore<T>,
    ids: LinearIds,
    grads: &mut ParamStore<T>,
    need_input_grad: bool,
) -> Option<Array2<T>> {
    general_mat_mul(T::one(), &x.t(), &dy, T::one(), &mut grads.mat_mut(ids.weight));
    if let Some(b) = ids.bias {
        let mut gb = grads.vec_mut(b);
        gb += &dy.sum_axis(Axis(0));
    }
    need_input_grad.then(|| dy.dot(&p.mat(ids.weight).t()))
}

pub fn relu<T: Real>(x: &Array2<T>) -> Array2<T> {
    x.mapv(|v| if v > T::zero() { v } else { T::zero() })
}

/// Zeroes `grad` where the ReLU output was not positive.
pub fn relu_backward<T: Real>(grad: &mut Array2<T>, out: &Array2<T>) {
    Zip::from(grad).and(out).for_each(|g, &o| {
        if o <= T::zero() {
            *g = T::zero();
        }
    });
}

/// Inverted dropout mask: entries are `0` or `1/(1-p)`.
pub fn dropout_mask<T: Real>(shape: (usize, usize), p: f64, rng: &mut impl Rng) -> Array2<T> {
    let keep = T::of(1.0 / (1.0 - p));
    Array2::from_shape_fn(shape, |_| if rng.random::<f64>() < p { T::zero() } else { keep })
}

pub struct NormCache<T> {
    pub xhat: Array2<T>,
    pub inv_std: Array1<T>,
}

pub fn layer_norm<T: Real>(x: ArrayView2<'_, T>, p: &ParamStore<T>, ids: NormIds) -> (Array2<T>, NormCache<T>) {
    let d = T::of(x.ncols() as f64);
    let eps = T::of(LN_EPS);
    let mut xhat = x.to_owned();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, inv) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<T>() / d;
        *inv = T::one() / (var + eps).sqrt();
        let s = *inv;
        row.mapv_inplace(|v| v * s);
    }
    let y = &xhat * &p.vec(ids.gamma) + &p.vec(ids.beta);
    (y, NormCache { xhat, inv_std })
}

pub fn layer_norm_backward<T: Real>(
    dy: ArrayView2<'_, T>,
    cache: &NormCache<T>,
    p: &ParamStore<T>,
    ids: NormIds,
    grads: &mut ParamStore<T>,
) -> Array2<T> {
    {
        let mut gg = grads.vec_mut(ids.gamma);
        gg += &(&dy * &cache.xhat).sum_axis(Axis(0));
    }
    {
        let mut gb = grads.vec_mut(ids.beta);
        gb += &dy.sum_axis(Axis(0));
    }
    let d = T::of(dy.ncols() as f64);
    let mut dx = &dy * &p.vec(ids.gamma);
    for ((mut row, xh), &inv) in dx.rows_mut().into_iter().zip(cache.xhat.rows()).zip(cache.inv_std.iter()) {
        let mean_g = row.sum() / d;
        let mean_gx = row.iter().zip(xh.iter()).map(|(&g, &x)| g * x).sum::<T>() / d;
        Zip::from(&mut row).and(&xh).for_each(|g, &x| *g = inv * (*g - mean_g - x * mean_gx));
    }
    dx
}

/// Sinusoidal position table: `PE[p, 2i] = sin(p / 10000^(2i/d))`,
/// `PE[p, 2i+1] = cos(p / 10000^(2i/d))`.
pub fn positional_encoding<T: Real>(len: usize, d: usize) -> Array2<T> {
    Array2::from_shape_fn((len, d), |(pos, j)| {
        let i = (j / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * i / d as f64);
        T::of(if j % 2 == 0 { angle.sin() } else { angle.cos() })
    })
}

pub struct AttentionCache<T> {
    pub input: Array2<T>,
    pub q: Array2<T>,
    pub k: Array2<T>,
    pub v: Array2<T>,
    pub context: Array2<T>,
    /// Attention probabilities per (segment, head), segment-major.
    pub probs: Vec<Array2<T>>,
}

pub struct AttentionIds {
    pub q: LinearIds,
    pub k: LinearIds,
    pub v: LinearIds,
    pub o: LinearIds,
}

/// Multi-head self-attention over packed sequences.
///
/// Rows in `segments[i]` attend only to rows of the same segment. Keys with
/// `key_padding[j] == true` receive an additive −∞ score.
pub fn attention<T: Real>(
    x: ArrayView2<'_, T>,
    segments: &[Range<usize>],
    key_padding: Option<&[bool]>,
    heads: usize,
    p: &ParamStore<T>,
    ids: &AttentionIds,
) -> (Array2<T>, AttentionCache<T>) {
    let q = linear(x, p, ids.q);
    let k = linear(x, p, ids.k);
    let v = linear(x, p, ids.v);
    let d = x.ncols();
    let dh = d / heads;
    let scale = T::of(1.0 / (dh as f64).sqrt());
    let mut context = Array2::zeros((x.nrows(), d));
    let mut probs = Vec::with_capacity(segments.len() * heads);
    for seg in segments {
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let qs = q.slice(s![seg.clone(), cols.clone()]);
            let ks = k.slice(s![seg.clone(), cols.clone()]);
            let vs = v.slice(s![seg.clone(), cols.clone()]);
            let mut scores = qs.dot(&ks.t());
            scores.mapv_inplace(|s| s * scale);
            if let Some(pad) = key_padding {
                for (j, &is_pad) in pad[seg.clone()].iter().enumerate() {
                    if is_pad {
                        scores.column_mut(j).fill(T::neg_infinity());
                    }
                }
            }
            softmax_rows(&mut scores);
            context.slice_mut(s![seg.clone(), cols]).assign(&scores.dot(&vs));
            probs.push(scores);
        }
    }
    let out = linear(context.view(), p, ids.o);
    (out, AttentionCache { input: x.to_owned(), q, k, v, context, probs })
}

/// Row-wise softmax in place. A row that is entirely −∞ becomes all zeros.
pub fn softmax_rows<T: Real>(m: &mut Array2<T>) {
    for mut row in m.rows_mut() {
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            row.fill(T::zero());
            continue;
        }
        row.mapv_inplace(|s| (s - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|s| s / sum);
    }
}

pub fn attention_backward<T: Real>(
    d_out: ArrayView2<'_, T>,
    cache: &AttentionCache<T>,
    segments: &[Range<usize>],
    heads: usize,
    p: &ParamStore<T>,
    ids: &AttentionIds,
    grads: &mut ParamStore<T>,
) -> Array2<T> {
    let d_ctx = linear_backward(cache.context.view(), d_out, p, ids.o, grads, true).expect("input grad");
    let d = d_ctx.ncols();
    let dh = d / heads;
    let scale = T::of(1.0 / (dh as f64).sqrt());
    let mut dq = Array2::zeros(d_ctx.raw_dim());
    let mut dk = Array2::zeros(d_ctx.raw_dim());
    let mut dv = Array2::zeros(d_ctx.raw_dim());
    let mut probs = cache.probs.iter();
    for seg in segments {
        for h in 0..heads {
            let pm = probs.next().expect("one probability matrix per segment and head");
            let cols = h * dh..(h + 1) * dh;
            let dc = d_ctx.slice(s![seg.clone(), cols.clone()]);
            let qs = cache.q.slice(s![seg.clone(), cols.clone()]);
            let ks = cache.k.slice(s![seg.clone(), cols.clone()]);
            let vs = cache.v.slice(s![seg.clone(), cols.clone()]);
            let dp = dc.dot(&vs.t());
            dv.slice_mut(s![seg.clone(), cols.clone()]).assign(&pm.t().dot(&dc));
            let mut ds = dp;
            for (mut ds_row, p_row) in ds.rows_mut().into_iter().zip(pm.rows()) {
                let dot = ds_row.iter().zip(p_row.iter()).map(|(&a, &b)| a * b).sum::<T>();
                Zip::from(&mut ds_row).and(&p_row).for_each(|g, &pv| *g = pv * (*g - dot) * scale);
            }
            dq.slice_mut(s![seg.clone(), cols.clone()]).assign(&ds.dot(&ks));
            dk.slice_mut(s![seg.clone(), cols]).assign(&ds.t().dot(&qs));
        }
    }
    let x = cache.input.view();
    let mut dx = linear_backward(x, dq.view(), p, ids.q, grads, true).expect("input grad");
    dx += &linear_backward(x, dk.view(), p, ids.k, grads, true).expect("input grad");
    dx += &linear_backward(x, dv.view(), p, ids.v, grads, true).expect("input grad");
    dx
}
