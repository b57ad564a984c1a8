use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::RngCore;

use super::layers::{
    attention, attention_backward, dropout_mask, layer_norm, layer_norm_backward, linear, linear_backward, relu,
    relu_backward, AttentionCache, AttentionIds, NormCache,
};
use super::store::{BlockIds, ParamStore};
use super::{residue_blocks, Model, Real, Variant, MASK_TOKEN, PAD_TOKEN};
use crate::featurizer::{MaskedSample, MAG_FEATURES, MOD_FEATURES, RESIDUE_LOGITS};

/// Several sequences packed row-wise without padding.
#[derive(Debug, Clone)]
pub struct PackedBatch<T> {
    pub segments: Vec<Range<usize>>,
    /// Position of each row inside its own sequence.
    pub positions: Vec<usize>,
    pub mag: Array2<T>,
    pub modulo: Array2<T>,
    pub tokens: Vec<u32>,
    pub masked: Vec<bool>,
    /// Rows that are padding; excluded as attention keys.
    pub key_padding: Option<Vec<bool>>,
}

impl<T: Real> PackedBatch<T> {
    pub fn from_samples(samples: &[MaskedSample]) -> Self {
        let rows: usize = samples.iter().map(MaskedSample::len).sum();
        let mut mag = Array2::zeros((rows, MAG_FEATURES));
        let mut modulo = Array2::zeros((rows, MOD_FEATURES));
        let mut segments = Vec::with_capacity(samples.len());
        let mut positions = Vec::with_capacity(rows);
        let mut tokens = Vec::with_capacity(rows);
        let mut masked = Vec::with_capacity(rows);
        let mut start = 0;
        for sample in samples {
            let enc = &sample.encoded;
            for i in 0..sample.len() {
                let r = start + i;
                for (dst, &v) in mag.row_mut(r).iter_mut().zip(&enc.mag[i]) {
                    *dst = T::of(v);
                }
                for (dst, &v) in modulo.row_mut(r).iter_mut().zip(&enc.modulo[i]) {
                    *dst = T::of(v);
                }
                positions.push(i);
                tokens.push(enc.tokens[i]);
                masked.push(sample.mask[i]);
            }
            segments.push(start..start + sample.len());
            start += sample.len();
        }
        Self { segments, positions, mag, modulo, tokens, masked, key_padding: None }
    }

    pub fn rows(&self) -> usize {
        self.positions.len()
    }

    pub fn masked_rows(&self) -> Vec<usize> {
        self.masked.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }
}

/// Dropout is applied only in `Train` mode.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Head outputs at the requested rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions<T> {
    /// `(μ, log σ²)` per row.
    pub mag: Array2<T>,
    pub sign: Array2<T>,
    /// Concatenated residue logits, modulus-major (`m = 2..=101`).
    pub residues: Array2<T>,
}

pub type PredictionGrads<T> = Predictions<T>;

impl<T: Real> Predictions<T> {
    pub fn zeros(rows: usize) -> Self {
        Self {
            mag: Array2::zeros((rows, 2)),
            sign: Array2::zeros((rows, 3)),
            residues: Array2::zeros((rows, RESIDUE_LOGITS)),
        }
    }

    pub fn rows(&self) -> usize {
        self.mag.nrows()
    }

    pub fn position(&self, k: usize) -> PositionPrediction {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        PositionPrediction {
            mu: f(self.mag[[k, 0]]),
            log_var: f(self.mag[[k, 1]]),
            sign_logits: [f(self.sign[[k, 0]]), f(self.sign[[k, 1]]), f(self.sign[[k, 2]])],
            residue_logits: self.residues.row(k).iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Prediction bundle of a single position, in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionPrediction {
    pub mu: f64,
    pub log_var: f64,
    pub sign_logits: [f64; 3],
    pub residue_logits: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl PositionPrediction {
    pub fn variance(&self) -> f64 {
        self.log_var.exp()
    }

    pub fn sign_probs(&self) -> [f64; 3] {
        let p = softmax(&self.sign_logits);
        [p[0], p[1], p[2]]
    }

    /// One distribution per modulus, `m = 2..=101`.
    pub fn residue_probs(&self) -> Vec<Vec<f64>> {
        residue_blocks(&self.residue_logits).map(softmax).collect()
    }
}

struct EmbedCache<T> {
    mag_hidden: Option<Array2<T>>,
    h_mag: Option<Array2<T>>,
    mod_hidden: Option<Array2<T>>,
    mod_drop: Option<Array2<T>>,
    mod_dropped: Option<Array2<T>>,
    gamma: Option<Array2<T>>,
}

struct BlockCache<T> {
    ln1: NormCache<T>,
    attn: AttentionCache<T>,
    attn_drop: Option<Array2<T>>,
    ln2: NormCache<T>,
    u2: Array2<T>,
    hidden: Array2<T>,
    ffn_drop: Option<Array2<T>>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache<T> {
    embed: EmbedCache<T>,
    blocks: Vec<BlockCache<T>>,
    final_norm: NormCache<T>,
    head_rows: Vec<usize>,
    z_rows: Array2<T>,
    mag_head_hidden: Array2<T>,
}

fn apply_dropout<T: Real>(x: &mut Array2<T>, p: f64, mode: &mut Mode<'_>) -> Option<Array2<T>> {
    match mode {
        Mode::Train(rng) if p > 0.0 => {
            let mask = dropout_mask(x.dim(), p, rng);
            *x *= &mask;
            Some(mask)
        }
        _ => None,
    }
}

fn attn_ids(b: &BlockIds) -> AttentionIds {
    AttentionIds { q: b.q, k: b.k, v: b.v, o: b.o }
}

impl<T: Real> Model<T> {
    fn embed(&self, batch: &PackedBatch<T>, mode: &mut Mode<'_>) -> (Array2<T>, EmbedCache<T>) {
        let p = &self.params;
        let l = &self.layout;
        let mut cache = EmbedCache {
            mag_hidden: None,
            h_mag: None,
            mod_hidden: None,
            mod_drop: None,
            mod_dropped: None,
            gamma: None,
        };
        let mut e = match self.config.variant {
            Variant::VanillaToken => {
                let table = p.mat(l.token_embed.expect("vanilla model has a token table"));
                let pad = batch.key_padding.as_deref();
                let mut e = Array2::zeros((batch.rows(), self.config.d_model));
                for (r, mut row) in e.rows_mut().into_iter().enumerate() {
                    row.assign(&table.row(self.input_token(batch, pad, r) as usize));
                }
                e
            }
            Variant::DualStream | Variant::MagnitudeOnly => {
                let [mlp0, mlp1] = l.mag_mlp.expect("magnitude MLP");
                let mag_hidden = relu(&linear(batch.mag.view(), p, mlp0));
                let h_mag = linear(mag_hidden.view(), p, mlp1);
                let e = if self.config.variant == Variant::DualStream {
                    let mod_hidden = relu(&linear(batch.modulo.view(), p, l.mod_proj.expect("modulo projection")));
                    let mut dropped = mod_hidden.clone();
                    cache.mod_drop = apply_dropout(&mut dropped, self.config.dropout, mode);
                    let gamma = linear(dropped.view(), p, l.film_gamma.expect("FiLM gamma"));
                    let beta = linear(dropped.view(), p, l.film_beta.expect("FiLM beta"));
                    let e = (&gamma + T::one()) * &h_mag + &beta;
                    cache.mod_hidden = Some(mod_hidden);
                    cache.mod_dropped = Some(dropped);
                    cache.gamma = Some(gamma);
                    e
                } else {
                    h_mag.clone()
                };
                cache.mag_hidden = Some(mag_hidden);
                cache.h_mag = Some(h_mag);
                e
            }
        };
        if let Some(id) = l.mask_embed {
            let mask_vec = p.vec(id);
            for (r, &m) in batch.masked.iter().enumerate() {
                if m {
                    e.row_mut(r).assign(&mask_vec);
                }
            }
        }
        (e, cache)
    }

    fn input_token(&self, batch: &PackedBatch<T>, pad: Option<&[bool]>, r: usize) -> u32 {
        if pad.is_some_and(|p| p[r]) {
            PAD_TOKEN
        } else if batch.masked[r] {
            MASK_TOKEN
        } else {
            batch.tokens[r]
        }
    }

    fn block_forward(
        &self,
        x: Array2<T>,
        ids: &BlockIds,
        segments: &[Range<usize>],
        pad: Option<&[bool]>,
        mode: &mut Mode<'_>,
    ) -> (Array2<T>, BlockCache<T>) {
        let p = &self.params;
        let (u1, ln1) = layer_norm(x.view(), p, ids.ln1);
        let (mut a, attn) = attention(u1.view(), segments, pad, self.config.heads, p, &attn_ids(ids));
        let attn_drop = apply_dropout(&mut a, self.config.dropout, mode);
        let x1 = x + &a;
        let (u2, ln2) = layer_norm(x1.view(), p, ids.ln2);
        let hidden = relu(&linear(u2.view(), p, ids.ff1));
        let mut g = linear(hidden.view(), p, ids.ff2);
        let ffn_drop = apply_dropout(&mut g, self.config.dropout, mode);
        (x1 + &g, BlockCache { ln1, attn, attn_drop, ln2, u2, hidden, ffn_drop })
    }

    fn encode(
        &self,
        mut x: Array2<T>,
        segments: &[Range<usize>],
        pad: Option<&[bool]>,
        mode: &mut Mode<'_>,
    ) -> (Array2<T>, Vec<BlockCache<T>>, NormCache<T>) {
        let mut caches = Vec::with_capacity(self.layout.blocks.len());
        for ids in &self.layout.blocks {
            let (next, cache) = self.block_forward(x, ids, segments, pad, mode);
            caches.push(cache);
            x = next;
        }
        let (z, final_norm) = layer_norm(x.view(), &self.params, self.layout.final_norm);
        (z, caches, final_norm)
    }

    fn heads(&self, z_rows: ArrayView2<'_, T>) -> (Predictions<T>, Array2<T>) {
        let p = &self.params;
        let l = &self.layout;
        let hidden = relu(&linear(z_rows, p, l.mag_head[0]));
        let mag = linear(hidden.view(), p, l.mag_head[1]);
        let sign = linear(z_rows, p, l.sign_head);
        let residues = linear(z_rows, p, l.mod_head);
        (Predictions { mag, sign, residues }, hidden)
    }

    /// Full forward pass; heads are evaluated only at `head_rows`.
    pub fn forward(
        &self,
        batch: &PackedBatch<T>,
        head_rows: &[usize],
        mut mode: Mode<'_>,
    ) -> (Predictions<T>, ForwardCache<T>) {
        assert!(
            batch.positions.iter().all(|&p| p < self.config.max_len),
            "sequence longer than max_len {}",
            self.config.max_len
        );
        let (mut x0, embed) = self.embed(batch, &mut mode);
        for (r, &pos) in batch.positions.iter().enumerate() {
            let mut row = x0.row_mut(r);
            row += &self.pe.row(pos);
        }
        let (z, blocks, final_norm) = self.encode(x0, &batch.segments, batch.key_padding.as_deref(), &mut mode);
        let z_rows = z.select(Axis(0), head_rows);
        let (pred, mag_head_hidden) = self.heads(z_rows.view());
        let cache = ForwardCache { embed, blocks, final_norm, head_rows: head_rows.to_vec(), z_rows, mag_head_hidden };
        (pred, cache)
    }

    /// Accumulates parameter gradients of a scalar loss whose gradient with
    /// respect to the head outputs is `d_pred`.
    pub fn backward(
        &self,
        batch: &PackedBatch<T>,
        cache: &ForwardCache<T>,
        d_pred: &PredictionGrads<T>,
        grads: &mut ParamStore<T>,
    ) {
        let p = &self.params;
        let l = &self.layout;

        // heads
        let mut d_hidden = linear_backward(cache.mag_head_hidden.view(), d_pred.mag.view(), p, l.mag_head[1], grads, true)
            .expect("input grad");
        relu_backward(&mut d_hidden, &cache.mag_head_hidden);
        let zr = cache.z_rows.view();
        let mut dz_rows = linear_backward(zr, d_hidden.view(), p, l.mag_head[0], grads, true).expect("input grad");
        dz_rows += &linear_backward(zr, d_pred.sign.view(), p, l.sign_head, grads, true).expect("input grad");
        dz_rows += &linear_backward(zr, d_pred.residues.view(), p, l.mod_head, grads, true).expect("input grad");
        let mut dz = Array2::zeros((batch.rows(), self.config.d_model));
        for (k, &r) in cache.head_rows.iter().enumerate() {
            let mut row = dz.row_mut(r);
            row += &dz_rows.row(k);
        }

        // encoder
        let mut dx = layer_norm_backward(dz.view(), &cache.final_norm, p, l.final_norm, grads);
        for (ids, bc) in l.blocks.iter().zip(&cache.blocks).rev() {
            dx = self.block_backward(dx, ids, bc, &batch.segments, grads);
        }

        self.embed_backward(batch, &cache.embed, dx, grads);
    }

    fn block_backward(
        &self,
        dx2: Array2<T>,
        ids: &BlockIds,
        c: &BlockCache<T>,
        segments: &[Range<usize>],
        grads: &mut ParamStore<T>,
    ) -> Array2<T> {
        let p = &self.params;
        let mut dg = dx2.clone();
        if let Some(m) = &c.ffn_drop {
            dg *= m;
        }
        let mut dh = linear_backward(c.hidden.view(), dg.view(), p, ids.ff2, grads, true).expect("input grad");
        relu_backward(&mut dh, &c.hidden);
        let du2 = linear_backward(c.u2.view(), dh.view(), p, ids.ff1, grads, true).expect("input grad");
        let dx1 = dx2 + &layer_norm_backward(du2.view(), &c.ln2, p, ids.ln2, grads);
        let mut da = dx1.clone();
        if let Some(m) = &c.attn_drop {
            da *= m;
        }
        let du1 = attention_backward(da.view(), &c.attn, segments, self.config.heads, p, &attn_ids(ids), grads);
        dx1 + &layer_norm_backward(du1.view(), &c.ln1, p, ids.ln1, grads)
    }

    fn embed_backward(&self, batch: &PackedBatch<T>, c: &EmbedCache<T>, mut de: Array2<T>, grads: &mut ParamStore<T>) {
        let p = &self.params;
        let l = &self.layout;
        if let Some(id) = l.mask_embed {
            for (r, &m) in batch.masked.iter().enumerate() {
                if m {
                    let mut g = grads.vec_mut(id);
                    g += &de.row(r);
                    de.row_mut(r).fill(T::zero());
                }
            }
        }
        match self.config.variant {
            Variant::VanillaToken => {
                let id = l.token_embed.expect("token table");
                let pad = batch.key_padding.as_deref();
                let mut table = grads.mat_mut(id);
                for r in 0..batch.rows() {
                    let mut row = table.row_mut(self.input_token(batch, pad, r) as usize);
                    row += &de.row(r);
                }
            }
            Variant::DualStream | Variant::MagnitudeOnly => {
                let [mlp0, mlp1] = l.mag_mlp.expect("magnitude MLP");
                let h_mag = c.h_mag.as_ref().expect("cached h_mag");
                let d_hmag = if self.config.variant == Variant::DualStream {
                    let gamma = c.gamma.as_ref().expect("cached gamma");
                    let dropped = c.mod_dropped.as_ref().expect("cached modulo activations");
                    let d_hmag = &de * &(gamma + T::one());
                    let d_gamma = &de * h_mag;
                    let mut d_mod =
                        linear_backward(dropped.view(), d_gamma.view(), p, l.film_gamma.unwrap(), grads, true)
                            .expect("input grad");
                    d_mod += &linear_backward(dropped.view(), de.view(), p, l.film_beta.unwrap(), grads, true)
                        .expect("input grad");
                    if let Some(m) = &c.mod_drop {
                        d_mod *= m;
                    }
                    relu_backward(&mut d_mod, c.mod_hidden.as_ref().unwrap());
                    linear_backward(batch.modulo.view(), d_mod.view(), p, l.mod_proj.unwrap(), grads, false);
                    d_hmag
                } else {
                    de
                };
                let hidden = c.mag_hidden.as_ref().expect("cached MLP activations");
                let mut dh = linear_backward(hidden.view(), d_hmag.view(), p, mlp1, grads, true).expect("input grad");
                relu_backward(&mut dh, hidden);
                linear_backward(batch.mag.view(), dh.view(), p, mlp0, grads, false);
            }
        }
    }

    /// Eval-mode predictions at the masked positions of each sample.
    pub fn predict(&self, samples: &[MaskedSample]) -> Vec<Vec<PositionPrediction>> {
        let batch = PackedBatch::<T>::from_samples(samples);
        let rows = batch.masked_rows();
        let (pred, _) = self.forward(&batch, &rows, Mode::Eval);
        let mut out: Vec<Vec<PositionPrediction>> = samples.iter().map(|_| Vec::new()).collect();
        let mut seg = 0;
        for (k, &r) in rows.iter().enumerate() {
            while !batch.segments[seg].contains(&r) {
                seg += 1;
            }
            out[seg].push(pred.position(k));
        }
        out
    }

    /// Fused embedding of a single element, before positional encoding.
    pub fn embed_dual(&self, f_mag: &[f64], f_mod: &[f64]) -> Array1<T> {
        assert_eq!(f_mag.len(), MAG_FEATURES, "magnitude features have 4 entries");
        assert_eq!(f_mod.len(), MOD_FEATURES, "modulo features have 200 entries");
        let batch = PackedBatch {
            segments: vec![0..1],
            positions: vec![0],
            mag: Array2::from_shape_fn((1, MAG_FEATURES), |(_, j)| T::of(f_mag[j])),
            modulo: Array2::from_shape_fn((1, MOD_FEATURES), |(_, j)| T::of(f_mod[j])),
            tokens: vec![0],
            masked: vec![false],
            key_padding: None,
        };
        let (e, _) = self.embed(&batch, &mut Mode::Eval);
        e.row(0).to_owned()
    }

    /// Runs the encoder stack and final norm on one sequence of embeddings.
    /// Rows flagged in `pad_mask` are excluded as attention keys.
    pub fn encoder_forward(&self, e: ArrayView2<'_, T>, pad_mask: &[bool]) -> Array2<T> {
        assert_eq!(e.nrows(), pad_mask.len());
        let segments = [0..e.nrows()];
        let (z, _, _) = self.encode(e.to_owned(), &segments, Some(pad_mask), &mut Mode::Eval);
        z
    }

    pub fn heads_forward(&self, z: ArrayView2<'_, T>) -> Predictions<T> {
        self.heads(z).0
    }

    pub fn positional_table(&self) -> ArrayView2<'_, T> {
        self.pe.slice(s![.., ..])
    }
}
