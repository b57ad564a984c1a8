//! Named parameter storage and the layout that maps network components onto it.
//!
//! Every learnable tensor lives in one [`ParamStore`] slot with a stable dotted
//! name. Gradients and optimizer moments use stores with the same layout, so
//! optimizers and checkpoints work on flat slices.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ModelConfig, Real, Variant};
use crate::featurizer::{MAG_FEATURES, MOD_FEATURES, RESIDUE_LOGITS};
use crate::rng::{self, Purpose};

/// Index of a tensor in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    /// Normal(0, std) truncated at two standard deviations.
    TruncNormal(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Weight stored as `(in, out)` so that `y = x · W + b` for row inputs.
#[derive(Debug, Clone, Copy)]
pub struct LinearIds {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

#[derive(Debug, Clone, Copy)]
pub struct NormIds {
    pub gamma: ParamId,
    pub beta: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct BlockIds {
    pub ln1: NormIds,
    pub q: LinearIds,
    pub k: LinearIds,
    pub v: LinearIds,
    pub o: LinearIds,
    pub ln2: NormIds,
    pub ff1: LinearIds,
    pub ff2: LinearIds,
}

/// Where each component's tensors live.
#[derive(Debug, Clone)]
pub struct Layout {
    pub specs: Vec<ParamSpec>,
    pub mag_mlp: Option<[LinearIds; 2]>,
    pub mod_proj: Option<LinearIds>,
    pub film_gamma: Option<LinearIds>,
    pub film_beta: Option<LinearIds>,
    pub token_embed: Option<ParamId>,
    pub mask_embed: Option<ParamId>,
    pub blocks: Vec<BlockIds>,
    pub final_norm: NormIds,
    pub mag_head: [LinearIds; 2],
    pub sign_head: LinearIds,
    pub mod_head: LinearIds,
}

struct Builder {
    specs: Vec<ParamSpec>,
}

const WEIGHT_STD: f64 = 0.02;

impl Builder {
    fn tensor(&mut self, name: String, shape: Vec<usize>, init: Init) -> ParamId {
        self.specs.push(ParamSpec { name, shape, init });
        ParamId(self.specs.len() - 1)
    }

    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize, bias: bool, init: Init) -> LinearIds {
        let weight = self.tensor(format!("{name}.weight"), vec![fan_in, fan_out], init);
        let bias = bias.then(|| self.tensor(format!("{name}.bias"), vec![fan_out], Init::Zeros));
        LinearIds { weight, bias }
    }

    fn dense(&mut self, name: &str, fan_in: usize, fan_out: usize) -> LinearIds {
        self.linear(name, fan_in, fan_out, true, Init::TruncNormal(WEIGHT_STD))
    }

    fn norm(&mut self, name: &str, d: usize) -> NormIds {
        NormIds {
            gamma: self.tensor(format!("{name}.gamma"), vec![d], Init::Ones),
            beta: self.tensor(format!("{name}.beta"), vec![d], Init::Zeros),
        }
    }
}

impl Layout {
    pub fn new(config: &ModelConfig) -> Self {
        let d = config.d_model;
        let mut b = Builder { specs: Vec::new() };
        let (mut mag_mlp, mut mod_proj, mut film_gamma, mut film_beta) = (None, None, None, None);
        let (mut token_embed, mut mask_embed) = (None, None);
        match config.variant {
            Variant::VanillaToken => {
                token_embed = Some(b.tensor(
                    "embed.token".into(),
                    vec![config.vocab_size, d],
                    Init::TruncNormal(WEIGHT_STD),
                ));
            }
            Variant::DualStream | Variant::MagnitudeOnly => {
                mag_mlp = Some([
                    b.dense("embed.mag_mlp.0", MAG_FEATURES, d),
                    b.dense("embed.mag_mlp.1", d, d),
                ]);
                if config.variant == Variant::DualStream {
                    mod_proj = Some(b.dense("embed.mod_proj", MOD_FEATURES, d));
                    // Zero FiLM weights: training starts from the magnitude-only embedding.
                    film_gamma = Some(b.linear("embed.film_gamma", d, d, false, Init::Zeros));
                    film_beta = Some(b.linear("embed.film_beta", d, d, false, Init::Zeros));
                }
                mask_embed = Some(b.tensor("embed.mask".into(), vec![d], Init::TruncNormal(WEIGHT_STD)));
            }
        }
        let ffn = config.ffn_mult * d;
        let blocks = (0..config.layers)
            .map(|l| {
                let p = format!("blocks.{l}");
                BlockIds {
                    ln1: b.norm(&format!("{p}.ln1"), d),
                    q: b.dense(&format!("{p}.attn.q"), d, d),
                    k: b.dense(&format!("{p}.attn.k"), d, d),
                    v: b.dense(&format!("{p}.attn.v"), d, d),
                    o: b.dense(&format!("{p}.attn.o"), d, d),
                    ln2: b.norm(&format!("{p}.ln2"), d),
                    ff1: b.dense(&format!("{p}.ffn.0"), d, ffn),
                    ff2: b.dense(&format!("{p}.ffn.1"), ffn, d),
                }
            })
            .collect();
        let final_norm = b.norm("final_norm", d);
        let mag_head = [b.dense("heads.mag.0", d, d), b.dense("heads.mag.1", d, 2)];
        let sign_head = b.dense("heads.sign", d, 3);
        let mod_head = b.dense("heads.mod", d, RESIDUE_LOGITS);
        Layout {
            specs: b.specs,
            mag_mlp,
            mod_proj,
            film_gamma,
            film_beta,
            token_embed,
            mask_embed,
            blocks,
            final_norm,
            mag_head,
            sign_head,
            mod_head,
        }
    }

    pub fn param_count(&self) -> usize {
        self.specs.iter().map(ParamSpec::numel).sum()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.specs.iter().position(|s| s.name == name).map(ParamId)
    }
}

/// Flat tensor storage with one slot per [`ParamSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    pub shapes: Vec<Vec<usize>>,
    pub data: Vec<Vec<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn zeros(layout: &Layout) -> Self {
        Self {
            shapes: layout.specs.iter().map(|s| s.shape.clone()).collect(),
            data: layout.specs.iter().map(|s| vec![T::zero(); s.numel()]).collect(),
        }
    }

    /// Initializes every tensor from its own seeded stream, so values do not
    /// depend on the precision `T` beyond rounding.
    pub fn init(layout: &Layout, seed: u64) -> Self {
        let mut store = Self::zeros(layout);
        for (i, spec) in layout.specs.iter().enumerate() {
            let mut r = rng::stream(seed, Purpose::Init, i as u64, 0);
            let slot = &mut store.data[i];
            match spec.init {
                Init::Zeros => {}
                Init::Ones => slot.iter_mut().for_each(|x| *x = T::one()),
                Init::TruncNormal(std) => {
                    for x in slot.iter_mut() {
                        let z = loop {
                            let z: f64 = r.sample(StandardNormal);
                            if z.abs() <= 2.0 {
                                break z;
                            }
                        };
                        *x = T::of(z * std);
                    }
                }
            }
        }
        store
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            shapes: self.shapes.clone(),
            data: self.data.iter().map(|d| vec![T::zero(); d.len()]).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for d in &mut self.data {
            d.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            shapes: self.shapes.clone(),
            data: self
                .data
                .iter()
                .map(|d| d.iter().map(|&x| U::of(x.to_f64().expect("finite"))).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn slice(&self, id: ParamId) -> &[T] {
        &self.data[id.0]
    }

    pub fn slice_mut(&mut self, id: ParamId) -> &mut [T] {
        &mut self.data[id.0]
    }

    pub fn mat(&self, id: ParamId) -> ArrayView2<'_, T> {
        let s = &self.shapes[id.0];
        ArrayView2::from_shape((s[0], s[1]), &self.data[id.0]).expect("matrix shape")
    }

    pub fn mat_mut(&mut self, id: ParamId) -> ArrayViewMut2<'_, T> {
        let s = &self.shapes[id.0];
        ArrayViewMut2::from_shape((s[0], s[1]), &mut self.data[id.0]).expect("matrix shape")
    }

    pub fn vec(&self, id: ParamId) -> ArrayView1<'_, T> {
        ArrayView1::from(&self.data[id.0][..])
    }

    pub fn vec_mut(&mut self, id: ParamId) -> ArrayViewMut1<'_, T> {
        ArrayViewMut1::from(&mut self.data[id.0][..])
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Self, alpha: T) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: T) {
        for d in &mut self.data {
            d.iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.data
            .iter()
            .flatten()
            .map(|x| {
                let v = x.to_f64().unwrap_or(f64::NAN);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().flatten().all(|x| x.is_finite())
    }
}
