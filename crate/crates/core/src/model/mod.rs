//! Dual-stream Transformer encoder and its baselines.
//!
//! Three variants share the encoder and the prediction heads:
//!
//! - [`Variant::DualStream`]: magnitude MLP modulated by the modulo stream via
//!   FiLM, `e = (1 + γ) ⊙ h_mag + β` with `γ, β` linear in `ReLU(W_mod f_mod + b_mod)`.
//! - [`Variant::MagnitudeOnly`]: the same without the modulo stream, `e = h_mag`.
//! - [`Variant::VanillaToken`]: a learned embedding over a fixed integer vocabulary.
//!
//! Gradients are derived by hand; see `network.rs`.

mod layers;
mod network;
pub mod store;

use std::fmt;
use std::iter::Sum;
use std::str::FromStr;

use ndarray::NdFloat;
use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use layers::{positional_encoding, softmax_rows};
pub use network::{ForwardCache, Mode, PackedBatch, PositionPrediction, PredictionGrads, Predictions};
pub use store::{Layout, ParamId, ParamSpec, ParamStore};

use crate::featurizer::{modulus_at, residue_offset, NUM_MODULI};

/// Floating point element type of a model (`f32` for training, `f64` for
/// gradient checking).
pub trait Real: NdFloat + FromPrimitive + Default + Sum {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Largest integer with its own token in the vanilla vocabulary (exclusive).
pub const VOCAB_INTEGERS: u32 = 20_000;
pub const PAD_TOKEN: u32 = VOCAB_INTEGERS;
pub const MASK_TOKEN: u32 = VOCAB_INTEGERS + 1;
pub const UNK_TOKEN: u32 = VOCAB_INTEGERS + 2;
pub const VOCAB_SIZE: usize = VOCAB_INTEGERS as usize + 3;

/// Vanilla vocabulary id: the value itself for `0 <= x < 20000`, else `UNK`.
pub fn token_id(x: &BigInt) -> u32 {
    match x.to_u32() {
        Some(v) if v < VOCAB_INTEGERS => v,
        _ => UNK_TOKEN,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    DualStream,
    VanillaToken,
    MagnitudeOnly,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dual" | "dual_stream" | "intseq" => Ok(Variant::DualStream),
            "vanilla" | "vanilla_token" => Ok(Variant::VanillaToken),
            "ablation" | "magnitude_only" | "mag" => Ok(Variant::MagnitudeOnly),
            other => Err(format!("unknown variant `{other}` (expected dual, vanilla or ablation)")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::DualStream => "dual",
            Variant::VanillaToken => "vanilla",
            Variant::MagnitudeOnly => "ablation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Size {
    Small,
    Middle,
    Large,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(Size::Small),
            "middle" | "medium" => Ok(Size::Middle),
            "large" => Ok(Size::Large),
            other => Err(format!("unknown size `{other}` (expected small, middle or large)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("d_model {d} is not divisible by {heads} heads")]
    HeadsDontDivide { d: usize, heads: usize },
    #[error("d_model must be even and positive, got {0}")]
    OddWidth(usize),
    #[error("heads and ffn_mult must be positive")]
    Zero,
    #[error("dropout must be in [0, 1), got {0}")]
    Dropout(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub layers: usize,
    pub d_model: usize,
    pub heads: usize,
    #[serde(default = "default_ffn_mult")]
    pub ffn_mult: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_vocab")]
    pub vocab_size: usize,
}

fn default_ffn_mult() -> usize {
    4
}
fn default_dropout() -> f64 {
    0.1
}
fn default_max_len() -> usize {
    crate::corpus::MAX_PREFIX
}
fn default_vocab() -> usize {
    VOCAB_SIZE
}

impl ModelConfig {
    pub fn new(variant: Variant, layers: usize, d_model: usize, heads: usize) -> Self {
        Self {
            variant,
            layers,
            d_model,
            heads,
            ffn_mult: default_ffn_mult(),
            dropout: default_dropout(),
            max_len: default_max_len(),
            vocab_size: default_vocab(),
        }
    }

    /// Small (6, 256, 4), Middle (8, 512, 8), Large (12, 768, 12).
    pub fn preset(size: Size, variant: Variant) -> Self {
        match size {
            Size::Small => Self::new(variant, 6, 256, 4),
            Size::Middle => Self::new(variant, 8, 512, 8),
            Size::Large => Self::new(variant, 12, 768, 12),
        }
    }

    pub fn with_dropout(mut self, dropout: f64) -> Self {
        self.dropout = dropout;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.heads == 0 || self.ffn_mult == 0 {
            return Err(ConfigError::Zero);
        }
        if self.d_model == 0 || !self.d_model.is_multiple_of(2) {
            return Err(ConfigError::OddWidth(self.d_model));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(ConfigError::HeadsDontDivide { d: self.d_model, heads: self.heads });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ConfigError::Dropout(self.dropout));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).param_count()
    }
}

/// Exact number of learnable scalars of a configuration.
pub fn param_count(config: &ModelConfig) -> usize {
    config.param_count()
}

/// Slice of a 5150-wide residue row belonging to modulus index `i` (0 ↔ m=2).
pub fn residue_block<T>(row: &[T], i: usize) -> &[T] {
    let m = modulus_at(i);
    let off = residue_offset(m);
    &row[off..off + m as usize]
}

pub fn residue_blocks<T>(row: &[T]) -> impl Iterator<Item = &[T]> {
    (0..NUM_MODULI).map(move |i| residue_block(row, i))
}

/// A network: configuration, parameter layout and parameter values.
#[derive(Debug, Clone)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub layout: Layout,
    pub params: ParamStore<T>,
    pe: ndarray::Array2<T>,
}

impl<T: Real> Model<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ConfigError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let params = ParamStore::init(&layout, seed);
        Ok(Self::from_parts(config, layout, params))
    }

    pub fn with_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self, ConfigError> {
        config.validate()?;
        let layout = Layout::new(&config);
        assert_eq!(
            params.shapes,
            layout.specs.iter().map(|s| s.shape.clone()).collect::<Vec<_>>(),
            "parameter shapes do not match the configuration"
        );
        Ok(Self::from_parts(config, layout, params))
    }

    fn from_parts(config: ModelConfig, layout: Layout, params: ParamStore<T>) -> Self {
        let pe = positional_encoding(config.max_len, config.d_model);
        Self { config, layout, params, pe }
    }

    pub fn param_count(&self) -> usize {
        self.params.numel()
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model::from_parts(self.config.clone(), self.layout.clone(), self.params.cast())
    }

    pub fn param(&self, name: &str) -> Option<&[T]> {
        self.layout.find(name).map(|id| self.params.slice(id))
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut [T]> {
        self.layout.find(name).map(|id| self.params.slice_mut(id))
    }

    /// Names of all tensors in storage order.
    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.layout.specs.iter().map(|s| s.name.as_str())
    }

    /// The magnitude-only model sharing every tensor except the modulo stream.
    pub fn without_modulo_stream(&self) -> Model<T> {
        let mut config = self.config.clone();
        config.variant = Variant::MagnitudeOnly;
        let layout = Layout::new(&config);
        let mut params = ParamStore::zeros(&layout);
        for (i, spec) in layout.specs.iter().enumerate() {
            let src = self.layout.find(&spec.name).expect("shared tensor present in source model");
            params.data[i].copy_from_slice(self.params.slice(src));
        }
        Model::from_parts(config, layout, params)
    }
}
