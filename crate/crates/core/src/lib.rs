//! Masked integer-sequence modelling over OEIS-style corpora.
//!
//! Every integer is described along two axes: a log-scale magnitude and the
//! spectrum of its residues modulo 2..=101. A Transformer encoder fuses the two
//! streams with feature-wise linear modulation and predicts magnitude, sign and
//! residues at masked positions. The [`solver`] turns those predictions back
//! into concrete integers with dense enumeration or CRT beam search.
//!
//! Module map:
//!
//! - [`corpus`]: parsing, filtering, splitting and bucketing of sequence corpora
//! - [`featurizer`]: magnitude/modulo features, supervision targets, masking
//! - [`model`]: dual-stream encoder, baselines, hand-written backpropagation
//! - [`trainer`]: multi-task loss, AdamW with warmup, training loop, checkpoints
//! - [`solver`]: integer reconstruction from a prediction bundle
//! - [`analytics`]: metrics, NIG spectrum, totient correlation, reports
//! - [`cli`]: the `intseq` command line front end

pub mod analytics;
pub mod cli;
pub mod corpus;
pub mod featurizer;
pub mod model;
pub mod rng;
pub mod solver;
pub mod trainer;

pub use corpus::{Bucket, CorpusSplit, SequenceRecord};
pub use featurizer::{MaskedSample, SignClass, MODULI, NUM_MODULI, RESIDUE_LOGITS};
pub use model::{Model, ModelConfig, Variant};
pub use solver::{solve, SolverMode, SolverQuery, SolverResult};
