//! Evaluation metrics, Solver evaluation, the NIG spectrum and its
//! correlation with Euler's totient ratio.

mod metrics;
mod number_theory;
mod predictor;
mod report;

pub use metrics::{argmax, mag_accuracy, mean, nig, BucketStats, MaskedMetrics, MAG_TOLERANCE};
pub use number_theory::{euler_phi, pearson, prime_factors, ratio_to_f64, totient_ratio, Correlation, CorrelationError};
pub use predictor::{chance_mma, PerfectPredictor, Predictor, UniformPredictor};
pub use report::{
    evaluate_masked, evaluate_solver, sample_indices, spectrum, totient_correlation, write_spectrum_csv, EvalConfig,
    EvalReport, MaskedReport, ModeStats, SolverBucketStats, SolverEvalConfig, SolverReport, SpectrumRow,
};
