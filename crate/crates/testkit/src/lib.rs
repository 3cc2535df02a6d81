//! Independent oracles and synthetic data for checking `masscad`.
//!
//! Nothing here reuses the production code paths it checks: the feature
//! oracle recomputes every statistic with its own loops, and the
//! finite-difference gradient evaluates the network with its own forward pass.

pub mod gradcheck;
pub mod oracle;
pub mod synth;

pub use gradcheck::{fd_gradient, gradient_sweep, relative_error, GradSweep};
pub use masscad::rng::SplitMix64;
pub use oracle::oracle_features;
pub use synth::{best_single_feature_split, gen_synthetic, SynthSpec, ThresholdSplit};
