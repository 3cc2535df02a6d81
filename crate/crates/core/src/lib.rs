//! Benign/malignant mass classification from first-order texture features.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`image`]: read 8-bit PGM mammograms.
//! 2. [`roi`]: crop annotated mass circles into [`roi::MaskedRegion`]s.
//! 3. [`features`]: compute seven texture descriptors per region.
//! 4. [`mlp`], [`trainer`] and [`eval`]: fit a one-hidden-layer sigmoid network by
//!    backpropagation, then threshold its output and score it with sensitivity
//!    and specificity.
//!
//! All randomness comes from [`rng::SplitMix64`], so every seeded result is
//! reproducible bit for bit.

pub mod eval;
pub mod features;
pub mod image;
pub mod mlp;
pub mod rng;
pub mod roi;
pub mod trainer;

pub use eval::{classify, confusion, metrics, ConfusionMatrix, MetricsReport};
pub use features::{compute_features, histogram, FeatureRecord, Histogram256, Label};
pub use image::{read_pgm, write_pgm, GrayImage, PgmVariant};
pub use mlp::{hidden_units, LabeledSample, MlpModel, Topology};
pub use roi::{crop_region, parse_annotations, MaskMode, MaskedRegion, RoiAnnotation, YOrigin};
pub use trainer::{encode_targets, split, train, SplitSpec, TrainConfig, TrainReport};

/// Formats a real with 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses a finite real written by [`format_real`] or any plain decimal form.
pub fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}
