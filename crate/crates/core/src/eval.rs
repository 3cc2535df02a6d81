//! Thresholded decisions and confusion-matrix metrics. Malignant is the positive class.

use std::fmt;

use thiserror::Error;

use crate::features::Label;
use crate::format_real;
use crate::mlp::{MlpError, MlpModel};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("truth has {truth} labels but predictions have {predicted}")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
    #[error("threshold {0} is not inside (0, 1)")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Model(#[from] MlpError),
}

/// Malignant iff `score >= threshold`.
pub fn decide(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::Malignant
    } else {
        Label::Benign
    }
}

/// Scores `features` with the first network output and thresholds it.
pub fn classify(model: &MlpModel, features: &[f64], threshold: f64) -> Result<Label, EvalError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    let out = model.forward(features)?.output;
    Ok(decide(out[0], threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t, p) {
            (Label::Malignant, Label::Malignant) => cm.tp += 1,
            (Label::Benign, Label::Benign) => cm.tn += 1,
            (Label::Benign, Label::Malignant) => cm.fp += 1,
            (Label::Malignant, Label::Benign) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Sensitivity and specificity. `None` marks a zero denominator.
///
/// Per-class correct-classification rates coincide with them:
/// malignant accuracy is the sensitivity, benign accuracy the specificity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub threshold: f64,
}

impl MetricsReport {
    pub fn accuracy_malignant(&self) -> Option<f64> {
        self.sensitivity
    }

    pub fn accuracy_benign(&self) -> Option<f64> {
        self.specificity
    }

    /// `tp,tn,fp,fn,sensitivity,specificity,threshold` header and one row.
    pub fn to_csv(&self) -> String {
        let cm = self.confusion;
        let rate = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), format_real);
        format!(
            "tp,tn,fp,fn,sensitivity,specificity,threshold\n{},{},{},{},{},{},{}\n",
            cm.tp,
            cm.tn,
            cm.fp,
            cm.fn_,
            rate(self.sensitivity),
            rate(self.specificity),
            format_real(self.threshold)
        )
    }
}

/// Renders a rate as a percentage with two decimals.
pub fn percent(rate: Option<f64>) -> String {
    rate.map_or_else(|| "undefined".to_string(), |r| format!("{:.2}", 100.0 * r))
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cm = self.confusion;
        writeln!(f, "TP\tTN\tFP\tFN\tSN (%)\tSP (%)")?;
        writeln!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            cm.tp,
            cm.tn,
            cm.fp,
            cm.fn_,
            percent(self.sensitivity),
            percent(self.specificity)
        )?;
        writeln!(f)?;
        writeln!(f, "correct classification benign (%):    {}", percent(self.accuracy_benign()))?;
        writeln!(f, "correct classification malignant (%): {}", percent(self.accuracy_malignant()))?;
        writeln!(f, "threshold: {}", self.threshold)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix, threshold: f64) -> MetricsReport {
    MetricsReport {
        confusion: *cm,
        sensitivity: ratio(cm.tp, cm.tp + cm.fn_),
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        threshold,
    }
}
