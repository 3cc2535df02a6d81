//! First-order texture descriptors of a masked region.
//!
//! Pixels are normalized as `q = p / 255` before any statistic is taken, and
//! only active (masked) pixels contribute. Moments use the population divisor.

use std::io::{Read, Write};

use thiserror::Error;

use crate::roi::MaskedRegion;
use crate::{format_real, parse_real};

/// Below this standard deviation skewness and kurtosis are reported as zero.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Column order of the feature CSV and of the classifier input vector.
pub const FEATURE_NAMES: [&str; 7] = [
    "mean",
    "std",
    "smoothness",
    "entropy",
    "skewness",
    "kurtosis",
    "uniformity",
];

pub const CSV_HEADER: [&str; 9] = [
    "id",
    "mean",
    "std",
    "smoothness",
    "entropy",
    "skewness",
    "kurtosis",
    "uniformity",
    "label",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Benign,
    Malignant,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Benign => 0,
            Label::Malignant => 1,
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "0" => Some(Label::Benign),
            "1" => Some(Label::Malignant),
            _ => None,
        }
    }
}

/// Grey-level counts over the 256 raw 8-bit levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
    total: u64,
}

impl Histogram256 {
    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `Pr_k = counts[k] / total`.
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        let total = self.total as f64;
        self.counts.iter().map(move |&c| c as f64 / total)
    }

    /// Shannon entropy in bits; empty bins contribute nothing.
    pub fn entropy(&self) -> f64 {
        let h: f64 = self
            .probabilities()
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum();
        // a single occupied bin gives -0.0
        h.max(0.0)
    }

    pub fn uniformity(&self) -> f64 {
        self.probabilities().map(|p| p * p).sum()
    }
}

pub fn histogram(region: &MaskedRegion) -> Histogram256 {
    let mut counts = [0u64; 256];
    for p in region.active_pixels() {
        counts[p as usize] += 1;
    }
    Histogram256 {
        counts,
        total: region.active_count() as u64,
    }
}

/// The seven descriptors of one region, plus an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub mean: f64,
    pub std_dev: f64,
    pub smoothness: f64,
    pub entropy: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub uniformity: f64,
    pub label: Option<Label>,
}

impl FeatureRecord {
    /// Classifier input in [`FEATURE_NAMES`] order.
    pub fn vector(&self) -> [f64; 7] {
        [
            self.mean,
            self.std_dev,
            self.smoothness,
            self.entropy,
            self.skewness,
            self.kurtosis,
            self.uniformity,
        ]
    }

    pub fn from_vector(id: impl Into<String>, v: [f64; 7], label: Option<Label>) -> Self {
        Self {
            id: id.into(),
            mean: v[0],
            std_dev: v[1],
            smoothness: v[2],
            entropy: v[3],
            skewness: v[4],
            kurtosis: v[5],
            uniformity: v[6],
            label,
        }
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }
}

pub fn compute_features(region: &MaskedRegion, id: &str) -> FeatureRecord {
    let n = region.active_count() as f64;
    let q = || region.active_pixels().map(|p| f64::from(p) / 255.0);

    let mean = q().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in q() {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / n;
    let std_dev = variance.sqrt();
    let smoothness = 1.0 - 1.0 / (1.0 + variance);
    let (skewness, kurtosis) = if std_dev < DEGENERATE_STD {
        (0.0, 0.0)
    } else {
        (
            m3 / n / (variance * std_dev),
            m4 / n / (variance * variance) - 3.0,
        )
    };

    let hist = histogram(region);
    FeatureRecord {
        id: id.to_string(),
        mean,
        std_dev,
        smoothness,
        entropy: hist.entropy(),
        skewness,
        kurtosis,
        uniformity: hist.uniformity(),
        label: None,
    }
}

#[derive(Debug, Error)]
pub enum FeatureCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Invalid { line: u64, message: String },
}

pub fn write_feature_csv<W: Write>(
    out: W,
    records: &[FeatureRecord],
) -> Result<(), FeatureCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        let mut row = vec![rec.id.clone()];
        row.extend(rec.vector().iter().map(|&v| format_real(v)));
        row.push(rec.label.map(|l| l.code().to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRecord>, FeatureCsvError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(FeatureCsvError::Invalid {
            line: 1,
            message: format!("expected header {:?}", CSV_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in r.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let invalid = |message: String| FeatureCsvError::Invalid { line, message };
        let mut v = [0.0; 7];
        for (i, slot) in v.iter_mut().enumerate() {
            let cell = &row[i + 1];
            *slot = parse_real(cell)
                .ok_or_else(|| invalid(format!("{}: not a finite real {cell:?}", FEATURE_NAMES[i])))?;
        }
        let label = match &row[8] {
            "" => None,
            code => Some(
                Label::from_code(code)
                    .ok_or_else(|| invalid(format!("label must be 0, 1 or empty, got {code:?}")))?,
            ),
        };
        records.push(FeatureRecord::from_vector(&row[0], v, label));
    }
    Ok(records)
}
