//! Labeled clusters in feature space.

use masscad::rng::SplitMix64;
use masscad::{FeatureRecord, Label};

/// Lower and upper clip bounds per feature, in classifier input order.
/// Skewness is unbounded; kurtosis cannot fall below -2.
pub const FEATURE_BOUNDS: [(f64, f64); 7] = [
    (0.0, 1.0),
    (0.0, 0.5),
    (0.0, 0.2),
    (0.0, 8.0),
    (f64::NEG_INFINITY, f64::INFINITY),
    (-2.0, f64::INFINITY),
    (1.0 / 256.0, 1.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_per_class: usize,
    /// Benign centroid, then malignant centroid.
    pub class_centers: [[f64; 7]; 2],
    /// Half-width of the uniform jitter applied to every feature.
    pub spread: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// 100 samples per class whose centroids sit well over `4 * spread` apart.
    pub fn acceptance() -> Self {
        Self {
            n_per_class: 100,
            class_centers: [
                [0.35, 0.10, 0.010, 5.0, 0.20, -0.50, 0.050],
                [0.55, 0.18, 0.030, 6.0, -0.30, 0.50, 0.020],
            ],
            spread: 0.05,
            seed: 20_100,
        }
    }

    pub fn centroid_distance(&self) -> f64 {
        let [a, b] = &self.class_centers;
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// Benign records first (`synth_b000`, ...), then malignant (`synth_m000`, ...).
pub fn gen_synthetic(spec: &SynthSpec) -> Vec<FeatureRecord> {
    let mut rng = SplitMix64::new(spec.seed);
    let mut out = Vec::with_capacity(2 * spec.n_per_class);
    for (center, label, tag) in [
        (&spec.class_centers[0], Label::Benign, 'b'),
        (&spec.class_centers[1], Label::Malignant, 'm'),
    ] {
        for i in 0..spec.n_per_class {
            let mut v = [0.0; 7];
            for (f, slot) in v.iter_mut().enumerate() {
                let (lo, hi) = FEATURE_BOUNDS[f];
                *slot = (center[f] + rng.symmetric(spec.spread)).clamp(lo, hi);
            }
            out.push(FeatureRecord::from_vector(format!("synth_{tag}{i:03}"), v, Some(label)));
        }
    }
    out
}

/// Best rule of the form `feature >= threshold` (or `<=`) predicting malignant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSplit {
    pub feature: usize,
    pub threshold: f64,
    pub malignant_above: bool,
    pub accuracy: f64,
}

/// Exhaustive sweep over every feature and every midpoint between adjacent values.
///
/// Unlabeled records are ignored. Returns `None` when no record is labeled.
pub fn best_single_feature_split(records: &[FeatureRecord]) -> Option<ThresholdSplit> {
    let labeled: Vec<(&FeatureRecord, bool)> = records
        .iter()
        .filter_map(|r| r.label.map(|l| (r, l == Label::Malignant)))
        .collect();
    if labeled.is_empty() {
        return None;
    }
    let n = labeled.len() as f64;
    let mut best: Option<ThresholdSplit> = None;
    for feature in 0..7 {
        let mut values: Vec<f64> = labeled.iter().map(|(r, _)| r.vector()[feature]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut candidates = vec![values[0] - 1.0];
        candidates.extend(values.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        candidates.push(values[values.len() - 1] + 1.0);
        for threshold in candidates {
            let above_correct = labeled
                .iter()
                .filter(|(r, m)| (r.vector()[feature] >= threshold) == *m)
                .count() as f64;
            for (malignant_above, correct) in [(true, above_correct), (false, n - above_correct)] {
                let accuracy = correct / n;
                if best.is_none_or(|b| accuracy > b.accuracy) {
                    best = Some(ThresholdSplit {
                        feature,
                        threshold,
                        malignant_above,
                        accuracy,
                    });
                }
            }
        }
    }
    best
}
