//! Dataset preparation and gradient-descent fitting.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::features::{FeatureRecord, Label};
use crate::format_real;
use crate::mlp::{LabeledSample, MlpError, MlpModel, Params, Topology, TARGET_HIGH, TARGET_LOW};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("record {0:?} has no label")]
    UnlabeledRecord(String),
    #[error("stratified split needs at least one {0:?} record")]
    ClassMissing(Label),
    #[error("train fraction {0} is not inside (0, 1)")]
    InvalidFraction(f64),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Model(#[from] MlpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// Update after every sample, visiting samples in a freshly shuffled order each epoch.
    #[default]
    PerSample,
    /// Sum the gradient over the epoch, then update once.
    Batch,
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateMode::PerSample => "per-sample",
            UpdateMode::Batch => "batch",
        })
    }
}

impl FromStr for UpdateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per-sample" => Ok(UpdateMode::PerSample),
            "batch" => Ok(UpdateMode::Batch),
            _ => Err("expected one of: per-sample, batch".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the total (halved, unaveraged) squared error falls to this value.
    pub target_total_mse: f64,
    pub seed: u64,
    /// Initial weights are uniform on `[-init_range, init_range]`.
    pub init_range: f64,
    pub update_mode: UpdateMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_epochs: 10_000,
            target_total_mse: 0.01,
            seed: 1,
            init_range: 0.5,
            update_mode: UpdateMode::PerSample,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.init_range > 0.0 && self.init_range.is_finite()) {
            return bad("init_range must be positive");
        }
        if self.target_total_mse.is_nan() || self.target_total_mse <= 0.0 {
            return bad("target_total_mse must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.25,
            stratified: true,
            seed: 1,
        }
    }
}

/// Benign maps to a 0.1 target and malignant to 0.9.
pub fn encode_targets(records: &[FeatureRecord]) -> Result<Vec<LabeledSample>, TrainError> {
    records
        .iter()
        .map(|r| {
            let target = match r.label {
                Some(Label::Benign) => TARGET_LOW,
                Some(Label::Malignant) => TARGET_HIGH,
                None => return Err(TrainError::UnlabeledRecord(r.id.clone())),
            };
            Ok(LabeledSample::new(r.vector().to_vec(), vec![target])?)
        })
        .collect()
}

/// Partitions records into `(train, test)`, each kept in input order.
///
/// The train set has `floor(train_fraction * N)` records. Stratified mode
/// first takes `floor(train_fraction * n_c)` from each class, then tops up
/// from the larger class.
pub fn split(
    records: &[FeatureRecord],
    spec: &SplitSpec,
) -> Result<(Vec<FeatureRecord>, Vec<FeatureRecord>), TrainError> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(TrainError::InvalidFraction(f));
    }
    let n_train = (f * records.len() as f64).floor() as usize;
    let mut rng = SplitMix64::new(spec.seed);
    let mut chosen = vec![false; records.len()];

    if spec.stratified {
        let mut pools: Vec<Vec<usize>> = Vec::with_capacity(2);
        for class in [Label::Benign, Label::Malignant] {
            let mut idx = Vec::new();
            for (i, r) in records.iter().enumerate() {
                match r.label {
                    None => return Err(TrainError::UnlabeledRecord(r.id.clone())),
                    Some(l) if l == class => idx.push(i),
                    Some(_) => {}
                }
            }
            if idx.is_empty() {
                return Err(TrainError::ClassMissing(class));
            }
            rng.shuffle(&mut idx);
            pools.push(idx);
        }
        let mut taken = [0usize; 2];
        for (c, pool) in pools.iter().enumerate() {
            taken[c] = (f * pool.len() as f64).floor() as usize;
        }
        // top up from the larger class; benign wins ties
        let larger = usize::from(pools[1].len() > pools[0].len());
        for c in [larger, 1 - larger] {
            while taken[0] + taken[1] < n_train && taken[c] < pools[c].len() {
                taken[c] += 1;
            }
        }
        for (pool, &k) in pools.iter().zip(&taken) {
            for &i in &pool[..k] {
                chosen[i] = true;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..records.len()).collect();
        rng.shuffle(&mut idx);
        for &i in &idx[..n_train] {
            chosen[i] = true;
        }
    }

    let (train, test): (Vec<_>, Vec<_>) = records
        .iter()
        .zip(&chosen)
        .partition(|(_, &c)| c);
    Ok((
        train.into_iter().map(|(r, _)| r.clone()).collect(),
        test.into_iter().map(|(r, _)| r.clone()).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    EpochCap,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TargetReached => "target_reached",
            StopReason::EpochCap => "epoch_cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Total error after each epoch; entry 0 is the freshly initialized model.
    pub epoch_mse: Vec<f64>,
    pub stop_reason: StopReason,
    pub epochs_used: usize,
    pub samples: usize,
    pub config: TrainConfig,
}

impl TrainReport {
    pub fn final_mse(&self) -> f64 {
        *self.epoch_mse.last().expect("report always holds the initial error")
    }

    /// Final error divided by the number of samples.
    pub fn per_sample_mse(&self) -> f64 {
        self.final_mse() / self.samples as f64
    }

    /// `epoch,total_mse` rows followed by a `key=value` block.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,total_mse\n");
        for (epoch, mse) in self.epoch_mse.iter().enumerate() {
            s.push_str(&format!("{epoch},{}\n", format_real(*mse)));
        }
        let c = &self.config;
        let kv = [
            ("stop_reason", self.stop_reason.to_string()),
            ("seed", c.seed.to_string()),
            ("learning_rate", format_real(c.learning_rate)),
            ("epochs_used", self.epochs_used.to_string()),
            ("max_epochs", c.max_epochs.to_string()),
            ("target_total_mse", format_real(c.target_total_mse)),
            ("init_range", format_real(c.init_range)),
            ("update_mode", c.update_mode.to_string()),
            ("samples", self.samples.to_string()),
            ("final_total_mse", format_real(self.final_mse())),
            ("final_per_sample_mse", format_real(self.per_sample_mse())),
        ];
        s.push('\n');
        for (k, v) in kv {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }
}

/// Draws every parameter uniformly from `[-range, range]` in layout order.
pub fn init_model(topology: Topology, range: f64, rng: &mut SplitMix64) -> MlpModel {
    let values = (0..topology.weight_count())
        .map(|_| rng.symmetric(range))
        .collect();
    MlpModel::new(Params::from_values(topology, values).expect("sized from topology"))
        .expect("finite initial weights")
}

/// Fits a freshly initialized model by plain gradient descent on the total error.
pub fn train(
    samples: &[LabeledSample],
    topology: Topology,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), TrainError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(TrainError::EmptySampleSet);
    }
    let mut rng = SplitMix64::new(cfg.seed);
    let mut model = init_model(topology, cfg.init_range, &mut rng);

    let initial = model.mse(samples)?;
    let mut epoch_mse = vec![initial];
    let mut stop_reason = StopReason::EpochCap;
    let mut epochs_used = 0;
    if !initial.is_finite() {
        return Err(TrainError::NonFiniteLoss { epoch: 0 });
    }
    if initial <= cfg.target_total_mse {
        stop_reason = StopReason::TargetReached;
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    while stop_reason != StopReason::TargetReached && epochs_used < cfg.max_epochs {
        match cfg.update_mode {
            UpdateMode::PerSample => {
                rng.shuffle(&mut order);
                for &i in &order {
                    let g = model.backprop_gradient(&samples[i])?;
                    model.params_mut().add_scaled(&g, -cfg.learning_rate);
                }
            }
            UpdateMode::Batch => {
                let mut total = Params::zeros(topology);
                for s in samples {
                    total.add_scaled(&model.backprop_gradient(s)?, 1.0);
                }
                model.params_mut().add_scaled(&total, -cfg.learning_rate);
            }
        }
        epochs_used += 1;
        let mse = model.mse(samples)?;
        epoch_mse.push(mse);
        // saturated sigmoids keep the loss bounded even when weights overflow
        if !mse.is_finite() || model.params().values().iter().any(|w| !w.is_finite()) {
            return Err(TrainError::NonFiniteLoss { epoch: epochs_used });
        }
        if mse <= cfg.target_total_mse {
            stop_reason = StopReason::TargetReached;
        }
    }

    let report = TrainReport {
        epoch_mse,
        stop_reason,
        epochs_used,
        samples: samples.len(),
        config: *cfg,
    };
    Ok((model, report))
}
