//! One-hidden-layer sigmoid perceptron.
//!
//! Parameters live in one flat vector laid out as
//! `[w_ih (hidden x n, row-major) | w_ho (k x hidden, row-major) | b_h | b_o]`,
//! the bias blocks being present only when the topology enables them.
//! [`Gradient`] uses the same layout.

use std::fmt::Write as _;

use thiserror::Error;

use crate::{format_real, parse_real};

/// Benign target output.
pub const TARGET_LOW: f64 = 0.1;
/// Malignant target output.
pub const TARGET_HIGH: f64 = 0.9;

const MODEL_MAGIC: &str = "MLP1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("target {0} is neither 0.1 nor 0.9")]
    InvalidTarget(f64),
    #[error("topology sizes must be positive")]
    InvalidTopology,
    #[error("non-finite parameter at index {0}")]
    NonFiniteWeight(usize),
    #[error("model file line {line}: {message}")]
    ModelFile { line: usize, message: String },
}

/// Hidden layer size `floor((n + 1) * 2 / 3)`, at least 1.
pub fn hidden_units(n: usize) -> usize {
    ((n + 1) * 2 / 3).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub bias: bool,
}

impl Topology {
    pub fn new(inputs: usize, hidden: usize, outputs: usize, bias: bool) -> Result<Self, MlpError> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(MlpError::InvalidTopology);
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
            bias,
        })
    }

    /// 7 inputs, `hidden_units(7)` hidden, 1 output.
    pub fn mass_classifier(bias: bool) -> Self {
        Self {
            inputs: 7,
            hidden: hidden_units(7),
            outputs: 1,
            bias,
        }
    }

    /// The bias-free 7-5-1 network with 40 weights.
    pub fn paper_faithful() -> Self {
        Self::mass_classifier(false)
    }

    pub fn weight_count(&self) -> usize {
        let w = self.inputs * self.hidden + self.hidden * self.outputs;
        if self.bias {
            w + self.hidden + self.outputs
        } else {
            w
        }
    }

    fn offsets(&self) -> [usize; 4] {
        let ih = self.inputs * self.hidden;
        let ho = ih + self.hidden * self.outputs;
        let bh = ho + if self.bias { self.hidden } else { 0 };
        [ih, ho, bh, self.weight_count()]
    }
}

/// A parameter vector together with the topology that gives it shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    topology: Topology,
    values: Vec<f64>,
}

/// Gradient of the loss, laid out like the model parameters.
pub type Gradient = Params;

impl Params {
    pub fn zeros(topology: Topology) -> Self {
        Self {
            topology,
            values: vec![0.0; topology.weight_count()],
        }
    }

    pub fn from_values(topology: Topology, values: Vec<f64>) -> Result<Self, MlpError> {
        if values.len() != topology.weight_count() {
            return Err(MlpError::DimensionMismatch {
                expected: topology.weight_count(),
                got: values.len(),
            });
        }
        Ok(Self { topology, values })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn w_ih(&self) -> &[f64] {
        &self.values[..self.topology.offsets()[0]]
    }

    pub fn w_ho(&self) -> &[f64] {
        let o = self.topology.offsets();
        &self.values[o[0]..o[1]]
    }

    pub fn b_h(&self) -> &[f64] {
        let o = self.topology.offsets();
        &self.values[o[1]..o[2]]
    }

    pub fn b_o(&self) -> &[f64] {
        let o = self.topology.offsets();
        &self.values[o[2]..o[3]]
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (w, g) in self.values.iter_mut().zip(&other.values) {
            *w += scale * g;
        }
    }
}

/// Network output and hidden activations for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub output: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// One training pattern: feature vector and per-output targets of 0.1 or 0.9.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    features: Vec<f64>,
    target: Vec<f64>,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, target: Vec<f64>) -> Result<Self, MlpError> {
        if let Some(&t) = target
            .iter()
            .find(|&&t| t != TARGET_LOW && t != TARGET_HIGH)
        {
            return Err(MlpError::InvalidTarget(t));
        }
        Ok(Self { features, target })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    params: Params,
}

impl MlpModel {
    pub fn new(params: Params) -> Result<Self, MlpError> {
        if let Some(i) = params.values.iter().position(|v| !v.is_finite()) {
            return Err(MlpError::NonFiniteWeight(i));
        }
        Ok(Self { params })
    }

    pub fn zeros(topology: Topology) -> Self {
        Self {
            params: Params::zeros(topology),
        }
    }

    pub fn topology(&self) -> Topology {
        self.params.topology
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn forward(&self, features: &[f64]) -> Result<Forward, MlpError> {
        let t = self.topology();
        if features.len() != t.inputs {
            return Err(MlpError::DimensionMismatch {
                expected: t.inputs,
                got: features.len(),
            });
        }
        let p = &self.params;
        let hidden: Vec<f64> = p
            .w_ih()
            .chunks(t.inputs)
            .enumerate()
            .map(|(j, row)| {
                let bias = if t.bias { p.b_h()[j] } else { 0.0 };
                sigmoid(dot(row, features) + bias)
            })
            .collect();
        let output = p
            .w_ho()
            .chunks(t.hidden)
            .enumerate()
            .map(|(i, row)| {
                let bias = if t.bias { p.b_o()[i] } else { 0.0 };
                sigmoid(dot(row, &hidden) + bias)
            })
            .collect();
        Ok(Forward { output, hidden })
    }

    fn check_target(&self, sample: &LabeledSample) -> Result<(), MlpError> {
        let k = self.topology().outputs;
        if sample.target.len() != k {
            return Err(MlpError::DimensionMismatch {
                expected: k,
                got: sample.target.len(),
            });
        }
        Ok(())
    }

    /// Single-pattern error `(1/2) * sum_i (T_i - O_i)^2`.
    pub fn sample_error(&self, sample: &LabeledSample) -> Result<f64, MlpError> {
        self.check_target(sample)?;
        let out = self.forward(&sample.features)?.output;
        Ok(0.5
            * sample
                .target
                .iter()
                .zip(&out)
                .map(|(t, o)| (t - o) * (t - o))
                .sum::<f64>())
    }

    /// Total squared error over the set, halved and not divided by the sample count.
    pub fn mse(&self, samples: &[LabeledSample]) -> Result<f64, MlpError> {
        if samples.is_empty() {
            return Err(MlpError::EmptySampleSet);
        }
        samples.iter().map(|s| self.sample_error(s)).sum()
    }

    /// Exact gradient of [`Self::sample_error`] with respect to every parameter.
    pub fn backprop_gradient(&self, sample: &LabeledSample) -> Result<Gradient, MlpError> {
        self.check_target(sample)?;
        let t = self.topology();
        let Forward { output, hidden } = self.forward(&sample.features)?;
        let p = &self.params;

        let delta_out: Vec<f64> = output
            .iter()
            .zip(&sample.target)
            .map(|(&o, &target)| (o - target) * o * (1.0 - o))
            .collect();
        let delta_hidden: Vec<f64> = (0..t.hidden)
            .map(|j| {
                let back: f64 = (0..t.outputs)
                    .map(|i| delta_out[i] * p.w_ho()[i * t.hidden + j])
                    .sum();
                back * hidden[j] * (1.0 - hidden[j])
            })
            .collect();

        let mut values = Vec::with_capacity(t.weight_count());
        for &dh in &delta_hidden {
            values.extend(sample.features.iter().map(|&x| dh * x));
        }
        for &d in &delta_out {
            values.extend(hidden.iter().map(|&h| d * h));
        }
        if t.bias {
            values.extend_from_slice(&delta_hidden);
            values.extend_from_slice(&delta_out);
        }
        Params::from_values(t, values)
    }

    /// Serializes to the `MLP1` text format.
    pub fn to_text(&self) -> String {
        let t = self.topology();
        let mut s = format!(
            "{MODEL_MAGIC}\n{} {} {} {}\n",
            t.inputs,
            t.hidden,
            t.outputs,
            u8::from(t.bias)
        );
        for &v in &self.params.values {
            writeln!(s, "{}", format_real(v)).expect("write to String");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MlpError> {
        let err = |line: usize, message: String| MlpError::ModelFile { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, MODEL_MAGIC)) => {}
            _ => return Err(err(1, format!("expected {MODEL_MAGIC:?}"))),
        }
        let (_, dims) = lines
            .next()
            .ok_or_else(|| err(2, "missing topology line".into()))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| err(2, format!("bad integer {d:?}"))))
            .collect::<Result<_, _>>()?;
        let [n, hidden, k, bias] = dims[..] else {
            return Err(err(2, "expected 'n hidden k bias'".into()));
        };
        if bias > 1 {
            return Err(err(2, "bias flag must be 0 or 1".into()));
        }
        let topology = Topology::new(n, hidden, k, bias == 1).map_err(|e| err(2, e.to_string()))?;
        let values = lines
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| parse_real(l).ok_or_else(|| err(i, format!("bad real {l:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let found = values.len();
        let params = Params::from_values(topology, values).map_err(|_| {
            err(
                3,
                format!("expected {} weights, found {found}", topology.weight_count()),
            )
        })?;
        Self::new(params)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
