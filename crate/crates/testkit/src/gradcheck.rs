use masscad::mlp::{Gradient, Params, Topology};
use masscad::rng::SplitMix64;
use masscad::{LabeledSample, MlpModel};

/// Components whose magnitudes sum below this are compared absolutely.
pub const ABSOLUTE_FLOOR: f64 = 1e-8;

/// Single-pattern error `(1/2) sum_i (T_i - O_i)^2`, evaluated from the raw
/// parameter vector with a forward pass of its own.
fn pattern_error(t: Topology, w: &[f64], x: &[f64], target: &[f64]) -> f64 {
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let ih = t.inputs * t.hidden;
    let ho = ih + t.hidden * t.outputs;
    let bh = ho + t.hidden;
    let mut hidden = vec![0.0; t.hidden];
    for j in 0..t.hidden {
        let mut z = if t.bias { w[ho + j] } else { 0.0 };
        for i in 0..t.inputs {
            z += w[j * t.inputs + i] * x[i];
        }
        hidden[j] = sig(z);
    }
    let mut e = 0.0;
    for k in 0..t.outputs {
        let mut z = if t.bias { w[bh + k] } else { 0.0 };
        for j in 0..t.hidden {
            z += w[ih + k * t.hidden + j] * hidden[j];
        }
        let d = target[k] - sig(z);
        e += d * d;
    }
    0.5 * e
}

/// Central differences `(E(w + step) - E(w - step)) / (2 step)` for every parameter.
pub fn fd_gradient(model: &MlpModel, sample: &LabeledSample, step: f64) -> Gradient {
    let t = model.topology();
    let mut w = model.params().values().to_vec();
    let mut grad = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let orig = w[i];
        w[i] = orig + step;
        let up = pattern_error(t, &w, sample.features(), sample.target());
        w[i] = orig - step;
        let down = pattern_error(t, &w, sample.features(), sample.target());
        w[i] = orig;
        grad.push((up - down) / (2.0 * step));
    }
    Params::from_values(t, grad).expect("one component per parameter")
}

/// `|a - b| / max(|a|, |b|)`, or `|a - b|` when `|a| + |b|` is below [`ABSOLUTE_FLOOR`].
pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if a.abs() + b.abs() < ABSOLUTE_FLOOR {
        diff
    } else {
        diff / a.abs().max(b.abs())
    }
}

/// Outcome of a backprop-versus-finite-difference sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSweep {
    pub cases: usize,
    pub components: usize,
    pub max_relative_error: f64,
    pub worst_case: usize,
}

/// Topologies covered by [`gradient_sweep`], as `(inputs, hidden, outputs)`.
pub const SWEEP_TOPOLOGIES: [(usize, usize, usize); 3] = [(2, 2, 1), (7, 5, 1), (3, 2, 2)];

/// Compares backprop with central differences on `cases` seeded (model, sample) pairs.
///
/// Case `c` uses topology `SWEEP_TOPOLOGIES[c % 3]` with biases on for even
/// `c / 3`, weights uniform on `[-1, 1]`, features uniform on `[0, 1)` and
/// random 0.1/0.9 targets.
pub fn gradient_sweep(seed: u64, cases: usize, step: f64) -> GradSweep {
    let mut rng = SplitMix64::new(seed);
    let mut out = GradSweep {
        cases,
        components: 0,
        max_relative_error: 0.0,
        worst_case: 0,
    };
    for c in 0..cases {
        let (n, h, k) = SWEEP_TOPOLOGIES[c % SWEEP_TOPOLOGIES.len()];
        let t = Topology::new(n, h, k, (c / 3) % 2 == 0).expect("positive sizes");
        let w = (0..t.weight_count()).map(|_| rng.symmetric(1.0)).collect();
        let model = MlpModel::new(Params::from_values(t, w).expect("sized")).expect("finite");
        let x = (0..n).map(|_| rng.next_f64()).collect();
        let target = (0..k)
            .map(|_| if rng.below(2) == 0 { 0.1 } else { 0.9 })
            .collect();
        let sample = LabeledSample::new(x, target).expect("valid targets");

        let analytic = model.backprop_gradient(&sample).expect("dimensions match");
        let numeric = fd_gradient(&model, &sample, step);
        for (a, b) in analytic.values().iter().zip(numeric.values()) {
            let e = relative_error(*a, *b);
            out.components += 1;
            if e > out.max_relative_error {
                out.max_relative_error = e;
                out.worst_case = c;
            }
        }
    }
    out
}
