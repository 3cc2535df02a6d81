//! Batch front end: `features`, `split`, `train`, `predict`, `eval`, `gradcheck`, `synth`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand};
use rayon::prelude::*;

use masscad::eval::{decide, percent, DEFAULT_THRESHOLD};
use masscad::features::{read_feature_csv, write_feature_csv};
use masscad::roi::Severity;
use masscad::trainer::UpdateMode;
use masscad::{
    compute_features, confusion, crop_region, encode_targets, format_real, metrics,
    parse_annotations, parse_real, read_pgm, split, train, FeatureRecord, Label, MaskMode,
    MlpModel, SplitSpec, Topology, TrainConfig, YOrigin,
};
use masscad_testkit::{gen_synthetic, gradient_sweep, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Gradient-check pass threshold on the maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

const PREDICTION_HEADER: [&str; 4] = ["id", "score", "predicted", "label"];

#[derive(Debug, Parser)]
#[command(name = "masscad", version, about = "Texture-feature mass classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract texture features for every severity-labeled annotation.
    Features(FeaturesArgs),
    /// Partition a feature CSV into train and test files.
    Split(SplitArgs),
    /// Fit a network on a labeled feature CSV.
    Train(TrainArgs),
    /// Score a feature CSV with a trained model.
    Predict(PredictArgs),
    /// Confusion matrix, sensitivity and specificity.
    Eval(EvalArgs),
    /// Compare backprop gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic labeled feature CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    /// Directory holding `<id>.pgm` images.
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    /// Whitespace-separated annotation file.
    #[arg(long, value_name = "FILE")]
    annotations: PathBuf,
    #[arg(long, default_value_t = MaskMode::Circle)]
    mask: MaskMode,
    #[arg(long = "y-origin", default_value_t = YOrigin::Bottom)]
    y_origin: YOrigin,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Labeled feature CSV.
    input: PathBuf,
    #[arg(long = "train-fraction", default_value_t = 0.25)]
    train_fraction: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    stratified: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Train partition.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Test partition.
    #[arg(long = "test-out", value_name = "FILE")]
    test_out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Labeled feature CSV.
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long = "max-epochs", default_value_t = 10_000)]
    max_epochs: usize,
    #[arg(long = "target-mse", default_value_t = 0.01)]
    target_mse: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "init-range", default_value_t = 0.5)]
    init_range: f64,
    #[arg(long = "update-mode", default_value_t = UpdateMode::PerSample)]
    update_mode: UpdateMode,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    bias: bool,
    /// 7-5-1 topology without biases (40 weights); overrides --bias.
    #[arg(long = "paper-faithful")]
    paper_faithful: bool,
    /// Model file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Training report; defaults to `<out>.report.csv`.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Feature CSV.
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Prediction CSV (`id,score,predicted,label`), or a feature CSV when --model is given.
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Metrics CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = SynthSpec::acceptance().seed)]
    seed: u64,
    #[arg(long = "n-per-class", default_value_t = SynthSpec::acceptance().n_per_class)]
    n_per_class: usize,
    #[arg(long, default_value_t = SynthSpec::acceptance().spread)]
    spread: f64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Features(a) => features(a),
        Command::Split(a) => split_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn print_config(command: &str, entries: &[(&str, String)]) {
    println!("{command}: effective configuration");
    for (k, v) in entries {
        println!("  {k} = {v}");
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_features(path: &Path) -> anyhow::Result<Vec<FeatureRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_feature_csv(file).with_context(|| format!("parsing {}", path.display()))
}

fn save_features(path: &Path, records: &[FeatureRecord]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, records)?;
    write_bytes(path, &buf)
}

fn load_model(path: &Path) -> anyhow::Result<MlpModel> {
    MlpModel::from_text(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn check_threshold(t: f64) -> CmdResult {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--threshold {t}: must lie inside (0, 1)")))
    }
}

fn features(a: FeaturesArgs) -> CmdResult {
    print_config(
        "features",
        &[
            ("images", a.images.display().to_string()),
            ("annotations", a.annotations.display().to_string()),
            ("mask", a.mask.to_string()),
            ("y_origin", a.y_origin.to_string()),
            ("out", a.out.display().to_string()),
        ],
    );
    let parsed = parse_annotations(&read_text(&a.annotations)?);
    for e in &parsed.errors {
        eprintln!("warning: {}: skipped {e}", a.annotations.display());
    }
    let masses: Vec<_> = parsed
        .records
        .iter()
        .filter(|r| r.severity != Severity::None)
        .collect();

    let mut ids: Vec<&str> = masses.iter().map(|r| r.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let images: HashMap<&str, _> = ids
        .par_iter()
        .map(|&id| {
            let path = a.images.join(format!("{id}.pgm"));
            let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let img = read_pgm(&bytes).with_context(|| format!("decoding {}", path.display()))?;
            Ok((id, img))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut seen: HashMap<&str, usize> = HashMap::new();
    let row_ids: Vec<String> = masses
        .iter()
        .map(|r| {
            let n = seen.entry(r.id.as_str()).or_insert(0);
            *n += 1;
            if *n == 1 {
                r.id.clone()
            } else {
                format!("{}_{n}", r.id)
            }
        })
        .collect();

    let records = masses
        .par_iter()
        .zip(row_ids.par_iter())
        .map(|(ann, row_id)| {
            let region = crop_region(&images[ann.id.as_str()], ann, a.mask, a.y_origin)
                .with_context(|| format!("{}: cropping {}", a.annotations.display(), ann.id))?;
            let label = match ann.severity {
                Severity::Benign => Label::Benign,
                _ => Label::Malignant,
            };
            Ok(compute_features(&region, row_id).with_label(Some(label)))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    save_features(&a.out, &records)?;
    println!(
        "wrote {} feature records to {} ({} annotation lines skipped)",
        records.len(),
        a.out.display(),
        parsed.errors.len()
    );
    Ok(())
}

fn split_cmd(a: SplitArgs) -> CmdResult {
    if !(a.train_fraction > 0.0 && a.train_fraction < 1.0) {
        return Err(usage(format!(
            "--train-fraction {}: must lie inside (0, 1)",
            a.train_fraction
        )));
    }
    let spec = SplitSpec {
        train_fraction: a.train_fraction,
        stratified: a.stratified,
        seed: a.seed,
    };
    print_config(
        "split",
        &[
            ("input", a.input.display().to_string()),
            ("train_fraction", spec.train_fraction.to_string()),
            ("stratified", spec.stratified.to_string()),
            ("seed", spec.seed.to_string()),
            ("out", a.out.display().to_string()),
            ("test_out", a.test_out.display().to_string()),
        ],
    );
    let records = load_features(&a.input)?;
    let (train_set, test_set) =
        split(&records, &spec).with_context(|| format!("splitting {}", a.input.display()))?;
    save_features(&a.out, &train_set)?;
    save_features(&a.test_out, &test_set)?;
    println!("train {} / test {}", train_set.len(), test_set.len());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> CmdResult {
    if !(a.lr > 0.0 && a.lr.is_finite()) {
        return Err(usage(format!("--lr {}: must be positive", a.lr)));
    }
    if a.max_epochs == 0 {
        return Err(usage("--max-epochs: must be positive"));
    }
    if a.target_mse.is_nan() || a.target_mse <= 0.0 {
        return Err(usage(format!("--target-mse {}: must be positive", a.target_mse)));
    }
    if !(a.init_range > 0.0 && a.init_range.is_finite()) {
        return Err(usage(format!("--init-range {}: must be positive", a.init_range)));
    }
    let topology = if a.paper_faithful {
        Topology::paper_faithful()
    } else {
        Topology::mass_classifier(a.bias)
    };
    let cfg = TrainConfig {
        learning_rate: a.lr,
        max_epochs: a.max_epochs,
        target_total_mse: a.target_mse,
        seed: a.seed,
        init_range: a.init_range,
        update_mode: a.update_mode,
    };
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.report.csv", a.out.display())));
    print_config(
        "train",
        &[
            ("input", a.input.display().to_string()),
            (
                "topology",
                format!("{}-{}-{}", topology.inputs, topology.hidden, topology.outputs),
            ),
            ("bias", topology.bias.to_string()),
            ("weights", topology.weight_count().to_string()),
            ("lr", cfg.learning_rate.to_string()),
            ("max_epochs", cfg.max_epochs.to_string()),
            ("target_mse", cfg.target_total_mse.to_string()),
            ("init_range", cfg.init_range.to_string()),
            ("update_mode", cfg.update_mode.to_string()),
            ("seed", cfg.seed.to_string()),
            ("out", a.out.display().to_string()),
            ("report", report_path.display().to_string()),
        ],
    );
    let records = load_features(&a.input)?;
    let samples = encode_targets(&records).with_context(|| format!("{}", a.input.display()))?;
    let (model, report) = train(&samples, topology, &cfg)
        .with_context(|| format!("training on {}", a.input.display()))?;
    write_bytes(&a.out, model.to_text().as_bytes())?;
    write_bytes(&report_path, report.to_csv().as_bytes())?;
    println!(
        "{} after {} epochs: total mse {:.6}, per-sample mse {:.6}",
        report.stop_reason,
        report.epochs_used,
        report.final_mse(),
        report.per_sample_mse()
    );
    Ok(())
}

struct Prediction {
    id: String,
    score: f64,
    label: Option<Label>,
}

fn score_records(model: &MlpModel, records: &[FeatureRecord]) -> anyhow::Result<Vec<Prediction>> {
    records
        .iter()
        .map(|r| {
            let out = model
                .forward(&r.vector())
                .with_context(|| format!("scoring {}", r.id))?;
            Ok(Prediction {
                id: r.id.clone(),
                score: out.output[0],
                label: r.label,
            })
        })
        .collect()
}

fn predict(a: PredictArgs) -> CmdResult {
    check_threshold(a.threshold)?;
    print_config(
        "predict",
        &[
            ("input", a.input.display().to_string()),
            ("model", a.model.display().to_string()),
            ("threshold", a.threshold.to_string()),
            ("out", a.out.display().to_string()),
        ],
    );
    let model = load_model(&a.model)?;
    let preds = score_records(&model, &load_features(&a.input)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let row_err = |e: csv::Error| anyhow::Error::from(e);
    w.write_record(PREDICTION_HEADER).map_err(row_err)?;
    for p in &preds {
        w.write_record([
            p.id.clone(),
            format_real(p.score),
            decide(p.score, a.threshold).code().to_string(),
            p.label.map(|l| l.code().to_string()).unwrap_or_default(),
        ])
        .map_err(row_err)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    write_bytes(&a.out, &bytes)?;
    println!("scored {} records", preds.len());
    Ok(())
}

fn read_predictions(path: &Path) -> anyhow::Result<Vec<Prediction>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().ne(PREDICTION_HEADER) {
        bail!(
            "{}:1: expected header {:?}",
            path.display(),
            PREDICTION_HEADER.join(",")
        );
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.with_context(|| format!("parsing {}", path.display()))?;
        let line = row.position().map_or(0, |p| p.line());
        let score = parse_real(&row[1])
            .with_context(|| format!("{}:{line}: bad score {:?}", path.display(), &row[1]))?;
        let label = match &row[3] {
            "" => None,
            code => Some(Label::from_code(code).with_context(|| {
                format!("{}:{line}: label must be 0, 1 or empty", path.display())
            })?),
        };
        out.push(Prediction {
            id: row[0].to_string(),
            score,
            label,
        });
    }
    Ok(out)
}

fn eval_cmd(a: EvalArgs) -> CmdResult {
    check_threshold(a.threshold)?;
    print_config(
        "eval",
        &[
            ("input", a.input.display().to_string()),
            (
                "model",
                a.model
                    .as_ref()
                    .map_or("none (input holds predictions)".into(), |m| m.display().to_string()),
            ),
            ("threshold", a.threshold.to_string()),
            ("out", a.out.display().to_string()),
        ],
    );
    let preds = match &a.model {
        Some(m) => score_records(&load_model(m)?, &load_features(&a.input)?)?,
        None => read_predictions(&a.input)?,
    };
    let mut truth = Vec::with_capacity(preds.len());
    let mut predicted = Vec::with_capacity(preds.len());
    for p in &preds {
        let label = p.label.with_context(|| {
            format!("{}: record {:?} has no label", a.input.display(), p.id)
        })?;
        truth.push(label);
        predicted.push(decide(p.score, a.threshold));
    }
    let cm = confusion(&truth, &predicted).with_context(|| a.input.display().to_string())?;
    let report = metrics(&cm, a.threshold);
    write_bytes(&a.out, report.to_csv().as_bytes())?;
    print!("{report}");
    println!(
        "SN {} SP {}",
        percent(report.sensitivity),
        percent(report.specificity)
    );
    std::io::stdout().flush().ok();
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> CmdResult {
    if a.step.is_nan() || a.step <= 0.0 {
        return Err(usage(format!("--step {}: must be positive", a.step)));
    }
    if a.cases == 0 {
        return Err(usage("--cases: must be positive"));
    }
    print_config(
        "gradcheck",
        &[
            ("seed", a.seed.to_string()),
            ("cases", a.cases.to_string()),
            ("step", a.step.to_string()),
            ("tolerance", GRADCHECK_TOLERANCE.to_string()),
        ],
    );
    let sweep = gradient_sweep(a.seed, a.cases, a.step);
    println!(
        "max relative error {:.3e} over {} components in {} cases (worst case {})",
        sweep.max_relative_error, sweep.components, sweep.cases, sweep.worst_case
    );
    if sweep.max_relative_error < GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(Failure::Data(anyhow::anyhow!(
            "gradient check failed: {:.3e} >= {GRADCHECK_TOLERANCE:e}",
            sweep.max_relative_error
        )))
    }
}

fn synth(a: SynthArgs) -> CmdResult {
    if a.n_per_class == 0 {
        return Err(usage("--n-per-class: must be positive"));
    }
    if !(a.spread >= 0.0 && a.spread.is_finite()) {
        return Err(usage(format!("--spread {}: must be non-negative", a.spread)));
    }
    let spec = SynthSpec {
        n_per_class: a.n_per_class,
        spread: a.spread,
        seed: a.seed,
        ..SynthSpec::acceptance()
    };
    print_config(
        "synth",
        &[
            ("seed", spec.seed.to_string()),
            ("n_per_class", spec.n_per_class.to_string()),
            ("spread", spec.spread.to_string()),
            ("benign_center", format!("{:?}", spec.class_centers[0])),
            ("malignant_center", format!("{:?}", spec.class_centers[1])),
            ("out", a.out.display().to_string()),
        ],
    );
    let records = gen_synthetic(&spec);
    save_features(&a.out, &records)?;
    println!("wrote {} synthetic records", records.len());
    Ok(())
}
