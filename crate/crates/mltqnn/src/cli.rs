//! The `mltqnn` command line.
//!
//! Exit codes: 0 success, 1 output write failure, 2 configuration error,
//! 3 data error, 4 numerical divergence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mltqnn_core::analysis::{ami, feature_magnitudes, kmeans, Labeling};
use mltqnn_core::circuit::{grid_log_for, resource_report, CircuitConfig};
use mltqnn_core::model::{
    evaluate, train_run, EpochMetrics, LabeledImage, ModelConfig, RunResult, StepRecord, TrainError,
};
use mltqnn_core::{Executor, HybridModel, ParamSet, Sequential};
use serde::Serialize;

use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::config::{to_pretty_json, EffectiveConfig, ModelSection, RunConfig, EFFECTIVE_CONFIG_FILE, FORMAT_VERSION};
use crate::dataio::{self, DataError, Dataset, SyntheticSpec};
use crate::exec::Parallel;

pub const METRICS_HEADER: &str = "epoch,l_ce,l_mse,loss,train_acc,val_loss,val_acc";
pub const STEPS_HEADER: &str = "step,l_ce,l_mse,loss";
pub const PER_CLASS_HEADER: &str = "class,precision,recall,f1,support";
pub const MAGNITUDES_HEADER: &str = "rank,magnitude";
pub const AMI_HEADER: &str = "split,k,processed_ami,feature_ami";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "mltqnn", version, about = "Hybrid quantum-classical multitask image classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every configured run and report test accuracy.
    Train(CommonArgs),
    /// Evaluate a checkpoint on one dataset split.
    Eval(CheckpointArgs),
    /// Feature magnitudes and, optionally, clustering AMI of a checkpoint.
    Analyze(AnalyzeArgs),
    /// Print qubit and gate counts for a circuit structure.
    Resources(ResourceArgs),
    /// Write a synthetic grating dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sequential evaluation on the calling thread.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Keep this stratified fraction of the training split.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Shrink one class of the training split, as CLASS:FRACTION.
    #[arg(long, value_name = "CLASS:FRACTION")]
    pub minority: Option<String>,
    #[arg(long)]
    pub no_reconstruction: bool,
    #[arg(long)]
    pub no_lwm: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Zero-pad images to this side length.
    #[arg(long)]
    pub pad_to: Option<usize>,
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub kernels: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckpointArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint manifest (`.json`).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub checkpoint: CheckpointArgs,
    /// Also cluster processed images and feature vectors and score them
    /// against the labels.
    #[arg(long)]
    pub ami: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ResourceArgs {
    #[arg(long, default_value_t = 32)]
    pub image_size: usize,
    #[arg(long, default_value_t = 4)]
    pub patch: usize,
    #[arg(long, default_value_t = 9)]
    pub features: usize,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
    #[arg(long, default_value_t = 2)]
    pub kernels: usize,
    #[arg(long)]
    pub no_lwm: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 4)]
    pub channels: usize,
    #[arg(long, default_value_t = 200)]
    pub train: usize,
    #[arg(long, default_value_t = 100)]
    pub validation: usize,
    #[arg(long, default_value_t = 100)]
    pub test: usize,
    /// Half-width of the uniform pixel noise.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
}

#[derive(Debug)]
pub enum CliError {
    Output(String),
    Config(String),
    Data(String),
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Diverged(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Output(m) | CliError::Config(m) | CliError::Data(m) | CliError::Diverged(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Diagnostics go to stderr as one line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Resources(a) => cmd_resources(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn run_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::read(path).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag.clone() { cfg.$field = v; })*
        };
    }
    set!(seed => seed, alpha => alpha, epochs => epochs, runs => runs, lr => learning_rate,
         batch_size => batch_size, patch => patch, features => features, blocks => blocks, kernels => kernels);
    if args.data.is_some() {
        cfg.data = args.data.clone();
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if args.train_fraction.is_some() {
        cfg.train_fraction = args.train_fraction;
    }
    if args.minority.is_some() {
        cfg.minority = args.minority.clone();
    }
    if args.pad_to.is_some() {
        cfg.pad_to = args.pad_to;
    }
    cfg.deterministic |= args.deterministic;
    cfg.reconstruction &= !args.no_reconstruction;
    cfg.lwm &= !args.no_lwm;
    Ok(cfg)
}

/// Everything a data-driven command needs.
struct Prepared {
    run: RunConfig,
    model: ModelConfig,
    data: Dataset,
    out: PathBuf,
}

fn pad_split(samples: &mut [LabeledImage], size: usize) -> Result<(), CliError> {
    for s in samples {
        s.image = dataio::zero_pad(&s.image, size).map_err(CliError::Config)?;
    }
    Ok(())
}

fn prepare(args: &CommonArgs) -> Result<Prepared, CliError> {
    let run = run_config(args)?;
    let data_dir = run.data.clone().ok_or_else(|| CliError::Config("no dataset directory (--data)".into()))?;
    let out = run.out.clone().ok_or_else(|| CliError::Config("no output directory (--out)".into()))?;
    let mut data = dataio::load_dataset(&data_dir)?;
    let model = run.model_config(&data.manifest);
    model.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(size) = run.pad_to {
        pad_split(&mut data.train, size)?;
        pad_split(&mut data.validation, size)?;
        pad_split(&mut data.test, size)?;
    }
    if let Some(f) = run.train_fraction {
        data.train = dataio::subsample_fraction(&data.train, f, run.seed).map_err(CliError::Config)?;
    }
    if let Some(spec) = &run.minority {
        let (class, f) = dataio::parse_minority(spec).map_err(CliError::Config)?;
        if class >= model.num_classes {
            return Err(CliError::Config(format!("minority class {class} outside 0..{}", model.num_classes)));
        }
        data.train = dataio::subsample_minority(&data.train, class, f, run.seed).map_err(CliError::Config)?;
    }
    fs::create_dir_all(&out).map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;
    Ok(Prepared { run, model, data, out })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

pub fn metrics_csv(history: &[EpochMetrics]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for m in history {
        let _ =
            writeln!(s, "{},{},{},{},{},{},{}", m.epoch, m.l_ce, m.l_mse, m.loss, m.train_acc, m.val_loss, m.val_acc);
    }
    s
}

pub fn steps_csv(steps: &[StepRecord]) -> String {
    let mut s = String::from(STEPS_HEADER);
    s.push('\n');
    for r in steps {
        let _ = writeln!(s, "{},{},{},{}", r.step, r.l_ce, r.l_mse, r.loss);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
    pub test_accuracy: f64,
    pub test_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TrainSummary {
    pub runs: Vec<RunSummary>,
    pub mean_test_accuracy: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_test_accuracy: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write_run_logs(out: &Path, r: &RunResult) -> Result<(), CliError> {
    write(&out.join(format!("metrics_run{}.csv", r.run)), metrics_csv(&r.history))?;
    write(&out.join(format!("steps_run{}.csv", r.run)), steps_csv(&r.steps))
}

fn cmd_train(args: &CommonArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let effective =
        EffectiveConfig { format_version: FORMAT_VERSION, run: p.run.clone(), model: ModelSection::from(&p.model) };
    write(&p.out.join(EFFECTIVE_CONFIG_FILE), to_pretty_json(&effective))?;
    if p.run.deterministic {
        train_all(&p, &Sequential)
    } else {
        train_all(&p, &Parallel)
    }
}

fn train_all<X: Executor>(p: &Prepared, exec: &X) -> Result<(), CliError> {
    let model = HybridModel::new(p.model.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let mut runs = Vec::new();
    for run in 0..p.model.runs {
        let result = match train_run(&model, &p.data.train, &p.data.validation, run, exec) {
            Ok(r) => r,
            Err(e @ TrainError::Diverged { .. }) => {
                if let Some(partial) = e.partial() {
                    write_run_logs(&p.out, partial)?;
                }
                return Err(CliError::Diverged(e.to_string()));
            }
            Err(TrainError::Model(e)) => return Err(CliError::Config(e.to_string())),
        };
        write_run_logs(&p.out, &result)?;
        let best_val_loss = result.best_val_loss.is_finite().then_some(result.best_val_loss);
        let ck = Checkpoint {
            model: p.model.clone(),
            store: result.best.clone(),
            run,
            seed: result.seed,
            best_epoch: result.best_epoch,
            best_val_loss,
        };
        ck.save(&p.out.join(format!("checkpoint_run{run}"))).map_err(|e| CliError::Output(e.to_string()))?;
        let report = evaluate(&model, &result.best.params, &p.data.test, exec)
            .map_err(|e| CliError::Data(format!("test split: {e}")))?;
        runs.push(RunSummary {
            run,
            seed: result.seed,
            best_epoch: result.best_epoch,
            best_val_loss,
            test_accuracy: report.accuracy,
            test_loss: report.loss,
        });
    }
    let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    let (mean, std) = mean_std(&accs);
    let summary = TrainSummary { runs, mean_test_accuracy: mean, std_test_accuracy: std };
    write(&p.out.join(SUMMARY_FILE), to_pretty_json(&summary))?;
    println!("test_accuracy={mean} std={std}");
    Ok(())
}

/// Structural fields that must agree between a checkpoint and the data.
fn structure(c: &ModelConfig) -> [usize; 8] {
    [c.image_size, c.patch, c.features, c.blocks, c.kernels, c.channels, c.num_classes, usize::from(c.lwm)]
}

fn load_checkpoint(args: &CheckpointArgs) -> Result<(Prepared, ParamSet, HybridModel), CliError> {
    let p = prepare(&args.common)?;
    let ck = Checkpoint::load(&args.checkpoint)?;
    if structure(&ck.model) != structure(&p.model) {
        return Err(CliError::Config(format!(
            "{} was trained with a different structure (image/patch/features/blocks/kernels/channels/classes/lwm {:?}, expected {:?})",
            args.checkpoint.display(),
            structure(&ck.model),
            structure(&p.model)
        )));
    }
    let model = HybridModel::new(p.model.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    model.check_params(&ck.store.params).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((p, ck.store.params, model))
}

fn split_of(data: &Dataset, split: Split) -> &[LabeledImage] {
    match split {
        Split::Train => &data.train,
        Split::Validation => &data.validation,
        Split::Test => &data.test,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct EvalSummary {
    pub split: String,
    pub samples: usize,
    pub accuracy: f64,
    pub l_ce: f64,
    pub l_mse: f64,
    pub loss: f64,
    pub macro_f1: f64,
}

fn cmd_eval(args: &CheckpointArgs) -> Result<(), CliError> {
    let (p, params, model) = load_checkpoint(args)?;
    let samples = split_of(&p.data, args.split);
    let report = if p.run.deterministic {
        evaluate(&model, &params, samples, &Sequential)
    } else {
        evaluate(&model, &params, samples, &Parallel)
    }
    .map_err(|e| CliError::Data(format!("{} split: {e}", args.split.name())))?;
    let mut csv = String::from(PER_CLASS_HEADER);
    csv.push('\n');
    for (k, c) in report.per_class.iter().enumerate() {
        let _ = writeln!(csv, "{k},{},{},{},{}", c.precision, c.recall, c.f1, c.support);
    }
    let macro_f1 = report.per_class.iter().map(|c| c.f1).sum::<f64>() / report.per_class.len() as f64;
    let summary = EvalSummary {
        split: args.split.name().into(),
        samples: samples.len(),
        accuracy: report.accuracy,
        l_ce: report.l_ce,
        l_mse: report.l_mse,
        loss: report.loss,
        macro_f1,
    };
    write(&p.out.join("eval_per_class.csv"), csv)?;
    write(&p.out.join("eval_summary.json"), to_pretty_json(&summary))?;
    println!("accuracy={} macro_f1={macro_f1}", report.accuracy);
    Ok(())
}

/// Per-sample encoder outputs and quantum feature vectors.
type Representations = (Vec<Vec<f64>>, Vec<Vec<f64>>);

fn representations<X: Executor>(
    model: &HybridModel,
    params: &ParamSet,
    samples: &[LabeledImage],
    exec: &X,
) -> Result<Representations, CliError> {
    let outs = exec.map_indexed(samples.len(), |i| model.forward(&samples[i].image, params));
    let mut processed = Vec::with_capacity(samples.len());
    let mut features = Vec::with_capacity(samples.len());
    for o in outs {
        let o = o.map_err(|e| CliError::Data(e.to_string()))?;
        processed.push(o.processed);
        features.push(o.features);
    }
    Ok((processed, features))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let (p, params, model) = load_checkpoint(&args.checkpoint)?;
    let split = args.checkpoint.split;
    let samples = split_of(&p.data, split);
    let (processed, features) = if p.run.deterministic {
        representations(&model, &params, samples, &Sequential)?
    } else {
        representations(&model, &params, samples, &Parallel)?
    };
    let analysis = |e: mltqnn_core::analysis::AnalysisError| CliError::Data(e.to_string());
    let mags = feature_magnitudes(&features).map_err(analysis)?;
    let mut csv = String::from(MAGNITUDES_HEADER);
    csv.push('\n');
    for (rank, m) in mags.iter().enumerate() {
        let _ = writeln!(csv, "{},{m}", rank + 1);
    }
    write(&p.out.join("magnitudes.csv"), csv)?;
    if args.ami {
        let k = p.model.num_classes;
        if samples.len() < k {
            return Err(CliError::Data(format!("{} samples cannot form {k} clusters", samples.len())));
        }
        let truth = Labeling::new(samples.iter().map(|s| s.label).collect(), k).map_err(analysis)?;
        let score = |points: &[Vec<f64>]| -> Result<f64, CliError> {
            let clusters = kmeans(points, k, p.run.seed).map_err(analysis)?;
            ami(&clusters.labeling, &truth).map_err(analysis)
        };
        let (a_proc, a_feat) = (score(&processed)?, score(&features)?);
        write(&p.out.join("ami.csv"), format!("{AMI_HEADER}\n{},{k},{a_proc},{a_feat}\n", split.name()))?;
        println!("processed_ami={a_proc} feature_ami={a_feat}");
    }
    Ok(())
}

fn cmd_resources(args: &ResourceArgs) -> Result<(), CliError> {
    let config_err = |e: mltqnn_core::circuit::CircuitError| CliError::Config(e.to_string());
    let config = CircuitConfig {
        grid_log: grid_log_for(args.image_size, args.patch).map_err(config_err)?,
        features: args.features,
        blocks: args.blocks,
        kernels: args.kernels,
        lwm: !args.no_lwm,
    };
    let report = resource_report(args.image_size, args.patch, &config).map_err(config_err)?;
    for (k, v) in report.lines() {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        num_classes: args.classes,
        size: args.size,
        channels: args.channels,
        train: args.train,
        validation: args.validation,
        test: args.test,
        sigma: args.sigma,
        seed: args.seed,
    };
    let report = dataio::generate_synthetic(&spec, &args.out).map_err(|e| match e {
        DataError::Invalid(m) => CliError::Config(m),
        other => CliError::Output(other.to_string()),
    })?;
    println!("nearest_centroid_accuracy={}", report.nearest_centroid_accuracy);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"format_version": 1, "alpha": 2.0, "epochs": 7, "lwm": true}"#).unwrap();
        let cli =
            Cli::try_parse_from(["mltqnn", "train", "--config", path.to_str().unwrap(), "--alpha", "3", "--no-lwm"])
                .unwrap();
        let Command::Train(args) = cli.command else { panic!() };
        let cfg = run_config(&args).unwrap();
        assert_eq!((cfg.alpha, cfg.epochs, cfg.lwm), (3.0, 7, false));
    }

    #[test]
    fn metrics_header_is_fixed() {
        assert_eq!(metrics_csv(&[]), format!("{METRICS_HEADER}\n"));
    }
}
