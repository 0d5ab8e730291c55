//! The `breathid` command line.
//!
//! Every subcommand accepts `--config FILE`, a plain `key = value` file whose
//! keys are long flag names (`batch-size = 16` or `batch_size = 16`). File
//! entries are applied first and flags given on the command line override
//! them. A boolean key is set with `true` and ignored with `false`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::autodiff::AutodiffError;
use crate::dataset::{
    extract_bank, load_manifest, make_scenario, make_split, save_dataset, BreathType, CountSpec, DatasetError,
    DatasetManifest, FeatureBank, InstanceSource, PreprocessConfig, ScenarioKind, SplitSpec, SynthConfig,
    SyntheticCohort,
};
use crate::models::{ArchConfig, Architecture, CnnLstmConfig, Mode, Model, ModelConfig, ModelError, TcnConfig};
use crate::training::{
    class_index, evaluate_identification, labelled, run_experiment, scenario_scores, train_on_split, ExperimentResult,
    ExperimentSpec, Summary, TrainConfig, TrainError,
};
use crate::verification::{compute_eer, embed_instances, write_scores_csv, EerResult, VerificationError};

pub use report::{read_summaries, render_report, SummaryRow, SUMMARY_HEADER};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let code = match e {
            DatasetError::Config(_) => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = match &e {
            ModelError::Config(_) | ModelError::Untrained => EXIT_CONFIG,
            ModelError::Autodiff(AutodiffError::NonFinite { .. } | AutodiffError::NonFiniteGradient { .. }) => {
                EXIT_NUMERICAL
            }
            _ => EXIT_DATA,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<VerificationError> for CliError {
    fn from(e: VerificationError) -> Self {
        match e {
            VerificationError::Model(m) => m.into(),
            VerificationError::NonFinite(_) => Self { code: EXIT_NUMERICAL, message: e.to_string() },
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        if e.is_numerical() {
            return Self { code: EXIT_NUMERICAL, message: e.to_string() };
        }
        match e {
            TrainError::Config(m) => Self::config(m),
            TrainError::Dataset(d) => d.into(),
            TrainError::Model(m) => m.into(),
            TrainError::Verification(v) => v.into(),
            other => Self::data(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "breathid", version, about = "Breath-based identification and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic cohort on disk.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Train one model on one split.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Evaluate a checkpoint, or run repeated split/train/evaluate cycles.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Collect summary CSVs into accuracy and EER tables.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// key = value defaults, overridden by flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub subjects: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Per-type instance count range per subject.
    #[arg(long, default_value_t = 20)]
    pub min_count: usize,
    #[arg(long, default_value_t = 61)]
    pub max_count: usize,
    #[arg(long, value_delimiter = ',', default_value = "normal,deep,strong")]
    pub types: Vec<BreathType>,
    /// Write into a non-empty directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, default_value = "normal")]
    pub breath_type: BreathType,
    #[arg(long, default_value = "cnn-lstm")]
    pub arch: Architecture,
    #[arg(long, default_value = "multimodal")]
    pub mode: Mode,
    /// CNN-LSTM filters per branch.
    #[arg(long, default_value_t = 64)]
    pub filters: usize,
    /// CNN-LSTM kernel length.
    #[arg(long, default_value_t = 9)]
    pub kernel: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// LSTM hidden units.
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    #[arg(long, default_value_t = 32)]
    pub stage1_filters: usize,
    #[arg(long, default_value_t = 64)]
    pub stage2_filters: usize,
    #[arg(long, default_value_t = 5)]
    pub tcn_kernel: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
}

impl ModelArgs {
    pub fn arch_config(&self) -> ArchConfig {
        match self.arch {
            Architecture::CnnLstm => ArchConfig::CnnLstm(CnnLstmConfig {
                n_filters: self.filters,
                kernel: self.kernel,
                stride: self.stride,
                lstm_hidden: self.hidden,
            }),
            Architecture::Tcn => ArchConfig::Tcn(TcnConfig {
                stage1_filters: self.stage1_filters,
                stage2_filters: self.stage2_filters,
                kernel: self.tcn_kernel,
                dropout: self.dropout,
                ..TcnConfig::default()
            }),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    /// Initial learning rate.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Learning-rate halvings before a further plateau stops training.
    #[arg(long, default_value_t = 4)]
    pub halvings: usize,
    /// Epochs without validation improvement that count as a plateau.
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub min_delta: f64,
}

impl OptimArgs {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            lr0: self.lr,
            halvings_max: self.halvings,
            plateau_patience: self.patience,
            min_delta: self.min_delta,
            seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset root holding the manifest.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave out the scenario-2 subjects for this seed.
    #[arg(long)]
    pub held_out: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Split seed, or base seed with --repetitions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluate this trained model on the split for --seed.
    #[arg(long, conflicts_with = "repetitions", required_unless_present = "repetitions")]
    pub checkpoint: Option<PathBuf>,
    /// Run this many seeded split/train/evaluate cycles.
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Write every instance embedding (checkpoint mode only).
    #[arg(long)]
    pub export_embeddings: bool,
    /// Threads for repetitions.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Summary CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Also write the tables here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Splices `--config` file entries in front of the command-line flags.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            path = args.get(i + 1).cloned();
            break;
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            break;
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    if args.len() < 2 {
        return Ok(args);
    }
    let text = fs::read_to_string(&path).map_err(|e| CliError::config(format!("{path}: {e}")))?;
    let mut extra = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| CliError::config(format!("{path}:{}: expected key = value", n + 1)))?;
        let key = key.replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::config(format!("{path}:{}: bad key", n + 1)));
        }
        match value {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            v => {
                extra.push(format!("--{key}"));
                extra.push(v.to_string());
            }
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        counts: CountSpec::Uniform {
            min: a.min_count,
            max: a.max_count,
        },
        breath_types: a.types.clone(),
        ..SynthConfig::new(a.subjects, a.seed, a.noise)
    };
    cfg.validate()?;
    if a.out.exists() {
        let mut entries = fs::read_dir(&a.out).map_err(|e| io_err(&a.out, e))?;
        if entries.next().is_some() && !a.force {
            return Err(CliError::config(format!(
                "{} is not empty; pass --force to write into it",
                a.out.display()
            )));
        }
    }
    let cohort = SyntheticCohort::generate(cfg)?;
    save_dataset(&cohort, &a.out)?;
    let m = cohort.manifest();
    let mut out = std::io::stdout().lock();
    let types = &a.types;
    let header: Vec<&str> = types.iter().map(|t| t.as_str()).collect();
    let _ = writeln!(out, "subject\t{}\ttotal", header.join("\t"));
    for s in m.subjects() {
        let counts: Vec<usize> = types.iter().map(|&t| m.count(s, t)).collect();
        let row: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{s}\t{}\t{}", row.join("\t"), counts.iter().sum::<usize>());
    }
    let _ = writeln!(out, "{} instances written to {}", m.len(), a.out.display());
    Ok(())
}

fn load(data: &Path, breath_type: BreathType) -> Result<(DatasetManifest, FeatureBank), CliError> {
    let ds = load_manifest(data)?;
    let bank = extract_bank(&ds, breath_type, &PreprocessConfig::default())?;
    Ok((ds.manifest().clone(), bank))
}

/// Accuracy, EER and trial scores of one trained model against the split for `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub breath_type: BreathType,
    pub architecture: Architecture,
    pub mode: Mode,
    pub seed: u64,
    pub held_out: bool,
    pub accuracy: f64,
    pub eer1: Option<EerResult>,
    pub eer2: Option<EerResult>,
}

impl ModelMetrics {
    fn summary(&self) -> SummaryRow {
        let one = |v: Option<f64>| v.map(|mean| Summary { mean, std: 0.0 });
        SummaryRow::new(
            self.breath_type,
            self.architecture,
            self.mode,
            1,
            one(Some(self.accuracy)),
            one(self.eer1.as_ref().map(|e| e.eer)),
            one(self.eer2.as_ref().map(|e| e.eer)),
        )
    }
}

/// Full split and the split the model was trained on.
fn splits(manifest: &DatasetManifest, breath_type: BreathType, seed: u64, held_out: bool) -> Result<(SplitSpec, SplitSpec), CliError> {
    let split = make_split(manifest, breath_type, seed)?;
    let trained_on = if held_out {
        make_scenario(manifest, &split, ScenarioKind::Unseen, seed)?.training_split(manifest, &split)
    } else {
        split.clone()
    };
    Ok((split, trained_on))
}

fn measure(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    model: &Model<f32>,
    breath_type: BreathType,
    seed: u64,
    held_out: bool,
    out: &Path,
) -> Result<ModelMetrics, CliError> {
    let (split, trained_on) = splits(manifest, breath_type, seed, held_out)?;
    let classes = class_index(model.classes());
    let test = labelled(manifest, bank, &trained_on.test, &classes)?;
    let accuracy = evaluate_identification(model, &test)?;
    let kind = if held_out { ScenarioKind::Unseen } else { ScenarioKind::Enrolled };
    let scores = scenario_scores(manifest, bank, model, &trained_on, &split, kind, seed)?;
    write_scores_csv(&out.join(format!("scores_scenario{}.csv", kind.number())), &scores)?;
    let eer = compute_eer(&scores)?;
    let (eer1, eer2) = if held_out { (None, Some(eer)) } else { (Some(eer), None) };
    let cfg = model.config();
    Ok(ModelMetrics {
        breath_type,
        architecture: cfg.arch.architecture(),
        mode: cfg.mode,
        seed,
        held_out,
        accuracy,
        eer1,
        eer2,
    })
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let cfg = a.optim.train_config(a.seed);
    cfg.validate()?;
    let (manifest, bank) = load(&a.data, a.model.breath_type)?;
    let (_, split) = splits(&manifest, a.model.breath_type, a.seed, a.held_out)?;
    let n = split.train_subjects(&manifest).len();
    let mut model = Model::<f32>::new(ModelConfig::new(a.model.arch_config(), a.model.mode, n), a.seed)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("split.json"), &to_json(&split))?;
    let history = match train_on_split(&mut model, &manifest, &bank, &split, &cfg) {
        Ok(h) => h,
        Err(TrainError::Diverged { epoch, msg, history }) => {
            write_file(&a.out.join("history.json"), &history.to_json())?;
            return Err(TrainError::Diverged { epoch, msg, history }.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_file(&a.out.join("history.json"), &history.to_json())?;
    model.save(&a.out.join("model.json"))?;
    let metrics = measure(&manifest, &bank, &model, a.model.breath_type, a.seed, a.held_out, &a.out)?;
    write_file(&a.out.join("metrics.json"), &to_json(&metrics))?;
    report::write_summaries(&a.out.join("summary.csv"), &[metrics.summary()])?;
    println!(
        "trained {} {} on {} {} breaths: {} epochs ({:?}), test accuracy {:.4}",
        metrics.architecture,
        metrics.mode,
        n,
        a.model.breath_type,
        history.epochs.len(),
        history.stop_reason,
        metrics.accuracy
    );
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    match (&a.checkpoint, a.repetitions) {
        (Some(ck), _) => eval_checkpoint(a, ck),
        (None, Some(n)) => eval_repetitions(a, n),
        (None, None) => Err(CliError::config("pass --checkpoint or --repetitions")),
    }
}

fn eval_checkpoint(a: &EvalArgs, ck: &Path) -> Result<(), CliError> {
    if !ck.is_file() {
        return Err(CliError::data(format!("checkpoint {} not found", ck.display())));
    }
    let model = Model::<f32>::load(ck)?;
    if !model.is_trained() {
        return Err(ModelError::Untrained.into());
    }
    let (manifest, bank) = load(&a.data, a.model.breath_type)?;
    let (split, reduced) = splits(&manifest, a.model.breath_type, a.seed, true)?;
    let held_out = if model.classes() == split.train_subjects(&manifest) {
        false
    } else if model.classes() == reduced.train_subjects(&manifest) {
        true
    } else {
        return Err(CliError::config(format!(
            "checkpoint subjects do not match the split for seed {}",
            a.seed
        )));
    };
    create_dir(&a.out)?;
    let metrics = measure(&manifest, &bank, &model, a.model.breath_type, a.seed, held_out, &a.out)?;
    write_file(&a.out.join("metrics.json"), &to_json(&metrics))?;
    let eer = |e: &Option<EerResult>| e.as_ref().map(|e| e.eer.to_string()).unwrap_or_default();
    let csv = format!(
        "repetition,seed,accuracy,eer1,eer2\n0,{},{},{},{}\n",
        a.seed,
        metrics.accuracy,
        eer(&metrics.eer1),
        eer(&metrics.eer2)
    );
    write_file(&a.out.join("metrics.csv"), &csv)?;
    report::write_summaries(&a.out.join("summary.csv"), &[metrics.summary()])?;
    if a.export_embeddings {
        export_embeddings(&manifest, &bank, &model, &a.out.join("embeddings.csv"))?;
    }
    println!(
        "accuracy {:.4}  eer{} {:.4}",
        metrics.accuracy,
        if held_out { 2 } else { 1 },
        metrics.eer1.as_ref().or(metrics.eer2.as_ref()).map_or(f64::NAN, |e| e.eer)
    );
    Ok(())
}

/// `subject,instance,e0..e{m-1}` for every instance in the bank.
fn export_embeddings(manifest: &DatasetManifest, bank: &FeatureBank, model: &Model<f32>, path: &Path) -> Result<(), CliError> {
    let indices: Vec<usize> = bank.iter().map(|(i, _)| i).collect();
    let emb = embed_instances(model, bank, &indices)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["subject".to_string(), "instance".to_string()];
    header.extend((0..model.embedding_dim()).map(|j| format!("e{j}")));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (i, v) in &emb {
        let r = &manifest.instances()[*i];
        let mut row = vec![r.subject_id.clone(), r.id().to_string()];
        row.extend(v.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct RepetitionReport<'a> {
    spec: &'a ExperimentSpec,
    result: &'a ExperimentResult,
}

fn eval_repetitions(a: &EvalArgs, n: usize) -> Result<(), CliError> {
    if a.export_embeddings {
        return Err(CliError::config("--export-embeddings needs --checkpoint"));
    }
    if a.jobs == 0 {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let spec = ExperimentSpec {
        breath_type: a.model.breath_type,
        arch: a.model.arch_config(),
        mode: a.model.mode,
        train: a.optim.train_config(a.seed),
        n_repetitions: n,
        base_seed: a.seed,
        verification: true,
        jobs: a.jobs,
    };
    ModelConfig::new(spec.arch.clone(), spec.mode, 2).validate()?;
    let (manifest, bank) = load(&a.data, a.model.breath_type)?;
    let result = run_experiment(&manifest, &bank, &spec)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("metrics.json"), &to_json(&RepetitionReport { spec: &spec, result: &result }))?;
    write_file(&a.out.join("metrics.csv"), &repetition_csv(&result))?;
    report::write_summaries(&a.out.join("summary.csv"), &[SummaryRow::from_result(&result)])?;
    for f in &result.failures {
        eprintln!("repetition {} (seed {}) failed: {}", f.repetition, f.seed, f.error);
    }
    if result.repetitions.is_empty() {
        let numerical = result.failures.iter().all(|f| f.numerical);
        let code = if numerical { EXIT_NUMERICAL } else { EXIT_DATA };
        return Err(CliError { code, message: "every repetition failed".into() });
    }
    let show = |s: &Option<Summary>| s.map_or("-".to_string(), |s| format!("{:.4} ± {:.4}", s.mean, s.std));
    println!(
        "{} repetitions: accuracy {}  eer1 {}  eer2 {}",
        result.repetitions.len(),
        show(&result.accuracy),
        show(&result.eer1),
        show(&result.eer2)
    );
    Ok(())
}

/// One row per repetition, then `mean` and `std` rows.
fn repetition_csv(r: &ExperimentResult) -> String {
    let mut s = String::from("repetition,seed,accuracy,eer1,eer2,epochs,stop_reason\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for rep in &r.repetitions {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:?}\n",
            rep.repetition,
            rep.seed,
            rep.accuracy,
            opt(rep.eer1.as_ref().map(|e| e.eer)),
            opt(rep.eer2.as_ref().map(|e| e.eer)),
            rep.epochs,
            rep.stop_reason
        ));
    }
    for (label, pick) in [("mean", 0), ("std", 1)] {
        let get = |m: &Option<Summary>| opt(m.map(|m| if pick == 0 { m.mean } else { m.std }));
        s.push_str(&format!(
            "{label},,{},{},{},,\n",
            get(&r.accuracy),
            get(&r.eer1),
            get(&r.eer2)
        ));
    }
    s
}

pub fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let rows = read_summaries(&a.inputs)?;
    let text = render_report(&rows);
    print!("{text}");
    if let Some(p) = &a.out {
        write_file(p, &text)?;
    }
    Ok(())
}
