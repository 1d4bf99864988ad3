//! Command-line surface. Every verb prints a JSON result on stdout; errors
//! are printed as JSON on stderr with exit code 1, usage errors exit 2.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hqmm_core::evaluation::{baum_welch, description_accuracy, estimate_speedup};
use hqmm_core::learning::{hyperband_search, train_with_clock, SearchSpace, TrainingConfig, UpdateScheme, WallClock};
use hqmm_core::models::{validate_oom_depth, LikelihoodModel, ModelSpec};
use hqmm_core::representations::{khqmm_to_lhqmm, validate_channel, ChannelMode};
use serde_json::{json, Value};

use crate::convert::{convert, Target};
use crate::dataset::{generate_dataset, reshape_sequences, Generator, SequenceDataset};
use crate::error::{Error, Result};
use crate::experiments::{cross_validate, Learner};
use crate::io::{sibling, write_json};
use crate::model_file::{load_model, save_model};
use crate::run_file::{load_run, save_run, write_trajectory, ConfigFile, ExperimentConfig, RunInputs};
use crate::splice::{load_splice, Ambiguity};

#[derive(Debug, Parser)]
#[command(name = "hqmm", version, about = "HMM, OOM and HQMM sequence models")]
pub struct Cli {
    /// Worker threads for concurrent training jobs (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a generator.
    Generate(GenerateArgs),
    /// Train a K-HQMM (or an EM baseline HMM).
    Train(TrainArgs),
    /// Score a model on a dataset.
    Eval(EvalArgs),
    /// Per-label maximum-likelihood classification with k-fold CV.
    Classify(ClassifyArgs),
    /// Convert a model to another representation.
    Convert(ConvertArgs),
    /// Check a model's validity.
    Validate(ValidateArgs),
    /// Hyperband search over τ and α.
    Tune(TuneArgs),
    /// Estimate a speedup from two DA trajectories.
    Speedup(SpeedupArgs),
}

#[derive(Debug, Args, Default)]
pub struct Hyper {
    /// Architecture n,s,w.
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<(usize, usize, usize)>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Batches per epoch (0 = all).
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = ["wen-yin", "projection"])]
    pub update: Option<String>,
    /// TOML experiment file; explicit flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// `random-hmm(n,s,seed)`.
    #[arg(long, conflicts_with = "model")]
    pub generator: Option<String>,
    /// Model JSON file to sample from.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub sequences: usize,
    #[arg(long, default_value_t = 3000)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also draw this many validation sequences into `--val-out`.
    #[arg(long, requires = "val_out")]
    pub val_sequences: Option<usize>,
    #[arg(long)]
    pub val_out: Option<PathBuf>,
    /// Cut sequences into pieces of this length.
    #[arg(long)]
    pub sub_length: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Also write the generating model as JSON.
    #[arg(long)]
    pub save_generator: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
    #[arg(long)]
    pub sub_length: Option<usize>,
    /// `hqmm` (Stiefel training) or `hmm` (Baum–Welch baseline).
    #[arg(long, default_value = "hqmm", value_parser = ["hqmm", "hmm"])]
    pub family: String,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Run file (hqmm) or model file (hmm).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the epoch trajectory as CSV.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, conflicts_with = "run")]
    pub model: Option<PathBuf>,
    /// Run file; its best-validation model is scored.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value = "da", value_parser = ["da", "loglik"])]
    pub metric: String,
    /// With `--run`, write the DA trajectory CSV here.
    #[arg(long, requires = "run")]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Labeled dataset file.
    #[arg(long, conflicts_with = "splice")]
    pub data: Option<PathBuf>,
    /// Splice-junction file (UCI or KEEL format).
    #[arg(long)]
    pub splice: Option<PathBuf>,
    #[arg(long, default_value = "drop-seqs", value_parser = ["strip-chars", "drop-seqs"])]
    pub ambiguous: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub hyper: Hyper,
    #[arg(long, default_value = "hqmm", value_parser = ["hqmm", "hmm"])]
    pub family: String,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// standard-oom, general-oom, khqmm or lhqmm.
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub model: PathBuf,
    /// Enumeration depth for OOM non-negativity checks.
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
    /// Initial configurations (9 or 27).
    #[arg(long, default_value_t = 27)]
    pub k: usize,
    #[arg(long, value_parser = parse_range, default_value = "0.1,1.0")]
    pub tau_range: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "0.8,1.0")]
    pub alpha_range: (f64, f64),
    /// Run file for the winning configuration.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpeedupArgs {
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
}

fn parse_arch(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [n, s, w] if n > 0 && s > 0 && w > 0 => Ok((n, s, w)),
        _ => Err("expected three positive integers n,s,w".into()),
    }
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [lo, hi] if lo <= hi => Ok((lo, hi)),
        _ => Err("expected lo,hi with lo <= hi".into()),
    }
}

/// Resolved training setup: defaults, then the config file, then flags.
struct Setup {
    arch: Option<(usize, usize, usize)>,
    config: TrainingConfig,
    data: Option<PathBuf>,
    val: Option<PathBuf>,
    sub_length: Option<usize>,
    config_file: Option<PathBuf>,
    burn_in_explicit: bool,
}

fn resolve(h: &Hyper, base: TrainingConfig) -> Result<Setup> {
    let file = h.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let mut cfg = match &file {
        Some(f) => f.training.clone(),
        None => ConfigFile::from(&base),
    };
    let burn_in_explicit = h.burn_in.is_some() || file.as_ref().is_some_and(|f| f.training.burn_in != base.burn_in);
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = h.$f.clone() { cfg.$f = v; })* };
    }
    set!(tau, alpha, beta, batches, batch_size, epochs, burn_in, seed, update);
    UpdateScheme::parse(&cfg.update)?;
    Ok(Setup {
        arch: h
            .arch
            .or(file.as_ref().and_then(|f| f.arch.map(|a| (a[0], a[1], a[2])))),
        config: cfg.to_config()?,
        data: file.as_ref().and_then(|f| f.data.clone()),
        val: file.as_ref().and_then(|f| f.val.clone()),
        sub_length: file.as_ref().and_then(|f| f.sub_length),
        config_file: h.config.clone(),
        burn_in_explicit,
    })
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Usage(format!("missing required {flag}")))
}

fn load_split(path: &Path, sub_length: Option<usize>, burn_in: usize) -> Result<SequenceDataset> {
    let ds = SequenceDataset::load(path)?;
    match sub_length {
        Some(sub) => reshape_sequences(&ds, sub, burn_in),
        None => Ok(ds),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn generate(a: &GenerateArgs) -> Result<Value> {
    let generator = match (&a.generator, &a.model) {
        (Some(g), None) => Generator::parse(g)?,
        (None, Some(m)) => Generator::Model {
            model: load_model(m)?,
            source: display(m),
        },
        _ => return Err(Error::Usage("give exactly one of --generator or --model".into())),
    };
    if let Some(path) = &a.save_generator {
        save_model(path, &generator.model()?)?;
    }
    let total = a.sequences + a.val_sequences.unwrap_or(0);
    let all = generate_dataset(&generator, total, a.length, a.seed)?;
    let mut train = all.clone();
    let mut outputs = vec![];
    let val_seqs = train.sequences.split_off(a.sequences);
    let finish = |mut ds: SequenceDataset, what: &str| -> Result<SequenceDataset> {
        ds.provenance.history.push(what.to_string());
        match a.sub_length {
            Some(sub) => reshape_sequences(&ds, sub, a.burn_in),
            None => {
                ds.burn_in = a.burn_in;
                Ok(ds)
            }
        }
    };
    let train = finish(train, &format!("first {} sequences", a.sequences))?;
    train.save(&a.out)?;
    outputs.push(json!({"path": display(&a.out), "sequences": train.len()}));
    if let (Some(v), Some(path)) = (a.val_sequences, &a.val_out) {
        let mut val = all;
        val.sequences = val_seqs;
        let val = finish(val, &format!("last {v} sequences"))?;
        val.save(path)?;
        outputs.push(json!({"path": display(path), "sequences": val.len()}));
    }
    Ok(json!({
        "generator": generator.describe(),
        "seed": a.seed,
        "length": a.length,
        "alphabet": train.alphabet,
        "outputs": outputs,
    }))
}

fn train_cmd(a: &TrainArgs) -> Result<Value> {
    let setup = resolve(&a.hyper, TrainingConfig::default())?;
    let data_path = require(a.data.clone().or(setup.data.clone()), "--data")?;
    let val_path = a.val.clone().or(setup.val.clone());
    let sub_length = a.sub_length.or(setup.sub_length);
    let mut config = setup.config.clone();
    let train_ds = load_split(&data_path, sub_length, config.burn_in)?;
    if !setup.burn_in_explicit && sub_length.is_none() {
        config.burn_in = train_ds.burn_in;
    }
    let val_ds = val_path
        .as_deref()
        .map(|p| load_split(p, sub_length, config.burn_in))
        .transpose()?;
    let val_seqs = val_ds.as_ref().map_or(&[][..], |v| &v.sequences[..]);
    let (n, s, w) = require(setup.arch, "--arch")?;
    if s != train_ds.alphabet {
        return Err(Error::Usage(format!(
            "--arch has s = {s} but the data alphabet has {} symbols",
            train_ds.alphabet
        )));
    }
    if a.family == "hmm" {
        let r = baum_welch(&train_ds.sequences, n, s, a.restarts, config.seed)?;
        let model = ModelSpec::Hmm(r.model);
        save_model(&a.out, &model)?;
        let da = val_ds
            .as_ref()
            .map(|v| description_accuracy(&model, &v.sequences, config.burn_in))
            .transpose()?;
        return Ok(json!({
            "model": display(&a.out),
            "family": "hmm",
            "restarts": a.restarts,
            "seed": config.seed,
            "best_restart": r.best_restart,
            "restart_log_likelihoods": r.restart_log_likelihoods,
            "validation_da": da.map(|d| d.mean),
        }));
    }
    let run = train_with_clock(&train_ds.sequences, (n, s, w), &config, val_seqs, &WallClock::default())?;
    let inputs = RunInputs {
        data: Some(display(&data_path)),
        validation: val_path.as_deref().map(display),
        config_file: setup.config_file.as_deref().map(display),
        sub_length,
    };
    save_run(&a.out, &run, &inputs)?;
    if let Some(t) = &a.trajectory {
        write_trajectory(t, &run.records)?;
    }
    let last = run.records.last().expect("epoch 0 is always recorded");
    Ok(json!({
        "run": display(&a.out),
        "epochs": last.epoch,
        "best_epoch": run.best_epoch,
        "best_validation_da": run.best_validation_da,
        "final_loss": last.loss,
        "max_feasibility": run.records.iter().map(|r| r.max_feasibility).fold(0.0, f64::max),
        "skipped_batches": run.skipped_batches,
        "seconds": last.seconds,
    }))
}

fn eval_cmd(a: &EvalArgs) -> Result<Value> {
    let (model, default_burn_in, run) = match (&a.model, &a.run) {
        (Some(m), None) => (load_model(m)?, None, None),
        (None, Some(r)) => {
            let (run, _) = load_run(r)?;
            (ModelSpec::KHqmm(run.best.clone()), Some(run.config.burn_in), Some(run))
        }
        _ => return Err(Error::Usage("give exactly one of --model or --run".into())),
    };
    if let (Some(path), Some(run)) = (&a.trajectory, &run) {
        write_trajectory(path, &run.records)?;
    }
    let Some(data_path) = &a.data else {
        if a.trajectory.is_some() {
            return Ok(json!({"trajectory": a.trajectory.as_deref().map(display)}));
        }
        return Err(Error::Usage("missing required --data".into()));
    };
    let ds = SequenceDataset::load(data_path)?;
    let burn_in = a.burn_in.or(default_burn_in).unwrap_or(ds.burn_in);
    let out = if a.metric == "da" {
        let score = description_accuracy(&model, &ds.sequences, burn_in)?;
        json!({
            "metric": "da",
            "mean": score.mean,
            "std": score.std,
            "effective_length": score.effective_length,
            "alphabet": score.alphabet,
            "zero_probability": score.zero_probability,
            "sequences": score.scores.len(),
            "burn_in": burn_in,
        })
    } else {
        let lls = ds
            .sequences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                model
                    .log_likelihood(s, burn_in)
                    .map_err(|e| hqmm_core::Error::InSequence {
                        sequence: i,
                        source: Box::new(e),
                    })
            })
            .collect::<hqmm_core::Result<Vec<f64>>>()?;
        json!({
            "metric": "loglik",
            "total": lls.iter().sum::<f64>(),
            "per_sequence": lls,
            "burn_in": burn_in,
        })
    };
    if let Some(p) = &a.out {
        write_json(p, &out)?;
    }
    Ok(out)
}

fn classify_cmd(a: &ClassifyArgs) -> Result<Value> {
    let (ds, splice_report) = match (&a.data, &a.splice) {
        (Some(d), None) => (SequenceDataset::load(d)?, None),
        (None, Some(p)) => {
            let (ds, report) = load_splice(p, Ambiguity::parse(&a.ambiguous)?)?;
            (ds, Some(report))
        }
        _ => return Err(Error::Usage("give exactly one of --data or --splice".into())),
    };
    let mut base = TrainingConfig::splice();
    base.burn_in = ds.burn_in;
    let setup = resolve(&a.hyper, base)?;
    let learner = if a.family == "hmm" {
        let (n, _, _) = setup.arch.unwrap_or((4, ds.alphabet, 1));
        Learner::Hmm {
            states: n,
            restarts: a.restarts,
            seed: setup.config.seed,
        }
    } else {
        let arch = setup.arch.unwrap_or((4, ds.alphabet, 1));
        Learner::Hqmm {
            arch,
            config: setup.config.clone(),
        }
    };
    let cv = cross_validate(&ds, a.folds, &learner)?;
    let mut out = serde_json::to_value(&cv).map_err(|e| Error::format("<report>", e))?;
    out["family"] = json!(a.family);
    out["config"] = serde_json::to_value(ConfigFile::from(&setup.config)).map_err(|e| Error::format("<report>", e))?;
    if let Some(r) = splice_report {
        out["splice"] = serde_json::to_value(r).map_err(|e| Error::format("<report>", e))?;
    }
    if let Some(p) = &a.out {
        write_json(p, &out)?;
    }
    Ok(out)
}

fn convert_cmd(a: &ConvertArgs) -> Result<Value> {
    let model = load_model(&a.model)?;
    let converted = convert(&model, Target::parse(&a.to)?)?;
    save_model(&a.out, &converted)?;
    Ok(json!({"from": model.family(), "to": converted.family(), "out": display(&a.out)}))
}

/// Returns the report and whether the model passed.
fn validate_cmd(a: &ValidateArgs) -> Result<(Value, bool)> {
    let model = load_model(&a.model)?;
    let channel = |sup: &[hqmm_core::ComplexMatrix]| -> Result<(Value, bool)> {
        let r = validate_channel(sup, ChannelMode::FullModel)?;
        let ok = r.is_valid(a.tolerance);
        Ok((
            json!({
                "family": model.family(),
                "valid": ok,
                "tp_residual": r.tp_residual,
                "cp_min_eig": r.cp_min_eig,
                "hp_residual": r.hp_residual,
                "kraus_rank": r.kraus_rank,
            }),
            ok,
        ))
    };
    match &model {
        ModelSpec::KHqmm(q) => {
            let (mut v, ok) = channel(khqmm_to_lhqmm(q)?.superoperators())?;
            v["stiefel_residual"] = json!(q.kraus().feasibility_residual());
            Ok((v, ok))
        }
        ModelSpec::LHqmm(l) => channel(l.superoperators()),
        ModelSpec::GeneralOom(_) | ModelSpec::StandardOom(_) | ModelSpec::Noom(_) => {
            let general = match convert(&model, Target::GeneralOom)? {
                ModelSpec::GeneralOom(g) => g,
                _ => unreachable!("general-oom target yields a general OOM"),
            };
            let r = validate_oom_depth(&general, a.depth)?;
            let ok = r.violation_count == 0;
            Ok((
                json!({
                    "family": model.family(),
                    "valid": ok,
                    "depth": r.depth,
                    "sequences_checked": r.sequences_checked,
                    "min_probability": r.min_probability,
                    "min_sequence": r.min_sequence,
                    "violations": r.violation_count,
                    "max_marginal_residual": r.max_marginal_residual,
                    "max_imaginary": r.max_imaginary,
                    "note": r.to_string(),
                }),
                ok,
            ))
        }
        ModelSpec::Hmm(_) => Ok((json!({"family": "hmm", "valid": true}), true)),
    }
}

fn tune_cmd(a: &TuneArgs) -> Result<Value> {
    let setup = resolve(&a.hyper, TrainingConfig::default())?;
    let data_path = require(a.data.clone().or(setup.data.clone()), "--data")?;
    let val_path = a.val.clone().or(setup.val.clone());
    let mut config = setup.config.clone();
    let train_ds = load_split(&data_path, setup.sub_length, config.burn_in)?;
    if !setup.burn_in_explicit && setup.sub_length.is_none() {
        config.burn_in = train_ds.burn_in;
    }
    let val_ds = val_path
        .as_deref()
        .map(|p| load_split(p, setup.sub_length, config.burn_in))
        .transpose()?;
    let arch = require(setup.arch, "--arch")?;
    let space = SearchSpace {
        tau: a.tau_range,
        alpha: a.alpha_range,
    };
    let result = hyperband_search(
        &space,
        a.k,
        &train_ds.sequences,
        arch,
        &config,
        val_ds.as_ref().map_or(&[][..], |v| &v.sequences[..]),
        &WallClock::default(),
    )?;
    let inputs = RunInputs {
        data: Some(display(&data_path)),
        validation: val_path.as_deref().map(display),
        config_file: setup.config_file.as_deref().map(display),
        sub_length: setup.sub_length,
    };
    save_run(&a.out, &result.best, &inputs)?;
    let log: Vec<Value> = result
        .log
        .iter()
        .map(|r| {
            json!({
                "round": r.round,
                "trial": r.trial,
                "tau": r.tau,
                "alpha": r.alpha,
                "epochs": r.epochs,
                "total_epochs": r.total_epochs,
                "validation_da": r.validation_da,
                "best_validation_da": r.best_validation_da,
            })
        })
        .collect();
    let out = json!({
        "run": display(&a.out),
        "best_trial": result.best_trial,
        "best_tau": result.best.config.tau,
        "best_alpha": result.best.config.alpha,
        "best_validation_da": result.best.best_validation_da,
        "schedule": result.rounds.iter().map(|r| json!({"survivors": r.survivors, "epochs": r.epochs})).collect::<Vec<_>>(),
        "trials": log,
    });
    write_json(&sibling(&a.out, "trials.json"), &out)?;
    Ok(out)
}

fn speedup_cmd(a: &SpeedupArgs) -> Result<Value> {
    let baseline = crate::run_file::read_trajectory(&a.baseline)?;
    let target = crate::run_file::read_trajectory(&a.target)?;
    let e = estimate_speedup(&baseline, &target, a.fraction)?;
    Ok(json!({
        "speedup": if e.infinite { Value::from("inf") } else { Value::from(e.speedup) },
        "infinite": e.infinite,
        "goal_da": e.goal_da,
        "target_time": e.target_time,
        "baseline_time": if e.infinite { Value::Null } else { Value::from(e.baseline_time) },
        "extrapolated": e.extrapolated,
        "optimistic_for_baseline": e.optimistic_for_baseline,
        "slope": e.slope,
        "intercept": e.intercept,
    }))
}

/// Runs one parsed command; returns the JSON to print and the exit code.
pub fn run(cli: &Cli) -> Result<(Value, i32)> {
    #[cfg(feature = "parallel")]
    if let Some(j) = cli.jobs {
        // Fails only if a pool already exists (e.g. repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let value = match &cli.command {
        Command::Generate(a) => generate(a)?,
        Command::Train(a) => train_cmd(a)?,
        Command::Eval(a) => eval_cmd(a)?,
        Command::Classify(a) => classify_cmd(a)?,
        Command::Convert(a) => convert_cmd(a)?,
        Command::Validate(a) => {
            let (v, ok) = validate_cmd(a)?;
            return Ok((v, if ok { 0 } else { 1 }));
        }
        Command::Tune(a) => tune_cmd(a)?,
        Command::Speedup(a) => speedup_cmd(a)?,
    };
    Ok((value, 0))
}

pub fn error_json(e: &Error) -> Value {
    json!({"error": {"kind": e.kind(), "message": e.to_string()}})
}

/// Entry point shared by the binary: parse, run, print, exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok((value, code)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("JSON output"));
            code
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}
