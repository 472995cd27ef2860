//! Command-line surface tying manifests, splits, features, models, and
//! evaluation into reproducible runs.
//!
//! Every artifact embeds its effective configuration as a leading
//! `# {"tool_version":..,"config":..}` line (CSV/plan files) or a
//! `config` field (JSON); re-running a command from that snapshot
//! reproduces the artifact byte-exactly. Semantic settings may come from
//! `--config FILE` as well as flags; the file wins on conflict with a
//! warning. Paths (manifest, plans, output) are flags-only.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datamodel::{self, Dataset, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::eval::{self, grids, FeatureStore, PipelineConfig};
use crate::features::{self, Representation};
use crate::models::{ModelKind, ModelSpec};
use crate::splits::{self, LeakyMode};
use crate::toy::{self, TestMode, ToyConfig};

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_MANIFEST: i32 = 3;
const EXIT_SPLIT: i32 = 4;
const EXIT_SIGNAL: i32 = 5;
const EXIT_MODEL: i32 = 6;
const EXIT_EVAL: i32 = 7;
const EXIT_AUDIT_CONDITION: i32 = 10;
const EXIT_AUDIT_REPETITION: i32 = 11;
const EXIT_AUDIT_SEGMENTATION: i32 = 12;

const EXIT_CODES_HELP: &str = "EXIT CODES:
    0   success; for `audit`: every plan is bearing_wise_clean
    1   unexpected error
    2   usage or configuration error
    3   manifest error
    4   split generation error
    5   signal or feature extraction error
    6   model error
    7   evaluation error (including failed plans in `run`)
    10  audit found condition-wise leakage
    11  audit found repetition-wise leakage
    12  audit found segmentation-level leakage";

#[derive(Parser)]
#[command(
    name = "bearing-eval",
    version,
    about = "Leakage-aware evaluation for vibration-based bearing fault diagnosis",
    after_help = EXIT_CODES_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic leakage experiment with its analytic accuracy ceiling.
    Toy(ToyArgs),
    /// Generate split plans (leakage-free or deliberately leaky).
    Split(SplitArgs),
    /// Audit a plan file against the leakage taxonomy.
    Audit(AuditArgs),
    /// Extract feature tables for one plan.
    Features(FeaturesArgs),
    /// Full pipeline: hyperparameter selection then outer-loop evaluation.
    Run(RunArgs),
    /// Print a previously written experiment summary.
    Report(ReportArgs),
}

/// Run the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Toy(args) => cmd_toy(args),
        Command::Split(args) => cmd_split(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Features(args) => cmd_features(args),
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Manifest(_) | Error::ManifestParse { .. } => EXIT_MANIFEST,
        Error::Split(_) => EXIT_SPLIT,
        Error::Signal(_) | Error::Feature(_) => EXIT_SIGNAL,
        Error::Model(_) => EXIT_MODEL,
        Error::Eval(_) | Error::UndefinedMetric(_) => EXIT_EVAL,
        _ => EXIT_ERROR,
    }
}

/// Leading artifact line carrying the tool version and the effective
/// configuration; [`config_from_artifact`] reads it back.
fn snapshot_line<T: Serialize>(config: &T) -> Result<String> {
    let envelope = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    Ok(format!("# {}\n", serde_json::to_string(&envelope)?))
}

/// Extract the embedded config snapshot from an artifact's first line.
pub fn config_from_artifact(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path)?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty artifact", path.display())))?;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Config(format!("{}: no snapshot line", path.display())))?;
    let envelope: serde_json::Value = serde_json::from_str(json)?;
    envelope
        .get("config")
        .cloned()
        .ok_or_else(|| Error::Config(format!("{}: snapshot has no config field", path.display())))
}

fn load_config_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Flags set the field; a config-file value wins over a conflicting flag,
/// with a warning.
fn merge_field<T: PartialEq + Clone + std::fmt::Debug>(
    target: &mut T,
    flag: Option<T>,
    file: Option<T>,
    name: &str,
) {
    match (flag, file) {
        (Some(f), Some(c)) => {
            if f != c {
                eprintln!("warning: --{name} {f:?} overridden by config file value {c:?}");
            }
            *target = c;
        }
        (Some(f), None) => *target = f,
        (None, Some(c)) => *target = c,
        (None, None) => {}
    }
}

fn write_artifact(path: &Path, snapshot: &str, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, format!("{snapshot}{body}"))?;
    Ok(())
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(raw: &str, f: F) -> Result<Vec<T>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| f(s.trim()))
        .collect()
}

fn parse_ratio(raw: &str) -> Result<(usize, usize)> {
    let (a, b) = raw
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("ratio '{raw}' must be A:B")))?;
    let a = a.parse().map_err(|_| Error::Config(format!("bad ratio '{raw}'")))?;
    let b = b.parse().map_err(|_| Error::Config(format!("bad ratio '{raw}'")))?;
    Ok((a, b))
}

fn parse_band(raw: &str) -> Result<(f64, f64)> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("band '{raw}' must be LOW:HIGH in Hz")))?;
    let lo = lo.parse().map_err(|_| Error::Config(format!("bad band '{raw}'")))?;
    let hi = hi.parse().map_err(|_| Error::Config(format!("bad band '{raw}'")))?;
    Ok((lo, hi))
}

/// The default envelope band: 500 Hz - 10 kHz, reduced to 500 Hz - 6 kHz
/// when the data is sampled at 12 kHz.
fn default_band(dataset: &Dataset) -> (f64, f64) {
    let min_rate = dataset
        .records
        .iter()
        .map(|r| r.sampling_rate_hz)
        .fold(f64::INFINITY, f64::min);
    if min_rate <= 12_000.0 {
        (500.0, 6_000.0)
    } else {
        (500.0, 10_000.0)
    }
}

// ---------------------------------------------------------------------------
// toy

#[derive(Args)]
struct ToyArgs {
    /// Output directory for toy_runs.csv and toy_aggregate.csv.
    #[arg(long)]
    out: PathBuf,
    /// Training bearings per class, comma-separated sweep.
    #[arg(long)]
    bearings: Option<String>,
    /// Independent dataset generations per configuration.
    #[arg(long)]
    seeds: Option<usize>,
    /// Test modes to run: valid, leakage.
    #[arg(long)]
    modes: Option<String>,
    /// Models to run: logistic_regression, decision_tree.
    #[arg(long)]
    models: Option<String>,
    /// Total bearings B (even; half healthy, half faulty).
    #[arg(long)]
    n_bearings: Option<usize>,
    /// Samples drawn per bearing.
    #[arg(long)]
    samples: Option<usize>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file; fields override conflicting flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ToyCmdConfig {
    n_bearings: usize,
    n_fault_features: usize,
    a_f: f64,
    a_b: f64,
    samples_per_bearing: usize,
    seed: u64,
    bearing_counts: Vec<usize>,
    n_seeds: usize,
    modes: Vec<String>,
    models: Vec<String>,
}

impl Default for ToyCmdConfig {
    fn default() -> Self {
        let base = ToyConfig::default();
        Self {
            n_bearings: base.n_bearings,
            n_fault_features: base.n_fault_features,
            a_f: base.a_f,
            a_b: base.a_b,
            samples_per_bearing: base.samples_per_bearing,
            seed: base.seed,
            bearing_counts: vec![1, 2, 4, 8, 16],
            n_seeds: 20,
            modes: vec!["valid".into(), "leakage".into()],
            models: vec!["logistic_regression".into(), "decision_tree".into()],
        }
    }
}

#[derive(Default, Deserialize)]
struct ToyCmdConfigPatch {
    n_bearings: Option<usize>,
    n_fault_features: Option<usize>,
    a_f: Option<f64>,
    a_b: Option<f64>,
    samples_per_bearing: Option<usize>,
    seed: Option<u64>,
    bearing_counts: Option<Vec<usize>>,
    n_seeds: Option<usize>,
    modes: Option<Vec<String>>,
    models: Option<Vec<String>>,
}

fn cmd_toy(args: ToyArgs) -> Result<i32> {
    let mut cfg = ToyCmdConfig::default();
    let patch: ToyCmdConfigPatch = match &args.config {
        Some(path) => load_config_file(path)?,
        None => ToyCmdConfigPatch::default(),
    };
    let counts_flag = args
        .bearings
        .as_deref()
        .map(|raw| {
            parse_list(raw, |s| {
                s.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad bearing count '{s}'")))
            })
        })
        .transpose()?;
    let modes_flag = args
        .modes
        .as_deref()
        .map(|raw| parse_list(raw, |s| Ok(s.to_string())))
        .transpose()?;
    let models_flag = args
        .models
        .as_deref()
        .map(|raw| parse_list(raw, |s| Ok(s.to_string())))
        .transpose()?;

    merge_field(&mut cfg.n_bearings, args.n_bearings, patch.n_bearings, "n-bearings");
    merge_field(&mut cfg.n_fault_features, None, patch.n_fault_features, "n-fault-features");
    merge_field(&mut cfg.a_f, None, patch.a_f, "a-f");
    merge_field(&mut cfg.a_b, None, patch.a_b, "a-b");
    merge_field(&mut cfg.samples_per_bearing, args.samples, patch.samples_per_bearing, "samples");
    merge_field(&mut cfg.seed, args.seed, patch.seed, "seed");
    merge_field(&mut cfg.bearing_counts, counts_flag, patch.bearing_counts, "bearings");
    merge_field(&mut cfg.n_seeds, args.seeds, patch.n_seeds, "seeds");
    merge_field(&mut cfg.modes, modes_flag, patch.modes, "modes");
    merge_field(&mut cfg.models, models_flag, patch.models, "models");

    let toy_config = ToyConfig {
        n_bearings: cfg.n_bearings,
        n_fault_features: cfg.n_fault_features,
        a_f: cfg.a_f,
        a_b: cfg.a_b,
        samples_per_bearing: cfg.samples_per_bearing,
        seed: cfg.seed,
    };
    let modes: Vec<TestMode> = cfg
        .modes
        .iter()
        .map(|m| match m.as_str() {
            "valid" => Ok(TestMode::Valid),
            "leakage" => Ok(TestMode::Leakage),
            other => Err(Error::Config(format!("unknown test mode '{other}'"))),
        })
        .collect::<Result<_>>()?;
    if cfg.bearing_counts.is_empty() || modes.is_empty() || cfg.models.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    let max_count = *cfg.bearing_counts.iter().max().expect("non-empty");
    if max_count > cfg.n_bearings / 2 {
        return Err(Error::Config(format!(
            "invalid sweep: {max_count} training bearings per class exceed the {} available",
            cfg.n_bearings / 2
        )));
    }
    if modes.contains(&TestMode::Valid) && max_count == cfg.n_bearings / 2 {
        return Err(Error::Config(format!(
            "invalid sweep: a valid test set needs unseen bearings; use --n-bearings > {}",
            2 * max_count
        )));
    }

    let specs: Vec<ModelSpec> = cfg
        .models
        .iter()
        .map(|name| {
            let kind = ModelKind::parse(name)?;
            Ok(toy::default_toy_models(cfg.seed)
                .into_iter()
                .find(|s| s.kind == kind)
                .unwrap_or_else(|| ModelSpec::new(kind, cfg.seed)))
        })
        .collect::<Result<_>>()?;

    let rows = toy::toy_sweep(&toy_config, &cfg.bearing_counts, &specs, &modes, cfg.n_seeds)?;
    // the header records the model hyperparameters so sweeps are
    // self-describing
    let hyperparameters: std::collections::BTreeMap<&str, _> = specs
        .iter()
        .map(|s| (s.kind.name(), s.hyperparameters.clone()))
        .collect();
    let envelope = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "model_hyperparameters": hyperparameters,
    });
    let snapshot = format!("# {}\n", serde_json::to_string(&envelope)?);
    write_artifact(&args.out.join("toy_runs.csv"), &snapshot, &toy::runs_csv(&rows))?;
    write_artifact(
        &args.out.join("toy_aggregate.csv"),
        &snapshot,
        &toy::aggregate_csv(&rows),
    )?;

    let ceiling = toy::theoretical_max_accuracy(cfg.a_f, cfg.n_fault_features)?;
    println!(
        "theoretical maximum accuracy: {:.4} (a_f = {}, n = {})",
        ceiling, cfg.a_f, cfg.n_fault_features
    );
    println!("wrote {}", args.out.join("toy_runs.csv").display());
    println!("wrote {}", args.out.join("toy_aggregate.csv").display());
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// split

#[derive(Args)]
struct SplitArgs {
    /// Manifest file.
    #[arg(long)]
    manifest: PathBuf,
    /// Output plan file.
    #[arg(long)]
    out: PathBuf,
    /// Generation family; defaults to the manifest's profile name.
    #[arg(long)]
    profile: Option<String>,
    /// Plan kind: bearing_wise (default), condition_wise,
    /// repetition_wise, or segmentation_level (leaky derivations).
    #[arg(long)]
    kind: Option<String>,
    /// Tuning plan count (for cwru: 6 selects the 3-fold tuning plans).
    #[arg(long)]
    tuning: Option<usize>,
    /// Evaluation plan count (for cwru: split count; 2 plans per split).
    #[arg(long)]
    eval: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-class train:test bearing ratio, e.g. 3:2 (generic generator;
    /// for cwru, train:test fault-size counts).
    #[arg(long)]
    ratio: Option<String>,
    /// Held-out tail fraction for segmentation_level plans.
    #[arg(long)]
    holdout_fraction: Option<f64>,
    /// Train:test repetitions for repetition_wise plans, e.g. 15:5.
    #[arg(long)]
    reps: Option<String>,
    /// Bearings excluded before class counting, comma-separated.
    #[arg(long)]
    exclude: Option<String>,
    /// JSON config file; fields override conflicting flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SplitCmdConfig {
    profile: String,
    kind: String,
    n_tuning: usize,
    n_eval: usize,
    seed: u64,
    ratio: Option<(usize, usize)>,
    holdout_fraction: f64,
    repetition_ratio: (usize, usize),
    exclusions: Vec<String>,
}

impl Default for SplitCmdConfig {
    fn default() -> Self {
        Self {
            profile: String::new(),
            kind: "bearing_wise".into(),
            n_tuning: 0,
            n_eval: 10,
            seed: 0,
            ratio: None,
            holdout_fraction: 0.2,
            repetition_ratio: (15, 5),
            exclusions: Vec::new(),
        }
    }
}

#[derive(Default, Deserialize)]
struct SplitCmdConfigPatch {
    profile: Option<String>,
    kind: Option<String>,
    n_tuning: Option<usize>,
    n_eval: Option<usize>,
    seed: Option<u64>,
    ratio: Option<(usize, usize)>,
    holdout_fraction: Option<f64>,
    repetition_ratio: Option<(usize, usize)>,
    exclusions: Option<Vec<String>>,
}

/// Generate the profile's bearing-wise tuning/eval plans.
fn generate_base_plans(
    dataset: &Dataset,
    cfg: &SplitCmdConfig,
) -> Result<(Vec<SplitPlan>, Vec<SplitPlan>)> {
    match (cfg.profile.as_str(), cfg.ratio) {
        ("uored", None) => splits::generate_uored_splits(dataset, cfg.n_tuning, cfg.n_eval, cfg.seed),
        ("pu", None) => splits::generate_pu_splits(dataset, cfg.n_tuning, cfg.n_eval, cfg.seed),
        ("cwru", ratio) => {
            let tuning = match cfg.n_tuning {
                0 => Vec::new(),
                6 => splits::generate_cwru_3fold(dataset, cfg.seed)?,
                n => {
                    return Err(Error::Config(format!(
                        "cwru tuning plans come from the 3-fold protocol: use --tuning 6, not {n}"
                    )))
                }
            };
            let n_test_sizes = ratio.map(|(_, t)| t).unwrap_or(1);
            let eval =
                splits::generate_cwru_splits_with_ratio(dataset, cfg.n_eval, cfg.seed, n_test_sizes)?;
            Ok((tuning, eval))
        }
        (_, Some(ratio)) => {
            splits::generate_bearing_wise_splits(dataset, ratio, cfg.n_tuning, cfg.n_eval, cfg.seed)
        }
        (other, None) => Err(Error::Config(format!(
            "profile '{other}' needs an explicit --ratio for the generic generator"
        ))),
    }
}

fn cmd_split(args: SplitArgs) -> Result<i32> {
    let mut dataset = datamodel::load_manifest(&args.manifest)?;

    let mut cfg = SplitCmdConfig {
        profile: dataset.profile.name.clone(),
        ..SplitCmdConfig::default()
    };
    let patch: SplitCmdConfigPatch = match &args.config {
        Some(path) => load_config_file(path)?,
        None => SplitCmdConfigPatch::default(),
    };
    let ratio_flag = args.ratio.as_deref().map(parse_ratio).transpose()?;
    let reps_flag = args.reps.as_deref().map(parse_ratio).transpose()?;
    let exclude_flag = args
        .exclude
        .as_deref()
        .map(|raw| parse_list(raw, |s| Ok(s.to_string())))
        .transpose()?;

    merge_field(&mut cfg.profile, args.profile, patch.profile, "profile");
    merge_field(&mut cfg.kind, args.kind, patch.kind, "kind");
    merge_field(&mut cfg.n_tuning, args.tuning, patch.n_tuning, "tuning");
    merge_field(&mut cfg.n_eval, args.eval, patch.n_eval, "eval");
    merge_field(&mut cfg.seed, args.seed, patch.seed, "seed");
    merge_field(&mut cfg.ratio, ratio_flag.map(Some), patch.ratio.map(Some), "ratio");
    merge_field(
        &mut cfg.holdout_fraction,
        args.holdout_fraction,
        patch.holdout_fraction,
        "holdout-fraction",
    );
    merge_field(&mut cfg.repetition_ratio, reps_flag, patch.repetition_ratio, "reps");
    merge_field(&mut cfg.exclusions, exclude_flag, patch.exclusions, "exclude");

    if !cfg.exclusions.is_empty() {
        let excluded: BTreeSet<&str> = cfg.exclusions.iter().map(String::as_str).collect();
        dataset.records.retain(|r| !excluded.contains(r.bearing_id.as_str()));
        if dataset.records.is_empty() {
            return Err(Error::Split("exclusions removed every acquisition".into()));
        }
    }

    let kind = SplitKind::parse(&cfg.kind)?;
    let (tuning, eval) = generate_base_plans(&dataset, &cfg)?;

    let plans: Vec<SplitPlan> = match kind {
        SplitKind::BearingWise => tuning.into_iter().chain(eval).collect(),
        leaky_kind => {
            // leaky derivation from each eval plan
            let mode = match (leaky_kind, cfg.profile.as_str()) {
                (SplitKind::SegmentationLevel, _) => LeakyMode::Segmentation {
                    holdout_fraction: cfg.holdout_fraction,
                },
                (SplitKind::ConditionWise, "uored") => LeakyMode::UoredSevereReinsertion,
                (SplitKind::ConditionWise, "cwru") => LeakyMode::CwruConditionGroups,
                (SplitKind::ConditionWise, _) => LeakyMode::PuConditionHoldout,
                (SplitKind::RepetitionWise, _) => LeakyMode::PuRepetitionHoldout {
                    train_reps: cfg.repetition_ratio.0,
                    test_reps: cfg.repetition_ratio.1,
                },
                (SplitKind::BearingWise, _) => unreachable!(),
            };
            eval.iter()
                .enumerate()
                .map(|(i, base)| {
                    splits::generate_leaky_plan(&dataset, base, &mode, cfg.seed.wrapping_add(i as u64))
                })
                .collect::<Result<_>>()?
        }
    };

    let snapshot = snapshot_line(&cfg)?;
    write_artifact(&args.out, &snapshot, &datamodel::plans_to_string(&plans))?;
    println!("wrote {} plans to {}", plans.len(), args.out.display());
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// audit

#[derive(Args)]
struct AuditArgs {
    /// Manifest file.
    #[arg(long)]
    manifest: PathBuf,
    /// Plan file to audit (may hold several plans).
    #[arg(long)]
    plan: PathBuf,
    /// Audit only this plan id.
    #[arg(long)]
    plan_id: Option<String>,
}

fn cmd_audit(args: AuditArgs) -> Result<i32> {
    let dataset = datamodel::load_manifest(&args.manifest)?;
    let mut plans = read_plan_file(&args.plan)?;
    if let Some(id) = &args.plan_id {
        plans.retain(|p| &p.plan_id == id);
        if plans.is_empty() {
            return Err(Error::Split(format!("no plan '{id}' in {}", args.plan.display())));
        }
    }

    let mut worst = splits::FindingClass::BearingWiseClean;
    for plan in &plans {
        let finding = splits::audit_split(plan, &dataset)?;
        println!(
            "plan {}: {} (declared {})",
            plan.plan_id, finding.class, plan.declared_kind
        );
        for witness in &finding.witnesses {
            println!("  witness: {witness}");
        }
        if finding.total_witnesses > finding.witnesses.len() {
            println!(
                "  ... and {} more",
                finding.total_witnesses - finding.witnesses.len()
            );
        }
        worst = worst.min(finding.class);
    }

    Ok(match worst {
        splits::FindingClass::BearingWiseClean => EXIT_OK,
        splits::FindingClass::ConditionWise => EXIT_AUDIT_CONDITION,
        splits::FindingClass::RepetitionWise => EXIT_AUDIT_REPETITION,
        splits::FindingClass::SegmentationLevel => EXIT_AUDIT_SEGMENTATION,
    })
}

/// Plan files may carry a leading snapshot comment; skip `#` lines.
fn read_plan_file(path: &Path) -> Result<Vec<SplitPlan>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Split(format!("cannot read {}: {e}", path.display())))?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    datamodel::plans_from_str(&body)
}

// ---------------------------------------------------------------------------
// features

#[derive(Args)]
struct FeaturesArgs {
    /// Manifest file.
    #[arg(long)]
    manifest: PathBuf,
    /// Plan file.
    #[arg(long)]
    plan: PathBuf,
    /// Plan id to extract (default: the file's first plan).
    #[arg(long)]
    plan_id: Option<String>,
    /// Output directory for features_train.csv / features_test.csv.
    #[arg(long)]
    out: PathBuf,
    /// Envelope band LOW:HIGH in Hz (default from the sampling rate).
    #[arg(long)]
    band: Option<String>,
    /// JSON config file; fields override conflicting flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeaturesCmdConfig {
    plan_id: String,
    band_low_hz: f64,
    band_high_hz: f64,
}

#[derive(Default, Deserialize)]
struct FeaturesCmdConfigPatch {
    plan_id: Option<String>,
    band_low_hz: Option<f64>,
    band_high_hz: Option<f64>,
}

fn cmd_features(args: FeaturesArgs) -> Result<i32> {
    let dataset = datamodel::load_manifest(&args.manifest)?;
    let plans = read_plan_file(&args.plan)?;
    let first_id = plans
        .first()
        .map(|p| p.plan_id.clone())
        .ok_or_else(|| Error::Split(format!("{}: no plans", args.plan.display())))?;

    let band = default_band(&dataset);
    let mut cfg = FeaturesCmdConfig {
        plan_id: first_id,
        band_low_hz: band.0,
        band_high_hz: band.1,
    };
    let patch: FeaturesCmdConfigPatch = match &args.config {
        Some(path) => load_config_file(path)?,
        None => FeaturesCmdConfigPatch::default(),
    };
    let band_flag = args.band.as_deref().map(parse_band).transpose()?;
    merge_field(&mut cfg.plan_id, args.plan_id, patch.plan_id, "plan-id");
    merge_field(&mut cfg.band_low_hz, band_flag.map(|b| b.0), patch.band_low_hz, "band");
    merge_field(&mut cfg.band_high_hz, band_flag.map(|b| b.1), patch.band_high_hz, "band");

    let plan = plans
        .iter()
        .find(|p| p.plan_id == cfg.plan_id)
        .ok_or_else(|| Error::Split(format!("no plan '{}' in {}", cfg.plan_id, args.plan.display())))?;

    let tables = features::extract_feature_table(&dataset, plan, cfg.band_low_hz, cfg.band_high_hz)?;
    for (id, err) in &tables.errors {
        eprintln!("warning: {id}: {err}");
    }

    let snapshot = snapshot_line(&cfg)?;
    let header = features::csv_header(&dataset.profile);
    for (name, rows) in [("features_train.csv", &tables.train), ("features_test.csv", &tables.test)] {
        let mut body = String::with_capacity(rows.len() * 180 + header.len() + 1);
        body.push_str(&header);
        body.push('\n');
        for row in rows {
            body.push_str(&features::csv_line(row));
            body.push('\n');
        }
        write_artifact(&args.out.join(name), &snapshot, &body)?;
    }
    println!(
        "wrote {} train rows, {} test rows to {}",
        tables.train.len(),
        tables.test.len(),
        args.out.display()
    );
    if tables.errors.is_empty() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_SIGNAL)
    }
}

// ---------------------------------------------------------------------------
// run

#[derive(Args)]
struct RunArgs {
    /// Manifest file.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Tuning plan file (optional; skips generation).
    #[arg(long)]
    tuning_plans: Option<PathBuf>,
    /// Evaluation plan file (optional; skips generation).
    #[arg(long)]
    eval_plans: Option<PathBuf>,
    /// Model kinds forming the grid, comma-separated.
    #[arg(long)]
    models: Option<String>,
    /// Input representation: time_features, frequency_features,
    /// envelope_features, combined.
    #[arg(long)]
    representation: Option<String>,
    /// Envelope band LOW:HIGH in Hz.
    #[arg(long)]
    band: Option<String>,
    /// Tuning plans to generate when --tuning-plans is absent.
    #[arg(long)]
    tuning: Option<usize>,
    /// Evaluation plans to generate when --eval-plans is absent.
    #[arg(long)]
    eval: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the outer loop (0 = default).
    #[arg(long)]
    workers: Option<usize>,
    /// JSON config file; fields override conflicting flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunCmdConfig {
    models: Vec<String>,
    representation: String,
    band_low_hz: f64,
    band_high_hz: f64,
    n_tuning: usize,
    n_eval: usize,
    seed: u64,
}

#[derive(Default, Deserialize)]
struct RunCmdConfigPatch {
    models: Option<Vec<String>>,
    representation: Option<String>,
    band_low_hz: Option<f64>,
    band_high_hz: Option<f64>,
    n_tuning: Option<usize>,
    n_eval: Option<usize>,
    seed: Option<u64>,
}

/// Summary artifact of a `run` invocation.
#[derive(Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    /// Windowing applied before magnitude spectra (none).
    pub fft_window: String,
    pub config: serde_json::Value,
    pub selected_spec: ModelSpec,
    pub tuning_mean_by_spec: Vec<Option<f64>>,
    pub tuning_table: Vec<eval::TuningRow>,
    pub report: eval::ExperimentReport,
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let dataset = datamodel::load_manifest(&args.manifest)?;
    let band = default_band(&dataset);
    let mut cfg = RunCmdConfig {
        models: vec!["random_forest".into()],
        representation: "combined".into(),
        band_low_hz: band.0,
        band_high_hz: band.1,
        n_tuning: if dataset.profile.name == "cwru" { 6 } else { 5 },
        n_eval: 100,
        seed: 0,
    };
    let patch: RunCmdConfigPatch = match &args.config {
        Some(path) => load_config_file(path)?,
        None => RunCmdConfigPatch::default(),
    };
    let models_flag = args
        .models
        .as_deref()
        .map(|raw| parse_list(raw, |s| Ok(s.to_string())))
        .transpose()?;
    let band_flag = args.band.as_deref().map(parse_band).transpose()?;
    merge_field(&mut cfg.models, models_flag, patch.models, "models");
    merge_field(&mut cfg.representation, args.representation, patch.representation, "representation");
    merge_field(&mut cfg.band_low_hz, band_flag.map(|b| b.0), patch.band_low_hz, "band");
    merge_field(&mut cfg.band_high_hz, band_flag.map(|b| b.1), patch.band_high_hz, "band");
    merge_field(&mut cfg.n_tuning, args.tuning, patch.n_tuning, "tuning");
    merge_field(&mut cfg.n_eval, args.eval, patch.n_eval, "eval");
    merge_field(&mut cfg.seed, args.seed, patch.seed, "seed");
    // worker count is an execution resource, not experiment semantics:
    // it never enters the snapshot and never changes output bytes
    let workers = args.workers.unwrap_or(0);

    if cfg.models.is_empty() {
        return Err(Error::Config("empty model grid".into()));
    }
    let representation = Representation::parse(&cfg.representation)?;

    // plans: from files when given, otherwise generated for the profile
    let make_cfg = |n_tuning: usize, n_eval: usize| SplitCmdConfig {
        profile: dataset.profile.name.clone(),
        n_tuning,
        n_eval,
        seed: cfg.seed,
        ..SplitCmdConfig::default()
    };
    let (tuning, eval_plans) = match (&args.tuning_plans, &args.eval_plans) {
        (Some(t), Some(e)) => (read_plan_file(t)?, read_plan_file(e)?),
        (None, None) => generate_base_plans(&dataset, &make_cfg(cfg.n_tuning, cfg.n_eval))?,
        (Some(t), None) => {
            let (_, e) = generate_base_plans(&dataset, &make_cfg(0, cfg.n_eval))?;
            (read_plan_file(t)?, e)
        }
        (None, Some(e)) => {
            let (t, _) = generate_base_plans(&dataset, &make_cfg(cfg.n_tuning, 0))?;
            (t, read_plan_file(e)?)
        }
    };

    let mut grid = Vec::new();
    for name in &cfg.models {
        grid.extend(grids::default_grid(ModelKind::parse(name)?, cfg.seed));
    }

    let pipeline = PipelineConfig {
        representation,
        band_low_hz: cfg.band_low_hz,
        band_high_hz: cfg.band_high_hz,
        workers,
        train_repeat: 1,
    };
    let store = FeatureStore::new(&dataset, pipeline.band_low_hz, pipeline.band_high_hz);

    let cvm = eval::run_cvm(&grid, &tuning, &store, &pipeline)?;
    for (si, plan_id, err) in &cvm.failures {
        eprintln!("warning: tuning spec {si} on {plan_id}: {err}");
    }
    println!(
        "selected {} (tuning macro AUROC {:.4})",
        cvm.selected.kind.name(),
        cvm.mean_by_spec[cvm.selected_index].unwrap_or(f64::NAN)
    );

    let snapshot_value = serde_json::to_value(&cfg)?;
    let report = eval::run_cv(
        &cvm.selected,
        &eval_plans,
        &tuning,
        &store,
        &pipeline,
        snapshot_value.clone(),
    )?;
    println!(
        "evaluation: {} plans, macro AUROC {:.4} +/- {:.4}",
        report.aggregate.n_runs, report.aggregate.mean_macro_auroc, report.aggregate.std_macro_auroc
    );

    let snapshot = snapshot_line(&cfg)?;
    write_artifact(&args.out.join("per_run.csv"), &snapshot, &report.per_run_csv())?;
    write_artifact(&args.out.join("aggregate.csv"), &snapshot, &report.aggregate_csv())?;
    let summary = RunSummary {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        fft_window: "rectangular".to_string(),
        config: snapshot_value,
        selected_spec: cvm.selected.clone(),
        tuning_mean_by_spec: cvm.mean_by_spec.clone(),
        tuning_table: cvm.table.clone(),
        report: report.clone(),
    };
    fs::create_dir_all(&args.out)?;
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!("wrote {}", args.out.join("summary.json").display());

    if report.failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        for f in &report.failures {
            eprintln!("failed plan {}: {}", f.plan_id, f.error);
        }
        Ok(EXIT_EVAL)
    }
}

// ---------------------------------------------------------------------------
// report

#[derive(Args)]
struct ReportArgs {
    /// summary.json written by `run`.
    #[arg(long)]
    summary: PathBuf,
    /// Print every per-run row.
    #[arg(long)]
    per_run: bool,
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.summary)?;
    let summary: RunSummary = serde_json::from_str(&text)?;
    let a = &summary.report.aggregate;
    println!("tool version: {}", summary.tool_version);
    println!(
        "selected: {} seed={} {:?}",
        summary.selected_spec.kind.name(),
        summary.selected_spec.seed,
        summary.selected_spec.hyperparameters
    );
    println!(
        "aggregate: {} x {} -> macro AUROC {:.4} +/- {:.4} over {} runs",
        a.model, a.representation, a.mean_macro_auroc, a.std_macro_auroc, a.n_runs
    );
    if !summary.report.failures.is_empty() {
        println!("failures: {}", summary.report.failures.len());
        for f in &summary.report.failures {
            println!("  {}: {}", f.plan_id, f.error);
        }
    }
    if args.per_run {
        print!("{}", summary.report.per_run_csv());
    }
    Ok(EXIT_OK)
}
