//! gramkit CLI: score prediction files, generate synthetic fixtures, and
//! run grounded-decode demonstrations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gramkit::datamodel::ScenarioCategory;
use gramkit::grounding::{BoundaryRule, GroundingConfig};
use gramkit::harness::{
    cmd_demo, cmd_eval, cmd_gen, DemoConfig, HarnessError, OutputFormat, RunManifest, SyntheticSpec,
};
use gramkit::metrics::ThresholdConfig;
use gramkit::toyvlm::ModelConfig;

#[derive(Parser)]
#[command(
    name = "gramkit",
    version,
    about = "Grounded-reasoning evaluation and decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a prediction file against a benchmark and emit per-category reports
    Eval(EvalArgs),
    /// Generate a synthetic benchmark and prediction file with exact target rates
    Gen(GenArgs),
    /// Run grounded decoding on synthetic frames and dump the step trace
    Demo(DemoArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Benchmark document (JSON array of instances)
    #[arg(long)]
    benchmark: PathBuf,
    /// Prediction file (one JSON record per line)
    #[arg(long)]
    predictions: PathBuf,
    /// IoU thresholds
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5])]
    tau: Vec<f64>,
    /// Temporal windows in seconds
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 4.0, 6.0])]
    delta: Vec<f64>,
    /// Restrict scoring to these categories (labels like person_gr)
    #[arg(long = "category", value_delimiter = ',')]
    categories: Vec<String>,
    /// Report format
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output directory for report files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Promote unmatched prediction ids to an error (exit 3)
    #[arg(long)]
    strict: bool,
    /// Scoring worker threads; results are identical at any count
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Show every configured threshold for every category
    #[arg(long)]
    full_thresholds: bool,
    /// Recorded in the manifest; scoring itself is deterministic
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for benchmark.json and predictions.jsonl
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Instances per category
    #[arg(long, default_value_t = 5)]
    count: usize,
    /// Restrict generation to these categories
    #[arg(long = "category", value_delimiter = ',')]
    categories: Vec<String>,
    /// Target fraction of spatial predictions with an in-interval time
    #[arg(long = "t-acc", default_value_t = 1.0)]
    t_acc: f64,
    /// Target accuracy per threshold, as TAU=FRACTION (e.g. 0.25=0.4)
    #[arg(long = "acc", value_delimiter = ',')]
    acc: Vec<String>,
    /// Target fraction of temporal predictions with a correct label
    #[arg(long = "action-acc", default_value_t = 1.0)]
    action_acc: f64,
    /// Start-time deviations cycled over temporal predictions
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    deviations: Vec<f64>,
}

#[derive(Args)]
struct DemoArgs {
    /// Model config file (JSON); defaults are used when absent
    #[arg(long)]
    model_config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    frames: usize,
    #[arg(long, default_value_t = 2.0)]
    fps: f64,
    #[arg(
        long,
        default_value = "What is happening in the video? Think step by step."
    )]
    question: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Video tokens selected per reasoning step
    #[arg(long, default_value_t = 64)]
    n_select: usize,
    /// Interleave explicit timestamp tokens (default on)
    #[arg(long, overrides_with = "no_ett")]
    ett: bool,
    #[arg(long)]
    no_ett: bool,
    /// Keep grounding blocks from previous steps appended
    #[arg(long)]
    cumulative: bool,
    /// Plain greedy decode only, no grounding and no trace file
    #[arg(long)]
    no_gram: bool,
    #[arg(long, default_value_t = 24)]
    max_new: usize,
    /// Output directory for the trace file
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_categories(labels: &[String]) -> Result<Option<Vec<ScenarioCategory>>, HarnessError> {
    if labels.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for label in labels {
        let cat = ScenarioCategory::from_label(label).ok_or_else(|| {
            HarnessError::Usage(format!(
                "unknown category {label:?}; expected one of person_gr, object_gr, person_object_gr, hand_object_gr, temporal_gr"
            ))
        })?;
        out.push(cat);
    }
    Ok(Some(out))
}

fn parse_acc_targets(specs: &[String]) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut out = Vec::new();
    for s in specs {
        let (tau, frac) = s
            .split_once('=')
            .ok_or_else(|| HarnessError::Usage(format!("--acc expects TAU=FRACTION, got {s:?}")))?;
        let tau: f64 = tau
            .trim()
            .parse()
            .map_err(|_| HarnessError::Usage(format!("bad threshold in --acc {s:?}")))?;
        let frac: f64 = frac
            .trim()
            .parse()
            .map_err(|_| HarnessError::Usage(format!("bad fraction in --acc {s:?}")))?;
        out.push((tau, frac));
    }
    Ok(out)
}

/// GRAMKIT_SEED overrides --seed for every subcommand when set.
fn env_seed() -> Result<Option<u64>, HarnessError> {
    match std::env::var("GRAMKIT_SEED") {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| HarnessError::Usage(format!("GRAMKIT_SEED={raw:?} is not an integer"))),
        Err(_) => Ok(None),
    }
}

fn run_eval(args: EvalArgs) -> Result<(), HarnessError> {
    let format = OutputFormat::parse(&args.format).ok_or_else(|| {
        HarnessError::Usage(format!(
            "unknown format {:?}; expected csv, markdown, or structured",
            args.format
        ))
    })?;
    let manifest = RunManifest {
        benchmark_path: args.benchmark,
        predictions_path: args.predictions,
        thresholds: ThresholdConfig::new(&args.tau, &args.delta)?,
        categories: parse_categories(&args.categories)?,
        format,
        out_dir: args.out,
        strict: args.strict,
        workers: args.workers.max(1),
        full_thresholds: args.full_thresholds,
        seed: args.seed.unwrap_or(0),
    };
    let summary = cmd_eval(&manifest)?;
    for id in &summary.unmatched_ids {
        eprintln!("warning: prediction for unknown instance id {id:?}");
    }
    for text in &summary.rendered {
        print!("{text}");
    }
    for path in &summary.files {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run_gen(args: GenArgs, seed_override: Option<u64>) -> Result<(), HarnessError> {
    let mut spec = SyntheticSpec {
        seed: seed_override.or(args.seed).unwrap_or(0),
        per_category: args.count,
        t_acc: args.t_acc,
        action_acc: args.action_acc,
        deviations: args.deviations,
        ..SyntheticSpec::default()
    };
    if let Some(categories) = parse_categories(&args.categories)? {
        spec.categories = categories;
    }
    if !args.acc.is_empty() {
        spec.acc_targets = parse_acc_targets(&args.acc)?;
    }
    let (bench, preds) = cmd_gen(&spec, &args.out)?;
    println!("wrote {}", bench.display());
    println!("wrote {}", preds.display());
    Ok(())
}

fn run_demo(args: DemoArgs, seed_override: Option<u64>) -> Result<(), HarnessError> {
    let mut model = match &args.model_config {
        Some(path) => ModelConfig::load(path)?,
        None => ModelConfig::default(),
    };
    if let Some(seed) = seed_override.or(args.seed) {
        model.seed = seed;
    }
    let cfg = DemoConfig {
        model,
        n_frames: args.frames,
        fps: args.fps,
        question: args.question,
        grounding: GroundingConfig {
            n_select: args.n_select,
            boundary_rule: BoundaryRule::AfterFullStop,
            cumulative: args.cumulative,
        },
        ett: !args.no_ett,
        gram: !args.no_gram,
        max_new: args.max_new,
        out_dir: Some(args.out),
    };
    let out = cmd_demo(&cfg)?;
    for line in out.summary_lines() {
        println!("{line}");
    }
    if let Some(path) = &out.trace_path {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    let seed_override = env_seed()?;
    match cli.command {
        Command::Eval(mut args) => {
            if let Some(seed) = seed_override {
                args.seed = Some(seed);
            }
            run_eval(args)
        }
        Command::Gen(args) => run_gen(args, seed_override),
        Command::Demo(args) => run_demo(args, seed_override),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
