//! `it2fnn`: command-line front end for the gait classifier.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use pd_it2fnn::evaluation::Grouping;
use pd_it2fnn::gait_features::{ExtractConfig, DEFAULT_SWING_THRESHOLD_N};
use pd_it2fnn::learning::{BatchConfig, OnlineConfig};
use pd_it2fnn::preprocess::PreprocessConfig;
use pd_it2fnn::Dataset;

#[derive(Parser, Debug)]
#[command(name = "it2fnn", version, about = "Interval type-2 fuzzy neural network for Parkinson's gait classification")]
struct Cli {
    /// Log at debug level.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn a directory of vGRF recordings into a feature CSV.
    Extract(ExtractArgs),
    /// Batch-train a rule base on a feature CSV.
    Train(TrainArgs),
    /// Classify the rows of a feature CSV with a trained model.
    Predict(PredictArgs),
    /// Leave-one-out cross-validation.
    Crossval(CrossvalArgs),
    /// Stream labelled samples through online rule learning.
    Update(UpdateArgs),
    /// Cross-validated F1 over a range of rule counts.
    SweepRules(SweepArgs),
    /// Compare interval type-2 and type-1 inference on noisy inputs.
    NoiseExp(NoiseArgs),
    /// Export fuzzy-set curves and the rule grid of a model.
    ExportRules(ExportArgs),
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    /// Seconds trimmed from each end of a walk.
    #[arg(long, default_value_t = 20.0)]
    trim_s: f64,
    /// Median filter window in samples.
    #[arg(long, default_value_t = 10)]
    median_window: usize,
    /// Stride-duration outlier cut-off in scaled MADs.
    #[arg(long, default_value_t = 3.0)]
    turnaround_k: f64,
    /// Keep turnaround strides.
    #[arg(long)]
    no_turnaround_removal: bool,
    /// Force below which a foot counts as airborne (N).
    #[arg(long, default_value_t = DEFAULT_SWING_THRESHOLD_N)]
    swing_threshold_n: f64,
}

impl PreprocessArgs {
    fn config(&self) -> ExtractConfig {
        ExtractConfig {
            preprocess: PreprocessConfig {
                trim_s: self.trim_s,
                median_window: self.median_window,
                turnaround_mad_k: self.turnaround_k,
                remove_turnarounds: !self.no_turnaround_removal,
                swing_threshold_n: self.swing_threshold_n,
            },
            swing_threshold_n: self.swing_threshold_n,
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Lower membership width.
    #[arg(long, default_value_t = 0.01)]
    sigma1: f64,
    /// Upper membership width.
    #[arg(long, default_value_t = 0.1)]
    sigma2: f64,
    /// FCM fuzzifier.
    #[arg(long, default_value_t = 2.0)]
    fcm_m: f64,
    /// FCM stopping tolerance on the largest centre shift.
    #[arg(long, default_value_t = 1e-5)]
    fcm_tol: f64,
    #[arg(long, default_value_t = 300)]
    fcm_max_iter: usize,
    /// Seed for FCM initialisation.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl FitArgs {
    fn config(&self, rules: usize) -> BatchConfig {
        BatchConfig {
            rules,
            sigma_1: self.sigma1,
            sigma_2: self.sigma2,
            m: self.fcm_m,
            tol: self.fcm_tol,
            max_iter: self.fcm_max_iter,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct FeatureInput {
    /// Feature CSV written by `extract`.
    #[arg(long)]
    features: PathBuf,
    /// Keep only these datasets (comma separated: Ga,Ju,Si).
    #[arg(long, value_delimiter = ',')]
    dataset: Vec<Dataset>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Directory holding the recordings.
    #[arg(long)]
    data_dir: PathBuf,
    /// Feature CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV with all fourteen raw features per recording.
    #[arg(long)]
    raw_out: Option<PathBuf>,
    /// Only load these datasets (comma separated).
    #[arg(long, value_delimiter = ',')]
    dataset: Vec<Dataset>,
    /// `subject_id,cohort,dataset` CSV overriding file-name labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    preprocess: PreprocessArgs,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    input: FeatureInput,
    /// Number of rules.
    #[arg(long, default_value_t = 8)]
    rules: usize,
    #[command(flatten)]
    fit: FitArgs,
    /// Model JSON to write.
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: FeatureInput,
    /// Include the ranked rule explanation for every row.
    #[arg(long)]
    explain: bool,
    /// JSON file to write instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[command(flatten)]
    input: FeatureInput,
    #[arg(long, default_value_t = 8)]
    rules: usize,
    /// Hold out whole subjects or single records.
    #[arg(long, default_value = "subject")]
    group_by: Grouping,
    #[command(flatten)]
    fit: FitArgs,
    /// Metrics CSV (overall and per dataset).
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Per-record predictions CSV.
    #[arg(long)]
    predictions_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct UpdateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: FeatureInput,
    /// Coverage threshold below which a misclassified sample adds a rule.
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    /// Width scale of added rules.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long)]
    model_out: PathBuf,
    /// Write the change log here as well as to stdout.
    #[arg(long)]
    changelog_out: Option<PathBuf>,
}

impl UpdateArgs {
    fn config(&self) -> OnlineConfig {
        OnlineConfig { theta_c: self.theta, epsilon: self.epsilon, ..OnlineConfig::default() }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    input: FeatureInput,
    #[arg(long, default_value_t = 1)]
    min_rules: usize,
    #[arg(long, default_value_t = 12)]
    max_rules: usize,
    /// Seeds per rule count, starting at `--seed`.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value = "subject")]
    group_by: Grouping,
    #[command(flatten)]
    fit: FitArgs,
    /// Summary CSV (`rules,mean_f1,std_f1,recommended`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Long-format CSV with one line per rule count and seed.
    #[arg(long)]
    long_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    #[command(flatten)]
    input: FeatureInput,
    #[arg(long, default_value_t = 10)]
    rules: usize,
    /// Noise standard deviations (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3")]
    noise: Vec<f64>,
    /// Seed of the noise generator.
    #[arg(long, default_value_t = 42)]
    noise_seed: u64,
    #[arg(long, default_value = "subject")]
    group_by: Grouping,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).multiple(true)))]
pub struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Fuzzy-set curves CSV.
    #[arg(long, group = "target")]
    sets_out: Option<PathBuf>,
    /// Rule grid CSV.
    #[arg(long, group = "target")]
    grid_out: Option<PathBuf>,
    /// Points per curve on [0, 1].
    #[arg(long, default_value_t = pd_it2fnn::rule_report::DEFAULT_CURVE_SAMPLES)]
    samples: usize,
}

/// The error chain on one line, skipping causes already quoted by their
/// parent's message.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Info })
        .parse_default_env()
        .init();

    let result = match &cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Crossval(a) => commands::crossval(a),
        Command::Update(a) => commands::update(a),
        Command::SweepRules(a) => commands::sweep(a),
        Command::NoiseExp(a) => commands::noise(a),
        Command::ExportRules(a) => commands::export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            let usage = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<pd_it2fnn::Error>(), Some(pd_it2fnn::Error::Config(_))));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
