//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use feedfx_core::optim::Hyperparams;
use feedfx_core::synth::SynthConfig;

use crate::config::{pick, pick_opt, FileConfig, Mode};
use crate::error::CliError;
use crate::formats::FeedbackColumnKind;
use crate::ingest::IngestSettings;
use crate::runner;

const DATA_SCHEMAS: &str = "\
DATA SCHEMAS:
  posts file  (--posts, .csv or .jsonl): columns/keys
      post_id     unique opaque identifier
      user_id     opaque author identifier
      timestamp   integer epoch seconds
      topic_id    integer topic label
      feedback_count  optional precomputed feedback for this post,
                      counted before the author's next post (generic mode)
  feedback file (--feedback, .csv or .jsonl): columns/keys
      post_id     post receiving the feedback
      timestamp   integer epoch seconds
  Feedback events are censored at the author's next post: only feedback
  that arrived strictly before it contributes to a sample.

EXIT CODES: 0 success, 2 usage error, 3 data error, 4 numerical failure.";

#[derive(Debug, Parser)]
#[command(
    name = "feedfx",
    version,
    about = "Estimates how community feedback affects an author's decision to \
             continue their previous post's topic",
    after_help = DATA_SCHEMAS,
    propagate_version = true
)]
pub struct CliArgs {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for bootstrap replicates (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic event log with known ground truth.
    Synth(SynthArgs),
    /// Fit the continuation model and write its parameters.
    Fit(FitArgs),
    /// Bootstrap holdout evaluation (one row per feature configuration).
    Evaluate(EvaluateArgs),
    /// Per-user susceptibility classes, intervals, and probability gains.
    Susceptibility(SusceptibilityArgs),
    /// Per-topic daily trend estimates with significance marking.
    Trends(TrendsArgs),
    /// Merge evaluation and susceptibility artifacts into one summary.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Posts file (.csv, .jsonl, or .ndjson).
    #[arg(long, value_name = "FILE")]
    pub posts: Option<PathBuf>,
    /// Timestamped feedback events file.
    #[arg(long, value_name = "FILE")]
    pub feedback: Option<PathBuf>,
    /// Platform conventions: thread filtering and feedback sourcing.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Remove users with fewer posts than this.
    #[arg(long)]
    pub min_posts: Option<usize>,
    /// Drop posts following their predecessor within this many seconds
    /// (0 disables; default 30 in twitter mode, off otherwise).
    #[arg(long)]
    pub thread_gap_seconds: Option<i64>,
    /// Interpretation of the posts file's feedback_count column.
    #[arg(long, value_enum)]
    pub feedback_column: Option<FeedbackColumnKind>,
}

impl IngestArgs {
    fn resolve(&self, file: &FileConfig) -> Result<IngestSettings, CliError> {
        let posts = pick_opt(self.posts.clone(), file.posts.clone())
            .ok_or_else(|| CliError::usage("--posts is required"))?;
        Ok(IngestSettings {
            posts,
            feedback: pick_opt(self.feedback.clone(), file.feedback.clone()),
            mode: pick(self.mode, file.mode, Mode::Generic),
            min_posts: pick(self.min_posts, file.min_posts, 50),
            thread_gap_seconds: pick_opt(self.thread_gap_seconds, file.thread_gap_seconds),
            feedback_column: pick(
                self.feedback_column,
                file.feedback_column,
                FeedbackColumnKind::Counts,
            ),
        })
    }
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// L1 strength on propensities and the preference weight.
    #[arg(long)]
    pub beta_u: Option<f64>,
    /// L2 smoothness strength on the topic trend.
    #[arg(long)]
    pub beta_g: Option<f64>,
    /// Relative objective-change convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl HyperArgs {
    fn resolve(&self, file: &FileConfig) -> Hyperparams {
        let d = Hyperparams::default();
        Hyperparams {
            beta_u: pick(self.beta_u, file.beta_u, d.beta_u),
            beta_g: pick(self.beta_g, file.beta_g, d.beta_g),
            tol: pick(self.tol, file.tol, d.tol),
            max_iters: pick(self.max_iters, file.max_iters, d.max_iters),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// paper-c1 (confounded feedback) or paper-c0 (independent feedback).
    #[arg(long)]
    pub preset: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_users: Option<usize>,
    #[arg(long)]
    pub duration_days: Option<f64>,
    #[arg(long)]
    pub min_posts: Option<usize>,
    /// Confounding coefficient linking feedback to the topic trend.
    #[arg(long)]
    pub confound: Option<f64>,
    /// Fraction of users with susceptibility 1 instead of 0.
    #[arg(long)]
    pub susceptible_fraction: Option<f64>,
    /// Output posts CSV (ingestible with --mode generic
    /// --feedback-column direct --feedback-fn identity).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Output ground-truth JSON.
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Comma-separated model components: prop,pref,trend,feedback.
    #[arg(long)]
    pub features: Option<String>,
    /// Feedback function: n, logn, pn, r, logr, pr, or identity.
    #[arg(long)]
    pub feedback_fn: Option<String>,
    /// Per-user holdout excluded from training (0 trains on everything).
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Pick beta_u/beta_g by holdout-accuracy grid search first.
    #[arg(long)]
    pub grid_search: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output parameters JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Optional objective-trace CSV for diagnostics.
    #[arg(long, value_name = "FILE")]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Feature configuration to evaluate; repeat for an ablation table.
    #[arg(long)]
    pub features: Vec<String>,
    #[arg(long)]
    pub feedback_fn: Option<String>,
    /// Bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Test samples held out per user (their final ones).
    #[arg(long)]
    pub holdout: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output report JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Write the fitted ensemble (single --features only).
    #[arg(long, value_name = "FILE")]
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SusceptibilityArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Point-fit parameters JSON (from `fit`).
    #[arg(long, value_name = "FILE")]
    pub params: PathBuf,
    /// Bootstrap ensemble JSON (from `evaluate --ensemble-out`).
    #[arg(long, value_name = "FILE")]
    pub ensemble: PathBuf,
    /// Confidence level for the susceptibility intervals.
    #[arg(long)]
    pub level: Option<f64>,
    /// Intervention feedback value for the "extreme" arm.
    #[arg(long)]
    pub f_hi: Option<f64>,
    /// Intervention feedback value for the "median" arm.
    #[arg(long)]
    pub f_lo: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output per-user CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrendsArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[arg(long, value_name = "FILE")]
    pub ensemble: PathBuf,
    /// Confidence level for the per-day trend intervals.
    #[arg(long)]
    pub level: Option<f64>,
    /// Minimum run length (days) for significance marking.
    #[arg(long)]
    pub min_run: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output per-topic daily CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation report JSON to embed.
    #[arg(long, value_name = "FILE")]
    pub evaluation: Option<PathBuf>,
    /// Susceptibility CSV to summarize.
    #[arg(long, value_name = "FILE")]
    pub susceptibility: Option<PathBuf>,
    /// Synthetic ground truth; adds detection accuracy.
    #[arg(long, value_name = "FILE")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output summary JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run(args: CliArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    if let Some(threads) = args.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    match args.command {
        Command::Synth(a) => {
            let seed = pick(a.seed, file.seed, 0);
            let mut synth = match a.preset.as_str() {
                "paper-c1" => SynthConfig::confounded_preset(seed),
                "paper-c0" => SynthConfig::uncorrelated_preset(seed),
                other => {
                    return Err(CliError::usage(format!(
                        "unknown preset `{other}` (expected paper-c1 or paper-c0)"
                    )))
                }
            };
            if let Some(n) = a.n_users {
                synth.n_users = n;
            }
            if let Some(d) = a.duration_days {
                synth.duration_days = d;
            }
            if let Some(m) = a.min_posts {
                synth.min_posts = m;
            }
            if let Some(c) = a.confound {
                synth.confound = c;
            }
            if let Some(f) = a.susceptible_fraction {
                synth.susceptible_fraction = f;
            }
            runner::run_synth(&runner::SynthSettings {
                preset: a.preset,
                synth,
                out: a.out,
                truth_out: a.truth,
            })
        }
        Command::Fit(a) => {
            let settings = runner::FitSettings {
                ingest: a.ingest.resolve(&file)?,
                features: pick(
                    a.features,
                    file.features.as_ref().map(|f| f.join(",")),
                    "prop,pref,trend,feedback".to_string(),
                ),
                feedback_fn: pick(a.feedback_fn, file.feedback_fn.clone(), "pr".to_string()),
                hyper: a.hyper.resolve(&file),
                grid_search: a.grid_search,
                holdout: pick(a.holdout, file.holdout, feedfx_core::eval::DEFAULT_HOLDOUT),
                seed: pick(a.seed, file.seed, 0),
                out: a.out,
                trace_out: a.trace_out,
            };
            runner::run_fit(&settings)
        }
        Command::Evaluate(a) => {
            let features = if a.features.is_empty() {
                file.features
                    .clone()
                    .unwrap_or_else(|| vec!["prop,pref,trend,feedback".to_string()])
            } else {
                a.features
            };
            let settings = runner::EvaluateSettings {
                ingest: a.ingest.resolve(&file)?,
                features,
                feedback_fn: pick(a.feedback_fn, file.feedback_fn.clone(), "pr".to_string()),
                hyper: a.hyper.resolve(&file),
                bootstrap: pick(
                    a.bootstrap,
                    file.bootstrap,
                    feedfx_core::eval::DEFAULT_BOOTSTRAP,
                ),
                holdout: pick(a.holdout, file.holdout, feedfx_core::eval::DEFAULT_HOLDOUT),
                seed: pick(a.seed, file.seed, 0),
                out: a.out,
                ensemble_out: a.ensemble_out,
            };
            runner::run_evaluate(&settings)
        }
        Command::Susceptibility(a) => {
            let settings = runner::SusceptibilitySettings {
                ingest: a.ingest.resolve(&file)?,
                params: a.params,
                ensemble: a.ensemble,
                level: pick(a.level, file.level, 0.99),
                f_hi: pick(a.f_hi, file.f_hi, 0.99),
                f_lo: pick(a.f_lo, file.f_lo, 0.5),
                seed: pick(a.seed, file.seed, 0),
                out: a.out,
            };
            runner::run_susceptibility(&settings)
        }
        Command::Trends(a) => {
            let settings = runner::TrendsSettings {
                ingest: a.ingest.resolve(&file)?,
                ensemble: a.ensemble,
                level: pick(a.level, file.trend_level, 0.95),
                min_run: pick(a.min_run, file.min_run, 3),
                seed: pick(a.seed, file.seed, 0),
                out: a.out,
            };
            runner::run_trends(&settings)
        }
        Command::Report(a) => {
            let settings = runner::ReportSettings {
                evaluation: a.evaluation,
                susceptibility: a.susceptibility,
                truth: a.truth,
                seed: pick(a.seed, file.seed, 0),
                out: a.out,
            };
            runner::run_report(&settings)
        }
    }
}
