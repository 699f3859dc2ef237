//! File formats: event logs in (CSV | JSONL), parameter/ensemble/report
//! JSON documents, and the susceptibility/trend CSV exports.

use std::fs;
use std::path::Path;

use feedfx_core::data::{FeedbackEvent, PostEvent};
use feedfx_core::eval::{BootstrapEnsemble, ConfusionCounts, Metrics, ReplicateOutcome};
use feedfx_core::model::{FeatureConfig, ModelDims, ModelParams};
use feedfx_core::optim::Hyperparams;
use feedfx_core::suscept::{SusceptibilityClass, SusceptibilityReport, UserSusceptibility};
use feedfx_core::synth::GroundTruth;
use serde::{Deserialize, Serialize};

use crate::artifact::Meta;
use crate::error::CliError;

/// How the optional per-post feedback column is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackColumnKind {
    /// Non-negative integer counts (vote/like tallies and the like).
    Counts,
    /// Already a model-ready real-valued feature.
    Direct,
}

#[derive(Debug, Deserialize)]
struct PostRow {
    post_id: String,
    user_id: String,
    timestamp: i64,
    topic_id: u32,
    #[serde(default)]
    feedback_count: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct FeedbackRow {
    post_id: String,
    timestamp: i64,
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("ndjson")
    )
}

fn validate_feedback_value(
    value: Option<f64>,
    kind: FeedbackColumnKind,
    line: u64,
    path: &Path,
) -> Result<Option<f64>, CliError> {
    let Some(v) = value else { return Ok(None) };
    if !v.is_finite() {
        return Err(CliError::data(format!(
            "{}:{line}: feedback value is not finite",
            path.display()
        )));
    }
    if kind == FeedbackColumnKind::Counts && (v < 0.0 || v.fract() != 0.0) {
        return Err(CliError::data(format!(
            "{}:{line}: feedback_count must be a non-negative integer (got {v}); \
             use --feedback-column direct for real-valued features",
            path.display()
        )));
    }
    Ok(Some(v))
}

/// Reads a posts file (`.csv`, or `.jsonl`/`.ndjson` with one object per
/// line). Parse failures report the offending line number.
pub fn read_posts(path: &Path, column: FeedbackColumnKind) -> Result<Vec<PostEvent>, CliError> {
    let mut posts = Vec::new();
    if is_jsonl(path) {
        let content = fs::read_to_string(path)?;
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let row: PostRow = serde_json::from_str(line).map_err(|e| {
                CliError::data(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            posts.push(post_from_row(row, column, i as u64 + 1, path)?);
        }
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(false)
            .from_path(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        for result in reader.deserialize::<PostRow>() {
            let line = result
                .as_ref()
                .err()
                .and_then(|e| e.position().map(|p| p.line()))
                .unwrap_or(0);
            let row = result
                .map_err(|e| CliError::data(format!("{}:{line}: {e}", path.display())))?;
            posts.push(post_from_row(row, column, line, path)?);
        }
    }
    Ok(posts)
}

fn post_from_row(
    row: PostRow,
    column: FeedbackColumnKind,
    line: u64,
    path: &Path,
) -> Result<PostEvent, CliError> {
    Ok(PostEvent {
        post_id: row.post_id,
        user_id: row.user_id,
        timestamp: row.timestamp,
        topic_id: row.topic_id,
        feedback: validate_feedback_value(row.feedback_count, column, line, path)?,
    })
}

/// Reads a feedback-event file with `{post_id, timestamp}` rows.
pub fn read_feedback(path: &Path) -> Result<Vec<FeedbackEvent>, CliError> {
    let mut events = Vec::new();
    if is_jsonl(path) {
        let content = fs::read_to_string(path)?;
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let row: FeedbackRow = serde_json::from_str(line).map_err(|e| {
                CliError::data(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            events.push(FeedbackEvent {
                post_id: row.post_id,
                timestamp: row.timestamp,
            });
        }
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        for result in reader.deserialize::<FeedbackRow>() {
            let line = result
                .as_ref()
                .err()
                .and_then(|e| e.position().map(|p| p.line()))
                .unwrap_or(0);
            let row = result
                .map_err(|e| CliError::data(format!("{}:{line}: {e}", path.display())))?;
            events.push(FeedbackEvent {
                post_id: row.post_id,
                timestamp: row.timestamp,
            });
        }
    }
    Ok(events)
}

/// Writes a post log as CSV (the format `read_posts` ingests).
pub fn posts_to_csv(posts: &[PostEvent]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["post_id", "user_id", "timestamp", "topic_id", "feedback_count"])?;
    for p in posts {
        w.write_record([
            p.post_id.as_str(),
            p.user_id.as_str(),
            &p.timestamp.to_string(),
            &p.topic_id.to_string(),
            &p.feedback.map(|f| f.to_string()).unwrap_or_default(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| CliError::data(format!("csv write: {e}")))
}

/// Fitted parameters as a JSON document: `{a, b, g, alpha, dims, config}`
/// plus run metadata. Values round-trip bit-exactly at double precision.
#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub meta: Meta,
    pub config: FeatureConfig,
    pub converged: bool,
    pub trace_monotone: bool,
    pub iterations: usize,
    pub objective: f64,
    #[serde(flatten)]
    pub params: ModelParams,
}

pub fn write_params(path: &Path, doc: &ParamsDoc) -> Result<(), CliError> {
    crate::artifact::write_json(path, doc)
}

pub fn read_params(path: &Path) -> Result<ParamsDoc, CliError> {
    let content = fs::read_to_string(path)?;
    serde_json::from_str(&content)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// One bootstrap replicate in the ensemble document.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReplicateDoc {
    pub replicate: usize,
    pub converged: bool,
    pub trace_monotone: bool,
    pub iterations: usize,
    pub objective: f64,
    pub metrics: Option<Metrics>,
    pub counts: ConfusionCounts,
    pub a: Vec<f64>,
    pub b: f64,
    pub g: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnsembleDoc {
    pub meta: Meta,
    pub config: FeatureConfig,
    pub hyper: Hyperparams,
    pub holdout: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub dims: ModelDims,
    pub replicates: Vec<ReplicateDoc>,
}

impl EnsembleDoc {
    pub fn from_ensemble(meta: Meta, ensemble: &BootstrapEnsemble) -> Self {
        let dims = ensemble.replicates[0].params.dims;
        Self {
            meta,
            config: ensemble.config,
            hyper: ensemble.hyper,
            holdout: ensemble.holdout,
            bootstrap: ensemble.n_replicates(),
            seed: ensemble.seed,
            dims,
            replicates: ensemble
                .replicates
                .iter()
                .map(|r| ReplicateDoc {
                    replicate: r.replicate,
                    converged: r.converged,
                    trace_monotone: r.trace_monotone,
                    iterations: r.iterations,
                    objective: r.objective,
                    metrics: (r.metrics.accuracy.is_finite()).then_some(r.metrics),
                    counts: r.counts,
                    a: r.params.propensity.clone(),
                    b: r.params.preference_weight,
                    g: r.params.trend.clone(),
                    alpha: r.params.susceptibility.clone(),
                })
                .collect(),
        }
    }

    pub fn into_ensemble(self) -> BootstrapEnsemble {
        let dims = self.dims;
        BootstrapEnsemble {
            config: self.config,
            hyper: self.hyper,
            holdout: self.holdout,
            seed: self.seed,
            replicates: self
                .replicates
                .into_iter()
                .map(|r| ReplicateOutcome {
                    replicate: r.replicate,
                    params: ModelParams {
                        propensity: r.a,
                        preference_weight: r.b,
                        trend: r.g,
                        susceptibility: r.alpha,
                        dims,
                    },
                    counts: r.counts,
                    metrics: r.metrics.unwrap_or(Metrics {
                        accuracy: f64::NAN,
                        f1: f64::NAN,
                        mcc: f64::NAN,
                    }),
                    converged: r.converged,
                    trace_monotone: r.trace_monotone,
                    iterations: r.iterations,
                    objective: r.objective,
                })
                .collect(),
        }
    }
}

pub fn read_ensemble(path: &Path) -> Result<EnsembleDoc, CliError> {
    let content = fs::read_to_string(path)?;
    serde_json::from_str(&content)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn read_truth(path: &Path) -> Result<GroundTruth, CliError> {
    let content = fs::read_to_string(path)?;
    let doc: TruthDoc = serde_json::from_str(&content)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(doc.truth)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TruthDoc {
    pub meta: Meta,
    #[serde(flatten)]
    pub truth: GroundTruth,
}

/// Susceptibility CSV: one row per user, meta in a leading comment.
pub fn susceptibility_to_csv(
    report: &SusceptibilityReport,
    user_ids: &[String],
) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "user_id",
        "user_idx",
        "post_count",
        "quartile",
        "alpha_mean",
        "ci_lo",
        "ci_hi",
        "class",
        "delta_p",
    ])?;
    for u in &report.users {
        w.write_record([
            user_ids[u.user_idx].as_str(),
            &u.user_idx.to_string(),
            &u.post_count.to_string(),
            &format!("G{}", u.quartile + 1),
            &u.alpha_mean.to_string(),
            &u.ci_lo.to_string(),
            &u.ci_hi.to_string(),
            u.class.as_str(),
            &u.delta_p.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| CliError::data(format!("csv write: {e}")))
}

/// Parses the susceptibility CSV back (for `report`).
pub fn susceptibility_from_csv(content: &str, level: f64) -> Result<SusceptibilityReport, CliError> {
    let mut users = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(content.as_bytes());
    for row in reader.records() {
        let row = row?;
        let class = SusceptibilityClass::parse(&row[7])
            .ok_or_else(|| CliError::data(format!("unknown class `{}`", &row[7])))?;
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|e| CliError::data(format!("bad number `{s}`: {e}")))
        };
        users.push(UserSusceptibility {
            user_idx: row[1]
                .parse()
                .map_err(|e| CliError::data(format!("bad user_idx: {e}")))?,
            post_count: row[2]
                .parse()
                .map_err(|e| CliError::data(format!("bad post_count: {e}")))?,
            quartile: row[3]
                .strip_prefix('G')
                .and_then(|q| q.parse::<u8>().ok())
                .map(|q| q - 1)
                .ok_or_else(|| CliError::data(format!("bad quartile `{}`", &row[3])))?,
            alpha_mean: parse(&row[4])?,
            ci_lo: parse(&row[5])?,
            ci_hi: parse(&row[6])?,
            class,
            delta_p: parse(&row[8])?,
        });
    }
    Ok(SusceptibilityReport {
        level,
        f_hi: f64::NAN,
        f_lo: f64::NAN,
        users,
    })
}

/// Per-topic daily trend rows for plotting.
pub struct TrendRow {
    pub topic_idx: usize,
    pub topic_id: u32,
    pub day: usize,
    pub day_start_ts: i64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub significant: bool,
    pub posts: u64,
}

pub fn trends_to_csv(rows: &[TrendRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "topic_id",
        "topic_idx",
        "day",
        "day_start_ts",
        "mean",
        "ci_lo",
        "ci_hi",
        "significant",
        "posts",
    ])?;
    for r in rows {
        w.write_record([
            &r.topic_id.to_string(),
            &r.topic_idx.to_string(),
            &r.day.to_string(),
            &r.day_start_ts.to_string(),
            &r.mean.to_string(),
            &r.ci_lo.to_string(),
            &r.ci_hi.to_string(),
            &(r.significant as u8).to_string(),
            &r.posts.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| CliError::data(format!("csv write: {e}")))
}
