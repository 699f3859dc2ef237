//! Run configuration: optional JSON config file merged under command-line
//! flags (flag > file > default).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats::FeedbackColumnKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Comment-style feedback events; no thread filter.
    Reddit,
    /// Retweet-style feedback events; 30 s thread filter by default.
    Twitter,
    /// Precomputed per-post feedback column (or no feedback).
    Generic,
}

impl Mode {
    pub fn default_thread_gap(self) -> Option<i64> {
        match self {
            Mode::Twitter => Some(30),
            _ => None,
        }
    }
}

/// All file-configurable knobs; every field optional so flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub posts: Option<PathBuf>,
    pub feedback: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub min_posts: Option<usize>,
    pub thread_gap_seconds: Option<i64>,
    pub feedback_column: Option<FeedbackColumnKind>,
    pub features: Option<Vec<String>>,
    pub feedback_fn: Option<String>,
    pub beta_u: Option<f64>,
    pub beta_g: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub bootstrap: Option<usize>,
    pub holdout: Option<usize>,
    pub level: Option<f64>,
    pub trend_level: Option<f64>,
    pub f_hi: Option<f64>,
    pub f_lo: Option<f64>,
    pub min_run: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let content = std::fs::read_to_string(p)?;
                serde_json::from_str(&content)
                    .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
            }
        }
    }
}

/// flag > file > default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
