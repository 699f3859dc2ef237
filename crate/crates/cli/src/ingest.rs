//! File-to-dataset ingestion.

use std::path::PathBuf;

use feedfx_core::data::{build_dataset, BuildOptions, Dataset, FeedbackSource, IngestStats};
use serde::Serialize;

use crate::config::Mode;
use crate::error::CliError;
use crate::formats::{read_feedback, read_posts, FeedbackColumnKind};

/// Resolved ingestion settings, embedded verbatim in artifact metadata.
#[derive(Debug, Clone, Serialize)]
pub struct IngestSettings {
    pub posts: PathBuf,
    pub feedback: Option<PathBuf>,
    pub mode: Mode,
    pub min_posts: usize,
    pub thread_gap_seconds: Option<i64>,
    pub feedback_column: FeedbackColumnKind,
}

pub fn ingest(settings: &IngestSettings) -> Result<(Dataset, IngestStats), CliError> {
    let posts = read_posts(&settings.posts, settings.feedback_column)?;
    let feedback = settings
        .feedback
        .as_deref()
        .map(read_feedback)
        .transpose()?
        .unwrap_or_default();
    let feedback_source = if settings.feedback.is_some() {
        FeedbackSource::Events
    } else if posts.iter().any(|p| p.feedback.is_some()) {
        FeedbackSource::Column
    } else {
        FeedbackSource::None
    };
    // A zero gap disables the filter outright.
    let thread_gap = settings
        .thread_gap_seconds
        .or_else(|| settings.mode.default_thread_gap())
        .filter(|&g| g > 0);
    let options = BuildOptions {
        min_posts: settings.min_posts,
        thread_gap_seconds: thread_gap,
        feedback_source,
    };
    let (dataset, stats) = build_dataset(posts, &feedback, &options)?;
    if stats.dangling_feedback > 0 {
        eprintln!(
            "warning: {} feedback events referenced no retained post",
            stats.dangling_feedback
        );
    }
    if stats.clamped_delta_t > 0 {
        eprintln!(
            "warning: {} sample gaps were non-positive and clamped to 1 s",
            stats.clamped_delta_t
        );
    }
    Ok((dataset, stats))
}
