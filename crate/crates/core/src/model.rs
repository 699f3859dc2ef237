//! The topic-continuation model.
//!
//! For author i deciding at time t whether to continue topic k after
//! receiving feedback feature f, the continuation probability is
//!
//! ```text
//! P[continue] = logistic( a_i + b * x_i(k) + g[k, day(t)] + alpha_i * f )
//! ```
//!
//! with per-user propensity `a_i`, topic-preference weight `b` applied to
//! the logit of the user's Laplace-smoothed topic frequency `x_i(k)`, a
//! latent per-topic daily trend `g`, and per-user feedback susceptibility
//! `alpha_i`. Each component can be disabled, which pins its parameters
//! to zero.

use alloc::vec::Vec;

use crate::data::{Dataset, Sample};
use crate::feedback::{FeedbackFunctionKind, FeedbackTransform, TransformError};
use crate::math;

/// Logit clamp bound: probabilities are pulled into [EPS, 1 - EPS].
const LOGIT_EPS: f64 = 1e-12;

/// Numerically stable standard logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

/// Inverse logistic with the argument clamped away from 0 and 1.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_EPS, 1.0 - LOGIT_EPS);
    math::ln(p) - math::ln_1p(-p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelDims {
    pub n_users: usize,
    pub n_topics: usize,
    pub n_days: usize,
}

impl ModelDims {
    pub fn n_params(&self) -> usize {
        self.n_topics * self.n_days + 2 * self.n_users + 1
    }
}

/// Which model components are active for a fit or prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureConfig {
    pub use_propensity: bool,
    pub use_preference: bool,
    pub use_trend: bool,
    pub use_feedback: bool,
    pub feedback_fn: FeedbackFunctionKind,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl FeatureConfig {
    pub fn none() -> Self {
        Self {
            use_propensity: false,
            use_preference: false,
            use_trend: false,
            use_feedback: false,
            feedback_fn: FeedbackFunctionKind::default(),
        }
    }

    pub fn full() -> Self {
        Self {
            use_propensity: true,
            use_preference: true,
            use_trend: true,
            use_feedback: true,
            feedback_fn: FeedbackFunctionKind::default(),
        }
    }

    pub fn with_feedback_fn(mut self, kind: FeedbackFunctionKind) -> Self {
        self.feedback_fn = kind;
        self
    }

    /// Parses a comma-separated feature list: `prop,pref,trend,feedback`
    /// (or `none` for the empty model).
    pub fn parse_features(list: &str) -> Option<Self> {
        let mut cfg = Self::none();
        let trimmed = list.trim();
        if trimmed.is_empty() || trimmed == "none" {
            return Some(cfg);
        }
        for item in trimmed.split(',') {
            match item.trim() {
                "prop" => cfg.use_propensity = true,
                "pref" => cfg.use_preference = true,
                "trend" => cfg.use_trend = true,
                "feedback" => cfg.use_feedback = true,
                _ => return None,
            }
        }
        Some(cfg)
    }

    pub fn feature_list(&self) -> alloc::string::String {
        let mut parts: Vec<&str> = Vec::new();
        if self.use_propensity {
            parts.push("prop");
        }
        if self.use_preference {
            parts.push("pref");
        }
        if self.use_trend {
            parts.push("trend");
        }
        if self.use_feedback {
            parts.push("feedback");
        }
        if parts.is_empty() {
            alloc::string::String::from("none")
        } else {
            parts.join(",")
        }
    }
}

/// Full parameter set of the continuation model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    /// Per-user propensity a_i.
    #[cfg_attr(feature = "serde", serde(rename = "a"))]
    pub propensity: Vec<f64>,
    /// Topic-preference weight b.
    #[cfg_attr(feature = "serde", serde(rename = "b"))]
    pub preference_weight: f64,
    /// Topic trend, row-major `n_topics x n_days`.
    #[cfg_attr(feature = "serde", serde(rename = "g"))]
    pub trend: Vec<f64>,
    /// Per-user feedback susceptibility alpha_i.
    #[cfg_attr(feature = "serde", serde(rename = "alpha"))]
    pub susceptibility: Vec<f64>,
    pub dims: ModelDims,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("parameter dimensions {params:?} do not match dataset dims {data:?}")]
    DimensionMismatch { params: ModelDims, data: ModelDims },
    #[error("sample {0} has no usable feedback feature but the feedback component is active")]
    MissingFeedback(usize),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            propensity: alloc::vec![0.0; dims.n_users],
            preference_weight: 0.0,
            trend: alloc::vec![0.0; dims.n_topics * dims.n_days],
            susceptibility: alloc::vec![0.0; dims.n_users],
            dims,
        }
    }

    #[inline]
    pub fn trend_at(&self, topic: usize, day: usize) -> f64 {
        self.trend[topic * self.dims.n_days + day]
    }

    pub fn trend_row(&self, topic: usize) -> &[f64] {
        &self.trend[topic * self.dims.n_days..(topic + 1) * self.dims.n_days]
    }

    pub fn check_dims(&self, dataset: &Dataset) -> Result<(), ModelError> {
        let data = dataset.dims();
        let consistent = self.dims == data
            && self.propensity.len() == data.n_users
            && self.susceptibility.len() == data.n_users
            && self.trend.len() == data.n_topics * data.n_days;
        if consistent {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                params: self.dims,
                data,
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.preference_weight.is_finite()
            && self.propensity.iter().all(|v| v.is_finite())
            && self.trend.iter().all(|v| v.is_finite())
            && self.susceptibility.iter().all(|v| v.is_finite())
    }
}

/// Logits of each user's Laplace-smoothed topic frequencies.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TopicPreferenceTable {
    x: Vec<f64>,
    n_topics: usize,
}

impl TopicPreferenceTable {
    pub fn zeros(n_users: usize, n_topics: usize) -> Self {
        Self {
            x: alloc::vec![0.0; n_users * n_topics],
            n_topics,
        }
    }

    #[inline]
    pub fn get(&self, user: usize, topic: usize) -> f64 {
        self.x[user * self.n_topics + topic]
    }
}

/// Per-user topic tallies over a set of samples (each sample contributes
/// its previous post's topic).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicCounts {
    per_topic: Vec<u64>,
    totals: Vec<u64>,
    n_topics: usize,
}

impl TopicCounts {
    pub fn from_samples(dataset: &Dataset, indices: &[usize]) -> Self {
        let (n_users, n_topics) = (dataset.n_users(), dataset.n_topics());
        let mut per_topic = alloc::vec![0u64; n_users * n_topics];
        let mut totals = alloc::vec![0u64; n_users];
        for &i in indices {
            let s = &dataset.samples()[i];
            per_topic[s.user_idx * n_topics + s.topic_idx] += 1;
            totals[s.user_idx] += 1;
        }
        Self {
            per_topic,
            totals,
            n_topics,
        }
    }

    pub fn count(&self, user: usize, topic: usize) -> u64 {
        self.per_topic[user * self.n_topics + topic]
    }

    pub fn total(&self, user: usize) -> u64 {
        self.totals[user]
    }
}

/// x_i(k) = logit( (N_i(k) + 1) / (N_i + K) ).
///
/// Add-one smoothing keeps every probability strictly inside (0, 1), so
/// the logit is always finite; with `b = 1` and everything else zero the
/// model reproduces the smoothed frequency itself.
pub fn topic_preference(counts: &TopicCounts, n_topics: usize) -> TopicPreferenceTable {
    let n_users = counts.totals.len();
    let mut x = alloc::vec![0.0; n_users * n_topics];
    for u in 0..n_users {
        let denom = (counts.total(u) + n_topics as u64) as f64;
        for k in 0..n_topics {
            let p = (counts.count(u, k) + 1) as f64 / denom;
            x[u * n_topics + k] = logit(p);
        }
    }
    TopicPreferenceTable { x, n_topics }
}

/// Per-sample model features, frozen from a training index set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFeatures {
    /// Feedback feature per sample; `None` when not computable.
    pub f: Vec<Option<f64>>,
    pub preference: TopicPreferenceTable,
}

impl SampleFeatures {
    /// Builds features for every sample of `dataset`, fitting feedback
    /// histories and topic counts on `train_indices` only.
    pub fn build(
        dataset: &Dataset,
        config: &FeatureConfig,
        train_indices: &[usize],
    ) -> Result<Self, ModelError> {
        let f = if config.use_feedback {
            let transform = FeedbackTransform::fit(config.feedback_fn, dataset, train_indices)?;
            dataset
                .samples()
                .iter()
                .map(|s| transform.apply(s))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            alloc::vec![None; dataset.n_samples()]
        };
        let preference = if config.use_preference {
            let counts = TopicCounts::from_samples(dataset, train_indices);
            topic_preference(&counts, dataset.n_topics())
        } else {
            TopicPreferenceTable::zeros(dataset.n_users(), dataset.n_topics())
        };
        Ok(Self { f, preference })
    }

    /// Subset of `candidates` usable under `config` (drops samples whose
    /// feedback feature is missing when the feedback component is on).
    pub fn eligible(
        &self,
        config: &FeatureConfig,
        candidates: impl IntoIterator<Item = usize>,
    ) -> Vec<usize> {
        candidates
            .into_iter()
            .filter(|&i| !config.use_feedback || self.f[i].is_some())
            .collect()
    }
}

/// The additive predictor of the continuation model for one sample.
pub fn linear_predictor(
    params: &ModelParams,
    config: &FeatureConfig,
    sample: &Sample,
    preference: &TopicPreferenceTable,
    f: f64,
) -> f64 {
    let mut eta = 0.0;
    if config.use_propensity {
        eta += params.propensity[sample.user_idx];
    }
    if config.use_preference {
        eta += params.preference_weight * preference.get(sample.user_idx, sample.topic_idx);
    }
    if config.use_trend {
        eta += params.trend_at(sample.topic_idx, sample.day_idx);
    }
    if config.use_feedback {
        eta += params.susceptibility[sample.user_idx] * f;
    }
    eta
}

/// Continuation probabilities for the given sample indices.
pub fn predict_indices(
    params: &ModelParams,
    config: &FeatureConfig,
    dataset: &Dataset,
    features: &SampleFeatures,
    indices: &[usize],
) -> Result<Vec<f64>, ModelError> {
    params.check_dims(dataset)?;
    indices
        .iter()
        .map(|&i| {
            let s = &dataset.samples()[i];
            let f = if config.use_feedback {
                features.f[i].ok_or(ModelError::MissingFeedback(i))?
            } else {
                0.0
            };
            Ok(logistic(linear_predictor(params, config, s, &features.preference, f)))
        })
        .collect()
}

/// Continuation probabilities for every sample.
pub fn predict(
    params: &ModelParams,
    config: &FeatureConfig,
    dataset: &Dataset,
    features: &SampleFeatures,
) -> Result<Vec<f64>, ModelError> {
    let all: Vec<usize> = (0..dataset.n_samples()).collect();
    predict_indices(params, config, dataset, features, &all)
}
