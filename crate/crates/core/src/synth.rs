//! Synthetic data generation with known ground truth.
//!
//! Users post via independent Poisson processes over a short horizon.
//! Two (or more) unobserved events inject exponentially decaying topic
//! trends, and each sample's feedback is `f = c * g_k(t) + xi` with unit
//! Gaussian noise. When `c > 0` the feedback is correlated with the trend
//! and a model without the trend component wrongly flags almost every
//! user as susceptible; the generator exists to demonstrate and measure
//! exactly that failure mode against known per-user susceptibilities.

use alloc::vec::Vec;
use rand::Rng;

use crate::data::{build_dataset, BuildOptions, DataError, Dataset, FeedbackSource, PostEvent};
use crate::model::logistic;
use crate::rng::{standard_normal, substream};
use crate::suscept::SusceptibilityClass;

/// 2016-01-01T00:00:00Z; an arbitrary but fixed epoch for generated logs.
pub const DEFAULT_EPOCH_START: i64 = 1_451_606_400;

/// An unobserved event that boosts one topic's trend from `at_days` on.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventSpec {
    pub topic: usize,
    /// Event time in days from the start of the simulation.
    pub at_days: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub n_users: usize,
    pub duration_days: f64,
    /// Users drawing fewer posts are regenerated (or dropped).
    pub min_posts: usize,
    pub n_topics: usize,
    pub events: Vec<EventSpec>,
    /// Trend amplitude g0 at the event instant.
    pub amplitude: f64,
    /// Trend decay time constant, in days.
    pub decay_days: f64,
    /// Confounding coefficient c linking feedback to the trend.
    pub confound: f64,
    /// Fraction of users given nonzero susceptibility.
    pub susceptible_fraction: f64,
    /// Susceptibility value assigned to susceptible users.
    pub susceptible_alpha: f64,
    /// Per-user posting rate (posts/day), drawn log-uniformly.
    pub rate_per_day: (f64, f64),
    /// Regenerate users that draw fewer than `min_posts` posts instead of
    /// dropping them (keeps `n_users` exact).
    pub regenerate_below_min: bool,
    pub epoch_start: i64,
    pub seed: u64,
}

impl SynthConfig {
    fn base(seed: u64) -> Self {
        Self {
            n_users: 1145,
            duration_days: 10.0,
            min_posts: 50,
            n_topics: 2,
            events: alloc::vec![
                EventSpec { topic: 0, at_days: 3.0 },
                EventSpec { topic: 1, at_days: 7.0 },
            ],
            amplitude: 5.0,
            decay_days: 4.0,
            confound: 1.0,
            susceptible_fraction: 0.5,
            susceptible_alpha: 1.0,
            rate_per_day: (5.0, 30.0),
            regenerate_below_min: true,
            epoch_start: DEFAULT_EPOCH_START,
            seed,
        }
    }

    /// The confounded regime (c = 1): feedback tracks the topic trend.
    pub fn confounded_preset(seed: u64) -> Self {
        Self::base(seed)
    }

    /// The non-confounded regime (c = 0): feedback is pure noise.
    pub fn uncorrelated_preset(seed: u64) -> Self {
        Self {
            confound: 0.0,
            ..Self::base(seed)
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    BadConfig(&'static str),
    #[error("user {0} never reached min_posts and regeneration is disabled")]
    UserTooQuiet(usize),
    #[error("topic {0} never appeared in the generated posts")]
    MissingTopic(usize),
    #[error("class list has {got} users but the truth has {expected}")]
    MisalignedUsers { got: usize, expected: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Trend value of `topic` at `t_days` from the simulation start: zero up
/// to and including each event instant, exponential decay after it.
pub fn event_trend(
    topic: usize,
    t_days: f64,
    events: &[EventSpec],
    amplitude: f64,
    decay_days: f64,
) -> f64 {
    events
        .iter()
        .filter(|e| e.topic == topic && t_days > e.at_days)
        .map(|e| amplitude * crate::math::exp(-(t_days - e.at_days) / decay_days))
        .sum()
}

/// Everything the generator knows that the estimator must recover.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    /// Per-user true susceptibility.
    pub alpha: Vec<f64>,
    pub events: Vec<EventSpec>,
    pub amplitude: f64,
    pub decay_days: f64,
    pub confound: f64,
    pub epoch_start: i64,
    /// Per-sample feedback before noise, `c * g_k(t)`, in sample order.
    pub clean_feedback: Vec<f64>,
    /// Per-sample true trend value `g_k(t)`.
    pub sample_trend: Vec<f64>,
    /// Per-sample true continuation probability.
    pub true_prob: Vec<f64>,
}

impl GroundTruth {
    pub fn n_users(&self) -> usize {
        self.alpha.len()
    }

    /// True trend of `topic` at an absolute timestamp (seconds).
    pub fn trend_at_ts(&self, topic: usize, ts: f64) -> f64 {
        let t_days = (ts - self.epoch_start as f64) / crate::data::SECONDS_PER_DAY as f64;
        event_trend(topic, t_days, &self.events, self.amplitude, self.decay_days)
    }

    /// The class a perfect detector would assign.
    pub fn expected_class(&self, user: usize) -> SusceptibilityClass {
        if self.alpha[user] > 0.0 {
            SusceptibilityClass::Positive
        } else if self.alpha[user] < 0.0 {
            SusceptibilityClass::Negative
        } else {
            SusceptibilityClass::Insignificant
        }
    }
}

/// Generates the raw post log plus ground truth. The posts round-trip
/// through the standard ingestion path (generic mode, direct feedback
/// column), so files written from them reproduce [`generate`] exactly.
pub fn generate_events(config: &SynthConfig) -> Result<(Vec<PostEvent>, GroundTruth), SynthError> {
    validate(config)?;
    let duration_secs = config.duration_days * crate::data::SECONDS_PER_DAY as f64;

    // Random 50/50-style assignment of susceptibility.
    let n_susceptible =
        (config.susceptible_fraction * config.n_users as f64) as usize;
    let mut order: Vec<usize> = (0..config.n_users).collect();
    let mut alpha_rng = substream(config.seed, "alpha", 0);
    for i in (1..order.len()).rev() {
        order.swap(i, alpha_rng.random_range(0..=i));
    }
    let mut alpha = alloc::vec![0.0; config.n_users];
    for &u in order.iter().take(n_susceptible) {
        alpha[u] = config.susceptible_alpha;
    }

    let mut posts: Vec<PostEvent> = Vec::new();
    let mut clean_feedback = Vec::new();
    let mut sample_trend = Vec::new();
    let mut true_prob = Vec::new();

    for (u, &user_alpha) in alpha.iter().enumerate() {
        let mut rate_rng = substream(config.seed, "rate", u as u64);
        let (lo, hi) = config.rate_per_day;
        let rate_per_day = crate::math::exp(
            crate::math::ln(lo) + rate_rng.random::<f64>() * (crate::math::ln(hi / lo)),
        );
        let rate_per_sec = rate_per_day / crate::data::SECONDS_PER_DAY as f64;

        // Poisson arrivals, floored to whole seconds; retry the whole
        // timeline until the user is active enough.
        let mut arrival_rng = substream(config.seed, "arrivals", u as u64);
        let mut times: Vec<i64> = Vec::new();
        let mut attempts = 0;
        loop {
            times.clear();
            let mut t = 0.0f64;
            loop {
                let gap = -crate::math::ln(1.0 - arrival_rng.random::<f64>()) / rate_per_sec;
                t += gap;
                if t >= duration_secs {
                    break;
                }
                times.push(t as i64);
            }
            if times.len() >= config.min_posts.max(2) {
                break;
            }
            attempts += 1;
            if !config.regenerate_below_min || attempts > 10_000 {
                return Err(SynthError::UserTooQuiet(u));
            }
        }

        let mut behavior = substream(config.seed, "behavior", u as u64);
        let mut topic = behavior.random_range(0..config.n_topics);
        for (m, &ts) in times.iter().enumerate() {
            if m > 0 {
                let t_days = ts as f64 / crate::data::SECONDS_PER_DAY as f64;
                let g = event_trend(
                    topic,
                    t_days,
                    &config.events,
                    config.amplitude,
                    config.decay_days,
                );
                let noise = standard_normal(&mut behavior);
                let feedback = config.confound * g + noise;
                let p = logistic(g + user_alpha * feedback);
                let continued = behavior.random::<f64>() < p;

                // The feedback belongs to the previous post: it is what
                // that post accumulated before this one was written.
                let prev = posts.last_mut().expect("previous post exists");
                prev.feedback = Some(feedback);
                clean_feedback.push(config.confound * g);
                sample_trend.push(g);
                true_prob.push(p);

                if !continued {
                    // Forced switch to the other topic (uniform among the
                    // rest when more than two topics exist).
                    let shift = if config.n_topics == 2 {
                        1
                    } else {
                        behavior.random_range(1..config.n_topics)
                    };
                    topic = (topic + shift) % config.n_topics;
                }
            }
            posts.push(PostEvent {
                post_id: alloc::format!("u{u:04}-p{m:05}"),
                user_id: alloc::format!("u{u:04}"),
                timestamp: config.epoch_start + ts,
                topic_id: topic as u32,
                feedback: None,
            });
        }
    }

    Ok((
        posts,
        GroundTruth {
            alpha,
            events: config.events.clone(),
            amplitude: config.amplitude,
            decay_days: config.decay_days,
            confound: config.confound,
            epoch_start: config.epoch_start,
            clean_feedback,
            sample_trend,
            true_prob,
        },
    ))
}

/// Generates a ready-to-fit dataset and its aligned ground truth.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth), SynthError> {
    let (posts, truth) = generate_events(config)?;
    let (dataset, _stats) = build_dataset(
        posts,
        &[],
        &BuildOptions {
            min_posts: config.min_posts,
            thread_gap_seconds: None,
            feedback_source: FeedbackSource::Column,
        },
    )?;
    if dataset.n_topics() != config.n_topics {
        for k in 0..config.n_topics {
            if !(0..dataset.n_topics()).any(|d| dataset.topic_id(d) as usize == k) {
                return Err(SynthError::MissingTopic(k));
            }
        }
    }
    debug_assert_eq!(dataset.n_users(), config.n_users);
    debug_assert_eq!(dataset.n_samples(), truth.true_prob.len());
    Ok((dataset, truth))
}

/// Fraction of users whose detected class matches the ground truth
/// (true alpha > 0 should be positive, alpha = 0 insignificant).
pub fn detection_accuracy(
    classes: &[SusceptibilityClass],
    truth: &GroundTruth,
) -> Result<f64, SynthError> {
    if classes.len() != truth.n_users() {
        return Err(SynthError::MisalignedUsers {
            got: classes.len(),
            expected: truth.n_users(),
        });
    }
    let hits = classes
        .iter()
        .enumerate()
        .filter(|(u, &c)| c == truth.expected_class(*u))
        .count();
    Ok(hits as f64 / classes.len() as f64)
}

fn validate(config: &SynthConfig) -> Result<(), SynthError> {
    if config.n_users == 0 {
        return Err(SynthError::BadConfig("n_users must be positive"));
    }
    if config.n_topics < 2 {
        return Err(SynthError::BadConfig("need at least two topics"));
    }
    // NaN also fails these checks.
    if !(config.duration_days.is_finite() && config.duration_days > 0.0) {
        return Err(SynthError::BadConfig("duration must be positive"));
    }
    if !(config.decay_days.is_finite() && config.decay_days > 0.0) {
        return Err(SynthError::BadConfig("decay must be positive"));
    }
    if config.rate_per_day.0 <= 0.0 || config.rate_per_day.1 < config.rate_per_day.0 {
        return Err(SynthError::BadConfig("bad posting rate range"));
    }
    if !(0.0..=1.0).contains(&config.susceptible_fraction) {
        return Err(SynthError::BadConfig("susceptible fraction outside [0, 1]"));
    }
    for e in &config.events {
        if e.topic >= config.n_topics {
            return Err(SynthError::BadConfig("event topic out of range"));
        }
        if !(0.0..=config.duration_days).contains(&e.at_days) {
            return Err(SynthError::BadConfig("event time outside the horizon"));
        }
    }
    Ok(())
}
