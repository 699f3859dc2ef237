//! Post-fit analysis: per-user susceptibility classes from bootstrap
//! intervals, intervention probability gains, effect sizes, activity
//! quartiles, and significant topic-trend periods.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::eval::{cohens_d, BootstrapEnsemble, EvalError};
use crate::model::{linear_predictor, logistic, FeatureConfig, ModelParams, SampleFeatures};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SusceptibilityClass {
    /// The 99% interval of alpha_i lies above zero.
    Positive,
    /// The interval lies below zero.
    Negative,
    /// The interval straddles zero.
    Insignificant,
}

impl SusceptibilityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Insignificant => "insignificant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "positive" => Self::Positive,
            "negative" => Self::Negative,
            "insignificant" => Self::Insignificant,
            _ => return None,
        })
    }

    pub fn from_interval(lo: f64, hi: f64) -> Self {
        if lo > 0.0 {
            Self::Positive
        } else if hi < 0.0 {
            Self::Negative
        } else {
            Self::Insignificant
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SusceptError {
    #[error("the ensemble was fitted without the feedback component")]
    FeedbackInactive,
    #[error("the ensemble was fitted without the trend component")]
    TrendInactive,
    #[error("classification requires at least 2 replicates")]
    TooFewReplicates,
    #[error("quartile report requires at least 4 users")]
    TooFewUsers,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One user's susceptibility summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserSusceptibility {
    pub user_idx: usize,
    pub alpha_mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub class: SusceptibilityClass,
    /// Mean probability gain of the f_hi-vs-f_lo intervention.
    pub delta_p: f64,
    /// Activity quartile, 0 (least active) through 3.
    pub quartile: u8,
    pub post_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SusceptibilityReport {
    pub level: f64,
    pub f_hi: f64,
    pub f_lo: f64,
    pub users: Vec<UserSusceptibility>,
}

impl SusceptibilityReport {
    pub fn classes(&self) -> Vec<SusceptibilityClass> {
        self.users.iter().map(|u| u.class).collect()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for u in &self.users {
            match u.class {
                SusceptibilityClass::Positive => counts[0] += 1,
                SusceptibilityClass::Negative => counts[1] += 1,
                SusceptibilityClass::Insignificant => counts[2] += 1,
            }
        }
        counts
    }
}

/// One user's susceptibility interval and resulting class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaInterval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub class: SusceptibilityClass,
}

/// Classifies every user from the percentile interval of their B
/// susceptibility draws.
pub fn classify(
    ensemble: &BootstrapEnsemble,
    level: f64,
) -> Result<Vec<AlphaInterval>, SusceptError> {
    if !ensemble.config.use_feedback {
        return Err(SusceptError::FeedbackInactive);
    }
    if ensemble.n_replicates() < 2 {
        return Err(SusceptError::TooFewReplicates);
    }
    let n_users = ensemble.replicates[0].params.dims.n_users;
    Ok((0..n_users)
        .map(|u| {
            let draws = ensemble.susceptibility_draws(u);
            let (lo, hi) = stats::percentile_interval(&draws, level);
            AlphaInterval {
                mean: stats::mean(&draws),
                lo,
                hi,
                class: SusceptibilityClass::from_interval(lo, hi),
            }
        })
        .collect())
}

/// Intervention probabilities for one sample at a pinned feedback value:
/// all other components stay at their observed values.
fn intervened_probability(
    params: &ModelParams,
    config: &FeatureConfig,
    dataset: &Dataset,
    features: &SampleFeatures,
    sample_idx: usize,
    f: f64,
) -> f64 {
    let s = &dataset.samples()[sample_idx];
    logistic(linear_predictor(params, config, s, &features.preference, f))
}

/// Mean gain in continuation probability for one user when feedback is
/// exogenously pinned to `f_hi` instead of `f_lo`.
pub fn probability_gain(
    params: &ModelParams,
    config: &FeatureConfig,
    dataset: &Dataset,
    features: &SampleFeatures,
    user: usize,
    f_hi: f64,
    f_lo: f64,
) -> f64 {
    let range = dataset.user_range(user);
    let mut sum = 0.0;
    for i in range.clone() {
        sum += intervened_probability(params, config, dataset, features, i, f_hi)
            - intervened_probability(params, config, dataset, features, i, f_lo);
    }
    sum / range.len() as f64
}

/// Cohen's d between the per-sample intervention probabilities at `f_hi`
/// and `f_lo`, over all samples.
pub fn feedback_effect_size(
    params: &ModelParams,
    config: &FeatureConfig,
    dataset: &Dataset,
    features: &SampleFeatures,
    f_hi: f64,
    f_lo: f64,
) -> Result<f64, SusceptError> {
    let n = dataset.n_samples();
    let mut hi = Vec::with_capacity(n);
    let mut lo = Vec::with_capacity(n);
    for i in 0..n {
        hi.push(intervened_probability(params, config, dataset, features, i, f_hi));
        lo.push(intervened_probability(params, config, dataset, features, i, f_lo));
    }
    Ok(cohens_d(&hi, &lo)?)
}

/// Assigns each user an activity quartile by retained post count, ranked
/// ascending; ties break by stable user index so the bins partition the
/// users with sizes differing by at most one.
pub fn quartile_assign(dataset: &Dataset) -> Vec<u8> {
    let n = dataset.n_users();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (dataset.post_count(u), u));
    let mut quartile = alloc::vec![0u8; n];
    for (rank, &u) in order.iter().enumerate() {
        quartile[u] = (rank * 4 / n) as u8;
    }
    quartile
}

/// Per-quartile counts of [positive, negative, insignificant] users.
pub fn quartile_report(
    report: &SusceptibilityReport,
    dataset: &Dataset,
) -> Result<[[usize; 3]; 4], SusceptError> {
    if dataset.n_users() < 4 {
        return Err(SusceptError::TooFewUsers);
    }
    let mut table = [[0usize; 3]; 4];
    for user in &report.users {
        let class_idx = match user.class {
            SusceptibilityClass::Positive => 0,
            SusceptibilityClass::Negative => 1,
            SusceptibilityClass::Insignificant => 2,
        };
        table[user.quartile as usize][class_idx] += 1;
    }
    Ok(table)
}

/// One day's trend summary for one topic.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrendDay {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Member of a run of >= `min_run` days whose interval lies above 0.
    pub significant: bool,
}

/// Percentile intervals of every trend cell plus significant-run marking:
/// a day is significant when it belongs to a run of at least `min_run`
/// consecutive days whose lower interval bound exceeds zero.
pub fn trend_significance(
    ensemble: &BootstrapEnsemble,
    level: f64,
    min_run: usize,
) -> Result<Vec<Vec<TrendDay>>, SusceptError> {
    if !ensemble.config.use_trend {
        return Err(SusceptError::TrendInactive);
    }
    if ensemble.n_replicates() < 2 {
        return Err(SusceptError::TooFewReplicates);
    }
    let dims = ensemble.replicates[0].params.dims;
    let mut out = Vec::with_capacity(dims.n_topics);
    for k in 0..dims.n_topics {
        let mut row: Vec<TrendDay> = (0..dims.n_days)
            .map(|j| {
                let draws = ensemble.trend_draws(k, j);
                let (lo, hi) = stats::percentile_interval(&draws, level);
                TrendDay {
                    mean: stats::mean(&draws),
                    ci_lo: lo,
                    ci_hi: hi,
                    significant: false,
                }
            })
            .collect();
        // Mark runs of above-zero days that last at least min_run days.
        let mut j = 0;
        while j < row.len() {
            if row[j].ci_lo > 0.0 {
                let start = j;
                while j < row.len() && row[j].ci_lo > 0.0 {
                    j += 1;
                }
                if j - start >= min_run {
                    for day in &mut row[start..j] {
                        day.significant = true;
                    }
                }
            } else {
                j += 1;
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Runs of significant days per topic, as [start, end) day ranges.
pub fn significant_runs(trend: &[Vec<TrendDay>]) -> Vec<Vec<core::ops::Range<usize>>> {
    trend
        .iter()
        .map(|row| {
            let mut runs = Vec::new();
            let mut j = 0;
            while j < row.len() {
                if row[j].significant {
                    let start = j;
                    while j < row.len() && row[j].significant {
                        j += 1;
                    }
                    runs.push(start..j);
                } else {
                    j += 1;
                }
            }
            runs
        })
        .collect()
}

/// Sanity-check protocol for the positively susceptible subgroup: test
/// accuracy restricted to those users' test samples, from point fits with
/// and without the feedback component. A real feedback effect should make
/// the feedback-aware model win on exactly this subgroup.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubgroupGain {
    pub n_users: usize,
    pub n_test_samples: usize,
    pub accuracy_with_feedback: f64,
    pub accuracy_without_feedback: f64,
    pub gain: f64,
}

pub fn positive_subgroup_gain(
    dataset: &Dataset,
    config: &FeatureConfig,
    hyper: &crate::optim::Hyperparams,
    plan: &crate::eval::SplitPlan,
    positive_users: &[usize],
) -> Result<Option<SubgroupGain>, SusceptError> {
    use crate::eval::confusion;
    use crate::model::predict_indices;
    use alloc::collections::BTreeSet;

    if !config.use_feedback {
        return Err(SusceptError::FeedbackInactive);
    }
    let positive: BTreeSet<usize> = positive_users.iter().copied().collect();
    let mut without = *config;
    without.use_feedback = false;

    // Both arms are scored on one shared test subset: the positive users'
    // test samples that the feedback-enabled model can evaluate.
    let with_features = SampleFeatures::build(dataset, config, &plan.train_indices())
        .map_err(crate::optim::FitError::from)
        .map_err(EvalError::from)?;
    let test: alloc::vec::Vec<usize> = with_features
        .eligible(config, plan.test_indices())
        .into_iter()
        .filter(|&i| positive.contains(&dataset.samples()[i].user_idx))
        .collect();
    if test.is_empty() {
        return Ok(None);
    }
    let labels: alloc::vec::Vec<bool> = test.iter().map(|&i| dataset.samples()[i].label).collect();

    let without_features = SampleFeatures::build(dataset, &without, &plan.train_indices())
        .map_err(crate::optim::FitError::from)
        .map_err(EvalError::from)?;
    let mut accuracies = [0.0f64; 2];
    for (slot, cfg, features) in [
        (0usize, config, &with_features),
        (1, &without, &without_features),
    ] {
        let train = features.eligible(cfg, plan.train_indices());
        let fitted = crate::optim::FitProblem::new(dataset, cfg, features, &train)
            .map_err(EvalError::from)?
            .fit(hyper, None)
            .map_err(EvalError::from)?;
        let probs = predict_indices(&fitted.params, cfg, dataset, features, &test)
            .map_err(crate::optim::FitError::from)
            .map_err(EvalError::from)?;
        accuracies[slot] = confusion(&labels, &probs).accuracy();
    }
    Ok(Some(SubgroupGain {
        n_users: positive.len(),
        n_test_samples: test.len(),
        accuracy_with_feedback: accuracies[0],
        accuracy_without_feedback: accuracies[1],
        gain: accuracies[0] - accuracies[1],
    }))
}

/// Confidence level and intervention arm values for a report.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportOptions {
    pub level: f64,
    pub f_hi: f64,
    pub f_lo: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            level: 0.99,
            f_hi: 0.99,
            f_lo: 0.5,
        }
    }
}

/// Assembles the full per-user report from an ensemble (for intervals and
/// classes) and a point fit (for intervention probabilities).
pub fn build_report(
    ensemble: &BootstrapEnsemble,
    point_params: &ModelParams,
    config: &FeatureConfig,
    dataset: &Dataset,
    features: &SampleFeatures,
    options: ReportOptions,
) -> Result<SusceptibilityReport, SusceptError> {
    let intervals = classify(ensemble, options.level)?;
    let quartiles = quartile_assign(dataset);
    let users = intervals
        .into_iter()
        .enumerate()
        .map(|(u, interval)| UserSusceptibility {
            user_idx: u,
            alpha_mean: interval.mean,
            ci_lo: interval.lo,
            ci_hi: interval.hi,
            class: interval.class,
            delta_p: probability_gain(
                point_params,
                config,
                dataset,
                features,
                u,
                options.f_hi,
                options.f_lo,
            ),
            quartile: quartiles[u],
            post_count: dataset.post_count(u),
        })
        .collect();
    Ok(SusceptibilityReport {
        level: options.level,
        f_hi: options.f_hi,
        f_lo: options.f_lo,
        users,
    })
}
