//! Holdout evaluation: last-h-per-user split, bootstrap refitting, binary
//! prediction metrics, feature ablations, and the two reporting tests
//! (Welch t and Cohen's d).

use alloc::vec::Vec;
use rand::Rng;

use crate::data::Dataset;
use crate::model::{predict_indices, FeatureConfig, ModelParams, SampleFeatures};
use crate::optim::{FitError, FitProblem, Hyperparams};
use crate::{rng, stats};

pub const DEFAULT_HOLDOUT: usize = 3;
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Per-user partition into training samples and the final `holdout` test
/// samples. Users with too few samples contribute no test samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    holdout: usize,
    /// Per user: (train range, test range) into the dataset sample array.
    ranges: Vec<(core::ops::Range<usize>, core::ops::Range<usize>)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("holdout must be >= 1")]
    BadHoldout,
    #[error("bootstrap requires at least 2 replicates (got {0})")]
    TooFewReplicates(usize),
    #[error("metrics require at least one prediction")]
    EmptyConfusion,
    #[error("statistic requires at least 2 values per sample")]
    TooFewValues,
    #[error("pooled standard deviation is zero")]
    DegenerateSpread,
    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        source: FitError,
    },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Splits each user's samples into all-but-last-h train and last-h test.
pub fn split(dataset: &Dataset, holdout: usize) -> Result<SplitPlan, EvalError> {
    if holdout == 0 {
        return Err(EvalError::BadHoldout);
    }
    let ranges = (0..dataset.n_users())
        .map(|u| {
            let r = dataset.user_range(u);
            if r.len() > holdout {
                let cut = r.end - holdout;
                (r.start..cut, cut..r.end)
            } else {
                // Too few samples to hold anything out: train-only user.
                (r.clone(), r.end..r.end)
            }
        })
        .collect();
    Ok(SplitPlan { holdout, ranges })
}

impl SplitPlan {
    pub fn holdout(&self) -> usize {
        self.holdout
    }

    pub fn n_users(&self) -> usize {
        self.ranges.len()
    }

    pub fn train_range(&self, user: usize) -> core::ops::Range<usize> {
        self.ranges[user].0.clone()
    }

    pub fn test_range(&self, user: usize) -> core::ops::Range<usize> {
        self.ranges[user].1.clone()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.ranges.iter().flat_map(|(t, _)| t.clone()).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.ranges.iter().flat_map(|(_, t)| t.clone()).collect()
    }

    pub fn n_train(&self) -> usize {
        self.ranges.iter().map(|(t, _)| t.len()).sum()
    }

    pub fn n_test(&self) -> usize {
        self.ranges.iter().map(|(_, t)| t.len()).sum()
    }

    /// With-replacement resample of the training samples, drawn per user
    /// so every user keeps its exact training sample count.
    pub fn resample_train(&self, seed: u64, replicate: usize) -> Vec<usize> {
        let mut gen = rng::substream(seed, "bootstrap", replicate as u64);
        let mut out = Vec::with_capacity(self.n_train());
        for (train, _) in &self.ranges {
            if train.is_empty() {
                continue;
            }
            for _ in 0..train.len() {
                out.push(train.start + gen.random_range(0..train.len()));
            }
        }
        out
    }
}

/// Binary confusion tallies; the positive class is topic continuation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }
}

/// Thresholds probabilities at 0.5 (`P >= 0.5` predicts continuation).
pub fn confusion(labels: &[bool], probs: &[f64]) -> ConfusionCounts {
    assert_eq!(labels.len(), probs.len());
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(probs) {
        let predicted = p >= 0.5;
        match (predicted, y) {
            (true, true) => c.true_pos += 1,
            (false, false) => c.true_neg += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
}

/// Accuracy, F1, and the Matthews correlation coefficient.
///
/// MCC is defined as 0 when its denominator vanishes; F1 is 0 when there
/// are no positive predictions or labels at all.
pub fn metrics(counts: &ConfusionCounts) -> Result<Metrics, EvalError> {
    if counts.total() == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let (tp, tn, fp, fne) = (
        counts.true_pos as f64,
        counts.true_neg as f64,
        counts.false_pos as f64,
        counts.false_neg as f64,
    );
    let f1_denom = 2.0 * tp + fp + fne;
    let f1 = if f1_denom == 0.0 { 0.0 } else { 2.0 * tp / f1_denom };
    let mcc_denom = (tp + fp) * (tp + fne) * (tn + fp) * (tn + fne);
    let mcc = if mcc_denom == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fne) / crate::math::sqrt(mcc_denom)
    };
    Ok(Metrics {
        accuracy: counts.accuracy(),
        f1,
        mcc,
    })
}

/// One bootstrap replicate: the refitted parameters and its holdout
/// predictions summarized.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub params: ModelParams,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    pub converged: bool,
    pub trace_monotone: bool,
    pub iterations: usize,
    pub objective: f64,
}

/// The fitted bootstrap ensemble for one feature configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    pub config: FeatureConfig,
    pub hyper: Hyperparams,
    pub holdout: usize,
    pub seed: u64,
    pub replicates: Vec<ReplicateOutcome>,
}

impl BootstrapEnsemble {
    pub fn n_replicates(&self) -> usize {
        self.replicates.len()
    }

    /// The B fitted susceptibilities of one user.
    pub fn susceptibility_draws(&self, user: usize) -> Vec<f64> {
        self.replicates
            .iter()
            .map(|r| r.params.susceptibility[user])
            .collect()
    }

    /// The B fitted trend values of one (topic, day) cell.
    pub fn trend_draws(&self, topic: usize, day: usize) -> Vec<f64> {
        self.replicates
            .iter()
            .map(|r| r.params.trend_at(topic, day))
            .collect()
    }

    pub fn metric_values(&self, pick: impl Fn(&Metrics) -> f64) -> Vec<f64> {
        self.replicates.iter().map(|r| pick(&r.metrics)).collect()
    }
}

/// Fits one bootstrap replicate; deterministic in (`seed`, `replicate`).
pub fn replicate_fit(
    dataset: &Dataset,
    config: &FeatureConfig,
    hyper: &Hyperparams,
    features: &SampleFeatures,
    plan: &SplitPlan,
    seed: u64,
    replicate: usize,
) -> Result<ReplicateOutcome, EvalError> {
    let run = || -> Result<ReplicateOutcome, FitError> {
        let resample = plan.resample_train(seed, replicate);
        let include = features.eligible(config, resample);
        let problem = FitProblem::new(dataset, config, features, &include)?;
        let fitted = problem.fit(hyper, None)?;
        let test = features.eligible(config, plan.test_indices());
        let counts = if test.is_empty() {
            ConfusionCounts::default()
        } else {
            let probs = predict_indices(&fitted.params, config, dataset, features, &test)?;
            let labels: Vec<bool> = test.iter().map(|&i| dataset.samples()[i].label).collect();
            confusion(&labels, &probs)
        };
        let metrics = metrics(&counts).unwrap_or(Metrics {
            accuracy: f64::NAN,
            f1: f64::NAN,
            mcc: f64::NAN,
        });
        Ok(ReplicateOutcome {
            replicate,
            trace_monotone: fitted.trace_is_monotone(),
            converged: fitted.converged,
            iterations: fitted.iterations,
            objective: fitted.objective(),
            params: fitted.params,
            counts,
            metrics,
        })
    };
    run().map_err(|source| EvalError::Replicate { replicate, source })
}

/// Sequential bootstrap of `n_replicates` refits. Replicates depend only
/// on (`seed`, index), so callers may instead compute [`replicate_fit`]
/// for each index in parallel and assemble the same ensemble.
pub fn bootstrap_fit(
    dataset: &Dataset,
    config: &FeatureConfig,
    hyper: &Hyperparams,
    features: &SampleFeatures,
    plan: &SplitPlan,
    n_replicates: usize,
    seed: u64,
) -> Result<BootstrapEnsemble, EvalError> {
    if n_replicates < 2 {
        return Err(EvalError::TooFewReplicates(n_replicates));
    }
    let replicates = (0..n_replicates)
        .map(|b| replicate_fit(dataset, config, hyper, features, plan, seed, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BootstrapEnsemble {
        config: *config,
        hyper: *hyper,
        holdout: plan.holdout(),
        seed,
        replicates,
    })
}

/// Mean, percentile interval, and normal-approximation interval of one
/// metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// mean +/- 2.58 standard errors, for comparison with the percentile
    /// interval.
    pub normal_lo: f64,
    pub normal_hi: f64,
}

pub fn summarize_metric(values: &[f64], level: f64) -> MetricSummary {
    let mean = stats::mean(values);
    let (ci_lo, ci_hi) = stats::percentile_interval(values, level);
    let se = stats::std_dev(values) / crate::math::sqrt(values.len() as f64);
    MetricSummary {
        mean,
        ci_lo,
        ci_hi,
        normal_lo: mean - 2.58 * se,
        normal_hi: mean + 2.58 * se,
    }
}

/// One ablation table row.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub config: FeatureConfig,
    pub accuracy: MetricSummary,
    pub f1: MetricSummary,
    pub mcc: MetricSummary,
    pub ensemble: BootstrapEnsemble,
}

/// Bootstraps every configuration on the same split and seed, yielding
/// one row of metric summaries (99% intervals) per configuration.
pub fn ablation(
    dataset: &Dataset,
    configs: &[FeatureConfig],
    hyper: &Hyperparams,
    n_replicates: usize,
    holdout: usize,
    seed: u64,
) -> Result<Vec<AblationRow>, EvalError> {
    let plan = split(dataset, holdout)?;
    configs
        .iter()
        .map(|config| {
            let features = SampleFeatures::build(dataset, config, &plan.train_indices())
                .map_err(FitError::from)?;
            let ensemble =
                bootstrap_fit(dataset, config, hyper, &features, &plan, n_replicates, seed)?;
            Ok(AblationRow {
                config: *config,
                accuracy: summarize_metric(&ensemble.metric_values(|m| m.accuracy), 0.99),
                f1: summarize_metric(&ensemble.metric_values(|m| m.f1), 0.99),
                mcc: summarize_metric(&ensemble.metric_values(|m| m.mcc), 0.99),
                ensemble,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance two-sample t test (two-sided).
///
/// When both samples have zero variance the test degenerates: p = 1 for
/// equal means, p = 0 otherwise.
pub fn welch_t(sample_a: &[f64], sample_b: &[f64]) -> Result<WelchTest, EvalError> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(EvalError::TooFewValues);
    }
    let (ma, mb) = (stats::mean(sample_a), stats::mean(sample_b));
    let (va, vb) = (
        stats::sample_variance(sample_a),
        stats::sample_variance(sample_b),
    );
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        let equal = ma == mb;
        return Ok(WelchTest {
            t: if equal { 0.0 } else { f64::INFINITY },
            df: na + nb - 2.0,
            p: if equal { 1.0 } else { 0.0 },
        });
    }
    let t = (ma - mb) / crate::math::sqrt(se2);
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    Ok(WelchTest {
        t,
        df,
        p: stats::student_t_two_sided_p(t, df),
    })
}

/// Cohen's d with the pooled standard deviation.
pub fn cohens_d(sample_a: &[f64], sample_b: &[f64]) -> Result<f64, EvalError> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(EvalError::TooFewValues);
    }
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let pooled_var = ((na - 1.0) * stats::sample_variance(sample_a)
        + (nb - 1.0) * stats::sample_variance(sample_b))
        / (na + nb - 2.0);
    if pooled_var <= 0.0 {
        return Err(EvalError::DegenerateSpread);
    }
    Ok((stats::mean(sample_a) - stats::mean(sample_b)) / crate::math::sqrt(pooled_var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_dataset, BuildOptions, FeedbackSource, PostEvent};
    use crate::feedback::FeedbackFunctionKind;
    use alloc::format;

    fn dataset_with_users(samples_per_user: &[usize]) -> Dataset {
        let mut posts = Vec::new();
        for (u, &n) in samples_per_user.iter().enumerate() {
            for i in 0..=n {
                posts.push(PostEvent {
                    post_id: format!("u{u}p{i}"),
                    user_id: format!("u{u}"),
                    timestamp: (i as i64) * 10_000,
                    topic_id: (i % 2) as u32,
                    feedback: Some((i % 5) as f64 - 1.0),
                });
            }
        }
        let opts = BuildOptions {
            min_posts: 1,
            thread_gap_seconds: None,
            feedback_source: FeedbackSource::Column,
        };
        build_dataset(posts, &[], &opts).unwrap().0
    }

    #[test]
    fn split_examples() {
        let ds = dataset_with_users(&[10, 3, 2]);
        let plan = split(&ds, 3).unwrap();
        assert_eq!(plan.train_range(0).len(), 7);
        assert_eq!(plan.test_range(0).len(), 3);
        // A user with exactly h samples keeps them all for training.
        assert_eq!(plan.train_range(1).len(), 3);
        assert_eq!(plan.test_range(1).len(), 0);
        assert_eq!(plan.train_range(2).len(), 2);
        assert_eq!(plan.n_train() + plan.n_test(), ds.n_samples());
        assert_eq!(split(&ds, 0).unwrap_err(), EvalError::BadHoldout);
        // Test samples are each user's final ones.
        assert_eq!(plan.test_range(0), 7..10);
    }

    #[test]
    fn resample_preserves_per_user_counts_and_stays_in_train() {
        let ds = dataset_with_users(&[9, 5, 4]);
        let plan = split(&ds, 3).unwrap();
        for replicate in 0..5 {
            let resample = plan.resample_train(42, replicate);
            assert_eq!(resample.len(), plan.n_train());
            for u in 0..ds.n_users() {
                let r = plan.train_range(u);
                let drawn = resample.iter().filter(|&&i| r.contains(&i)).count();
                assert_eq!(drawn, r.len(), "user {u} count preserved");
            }
            let test = plan.test_indices();
            assert!(resample.iter().all(|i| !test.contains(i)), "no leakage");
        }
        // Determinism.
        assert_eq!(plan.resample_train(42, 1), plan.resample_train(42, 1));
        assert_ne!(plan.resample_train(42, 1), plan.resample_train(42, 2));
    }

    #[test]
    fn metric_worked_example() {
        let counts = ConfusionCounts {
            true_pos: 60,
            true_neg: 20,
            false_pos: 10,
            false_neg: 10,
        };
        let m = metrics(&counts).unwrap();
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        assert!((m.f1 - 120.0 / 140.0).abs() < 1e-15);
        assert!((m.mcc - 1100.0 / 2100.0).abs() < 1e-12);
    }

    #[test]
    fn metric_trivial_cases() {
        let balanced = ConfusionCounts {
            true_pos: 5,
            true_neg: 5,
            false_pos: 5,
            false_neg: 5,
        };
        let m = metrics(&balanced).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.mcc, 0.0);

        let perfect = ConfusionCounts {
            true_pos: 7,
            true_neg: 3,
            false_pos: 0,
            false_neg: 0,
        };
        let m = metrics(&perfect).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, 1.0);
        assert!((m.mcc - 1.0).abs() < 1e-12);

        assert_eq!(
            metrics(&ConfusionCounts::default()).unwrap_err(),
            EvalError::EmptyConfusion
        );
    }

    // The often-quoted "label swap" symmetry splits into two true halves:
    // swapping the class roles (both truth and prediction) leaves ACC and
    // MCC unchanged, while inverting only the predictions negates MCC and
    // maps ACC to 1 - ACC.
    #[test]
    fn metric_symmetries() {
        let counts = ConfusionCounts {
            true_pos: 50,
            true_neg: 22,
            false_pos: 9,
            false_neg: 19,
        };
        let m = metrics(&counts).unwrap();

        let role_swapped = ConfusionCounts {
            true_pos: counts.true_neg,
            true_neg: counts.true_pos,
            false_pos: counts.false_neg,
            false_neg: counts.false_pos,
        };
        let s = metrics(&role_swapped).unwrap();
        assert!((m.accuracy - s.accuracy).abs() < 1e-15);
        assert!((m.mcc - s.mcc).abs() < 1e-12);

        let prediction_flipped = ConfusionCounts {
            true_pos: counts.false_neg,
            true_neg: counts.false_pos,
            false_pos: counts.true_neg,
            false_neg: counts.true_pos,
        };
        let f = metrics(&prediction_flipped).unwrap();
        assert!((m.mcc + f.mcc).abs() < 1e-12);
        assert!((m.accuracy + f.accuracy - 1.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn metric_ranges_hold(tp in 0u64..400, tn in 0u64..400, fp in 0u64..400, fne in 0u64..400) {
            proptest::prop_assume!(tp + tn + fp + fne > 0);
            let m = metrics(&ConfusionCounts { true_pos: tp, true_neg: tn, false_pos: fp, false_neg: fne }).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&m.accuracy));
            proptest::prop_assert!((0.0..=1.0).contains(&m.f1));
            proptest::prop_assert!((-1.0..=1.0).contains(&m.mcc));
        }
    }

    #[test]
    fn welch_examples() {
        let a = [1.0, 2.0, 3.0];
        let same = welch_t(&a, &a).unwrap();
        assert_eq!(same.t, 0.0);
        assert!((same.p - 1.0).abs() < 1e-12);

        // Separated samples with tiny jitter.
        let lo = [0.0, 1e-6, -1e-6, 2e-6, 0.0, -2e-6];
        let hi = [1.0, 1.0 + 1e-6, 1.0 - 1e-6, 1.0 + 2e-6, 1.0, 1.0 - 2e-6];
        let sep = welch_t(&lo, &hi).unwrap();
        assert!(sep.p < 1e-12);

        // Equal variances and sizes give df = 4 exactly; samples are built
        // so |t| hits the tabulated 97.5% quantile, hence p = 0.05.
        let m = 2.7764451051977987 * (2.0f64 / 3.0).sqrt();
        let a = [0.0, 1.0, 2.0];
        let b = [m, m + 1.0, m + 2.0];
        let table = welch_t(&a, &b).unwrap();
        assert!((table.df - 4.0).abs() < 1e-9);
        assert!((table.t + 2.7764451051977987).abs() < 1e-9);
        assert!((table.p - 0.05).abs() < 1e-6);

        // Degenerate conventions.
        let flat = [2.0, 2.0, 2.0];
        let other = [3.0, 3.0, 3.0];
        assert_eq!(welch_t(&flat, &flat).unwrap().p, 1.0);
        assert_eq!(welch_t(&flat, &other).unwrap().p, 0.0);
    }

    #[test]
    fn cohens_d_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(cohens_d(&a, &a).unwrap(), 0.0);

        // Means 1 and 0 with pooled SD 1 (each arm mean +/- 1/sqrt(2)).
        let s = 1.0 / (2.0f64).sqrt();
        let x = [1.0 - s, 1.0 + s];
        let y = [-s, s];
        assert!((cohens_d(&x, &y).unwrap() - 1.0).abs() < 1e-12);

        // Means 3 and 1 with pooled SD 0.5 -> d = 4.
        let s = 0.5 / (2.0f64).sqrt();
        let x = [3.0 - s, 3.0 + s];
        let y = [1.0 - s, 1.0 + s];
        assert!((cohens_d(&x, &y).unwrap() - 4.0).abs() < 1e-12);

        let flat = [1.0, 1.0];
        assert_eq!(
            cohens_d(&flat, &flat).unwrap_err(),
            EvalError::DegenerateSpread
        );
    }

    #[test]
    fn bootstrap_is_deterministic_in_seed() {
        let ds = dataset_with_users(&[8, 7, 6, 9]);
        let config = FeatureConfig {
            use_propensity: true,
            use_preference: true,
            use_trend: false,
            use_feedback: true,
            feedback_fn: FeedbackFunctionKind::Identity,
        };
        let plan = split(&ds, 3).unwrap();
        let features = SampleFeatures::build(&ds, &config, &plan.train_indices()).unwrap();
        let hyper = Hyperparams::with_betas(0.1, 0.0);
        let a = bootstrap_fit(&ds, &config, &hyper, &features, &plan, 2, 7).unwrap();
        let b = bootstrap_fit(&ds, &config, &hyper, &features, &plan, 2, 7).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_fit(&ds, &config, &hyper, &features, &plan, 2, 8).unwrap();
        assert_ne!(a, c);
        assert_eq!(bootstrap_fit(&ds, &config, &hyper, &features, &plan, 1, 7)
            .unwrap_err(), EvalError::TooFewReplicates(1));
    }

    #[test]
    fn null_config_accuracy_is_test_base_rate() {
        let ds = dataset_with_users(&[12, 11, 10]);
        let rows = ablation(&ds, &[FeatureConfig::none()], &Hyperparams::default(), 3, 3, 1)
            .unwrap();
        let plan = split(&ds, 3).unwrap();
        let test = plan.test_indices();
        let base_rate = test
            .iter()
            .filter(|&&i| ds.samples()[i].label)
            .count() as f64
            / test.len() as f64;
        // All predictions are 0.5 -> thresholded to "continue" -> accuracy
        // equals the continuation rate of the test set, with zero spread.
        assert!((rows[0].accuracy.mean - base_rate).abs() < 1e-12);
        assert_eq!(rows[0].accuracy.ci_lo, rows[0].accuracy.ci_hi);
    }

    #[test]
    fn duplicate_ablation_configs_match() {
        let ds = dataset_with_users(&[8, 8, 8]);
        let config = FeatureConfig {
            use_propensity: true,
            use_preference: false,
            use_trend: false,
            use_feedback: false,
            feedback_fn: FeedbackFunctionKind::Identity,
        };
        let rows = ablation(
            &ds,
            &[config, config],
            &Hyperparams::with_betas(0.1, 1.0),
            3,
            3,
            9,
        )
        .unwrap();
        assert_eq!(rows[0].accuracy, rows[1].accuracy);
        assert_eq!(rows[0].ensemble, rows[1].ensemble);
    }
}
