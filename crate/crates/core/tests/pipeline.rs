//! Library-level pipeline checks on small synthetic data: ablation gains,
//! interval calibration, trend recovery, and the feedback-rescaling
//! invariance of the susceptibility classes.

use feedfx_core::data::{build_dataset, BuildOptions, FeedbackSource};
use feedfx_core::eval::{ablation, bootstrap_fit, split};
use feedfx_core::feedback::FeedbackFunctionKind;
use feedfx_core::model::{predict_indices, FeatureConfig, SampleFeatures};
use feedfx_core::optim::{FitProblem, Hyperparams};
use feedfx_core::stats;
use feedfx_core::suscept::{classify, significant_runs, trend_significance};
use feedfx_core::synth::{generate, generate_events, SynthConfig};

fn small_synth(seed: u64, confound: f64, n_users: usize) -> SynthConfig {
    SynthConfig {
        n_users,
        confound,
        min_posts: 25,
        rate_per_day: (2.5, 12.0),
        ..SynthConfig::confounded_preset(seed)
    }
}

/// Like the full preset but with fewer users; per-user activity is kept
/// at preset levels so per-cell statistics stay meaningful.
fn mid_synth(seed: u64, n_users: usize) -> SynthConfig {
    SynthConfig {
        n_users,
        ..SynthConfig::confounded_preset(seed)
    }
}

fn identity(features: &str) -> FeatureConfig {
    FeatureConfig::parse_features(features)
        .unwrap()
        .with_feedback_fn(FeedbackFunctionKind::Identity)
}

#[test]
fn trend_feature_lifts_accuracy_on_confounded_data() {
    let (ds, _) = generate(&small_synth(41, 1.0, 80)).unwrap();
    let rows = ablation(
        &ds,
        &[identity("prop,feedback"), identity("prop,trend,feedback")],
        &Hyperparams::default(),
        8,
        3,
        5,
    )
    .unwrap();
    assert!(
        rows[1].accuracy.mean > rows[0].accuracy.mean,
        "with trend {} <= without {}",
        rows[1].accuracy.mean,
        rows[0].accuracy.mean
    );
}

#[test]
fn bootstrap_interval_contains_point_estimate() {
    // Calibration smoke test: the 99% accuracy interval should cover the
    // full-training-set point estimate in >= 95% of trials.
    let mut covered = 0;
    let trials = 20;
    for trial in 0..trials {
        let (ds, _) = generate(&small_synth(1000 + trial, 0.0, 40)).unwrap();
        let config = identity("trend,feedback");
        let plan = split(&ds, 3).unwrap();
        let features = SampleFeatures::build(&ds, &config, &plan.train_indices()).unwrap();
        let hyper = Hyperparams::default();

        let train = features.eligible(&config, plan.train_indices());
        let test = features.eligible(&config, plan.test_indices());
        let point = FitProblem::new(&ds, &config, &features, &train)
            .unwrap()
            .fit(&hyper, None)
            .unwrap();
        let probs = predict_indices(&point.params, &config, &ds, &features, &test).unwrap();
        let labels: Vec<bool> = test.iter().map(|&i| ds.samples()[i].label).collect();
        let point_acc = feedfx_core::eval::confusion(&labels, &probs).accuracy();

        let ens = bootstrap_fit(&ds, &config, &hyper, &features, &plan, 40, 99 + trial).unwrap();
        let (lo, hi) = stats::percentile_interval(&ens.metric_values(|m| m.accuracy), 0.99);
        if (lo..=hi).contains(&point_acc) {
            covered += 1;
        }
    }
    assert!(
        covered as f64 >= 0.95 * trials as f64,
        "covered only {covered}/{trials}"
    );
}

#[test]
fn recovered_trend_correlates_with_truth() {
    // Topic 0 decays over seven day bins; its shape must be recovered
    // already at a few hundred users. (Topic 1 leaves only three
    // post-event bins, so its correlation is checked at full scale by
    // the acceptance suite.)
    let (ds, truth) = generate(&mid_synth(7, 300)).unwrap();
    let config = identity("trend,feedback");
    let plan = split(&ds, 3).unwrap();
    let features = SampleFeatures::build(&ds, &config, &plan.train_indices()).unwrap();
    let train = features.eligible(&config, plan.train_indices());
    let fitted = FitProblem::new(&ds, &config, &features, &train)
        .unwrap()
        .fit(&Hyperparams::default(), None)
        .unwrap();
    let event_day = truth.events[0].at_days;
    let mut est = Vec::new();
    let mut tru = Vec::new();
    for day in 0..ds.n_days() {
        let center = ds.day_center_ts(day);
        if (center - truth.epoch_start as f64) / 86_400.0 > event_day {
            est.push(fitted.params.trend_at(0, day));
            tru.push(truth.trend_at_ts(0, center));
        }
    }
    let r = stats::pearson(&est, &tru);
    assert!(r >= 0.9, "pearson {r}");
}

#[test]
fn significant_run_starts_near_the_event() {
    let (ds, truth) = generate(&mid_synth(3, 300)).unwrap();
    let config = identity("trend,feedback");
    let plan = split(&ds, 3).unwrap();
    let features = SampleFeatures::build(&ds, &config, &plan.train_indices()).unwrap();
    let ens = bootstrap_fit(
        &ds,
        &config,
        &Hyperparams::default(),
        &features,
        &plan,
        12,
        3,
    )
    .unwrap();
    let trend = trend_significance(&ens, 0.95, 3).unwrap();
    let runs = significant_runs(&trend);
    // Topic 0's event sits at day 3 of 10: expect a run starting within a
    // day of it (smoothing may pull the onset one bin early).
    let event_day = truth.events[0].at_days;
    let first = runs[0].first().expect("topic 0 has a significant run");
    assert!(
        (first.start as f64 - event_day).abs() <= 1.0,
        "run starts at {} vs event {event_day}",
        first.start
    );
}

// Scaling every feedback value by a positive constant rescales the fitted
// susceptibilities by its inverse and leaves the classes unchanged.
#[test]
fn classes_invariant_under_feedback_rescaling() {
    let config = small_synth(23, 1.0, 60);
    let (posts, _) = generate_events(&config).unwrap();
    let scale = 3.0;
    let mut scaled_posts = posts.clone();
    for p in scaled_posts.iter_mut() {
        p.feedback = p.feedback.map(|f| f * scale);
    }
    let opts = BuildOptions {
        min_posts: config.min_posts,
        thread_gap_seconds: None,
        feedback_source: FeedbackSource::Column,
    };
    let (ds, _) = build_dataset(posts, &[], &opts).unwrap();
    let (ds_scaled, _) = build_dataset(scaled_posts, &[], &opts).unwrap();

    let model = identity("trend,feedback");
    let hyper = Hyperparams {
        tol: 1e-10,
        ..Hyperparams::default()
    };
    let run = |data: &feedfx_core::data::Dataset| {
        let plan = split(data, 3).unwrap();
        let features = SampleFeatures::build(data, &model, &plan.train_indices()).unwrap();
        bootstrap_fit(data, &model, &hyper, &features, &plan, 10, 17).unwrap()
    };
    let base = run(&ds);
    let scaled = run(&ds_scaled);

    let classes_base: Vec<_> = classify(&base, 0.99).unwrap();
    let classes_scaled: Vec<_> = classify(&scaled, 0.99).unwrap();
    for u in 0..ds.n_users() {
        assert_eq!(classes_base[u].class, classes_scaled[u].class, "user {u}");
        // The 1/scale identity holds at interior optima; users whose
        // likelihood is (quasi-)separable drift toward infinity and stop
        // only on the tolerance, so they are excluded from the ratio
        // check. True susceptibilities here are 0 or 1.
        let a = classes_base[u].mean;
        let b = classes_scaled[u].mean * scale;
        if a.abs() < 2.5 {
            assert!(
                (a - b).abs() <= 1e-3 * a.abs().max(1.0),
                "user {u}: {a} vs rescaled {b}"
            );
        }
    }
}
