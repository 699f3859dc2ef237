//! The analytic smooth gradient against a central finite-difference
//! oracle, on randomized small instances.

mod common;

use common::{random_instance, random_params};
use feedfx_core::feedback::FeedbackFunctionKind;
use feedfx_core::model::{FeatureConfig, ModelParams, SampleFeatures};
use feedfx_core::optim::{FitProblem, Hyperparams};
use feedfx_core::rng::substream;
use rand::Rng;

fn config() -> FeatureConfig {
    FeatureConfig::full().with_feedback_fn(FeedbackFunctionKind::Identity)
}

/// Max relative error between the analytic gradient and central finite
/// differences of the smooth objective (beta_u = 0 makes the full
/// objective smooth, so plain objective differences are the oracle).
fn max_rel_error(problem: &FitProblem, params: &ModelParams, beta_g: f64) -> f64 {
    let hyper = Hyperparams {
        beta_u: 0.0,
        beta_g,
        ..Hyperparams::default()
    };
    let grad = problem.smooth_gradient(params, &hyper);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut probe = |write: &mut dyn FnMut(&mut ModelParams, f64), analytic: f64| {
        let mut plus = params.clone();
        write(&mut plus, h);
        let mut minus = params.clone();
        write(&mut minus, -h);
        let fd = (problem.objective(&plus, &hyper) - problem.objective(&minus, &hyper)) / (2.0 * h);
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1.0);
        worst = worst.max(rel);
    };
    for u in 0..params.propensity.len() {
        probe(&mut |p, d| p.propensity[u] += d, grad.propensity[u]);
        probe(&mut |p, d| p.susceptibility[u] += d, grad.susceptibility[u]);
    }
    probe(&mut |p, d| p.preference_weight += d, grad.preference_weight);
    for i in 0..params.trend.len() {
        probe(&mut |p, d| p.trend[i] += d, grad.trend[i]);
    }
    worst
}

#[test]
fn twenty_randomized_instances_under_1e5() {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let mut rng = substream(0xFD, "fd-instance", i);
        let n_users = rng.random_range(1..=5);
        let n_topics = rng.random_range(2..=3);
        let n_days = rng.random_range(1..=4);
        let ds = random_instance(&mut rng, n_users, n_topics, n_days, 12);
        let features = SampleFeatures::build(
            &ds,
            &config(),
            &(0..ds.n_samples()).collect::<Vec<_>>(),
        )
        .unwrap();
        let include: Vec<usize> = (0..ds.n_samples()).collect();
        let problem = FitProblem::new(&ds, &config(), &features, &include).unwrap();
        let params = random_params(&mut rng, ds.dims());
        let beta_g = rng.random::<f64>() * 10.0;
        let err = max_rel_error(&problem, &params, beta_g);
        worst = worst.max(err);
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

proptest::proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(48))]
    #[test]
    fn gradient_matches_fd(seed in 0u64..1_000_000, n_users in 1usize..4, n_days in 1usize..4) {
        let mut rng = substream(seed, "fd-prop", 0);
        let ds = random_instance(&mut rng, n_users, 2, n_days, 10);
        let features = SampleFeatures::build(
            &ds,
            &config(),
            &(0..ds.n_samples()).collect::<Vec<_>>(),
        ).unwrap();
        let include: Vec<usize> = (0..ds.n_samples()).collect();
        let problem = FitProblem::new(&ds, &config(), &features, &include).unwrap();
        let params = random_params(&mut rng, ds.dims());
        proptest::prop_assert!(max_rel_error(&problem, &params, 2.5) < 1e-5);
    }
}
