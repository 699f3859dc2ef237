//! Shared fixtures for the integration tests.
//!
//! Each test target compiles this module separately and uses a subset.
#![allow(dead_code)]

use feedfx_core::data::{build_dataset, BuildOptions, Dataset, FeedbackSource, PostEvent};
use feedfx_core::model::{ModelDims, ModelParams};
use rand::Rng;
use rand_pcg::Pcg64;

/// Random small instance: `n_users` users, random topics over `n_topics`,
/// timestamps inside `n_days` days, a real-valued feedback column.
pub fn random_instance(
    rng: &mut Pcg64,
    n_users: usize,
    n_topics: usize,
    n_days: usize,
    posts_per_user: usize,
) -> Dataset {
    let day = 86_400i64;
    let mut posts = Vec::new();
    for u in 0..n_users {
        let mut ts: Vec<i64> = (0..posts_per_user)
            .map(|_| rng.random_range(0..n_days as i64 * day))
            .collect();
        ts.sort_unstable();
        for (i, &t) in ts.iter().enumerate() {
            posts.push(PostEvent {
                post_id: format!("u{u}p{i}"),
                user_id: format!("u{u}"),
                timestamp: t,
                topic_id: rng.random_range(0..n_topics as u32),
                feedback: Some(rng.random::<f64>() * 4.0 - 2.0),
            });
        }
    }
    // Pin the day-bin count: one early and one late post for user 0.
    posts[0].timestamp = 0;
    posts[posts_per_user - 1].timestamp = n_days as i64 * day - 1;
    let opts = BuildOptions {
        min_posts: 2,
        thread_gap_seconds: None,
        feedback_source: FeedbackSource::Column,
    };
    build_dataset(posts, &[], &opts).unwrap().0
}

pub fn random_params(rng: &mut Pcg64, dims: ModelDims) -> ModelParams {
    let mut params = ModelParams::zeros(dims);
    for a in params.propensity.iter_mut() {
        *a = rng.random::<f64>() * 2.0 - 1.0;
    }
    params.preference_weight = rng.random::<f64>() * 2.0 - 1.0;
    for g in params.trend.iter_mut() {
        *g = rng.random::<f64>() * 2.0 - 1.0;
    }
    for s in params.susceptibility.iter_mut() {
        *s = rng.random::<f64>() * 2.0 - 1.0;
    }
    params
}
