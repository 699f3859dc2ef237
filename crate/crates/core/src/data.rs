//! Event-log data model: posts, feedback, and the per-user sequence of
//! topic-continuation samples built from them.
//!
//! A sample is one decision point: the author of post `p_j` publishes
//! `p_{j+1}`, and the label records whether the topic was continued. The
//! feedback attached to the sample is whatever `p_j` received strictly
//! before `p_{j+1}` existed, so it could causally influence the decision.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// A post (submission, tweet, ...) from the platform log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PostEvent {
    pub post_id: String,
    pub user_id: String,
    /// Seconds since epoch.
    pub timestamp: i64,
    pub topic_id: u32,
    /// Precomputed feedback quantity received by this post before the
    /// author's next one (generic-mode column); `None` when unknown.
    pub feedback: Option<f64>,
}

/// One piece of feedback (comment, retweet, ...) to a post.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeedbackEvent {
    pub post_id: String,
    /// Seconds since epoch.
    pub timestamp: i64,
}

/// One topic-continuation decision.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    /// Dense user index in `[0, n_users)`.
    pub user_idx: usize,
    /// Dense topic index of the *previous* post.
    pub topic_idx: usize,
    /// Day bin of the *current* post's timestamp.
    pub day_idx: usize,
    /// Raw feedback quantity for the previous post (count, or a
    /// precomputed real value in generic mode); `None` when the feedback
    /// could not be attributed.
    pub feedback: Option<f64>,
    /// Seconds between previous and current post; clamped to >= 1.
    pub delta_t: i64,
    /// Whether the current post continued the previous post's topic.
    pub label: bool,
    /// Ordinal of this sample within the user's sequence.
    pub position: usize,
}

/// How per-sample feedback quantities are sourced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSource {
    /// No feedback information; feedback-enabled fits will reject this.
    None,
    /// Timestamped feedback events, causally censored at the next post.
    Events,
    /// Per-post precomputed quantity from the posts file itself.
    Column,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Users with fewer posts than this are removed entirely.
    pub min_posts: usize,
    /// Drop a post when it follows its predecessor within this many
    /// seconds (thread removal); `None` disables the filter.
    pub thread_gap_seconds: Option<i64>,
    pub feedback_source: FeedbackSource,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            min_posts: 50,
            thread_gap_seconds: None,
            feedback_source: FeedbackSource::None,
        }
    }
}

/// Data-quality counters accumulated during dataset construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IngestStats {
    pub posts_in: u64,
    /// Posts discarded by the thread filter.
    pub thread_filtered: u64,
    /// Users removed by the activity filter.
    pub users_filtered: u64,
    /// Posts belonging to removed users.
    pub posts_of_filtered_users: u64,
    /// Users dropped because they retained fewer than two posts.
    pub users_without_samples: u64,
    /// Feedback events that referenced no retained post.
    pub dangling_feedback: u64,
    /// Samples whose inter-post gap was non-positive and clamped to 1 s.
    pub clamped_delta_t: u64,
    /// Samples with an unattributable feedback quantity.
    pub missing_feedback: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DataError {
    #[error("no samples remain after filtering")]
    NoSamples,
    #[error("duplicate post id `{0}`")]
    DuplicatePostId(String),
    #[error("min_posts must be >= 1")]
    BadMinPosts,
}

/// Immutable sample store, grouped by user in posting order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    samples: Vec<Sample>,
    /// CSR offsets: user u owns `samples[user_offsets[u]..user_offsets[u+1]]`.
    user_offsets: Vec<usize>,
    n_topics: usize,
    n_days: usize,
    /// Dense index -> original identifier.
    user_ids: Vec<String>,
    /// Dense index -> original topic id.
    topic_ids: Vec<u32>,
    /// Retained posts per user (samples + 1).
    post_counts: Vec<usize>,
    /// Retained posts per (topic, day) cell, row-major K x M.
    topic_day_posts: Vec<u64>,
    /// Timestamp anchoring day bin 0 (minimum retained post timestamp).
    anchor_ts: i64,
}

impl Dataset {
    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn user_range(&self, user: usize) -> core::ops::Range<usize> {
        self.user_offsets[user]..self.user_offsets[user + 1]
    }

    pub fn user_samples(&self, user: usize) -> &[Sample] {
        &self.samples[self.user_range(user)]
    }

    pub fn user_id(&self, user: usize) -> &str {
        &self.user_ids[user]
    }

    pub fn topic_id(&self, topic: usize) -> u32 {
        self.topic_ids[topic]
    }

    pub fn post_count(&self, user: usize) -> usize {
        self.post_counts[user]
    }

    /// Number of retained posts on `topic` during day bin `day`.
    pub fn topic_day_post_count(&self, topic: usize, day: usize) -> u64 {
        self.topic_day_posts[topic * self.n_days + day]
    }

    pub fn anchor_ts(&self) -> i64 {
        self.anchor_ts
    }

    /// Midpoint timestamp of a day bin.
    pub fn day_center_ts(&self, day: usize) -> f64 {
        self.anchor_ts as f64 + (day as f64 + 0.5) * SECONDS_PER_DAY as f64
    }

    pub fn dims(&self) -> crate::model::ModelDims {
        crate::model::ModelDims {
            n_users: self.n_users(),
            n_topics: self.n_topics,
            n_days: self.n_days,
        }
    }
}

/// Removes all posts of users with fewer than `min_posts` posts.
pub fn activity_filter(posts: Vec<PostEvent>, min_posts: usize) -> Vec<PostEvent> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &posts {
        *counts.entry(p.user_id.as_str()).or_default() += 1;
    }
    let keep: alloc::collections::BTreeSet<String> = counts
        .iter()
        .filter(|(_, &c)| c >= min_posts)
        .map(|(u, _)| String::from(*u))
        .collect();
    posts
        .into_iter()
        .filter(|p| keep.contains(p.user_id.as_str()))
        .collect()
}

/// Builds the dataset: groups posts per user, applies the thread and
/// activity filters, then emits one sample per consecutive post pair.
pub fn build_dataset(
    posts: Vec<PostEvent>,
    feedback: &[FeedbackEvent],
    options: &BuildOptions,
) -> Result<(Dataset, IngestStats), DataError> {
    if options.min_posts == 0 {
        return Err(DataError::BadMinPosts);
    }
    let mut stats = IngestStats {
        posts_in: posts.len() as u64,
        ..IngestStats::default()
    };

    // Group by user, preserving first-appearance order for dense indices.
    let mut user_order: Vec<String> = Vec::new();
    let mut by_user: BTreeMap<String, Vec<PostEvent>> = BTreeMap::new();
    for p in posts {
        if !by_user.contains_key(&p.user_id) {
            user_order.push(p.user_id.clone());
        }
        by_user.entry(p.user_id.clone()).or_default().push(p);
    }

    let mut kept: Vec<(String, Vec<PostEvent>)> = Vec::with_capacity(user_order.len());
    for uid in user_order {
        let mut user_posts = by_user.remove(&uid).expect("grouped above");
        user_posts.sort_by_key(|p| p.timestamp);
        if let Some(gap) = options.thread_gap_seconds {
            let before = user_posts.len();
            user_posts = drop_thread_posts(user_posts, gap);
            stats.thread_filtered += (before - user_posts.len()) as u64;
        }
        if user_posts.len() < options.min_posts {
            stats.users_filtered += 1;
            stats.posts_of_filtered_users += user_posts.len() as u64;
            continue;
        }
        if user_posts.len() < 2 {
            // A lone post yields no continuation decision.
            stats.users_without_samples += 1;
            continue;
        }
        kept.push((uid, user_posts));
    }
    if kept.is_empty() {
        return Err(DataError::NoSamples);
    }

    // Post ids must be unique so feedback attribution is well defined.
    let mut post_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut flat_idx = 0usize;
    for (_, user_posts) in &kept {
        for p in user_posts {
            if post_index.insert(p.post_id.as_str(), flat_idx).is_some() {
                return Err(DataError::DuplicatePostId(p.post_id.clone()));
            }
            flat_idx += 1;
        }
    }

    // Sorted feedback timestamps per retained post.
    let mut feedback_ts: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    if options.feedback_source == FeedbackSource::Events {
        for ev in feedback {
            match post_index.get(ev.post_id.as_str()) {
                Some(&idx) => feedback_ts.entry(idx).or_default().push(ev.timestamp),
                None => stats.dangling_feedback += 1,
            }
        }
        for ts in feedback_ts.values_mut() {
            ts.sort_unstable();
        }
    }

    // Dense topic indices, ordered by original topic id.
    let mut topic_ids: Vec<u32> = kept
        .iter()
        .flat_map(|(_, ps)| ps.iter().map(|p| p.topic_id))
        .collect();
    topic_ids.sort_unstable();
    topic_ids.dedup();
    let topic_map: BTreeMap<u32, usize> = topic_ids
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i))
        .collect();

    let anchor_ts = kept
        .iter()
        .map(|(_, ps)| ps[0].timestamp)
        .min()
        .expect("non-empty");
    let max_ts = kept
        .iter()
        .flat_map(|(_, ps)| ps.iter().map(|p| p.timestamp))
        .max()
        .expect("non-empty");
    // floor + 1 rather than a pure ceiling so a post at the exact final
    // day boundary still lands inside [0, n_days).
    let n_days = ((max_ts - anchor_ts) / SECONDS_PER_DAY + 1) as usize;
    let n_topics = topic_ids.len();

    let mut samples: Vec<Sample> = Vec::new();
    let mut user_offsets: Vec<usize> = Vec::with_capacity(kept.len() + 1);
    let mut user_ids: Vec<String> = Vec::with_capacity(kept.len());
    let mut post_counts: Vec<usize> = Vec::with_capacity(kept.len());
    let mut topic_day_posts = alloc::vec![0u64; n_topics * n_days];
    user_offsets.push(0);

    let mut flat_idx = 0usize;
    for (uid, user_posts) in &kept {
        for p in user_posts {
            let topic = topic_map[&p.topic_id];
            let day = ((p.timestamp - anchor_ts) / SECONDS_PER_DAY) as usize;
            topic_day_posts[topic * n_days + day] += 1;
        }
        for (pos, pair) in user_posts.windows(2).enumerate() {
            let (prev, cur) = (&pair[0], &pair[1]);
            let mut delta_t = cur.timestamp - prev.timestamp;
            if delta_t <= 0 {
                delta_t = 1;
                stats.clamped_delta_t += 1;
            }
            let feedback = match options.feedback_source {
                FeedbackSource::None => None,
                FeedbackSource::Events => {
                    // Strictly-before censoring: feedback arriving at the
                    // exact moment of the next post cannot have caused it.
                    let n = feedback_ts
                        .get(&(flat_idx + pos))
                        .map(|ts| ts.partition_point(|&t| t < cur.timestamp))
                        .unwrap_or(0);
                    Some(n as f64)
                }
                FeedbackSource::Column => prev.feedback,
            };
            if feedback.is_none() && options.feedback_source != FeedbackSource::None {
                stats.missing_feedback += 1;
            }
            samples.push(Sample {
                user_idx: user_ids.len(),
                topic_idx: topic_map[&prev.topic_id],
                day_idx: ((cur.timestamp - anchor_ts) / SECONDS_PER_DAY) as usize,
                feedback,
                delta_t,
                label: cur.topic_id == prev.topic_id,
                position: pos,
            });
        }
        flat_idx += user_posts.len();
        user_ids.push(uid.clone());
        post_counts.push(user_posts.len());
        user_offsets.push(samples.len());
    }

    Ok((
        Dataset {
            samples,
            user_offsets,
            n_topics,
            n_days,
            user_ids,
            topic_ids,
            post_counts,
            topic_day_posts,
            anchor_ts,
        },
        stats,
    ))
}

/// Keeps a post only when it arrives at least `gap` seconds after the
/// previously kept one, collapsing quick-succession threads to their
/// first post.
fn drop_thread_posts(sorted: Vec<PostEvent>, gap: i64) -> Vec<PostEvent> {
    let mut out: Vec<PostEvent> = Vec::with_capacity(sorted.len());
    for p in sorted {
        match out.last() {
            Some(last) if p.timestamp - last.timestamp < gap => {}
            _ => out.push(p),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn post(id: &str, user: &str, ts: i64, topic: u32) -> PostEvent {
        PostEvent {
            post_id: id.to_string(),
            user_id: user.to_string(),
            timestamp: ts,
            topic_id: topic,
            feedback: None,
        }
    }

    fn fb(post_id: &str, ts: i64) -> FeedbackEvent {
        FeedbackEvent {
            post_id: post_id.to_string(),
            timestamp: ts,
        }
    }

    fn opts(min_posts: usize, source: FeedbackSource) -> BuildOptions {
        BuildOptions {
            min_posts,
            thread_gap_seconds: None,
            feedback_source: source,
        }
    }

    #[test]
    fn two_posts_one_sample_with_censored_count() {
        let posts = vec![post("a", "u", 0, 3), post("b", "u", 3600, 3)];
        let feedback = vec![fb("a", 10), fb("a", 20), fb("a", 30), fb("a", 3600)];
        let (ds, stats) =
            build_dataset(posts, &feedback, &opts(1, FeedbackSource::Events)).unwrap();
        assert_eq!(ds.n_samples(), 1);
        let s = &ds.samples()[0];
        assert!(s.label);
        // The event at exactly t(next) is not counted.
        assert_eq!(s.feedback, Some(3.0));
        assert_eq!(s.delta_t, 3600);
        assert_eq!(stats.dangling_feedback, 0);
    }

    #[test]
    fn single_post_yields_no_samples() {
        let posts = vec![post("a", "u", 0, 0)];
        let err = build_dataset(posts, &[], &opts(1, FeedbackSource::None)).unwrap_err();
        assert_eq!(err, DataError::NoSamples);
    }

    #[test]
    fn thread_filter_discards_second_post() {
        let posts = vec![post("a", "u", 100, 0), post("b", "u", 120, 0)];
        let options = BuildOptions {
            min_posts: 1,
            thread_gap_seconds: Some(30),
            feedback_source: FeedbackSource::None,
        };
        let err = build_dataset(posts, &[], &options).unwrap_err();
        assert_eq!(err, DataError::NoSamples);
    }

    #[test]
    fn activity_filter_boundary() {
        let mut posts: Vec<PostEvent> = (0..49)
            .map(|i| post(&format!("a{i}"), "low", i, 0))
            .collect();
        posts.extend((0..50).map(|i| post(&format!("b{i}"), "high", i, 0)));
        let kept = activity_filter(posts.clone(), 50);
        assert!(kept.iter().all(|p| p.user_id == "high"));
        assert_eq!(kept.len(), 50);
        // min_posts = 1 is the identity.
        assert_eq!(activity_filter(posts.clone(), 1), posts);
    }

    #[test]
    fn labels_follow_topic_runs() {
        let posts = vec![
            post("a", "u", 0, 7),
            post("b", "u", 10, 7),
            post("c", "u", 20, 9),
        ];
        let (ds, _) = build_dataset(posts, &[], &opts(1, FeedbackSource::None)).unwrap();
        let labels: Vec<bool> = ds.samples().iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![true, false]);
        // Topic ids 7 and 9 map to dense 0 and 1 by sorted order.
        assert_eq!(ds.samples()[0].topic_idx, 0);
        assert_eq!(ds.samples()[1].topic_idx, 0);
        assert_eq!(ds.n_topics(), 2);
    }

    #[test]
    fn equal_timestamps_clamped_not_dropped() {
        let posts = vec![post("a", "u", 5, 0), post("b", "u", 5, 1)];
        let (ds, stats) = build_dataset(posts, &[], &opts(1, FeedbackSource::None)).unwrap();
        assert_eq!(ds.n_samples(), 1);
        assert_eq!(ds.samples()[0].delta_t, 1);
        assert_eq!(stats.clamped_delta_t, 1);
    }

    #[test]
    fn day_bins_cover_the_range() {
        let posts = vec![
            post("a", "u", 1000, 0),
            post("b", "u", 1000 + SECONDS_PER_DAY, 0),
            post("c", "u", 1000 + 3 * SECONDS_PER_DAY, 0),
        ];
        let (ds, _) = build_dataset(posts, &[], &opts(1, FeedbackSource::None)).unwrap();
        // Exact multiple of a day still indexes in range.
        assert_eq!(ds.n_days(), 4);
        assert_eq!(ds.samples()[0].day_idx, 1);
        assert_eq!(ds.samples()[1].day_idx, 3);
        assert_eq!(ds.anchor_ts(), 1000);
    }

    #[test]
    fn duplicate_post_id_rejected() {
        let posts = vec![post("a", "u", 0, 0), post("a", "u", 10, 0)];
        let err = build_dataset(posts, &[], &opts(1, FeedbackSource::None)).unwrap_err();
        assert_eq!(err, DataError::DuplicatePostId("a".to_string()));
    }

    #[test]
    fn dangling_feedback_counted() {
        let posts = vec![post("a", "u", 0, 0), post("b", "u", 10, 0)];
        let feedback = vec![fb("zzz", 5), fb("a", 5)];
        let (ds, stats) =
            build_dataset(posts, &feedback, &opts(1, FeedbackSource::Events)).unwrap();
        assert_eq!(stats.dangling_feedback, 1);
        assert_eq!(ds.samples()[0].feedback, Some(1.0));
    }

    #[test]
    fn column_mode_missing_values_flagged() {
        let mut p0 = post("a", "u", 0, 0);
        p0.feedback = Some(2.5);
        let p1 = post("b", "u", 10, 0); // no column value
        let p2 = post("c", "u", 20, 1);
        let (ds, stats) =
            build_dataset(vec![p0, p1, p2], &[], &opts(1, FeedbackSource::Column)).unwrap();
        assert_eq!(ds.samples()[0].feedback, Some(2.5));
        assert_eq!(ds.samples()[1].feedback, None);
        assert_eq!(stats.missing_feedback, 1);
    }

    #[test]
    fn sample_count_identity_and_day_monotonicity() {
        // users: 5, 3, and 2 posts after filters -> 4 + 2 + 1 samples.
        let mut posts = Vec::new();
        for (u, n) in [("a", 5), ("b", 3), ("c", 2)] {
            for i in 0..n {
                posts.push(post(&format!("{u}{i}"), u, i * 40_000, (i % 2) as u32));
            }
        }
        let (ds, _) = build_dataset(posts, &[], &opts(2, FeedbackSource::None)).unwrap();
        assert_eq!(ds.n_samples(), 4 + 2 + 1);
        assert_eq!(ds.n_users(), 3);
        for u in 0..ds.n_users() {
            let days: Vec<usize> = ds.user_samples(u).iter().map(|s| s.day_idx).collect();
            assert!(days.windows(2).all(|w| w[0] <= w[1]));
        }
        let total_posts: usize = (0..ds.n_users()).map(|u| ds.post_count(u)).sum();
        assert_eq!(ds.n_samples(), total_posts - ds.n_users());
    }

    #[test]
    fn reingestion_is_bit_identical() {
        let posts: Vec<PostEvent> = (0..6)
            .map(|i| post(&format!("p{i}"), "u", i * 1000, (i % 3) as u32))
            .collect();
        let feedback: Vec<FeedbackEvent> =
            (0..20).map(|i| fb(&format!("p{}", i % 6), i * 37)).collect();
        let options = opts(1, FeedbackSource::Events);
        let (a, sa) = build_dataset(posts.clone(), &feedback, &options).unwrap();
        let (b, sb) = build_dataset(posts, &feedback, &options).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }
}
