//! Estimates how community feedback influences a social-media author's
//! decision to continue the topic of their previous post.
//!
//! The crate fits an interpretable regularized logistic model of topic
//! continuation with four additive components: a per-user propensity, a
//! per-user topic preference, a latent daily topic trend shared by all
//! users, and a per-user susceptibility to the feedback the previous post
//! received. The trend acts as a confounder control: exogenous events
//! (news, sports, elections) shift both feedback volume and continuation
//! behavior, and a model without the trend badly over-detects feedback
//! effects. A built-in synthetic generator with known ground truth
//! validates the estimator end to end.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the
//! default `std` feature to use it in that configuration. File formats,
//! the CLI, and parallel bootstrap execution live in the companion
//! `feedfx-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod eval;
pub mod feedback;
pub mod math;
pub mod model;
pub mod optim;
pub mod rng;
pub mod stats;
pub mod suscept;
pub mod synth;

pub use data::{BuildOptions, Dataset, FeedbackEvent, IngestStats, PostEvent, Sample};
pub use eval::{BootstrapEnsemble, ConfusionCounts, Metrics, SplitPlan};
pub use feedback::{FeedbackFunctionKind, FeedbackTransform};
pub use model::{FeatureConfig, ModelDims, ModelParams, SampleFeatures, TopicPreferenceTable};
pub use optim::{FitResult, Hyperparams};
pub use suscept::{SusceptibilityClass, SusceptibilityReport};
pub use synth::{GroundTruth, SynthConfig};
