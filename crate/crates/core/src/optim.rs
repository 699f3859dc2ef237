//! Regularized maximum-likelihood fitting.
//!
//! The objective maximized over all `K*M + 2N + 1` parameters is
//!
//! ```text
//! E = sum_s log P[Y = y_s]
//!     - beta_u * ( sum_i |a_i| + |b| )
//!     - beta_g * sum_k sum_j (g[k, j+1] - g[k, j])^2
//! ```
//!
//! E is concave, so the maximizer is unique and initialization only
//! affects iteration counts. The solver is proximal gradient ascent: a
//! diagonally preconditioned step on the smooth part (log-likelihood plus
//! trend smoothness), followed by exact soft-thresholding of the
//! L1-penalized coordinates `a_i` and `b`, with backtracking on the step
//! scale so the objective trace is monotone non-decreasing.

use alloc::vec::Vec;

use crate::data::Dataset;
use crate::eval::SplitPlan;
use crate::model::{
    logistic, FeatureConfig, ModelDims, ModelError, ModelParams, SampleFeatures,
};
use crate::{eval, math};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hyperparams {
    /// L1 strength on the propensities and the preference weight.
    pub beta_u: f64,
    /// L2 strength on day-to-day trend differences.
    pub beta_g: f64,
    pub max_iters: usize,
    /// Relative objective-change convergence tolerance.
    pub tol: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            beta_u: 0.1,
            beta_g: 10.0,
            max_iters: 5000,
            tol: 1e-8,
        }
    }
}

impl Hyperparams {
    pub fn with_betas(beta_u: f64, beta_g: f64) -> Self {
        Self {
            beta_u,
            beta_g,
            ..Self::default()
        }
    }
}

/// Grids explored by [`grid_search`] when none are supplied.
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (
        alloc::vec![0.01, 0.1, 1.0, 10.0],
        alloc::vec![0.1, 1.0, 10.0, 100.0],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    /// Objective value at initialization and after each accepted step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace never empty")
    }

    /// Whether the trace never decreases beyond floating-point slack.
    pub fn trace_is_monotone(&self) -> bool {
        self.objective_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - accept_slack(w[0]))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FitError {
    #[error("objective became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("fit problem has no samples")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Shrinkage operator of the L1 prox step.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

fn accept_slack(e: f64) -> f64 {
    1e-12 * (1.0 + math::abs(e))
}

/// A fit-ready view of (a subset of) a dataset: features gathered into
/// flat arrays, one row per included sample (repeats allowed, which is
/// how bootstrap resamples enter).
#[derive(Debug, Clone)]
pub struct FitProblem {
    dims: ModelDims,
    config: FeatureConfig,
    users: Vec<u32>,
    cells: Vec<u32>,
    labels: Vec<f64>,
    feats: Vec<f64>,
    prefs: Vec<f64>,
}

impl FitProblem {
    pub fn new(
        dataset: &Dataset,
        config: &FeatureConfig,
        features: &SampleFeatures,
        include: &[usize],
    ) -> Result<Self, FitError> {
        if include.is_empty() {
            return Err(FitError::Empty);
        }
        let n_days = dataset.n_days();
        let mut users = Vec::with_capacity(include.len());
        let mut cells = Vec::with_capacity(include.len());
        let mut labels = Vec::with_capacity(include.len());
        let mut feats = Vec::with_capacity(include.len());
        let mut prefs = Vec::with_capacity(include.len());
        for &i in include {
            let s = &dataset.samples()[i];
            users.push(s.user_idx as u32);
            cells.push((s.topic_idx * n_days + s.day_idx) as u32);
            labels.push(s.label as u8 as f64);
            feats.push(if config.use_feedback {
                features.f[i].ok_or(ModelError::MissingFeedback(i))?
            } else {
                0.0
            });
            prefs.push(if config.use_preference {
                features.preference.get(s.user_idx, s.topic_idx)
            } else {
                0.0
            });
        }
        Ok(Self {
            dims: dataset.dims(),
            config: *config,
            users,
            cells,
            labels,
            feats,
            prefs,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.users.len()
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    /// The full objective E (log-likelihood minus both penalties).
    pub fn objective(&self, params: &ModelParams, hyper: &Hyperparams) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.n_rows() {
            let eta = self.eta(params, i);
            // log P[Y=1] = -softplus(-eta); log P[Y=0] = -softplus(eta).
            ll -= if self.labels[i] == 1.0 {
                math::softplus(-eta)
            } else {
                math::softplus(eta)
            };
        }
        ll - hyper.beta_u * self.l1_norm(params) - hyper.beta_g * self.trend_roughness(params)
    }

    /// The smooth part of the objective (everything except the L1 term).
    pub fn smooth_objective(&self, params: &ModelParams, hyper: &Hyperparams) -> f64 {
        self.objective(params, hyper) + hyper.beta_u * self.l1_norm(params)
    }

    /// Analytic gradient of the smooth part, in a parameter-shaped
    /// container. Inactive components have zero gradient.
    pub fn smooth_gradient(&self, params: &ModelParams, hyper: &Hyperparams) -> ModelParams {
        self.gradient_and_curvature(params, hyper).0
    }

    #[inline]
    fn eta(&self, params: &ModelParams, i: usize) -> f64 {
        let u = self.users[i] as usize;
        params.propensity[u]
            + params.preference_weight * self.prefs[i]
            + params.trend[self.cells[i] as usize]
            + params.susceptibility[u] * self.feats[i]
    }

    fn l1_norm(&self, params: &ModelParams) -> f64 {
        params.propensity.iter().map(|a| math::abs(*a)).sum::<f64>()
            + math::abs(params.preference_weight)
    }

    fn trend_roughness(&self, params: &ModelParams) -> f64 {
        let m = self.dims.n_days;
        let mut sum = 0.0;
        for row in params.trend.chunks_exact(m) {
            sum += row.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>();
        }
        sum
    }

    /// Gradient and diagonal curvature of the smooth part in one pass.
    fn gradient_and_curvature(
        &self,
        params: &ModelParams,
        hyper: &Hyperparams,
    ) -> (ModelParams, ModelParams) {
        let mut grad = ModelParams::zeros(self.dims);
        let mut curv = ModelParams::zeros(self.dims);
        let cfg = self.config;
        for i in 0..self.n_rows() {
            let u = self.users[i] as usize;
            let c = self.cells[i] as usize;
            let p = logistic(self.eta(params, i));
            let r = self.labels[i] - p;
            let w = p * (1.0 - p);
            if cfg.use_propensity {
                grad.propensity[u] += r;
                curv.propensity[u] += w;
            }
            if cfg.use_preference {
                grad.preference_weight += r * self.prefs[i];
                curv.preference_weight += w * self.prefs[i] * self.prefs[i];
            }
            if cfg.use_trend {
                grad.trend[c] += r;
                curv.trend[c] += w;
            }
            if cfg.use_feedback {
                grad.susceptibility[u] += r * self.feats[i];
                curv.susceptibility[u] += w * self.feats[i] * self.feats[i];
            }
        }
        if cfg.use_trend && hyper.beta_g > 0.0 {
            let m = self.dims.n_days;
            for k in 0..self.dims.n_topics {
                for j in 0..m {
                    let idx = k * m + j;
                    let mut diff = 0.0;
                    let mut diag = 0.0;
                    if j > 0 {
                        diff += params.trend[idx] - params.trend[idx - 1];
                        diag += 2.0 * hyper.beta_g;
                    }
                    if j + 1 < m {
                        diff += params.trend[idx] - params.trend[idx + 1];
                        diag += 2.0 * hyper.beta_g;
                    }
                    grad.trend[idx] -= 2.0 * hyper.beta_g * diff;
                    curv.trend[idx] += diag;
                }
            }
        }
        (grad, curv)
    }

    /// Preconditioned ascent step at scale `kappa`, with the L1 prox
    /// applied to the propensities and the preference weight.
    fn step(
        &self,
        params: &ModelParams,
        grad: &ModelParams,
        curv: &ModelParams,
        kappa: f64,
        hyper: &Hyperparams,
    ) -> ModelParams {
        const CURV_FLOOR: f64 = 1e-12;
        let cfg = self.config;
        let mut next = params.clone();
        if cfg.use_propensity {
            for u in 0..self.dims.n_users {
                let t = kappa / curv.propensity[u].max(CURV_FLOOR);
                next.propensity[u] = soft_threshold(
                    params.propensity[u] + t * grad.propensity[u],
                    t * hyper.beta_u,
                );
            }
        }
        if cfg.use_preference {
            let t = kappa / curv.preference_weight.max(CURV_FLOOR);
            next.preference_weight = soft_threshold(
                params.preference_weight + t * grad.preference_weight,
                t * hyper.beta_u,
            );
        }
        if cfg.use_trend {
            for idx in 0..next.trend.len() {
                let t = kappa / curv.trend[idx].max(CURV_FLOOR);
                next.trend[idx] += t * grad.trend[idx];
            }
        }
        if cfg.use_feedback {
            for u in 0..self.dims.n_users {
                let t = kappa / curv.susceptibility[u].max(CURV_FLOOR);
                next.susceptibility[u] += t * grad.susceptibility[u];
            }
        }
        next
    }

    /// Maximizes the objective from `init` (zeros by default; the optimum
    /// does not depend on it). Inactive components are pinned to zero.
    pub fn fit(
        &self,
        hyper: &Hyperparams,
        init: Option<ModelParams>,
    ) -> Result<FitResult, FitError> {
        let mut params = init.unwrap_or_else(|| ModelParams::zeros(self.dims));
        let cfg = self.config;
        if !cfg.use_propensity {
            params.propensity.fill(0.0);
        }
        if !cfg.use_preference {
            params.preference_weight = 0.0;
        }
        if !cfg.use_trend {
            params.trend.fill(0.0);
        }
        if !cfg.use_feedback {
            params.susceptibility.fill(0.0);
        }

        let mut energy = self.objective(&params, hyper);
        if !energy.is_finite() {
            return Err(FitError::NonFinite { iteration: 0 });
        }
        let mut trace = alloc::vec![energy];
        let mut kappa = 1.0f64;
        let mut converged = false;
        let mut iterations = 0;

        for iter in 1..=hyper.max_iters {
            iterations = iter;
            let (grad, curv) = self.gradient_and_curvature(&params, hyper);
            let mut accepted = None;
            while kappa >= 1e-20 {
                let cand = self.step(&params, &grad, &curv, kappa, hyper);
                let cand_energy = self.objective(&cand, hyper);
                if cand_energy.is_finite() && cand_energy >= energy - accept_slack(energy) {
                    accepted = Some((cand, cand_energy));
                    break;
                }
                kappa *= 0.5;
            }
            let Some((cand, cand_energy)) = accepted else {
                // No scale improves the objective: we are at the optimum
                // to floating-point precision.
                converged = true;
                break;
            };
            let delta = cand_energy - energy;
            params = cand;
            energy = cand_energy;
            trace.push(energy);
            if math::abs(delta) <= hyper.tol * (1.0 + math::abs(energy)) {
                converged = true;
                break;
            }
            kappa = (kappa * 2.0).min(1.0);
        }

        if !params.is_finite() {
            return Err(FitError::NonFinite {
                iteration: iterations,
            });
        }
        Ok(FitResult {
            params,
            objective_trace: trace,
            converged,
            iterations,
        })
    }
}

/// Picks the (beta_u, beta_g) pair with the best holdout accuracy; ties
/// keep the earliest grid entry.
pub fn grid_search(
    dataset: &Dataset,
    config: &FeatureConfig,
    plan: &SplitPlan,
    beta_u_grid: &[f64],
    beta_g_grid: &[f64],
    base: &Hyperparams,
) -> Result<(Hyperparams, f64), FitError> {
    assert!(
        !beta_u_grid.is_empty() && !beta_g_grid.is_empty(),
        "grids must be non-empty"
    );
    let features = SampleFeatures::build(dataset, config, &plan.train_indices())?;
    let train = features.eligible(config, plan.train_indices());
    let test = features.eligible(config, plan.test_indices());
    let problem = FitProblem::new(dataset, config, &features, &train)?;

    let mut best: Option<(Hyperparams, f64)> = None;
    for &bu in beta_u_grid {
        for &bg in beta_g_grid {
            let hyper = Hyperparams {
                beta_u: bu,
                beta_g: bg,
                ..*base
            };
            let fitted = problem.fit(&hyper, None)?;
            let accuracy = if test.is_empty() {
                0.0
            } else {
                let probs =
                    crate::model::predict_indices(&fitted.params, config, dataset, &features, &test)?;
                let labels: Vec<bool> =
                    test.iter().map(|&i| dataset.samples()[i].label).collect();
                let counts = eval::confusion(&labels, &probs);
                counts.accuracy()
            };
            if best.as_ref().is_none_or(|(_, acc)| accuracy > *acc) {
                best = Some((hyper, accuracy));
            }
        }
    }
    Ok(best.expect("grids non-empty"))
}
