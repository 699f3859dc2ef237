//! Command implementations.

use std::path::PathBuf;

use feedfx_core::data::Dataset;
use feedfx_core::eval::{
    replicate_fit, split, summarize_metric, BootstrapEnsemble, MetricSummary, SplitPlan,
};
use feedfx_core::feedback::FeedbackFunctionKind;
use feedfx_core::model::{FeatureConfig, SampleFeatures};
use feedfx_core::optim::{FitProblem, FitResult, Hyperparams};
use feedfx_core::suscept::{
    build_report, feedback_effect_size, positive_subgroup_gain, significant_runs,
    trend_significance, SusceptibilityClass, SusceptibilityReport,
};
use feedfx_core::synth::{detection_accuracy, generate_events, GroundTruth, SynthConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifact::{write_csv_with_meta, write_json, Meta};
use crate::error::CliError;
use crate::formats::{
    self, read_ensemble, read_params, susceptibility_from_csv, EnsembleDoc, ParamsDoc, TrendRow,
    TruthDoc,
};
use crate::ingest::{ingest, IngestSettings};

/// Bootstrap replicates are independent given (seed, index), so they are
/// fanned out over the rayon pool; results are identical to the
/// sequential path whatever the thread count.
pub fn parallel_bootstrap(
    dataset: &Dataset,
    config: &FeatureConfig,
    hyper: &Hyperparams,
    features: &SampleFeatures,
    plan: &SplitPlan,
    n_replicates: usize,
    seed: u64,
) -> Result<BootstrapEnsemble, CliError> {
    if n_replicates < 2 {
        return Err(CliError::usage("--bootstrap must be at least 2"));
    }
    let replicates = (0..n_replicates)
        .into_par_iter()
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

pub fn parse_feature_config(
    features: &str,
    feedback_fn: &str,
) -> Result<FeatureConfig, CliError> {
    let kind = FeedbackFunctionKind::parse(feedback_fn).ok_or_else(|| {
        CliError::usage(format!(
            "unknown feedback function `{feedback_fn}` (expected one of {})",
            FeedbackFunctionKind::CLI_VALUES.join(", ")
        ))
    })?;
    let config = FeatureConfig::parse_features(features)
        .ok_or_else(|| {
            CliError::usage(format!(
                "bad feature list `{features}` (comma-separated prop, pref, trend, feedback)"
            ))
        })?
        .with_feedback_fn(kind);
    Ok(config)
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, Serialize)]
pub struct SynthSettings {
    pub preset: String,
    pub synth: SynthConfig,
    pub out: PathBuf,
    pub truth_out: PathBuf,
}

pub fn run_synth(settings: &SynthSettings) -> Result<(), CliError> {
    let (posts, truth) = generate_events(&settings.synth)?;
    let meta = Meta::new(
        "synth",
        settings.synth.seed,
        serde_json::to_value(settings)?,
    );
    let csv = formats::posts_to_csv(&posts)?;
    write_csv_with_meta(&settings.out, &meta, &csv)?;
    write_json(&settings.truth_out, &TruthDoc { meta, truth })?;
    eprintln!(
        "synth: wrote {} posts for {} users to {} (truth: {})",
        posts.len(),
        settings.synth.n_users,
        settings.out.display(),
        settings.truth_out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ fit

#[derive(Debug, Clone, Serialize)]
pub struct FitSettings {
    pub ingest: IngestSettings,
    pub features: String,
    pub feedback_fn: String,
    pub hyper: Hyperparams,
    pub grid_search: bool,
    /// 0 fits on every sample; otherwise the per-user holdout is excluded.
    pub holdout: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub trace_out: Option<PathBuf>,
}

pub fn run_fit(settings: &FitSettings) -> Result<(), CliError> {
    let config = parse_feature_config(&settings.features, &settings.feedback_fn)?;
    let (dataset, _) = ingest(&settings.ingest)?;
    let train: Vec<usize> = if settings.holdout == 0 {
        (0..dataset.n_samples()).collect()
    } else {
        split(&dataset, settings.holdout)?.train_indices()
    };
    let features = SampleFeatures::build(&dataset, &config, &train)?;
    let include = features.eligible(&config, train.iter().copied());

    let mut hyper = settings.hyper;
    if settings.grid_search {
        if settings.holdout == 0 {
            return Err(CliError::usage("--grid-search requires --holdout >= 1"));
        }
        let plan = split(&dataset, settings.holdout)?;
        let (grid_u, grid_g) = feedfx_core::optim::default_grids();
        let (chosen, accuracy) =
            feedfx_core::optim::grid_search(&dataset, &config, &plan, &grid_u, &grid_g, &hyper)?;
        eprintln!(
            "grid search: beta_u={} beta_g={} (holdout accuracy {:.4})",
            chosen.beta_u, chosen.beta_g, accuracy
        );
        hyper = chosen;
    }

    let problem = FitProblem::new(&dataset, &config, &features, &include)?;
    let fitted = problem.fit(&hyper, None)?;
    report_fit(&fitted);

    let mut resolved = serde_json::to_value(settings)?;
    resolved["hyper"] = serde_json::to_value(hyper)?;
    let meta = Meta::new("fit", settings.seed, resolved);
    formats::write_params(
        &settings.out,
        &ParamsDoc {
            meta: meta.clone(),
            config,
            converged: fitted.converged,
            trace_monotone: fitted.trace_is_monotone(),
            iterations: fitted.iterations,
            objective: fitted.objective(),
            params: fitted.params,
        },
    )?;
    if let Some(trace_out) = &settings.trace_out {
        let mut csv = String::from("iteration,objective\n");
        for (i, v) in fitted.objective_trace.iter().enumerate() {
            csv.push_str(&format!("{i},{v}\n"));
        }
        write_csv_with_meta(trace_out, &meta, csv.as_bytes())?;
    }
    eprintln!("fit: wrote {}", settings.out.display());
    Ok(())
}

fn report_fit(fitted: &FitResult) {
    eprintln!(
        "fit: objective {:.6} after {} iterations (converged: {}, monotone: {})",
        fitted.objective(),
        fitted.iterations,
        fitted.converged,
        fitted.trace_is_monotone()
    );
}

// ------------------------------------------------------------- evaluate

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateSettings {
    pub ingest: IngestSettings,
    /// One entry per ablation row.
    pub features: Vec<String>,
    pub feedback_fn: String,
    pub hyper: Hyperparams,
    pub bootstrap: usize,
    pub holdout: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ReportRow {
    features: String,
    feedback_fn: String,
    accuracy: MetricSummary,
    f1: MetricSummary,
    mcc: MetricSummary,
    converged: usize,
    trace_monotone: usize,
    /// Welch t test and Cohen's d of this row's replicate accuracies
    /// against the first row's (absent on the first row itself).
    accuracy_vs_first: Option<RowComparison>,
    replicates: ReplicateVectors,
}

#[derive(Debug, Serialize)]
struct RowComparison {
    /// None when the test degenerates (both samples constant).
    t: Option<f64>,
    df: f64,
    p: f64,
    cohens_d: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReplicateVectors {
    accuracy: Vec<f64>,
    f1: Vec<f64>,
    mcc: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    meta: Meta,
    n_users: usize,
    n_samples: usize,
    n_test: usize,
    rows: Vec<ReportRow>,
}

fn compare_rows(first: &[f64], current: &[f64]) -> Result<RowComparison, CliError> {
    let welch = feedfx_core::eval::welch_t(current, first)?;
    let d = feedfx_core::eval::cohens_d(current, first).ok();
    Ok(RowComparison {
        t: welch.t.is_finite().then_some(welch.t),
        df: welch.df,
        p: welch.p,
        cohens_d: d.filter(|d| d.is_finite()),
    })
}

pub fn run_evaluate(settings: &EvaluateSettings) -> Result<(), CliError> {
    if settings.ensemble_out.is_some() && settings.features.len() != 1 {
        return Err(CliError::usage(
            "--ensemble-out requires exactly one --features configuration",
        ));
    }
    let (dataset, _) = ingest(&settings.ingest)?;
    let plan = split(&dataset, settings.holdout)?;
    let meta = Meta::new("evaluate", settings.seed, serde_json::to_value(settings)?);

    let mut rows = Vec::new();
    for feature_list in &settings.features {
        let config = parse_feature_config(feature_list, &settings.feedback_fn)?;
        let features = SampleFeatures::build(&dataset, &config, &plan.train_indices())?;
        let ensemble = parallel_bootstrap(
            &dataset,
            &config,
            &settings.hyper,
            &features,
            &plan,
            settings.bootstrap,
            settings.seed,
        )?;
        let acc = ensemble.metric_values(|m| m.accuracy);
        let f1 = ensemble.metric_values(|m| m.f1);
        let mcc = ensemble.metric_values(|m| m.mcc);
        eprintln!(
            "evaluate [{feature_list}]: accuracy {:.4} ({} replicates)",
            feedfx_core::stats::mean(&acc),
            ensemble.n_replicates()
        );
        let accuracy_vs_first = rows.first().map(|first: &ReportRow| {
            compare_rows(&first.replicates.accuracy, &acc)
        }).transpose()?;
        rows.push(ReportRow {
            features: feature_list.clone(),
            feedback_fn: settings.feedback_fn.clone(),
            accuracy: summarize_metric(&acc, 0.99),
            f1: summarize_metric(&f1, 0.99),
            mcc: summarize_metric(&mcc, 0.99),
            converged: ensemble.replicates.iter().filter(|r| r.converged).count(),
            trace_monotone: ensemble
                .replicates
                .iter()
                .filter(|r| r.trace_monotone)
                .count(),
            accuracy_vs_first,
            replicates: ReplicateVectors { accuracy: acc, f1, mcc },
        });
        if let Some(path) = &settings.ensemble_out {
            write_json(path, &EnsembleDoc::from_ensemble(meta.clone(), &ensemble))?;
            eprintln!("evaluate: wrote ensemble to {}", path.display());
        }
    }

    write_json(
        &settings.out,
        &ReportDoc {
            meta,
            n_users: dataset.n_users(),
            n_samples: dataset.n_samples(),
            n_test: plan.n_test(),
            rows,
        },
    )?;
    eprintln!("evaluate: wrote {}", settings.out.display());
    Ok(())
}

// -------------------------------------------------------- susceptibility

#[derive(Debug, Clone, Serialize)]
pub struct SusceptibilitySettings {
    pub ingest: IngestSettings,
    pub params: PathBuf,
    pub ensemble: PathBuf,
    pub level: f64,
    pub f_hi: f64,
    pub f_lo: f64,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn run_susceptibility(settings: &SusceptibilitySettings) -> Result<(), CliError> {
    let (dataset, _) = ingest(&settings.ingest)?;
    let params_doc = read_params(&settings.params)?;
    let ensemble_doc = read_ensemble(&settings.ensemble)?;
    if ensemble_doc.config != params_doc.config {
        return Err(CliError::data(
            "params and ensemble were fitted with different feature configurations",
        ));
    }
    if ensemble_doc.dims != dataset.dims() {
        return Err(CliError::data(format!(
            "ensemble dims {:?} do not match the dataset {:?}",
            ensemble_doc.dims,
            dataset.dims()
        )));
    }
    params_doc.params.check_dims(&dataset)?;
    let config = ensemble_doc.config;
    let holdout = ensemble_doc.holdout;
    let ensemble = ensemble_doc.into_ensemble();

    let plan = split(&dataset, holdout)?;
    let features = SampleFeatures::build(&dataset, &config, &plan.train_indices())?;
    let report = build_report(
        &ensemble,
        &params_doc.params,
        &config,
        &dataset,
        &features,
        feedfx_core::suscept::ReportOptions {
            level: settings.level,
            f_hi: settings.f_hi,
            f_lo: settings.f_lo,
        },
    )?;
    let effect_size = match feedback_effect_size(
        &params_doc.params,
        &config,
        &dataset,
        &features,
        settings.f_hi,
        settings.f_lo,
    ) {
        Ok(d) => Some(d),
        Err(feedfx_core::suscept::SusceptError::Eval(
            feedfx_core::eval::EvalError::DegenerateSpread,
        )) => None,
        Err(e) => return Err(e.into()),
    };

    // Sanity-check protocol: does the feedback component actually help on
    // the users it flagged as positively susceptible?
    let positive: Vec<usize> = report
        .users
        .iter()
        .filter(|u| u.class == SusceptibilityClass::Positive)
        .map(|u| u.user_idx)
        .collect();
    let subgroup = if positive.is_empty() {
        None
    } else {
        positive_subgroup_gain(&dataset, &config, &ensemble.hyper, &plan, &positive)?
    };
    if let Some(g) = &subgroup {
        eprintln!(
            "susceptibility: positive-subgroup test accuracy {:.4} with feedback vs {:.4} \
             without (gain {:+.4} on {} samples of {} users)",
            g.accuracy_with_feedback,
            g.accuracy_without_feedback,
            g.gain,
            g.n_test_samples,
            g.n_users
        );
    }

    let mut resolved = serde_json::to_value(settings)?;
    resolved["effect_size"] = serde_json::to_value(effect_size)?;
    resolved["positive_subgroup"] = serde_json::to_value(subgroup)?;
    let meta = Meta::new("susceptibility", settings.seed, resolved);
    let user_ids: Vec<String> = (0..dataset.n_users())
        .map(|u| dataset.user_id(u).to_string())
        .collect();
    let csv = formats::susceptibility_to_csv(&report, &user_ids)?;
    write_csv_with_meta(&settings.out, &meta, &csv)?;

    let counts = report.class_counts();
    eprintln!(
        "susceptibility: positive {} / negative {} / insignificant {} of {} users{}",
        counts[0],
        counts[1],
        counts[2],
        report.users.len(),
        effect_size
            .map(|d| format!(" (intervention effect size {d:.3})"))
            .unwrap_or_default()
    );
    eprintln!("susceptibility: wrote {}", settings.out.display());
    Ok(())
}

// ----------------------------------------------------------------- trends

#[derive(Debug, Clone, Serialize)]
pub struct TrendsSettings {
    pub ingest: IngestSettings,
    pub ensemble: PathBuf,
    pub level: f64,
    pub min_run: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn run_trends(settings: &TrendsSettings) -> Result<(), CliError> {
    let (dataset, _) = ingest(&settings.ingest)?;
    let ensemble_doc = read_ensemble(&settings.ensemble)?;
    if ensemble_doc.dims != dataset.dims() {
        return Err(CliError::data(format!(
            "ensemble dims {:?} do not match the dataset {:?}",
            ensemble_doc.dims,
            dataset.dims()
        )));
    }
    let ensemble = ensemble_doc.into_ensemble();
    let trend = trend_significance(&ensemble, settings.level, settings.min_run)?;
    let runs = significant_runs(&trend);

    let mut rows = Vec::new();
    for (topic_idx, days) in trend.iter().enumerate() {
        for (day, cell) in days.iter().enumerate() {
            rows.push(TrendRow {
                topic_idx,
                topic_id: dataset.topic_id(topic_idx),
                day,
                day_start_ts: dataset.anchor_ts() + day as i64 * feedfx_core::data::SECONDS_PER_DAY,
                mean: cell.mean,
                ci_lo: cell.ci_lo,
                ci_hi: cell.ci_hi,
                significant: cell.significant,
                posts: dataset.topic_day_post_count(topic_idx, day),
            });
        }
    }
    let meta = Meta::new(
        "trends",
        settings.seed,
        serde_json::to_value(settings)?,
    );
    let csv = formats::trends_to_csv(&rows)?;
    write_csv_with_meta(&settings.out, &meta, &csv)?;
    let n_runs: usize = runs.iter().map(|r| r.len()).sum();
    eprintln!(
        "trends: {} topics x {} days, {} significant runs; wrote {}",
        dataset.n_topics(),
        dataset.n_days(),
        n_runs,
        settings.out.display()
    );
    Ok(())
}

// ----------------------------------------------------------------- report

#[derive(Debug, Clone, Serialize)]
pub struct ReportSettings {
    pub evaluation: Option<PathBuf>,
    pub susceptibility: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct SummaryDoc {
    meta: Meta,
    evaluation: Option<serde_json::Value>,
    susceptibility: Option<SusceptibilitySummary>,
    /// Fraction of users whose class matches the synthetic ground truth.
    detection_accuracy: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SusceptibilitySummary {
    n_users: usize,
    positive: usize,
    negative: usize,
    insignificant: usize,
    /// Median probability gain among positive users.
    median_delta_p_positive: Option<f64>,
    /// [quartile][positive, negative, insignificant] user counts.
    quartiles: Vec<[usize; 3]>,
    effect_size: Option<f64>,
}

pub fn run_report(settings: &ReportSettings) -> Result<(), CliError> {
    if settings.evaluation.is_none() && settings.susceptibility.is_none() {
        return Err(CliError::usage(
            "report needs --evaluation and/or --susceptibility",
        ));
    }
    let evaluation: Option<serde_json::Value> = settings
        .evaluation
        .as_deref()
        .map(|p| -> Result<serde_json::Value, CliError> {
            let content = std::fs::read_to_string(p)?;
            serde_json::from_str(&content)
                .map_err(|e| CliError::data(format!("{}: {e}", p.display())))
        })
        .transpose()?;

    let mut susceptibility = None;
    let mut detection = None;
    if let Some(path) = settings.susceptibility.as_deref() {
        let content = std::fs::read_to_string(path)?;
        let report = susceptibility_from_csv(&content, 0.99)?;
        let effect_size = crate::artifact::read_csv_meta(&content)
            .and_then(|m| m.config.get("effect_size").cloned())
            .and_then(|v| v.as_f64());
        susceptibility = Some(summarize_susceptibility(&report, effect_size)?);
        if let Some(truth_path) = settings.truth.as_deref() {
            let truth = formats::read_truth(truth_path)?;
            detection = Some(detection_from_report(&report, &truth)?);
        }
    } else if settings.truth.is_some() {
        return Err(CliError::usage("--truth requires --susceptibility"));
    }

    let meta = Meta::new("report", settings.seed, serde_json::to_value(settings)?);
    write_json(
        &settings.out,
        &SummaryDoc {
            meta,
            evaluation,
            susceptibility,
            detection_accuracy: detection,
        },
    )?;
    if let Some(d) = detection {
        eprintln!("report: detection accuracy {d:.4}");
    }
    eprintln!("report: wrote {}", settings.out.display());
    Ok(())
}

fn summarize_susceptibility(
    report: &SusceptibilityReport,
    effect_size: Option<f64>,
) -> Result<SusceptibilitySummary, CliError> {
    let counts = report.class_counts();
    let mut positive_gains: Vec<f64> = report
        .users
        .iter()
        .filter(|u| u.class == SusceptibilityClass::Positive)
        .map(|u| u.delta_p)
        .collect();
    positive_gains.sort_by(|a, b| a.total_cmp(b));
    let median = (!positive_gains.is_empty())
        .then(|| feedfx_core::stats::quantile_sorted(&positive_gains, 0.5));
    // Quartile table straight from the per-user rows.
    let mut quartiles = vec![[0usize; 3]; 4];
    for u in &report.users {
        let class_idx = match u.class {
            SusceptibilityClass::Positive => 0,
            SusceptibilityClass::Negative => 1,
            SusceptibilityClass::Insignificant => 2,
        };
        let q = u.quartile as usize;
        if q >= 4 {
            return Err(CliError::data(format!("bad quartile {q}")));
        }
        quartiles[q][class_idx] += 1;
    }
    Ok(SusceptibilitySummary {
        n_users: report.users.len(),
        positive: counts[0],
        negative: counts[1],
        insignificant: counts[2],
        median_delta_p_positive: median,
        quartiles,
        effect_size,
    })
}

fn detection_from_report(
    report: &SusceptibilityReport,
    truth: &GroundTruth,
) -> Result<f64, CliError> {
    let mut classes = vec![SusceptibilityClass::Insignificant; report.users.len()];
    for u in &report.users {
        if u.user_idx >= classes.len() {
            return Err(CliError::data(format!(
                "user index {} out of range",
                u.user_idx
            )));
        }
        classes[u.user_idx] = u.class;
    }
    Ok(detection_accuracy(&classes, truth)?)
}

