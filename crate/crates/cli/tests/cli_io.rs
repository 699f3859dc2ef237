//! File-format and CLI-contract tests: ingestion equivalence, byte-level
//! determinism, exit codes, and error reporting.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use feedfx_cli::formats::{
    posts_to_csv, read_params, read_posts, susceptibility_from_csv, susceptibility_to_csv,
    FeedbackColumnKind,
};
use feedfx_cli::ingest::{ingest, IngestSettings};
use feedfx_core::data::{build_dataset, BuildOptions, FeedbackSource};
use feedfx_core::suscept::{SusceptibilityClass, SusceptibilityReport, UserSusceptibility};
use feedfx_core::synth::{generate, generate_events, SynthConfig};

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn feedfx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feedfx"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn small_synth_config() -> SynthConfig {
    SynthConfig {
        n_users: 25,
        min_posts: 20,
        rate_per_day: (2.5, 8.0),
        ..SynthConfig::confounded_preset(99)
    }
}

#[test]
fn csv_round_trip_reproduces_generated_dataset() {
    let config = small_synth_config();
    let (expected, _) = generate(&config).unwrap();
    let (posts, _) = generate_events(&config).unwrap();

    let dir = workdir("csv_round_trip");
    let path = dir.join("posts.csv");
    fs::write(&path, posts_to_csv(&posts).unwrap()).unwrap();

    let reread = read_posts(&path, FeedbackColumnKind::Direct).unwrap();
    let opts = BuildOptions {
        min_posts: config.min_posts,
        thread_gap_seconds: None,
        feedback_source: FeedbackSource::Column,
    };
    let (dataset, _) = build_dataset(reread, &[], &opts).unwrap();
    assert_eq!(dataset, expected);
}

#[test]
fn jsonl_and_csv_ingest_identically() {
    let (posts, _) = generate_events(&small_synth_config()).unwrap();
    let dir = workdir("jsonl_csv");
    let csv_path = dir.join("posts.csv");
    fs::write(&csv_path, posts_to_csv(&posts).unwrap()).unwrap();
    let jsonl: String = posts
        .iter()
        .map(|p| {
            let mut obj = serde_json::json!({
                "post_id": p.post_id,
                "user_id": p.user_id,
                "timestamp": p.timestamp,
                "topic_id": p.topic_id,
            });
            if let Some(f) = p.feedback {
                obj["feedback_count"] = serde_json::json!(f);
            }
            serde_json::to_string(&obj).unwrap() + "\n"
        })
        .collect();
    let jsonl_path = dir.join("posts.jsonl");
    fs::write(&jsonl_path, jsonl).unwrap();

    let settings = |posts: PathBuf| IngestSettings {
        posts,
        feedback: None,
        mode: feedfx_cli::config::Mode::Generic,
        min_posts: 20,
        thread_gap_seconds: None,
        feedback_column: FeedbackColumnKind::Direct,
    };
    let (from_csv, _) = ingest(&settings(csv_path)).unwrap();
    let (from_jsonl, _) = ingest(&settings(jsonl_path)).unwrap();
    assert_eq!(from_csv, from_jsonl);
}

#[test]
fn twitter_mode_applies_thread_filter() {
    let dir = workdir("modes");
    let mut csv = String::from("post_id,user_id,timestamp,topic_id\n");
    // 60 posts, 40 s apart, with one 20 s thread follow-up.
    for i in 0..60 {
        csv.push_str(&format!("p{i},u,{},0\n", i * 40));
    }
    csv.push_str("thread,u,15,0\n"); // lands 15 s after p0
    let path = dir.join("posts.csv");
    fs::write(&path, &csv).unwrap();

    let base = IngestSettings {
        posts: path.clone(),
        feedback: None,
        mode: feedfx_cli::config::Mode::Twitter,
        min_posts: 50,
        thread_gap_seconds: None,
        feedback_column: FeedbackColumnKind::Counts,
    };
    let (twitter, stats) = ingest(&base).unwrap();
    assert_eq!(stats.thread_filtered, 1);
    assert_eq!(twitter.post_count(0), 60);

    let (reddit, stats) = ingest(&IngestSettings {
        mode: feedfx_cli::config::Mode::Reddit,
        ..base
    })
    .unwrap();
    assert_eq!(stats.thread_filtered, 0);
    assert_eq!(reddit.post_count(0), 61);
}

#[test]
fn malformed_rows_report_line_numbers() {
    let dir = workdir("malformed");
    let path = dir.join("posts.csv");
    fs::write(
        &path,
        "post_id,user_id,timestamp,topic_id\np0,u,12,0\np1,u,not_a_number,0\n",
    )
    .unwrap();
    let err = read_posts(&path, FeedbackColumnKind::Counts).unwrap_err();
    assert!(err.to_string().contains(":3"), "missing line: {err}");

    // Counts column must hold non-negative integers.
    let path = dir.join("neg.csv");
    fs::write(
        &path,
        "post_id,user_id,timestamp,topic_id,feedback_count\np0,u,12,0,-3\n",
    )
    .unwrap();
    let err = read_posts(&path, FeedbackColumnKind::Counts).unwrap_err();
    assert!(err.to_string().contains("non-negative"), "{err}");
    assert!(read_posts(&path, FeedbackColumnKind::Direct).is_ok());
}

#[test]
fn exit_codes_and_error_json() {
    let dir = workdir("exit_codes");
    // Unknown preset: usage error, code 2.
    let out = feedfx(
        &["synth", "--preset", "nope", "--out", "p.csv", "--truth", "t.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("stderr ends with JSON");
    assert_eq!(err["error"]["code"], 2);

    // Missing input file: data error, code 3.
    let out = feedfx(
        &["fit", "--posts", "missing.csv", "--out", "p.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "data");

    // Unknown flag: clap usage error, code 2.
    let out = feedfx(&["fit", "--does-not-exist"], &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_means_byte_identical_artifacts() {
    let dir = workdir("determinism");
    // Re-running the exact same config must reproduce artifacts byte for
    // byte, so snapshot between runs.
    let synth = || {
        let o = feedfx(
            &[
                "synth", "--preset", "paper-c1", "--n-users", "20", "--min-posts", "10",
                "--seed", "5", "--out", "posts.csv", "--truth", "truth.json",
            ],
            &dir,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(dir.join("posts.csv")).unwrap(),
            fs::read(dir.join("truth.json")).unwrap(),
        )
    };
    let first = synth();
    let second = synth();
    assert_eq!(first, second);

    let evaluate = |seed: &str| {
        let o = feedfx(
            &[
                "evaluate", "--posts", "posts.csv", "--feedback-column", "direct",
                "--features", "trend,feedback", "--feedback-fn", "identity",
                "--min-posts", "5", "--holdout", "2", "--bootstrap", "4",
                "--seed", seed, "--out", "report.json", "--ensemble-out", "ens.json",
            ],
            &dir,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(dir.join("report.json")).unwrap(),
            fs::read(dir.join("ens.json")).unwrap(),
        )
    };
    let (r1, e1) = evaluate("11");
    let (r2, e2) = evaluate("11");
    assert_eq!(r1, r2);
    assert_eq!(e1, e2);
    // A different seed draws different resamples, visible in the fitted
    // replicate parameters.
    let (_, e3) = evaluate("12");
    assert_ne!(e1, e3);
}

#[test]
fn results_independent_of_thread_count() {
    let dir = workdir("threads");
    let (posts, _) = generate_events(&small_synth_config()).unwrap();
    fs::write(dir.join("posts.csv"), posts_to_csv(&posts).unwrap()).unwrap();
    let evaluate = |threads: &str| {
        let o = feedfx(
            &[
                "--threads", threads, "evaluate", "--posts", "posts.csv",
                "--feedback-column", "direct", "--features", "trend,feedback",
                "--feedback-fn", "identity", "--min-posts", "20", "--bootstrap", "6",
                "--seed", "9", "--out", "report.json", "--ensemble-out", "ens.json",
            ],
            &dir,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.join("ens.json")).unwrap()
    };
    // Replicates are keyed by (seed, index), so the worker count cannot
    // change the ensemble.
    assert_eq!(evaluate("1"), evaluate("3"));
}

#[test]
fn params_json_round_trips_exactly() {
    let dir = workdir("params_roundtrip");
    let (posts, _) = generate_events(&small_synth_config()).unwrap();
    fs::write(dir.join("posts.csv"), posts_to_csv(&posts).unwrap()).unwrap();
    let out = feedfx(
        &[
            "fit", "--posts", "posts.csv", "--feedback-column", "direct",
            "--features", "trend,feedback", "--feedback-fn", "identity",
            "--min-posts", "20", "--seed", "3", "--out", "params.json",
            "--trace-out", "trace.csv",
        ],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let doc = read_params(&dir.join("params.json")).unwrap();
    // Re-serializing the parsed document reproduces the file byte for
    // byte, i.e. doubles survive the round trip exactly.
    let mut bytes = serde_json::to_vec_pretty(&doc).unwrap();
    bytes.push(b'\n');
    assert_eq!(bytes, fs::read(dir.join("params.json")).unwrap());

    // The objective trace is monotone non-decreasing in the CSV too.
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    let values: Vec<f64> = trace
        .lines()
        .skip(2) // meta comment + header
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(values.len() > 2);
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn susceptibility_csv_round_trips() {
    let report = SusceptibilityReport {
        level: 0.99,
        f_hi: 0.99,
        f_lo: 0.5,
        users: vec![
            UserSusceptibility {
                user_idx: 0,
                alpha_mean: 1.25,
                ci_lo: 0.5,
                ci_hi: 2.0,
                class: SusceptibilityClass::Positive,
                delta_p: 0.0625,
                quartile: 3,
                post_count: 77,
            },
            UserSusceptibility {
                user_idx: 1,
                alpha_mean: -0.01,
                ci_lo: -0.5,
                ci_hi: 0.25,
                class: SusceptibilityClass::Insignificant,
                delta_p: -0.001,
                quartile: 0,
                post_count: 12,
            },
        ],
    };
    let ids = vec!["alice".to_string(), "bob".to_string()];
    let csv = susceptibility_to_csv(&report, &ids).unwrap();
    let parsed = susceptibility_from_csv(std::str::from_utf8(&csv).unwrap(), 0.99).unwrap();
    assert_eq!(parsed.users, report.users);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = workdir("config_merge");
    let (posts, _) = generate_events(&small_synth_config()).unwrap();
    fs::write(dir.join("posts.csv"), posts_to_csv(&posts).unwrap()).unwrap();
    fs::write(
        dir.join("run.json"),
        serde_json::json!({
            "posts": "posts.csv",
            "min_posts": 20,
            "feedback_column": "direct",
            "feedback_fn": "identity",
            "features": ["trend,feedback"],
            "bootstrap": 4,
            "seed": 21,
        })
        .to_string(),
    )
    .unwrap();

    // Everything from the file.
    let o = feedfx(&["--config", "run.json", "evaluate", "--out", "r1.json"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // Flags override file values.
    let o = feedfx(
        &[
            "--config", "run.json", "evaluate", "--seed", "22", "--bootstrap", "6",
            "--out", "r2.json",
        ],
        &dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r1: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("r1.json")).unwrap()).unwrap();
    let r2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("r2.json")).unwrap()).unwrap();
    assert_eq!(r1["meta"]["seed"], 21);
    assert_eq!(r1["meta"]["config"]["bootstrap"], 4);
    assert_eq!(r1["meta"]["config"]["ingest"]["min_posts"], 20);
    assert_eq!(r1["rows"][0]["replicates"]["accuracy"].as_array().unwrap().len(), 4);
    assert_eq!(r2["meta"]["seed"], 22);
    assert_eq!(r2["rows"][0]["replicates"]["accuracy"].as_array().unwrap().len(), 6);
}

#[test]
fn ensemble_out_demands_single_config() {
    let dir = workdir("ensemble_single");
    let (posts, _) = generate_events(&small_synth_config()).unwrap();
    fs::write(dir.join("posts.csv"), posts_to_csv(&posts).unwrap()).unwrap();
    let o = feedfx(
        &[
            "evaluate", "--posts", "posts.csv", "--feedback-column", "direct",
            "--min-posts", "20", "--feedback-fn", "identity",
            "--features", "trend,feedback", "--features", "feedback",
            "--bootstrap", "4", "--out", "r.json", "--ensemble-out", "e.json",
        ],
        &dir,
    );
    assert_eq!(o.status.code(), Some(2));
}
