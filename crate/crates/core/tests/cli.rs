use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pubdyn::fitkit::{CountSeries, FitModel};
use pubdyn::report::AnalysisReport;
use pubdyn::MetricKind;
use tempfile::TempDir;

fn pubdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pubdyn")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_synth_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("synth.conf");
    fs::write(&path, format!("seed = 11\nn_accounts = 3000\nmax_performance = 3000\n{extra}")).unwrap();
    path
}

#[test]
fn synth_analyze_verify_pipeline() {
    let tmp = TempDir::new().unwrap();
    let conf = write_synth_config(tmp.path(), "bump_region = 85:160\nbump_accounts = 600\n");
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");

    let synth = pubdyn(&["synth", "--config", p(&conf), "--out", p(&data)]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let analyze = pubdyn(&[
        "analyze",
        "--posts",
        p(&data.join("posts.tsv")),
        "--comments",
        p(&data.join("comments.tsv")),
        "--out",
        p(&out),
        "--export-graph",
    ]);
    assert!(analyze.status.success(), "{}", String::from_utf8_lossy(&analyze.stderr));
    for kind in MetricKind::ALL {
        assert!(out.join(format!("{kind}.csv")).exists(), "{kind}.csv missing");
    }
    assert!(out.join("residuals.csv").exists());
    assert!(out.join("commentator_author_edges.tsv").exists());

    let verify = pubdyn(&["verify", p(&out), p(&data.join("ground_truth.json"))]);
    let text = String::from_utf8_lossy(&verify.stdout);
    assert!(verify.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");

    // Every metric kind appears exactly once in the report.
    let report = AnalysisReport::read_from_dir(&out).unwrap();
    let mut kinds: Vec<_> = report.distributions.iter().map(|d| d.kind).collect();
    kinds.sort();
    kinds.dedup();
    assert_eq!(kinds.len(), 16);
    assert_eq!(report.distributions.len(), 16);
}

#[test]
fn verify_flags_a_corrupted_report() {
    let tmp = TempDir::new().unwrap();
    let conf = write_synth_config(tmp.path(), "");
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    assert!(pubdyn(&["synth", "--config", p(&conf), "--out", p(&data)]).status.success());
    let analyze = pubdyn(&["analyze", "--posts", p(&data.join("posts.tsv")), "--comments", p(&data.join("comments.tsv")), "--out", p(&out)]);
    assert!(analyze.status.success());

    // Drop one account from the 1-post bin.
    let csv_path = out.join("posts_per_account.csv");
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = csv.lines().map(str::to_owned).collect();
    let (s, c) = lines[1].split_once(',').unwrap();
    lines[1] = format!("{s},{}", c.parse::<u64>().unwrap() - 1);
    fs::write(&csv_path, lines.join("\n") + "\n").unwrap();

    let verify = pubdyn(&["verify", p(&out), p(&data.join("ground_truth.json"))]);
    assert_eq!(verify.status.code(), Some(4));
    let text = String::from_utf8_lossy(&verify.stdout);
    assert!(text.contains("FAIL posts_per_account_histogram"), "{text}");
}

#[test]
fn posts_only_reports_post_metrics() {
    let tmp = TempDir::new().unwrap();
    let posts = tmp.path().join("posts.tsv");
    let rows: String = (1..=40).map(|i| format!("{i}\t{i}\t{}\t{}\n", i % 7 + 1, 1_357_000_000 + i * 37)).collect();
    fs::write(&posts, rows).unwrap();
    let out = tmp.path().join("out");
    let run = pubdyn(&[
        "analyze",
        "--posts",
        p(&posts),
        "--comments",
        p(&tmp.path().join("missing.tsv")),
        "--posts-only",
        "--skip-fit",
        "--out",
        p(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = AnalysisReport::read_from_dir(&out).unwrap();
    let kinds: Vec<_> = report.distributions.iter().map(|d| d.kind).collect();
    assert_eq!(kinds, [MetricKind::PostsPerAccount, MetricKind::PostShareByPerformance, MetricKind::PostInterevent]);
    assert!(!out.join("comments_per_account.csv").exists());
}

#[test]
fn comments_only_reports_commenter_metrics() {
    let tmp = TempDir::new().unwrap();
    let comments = tmp.path().join("comments.csv");
    fs::write(&comments, "#,message_id,author_id,created,parent_id\n1,10,1,100,5\n2,11,1,160,5\n3,12,2,170,10\n").unwrap();
    let out = tmp.path().join("out");
    let run = pubdyn(&["analyze", "--comments", p(&comments), "--comments-only", "--format", "csv", "--out", p(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = AnalysisReport::read_from_dir(&out).unwrap();
    assert_eq!(report.distributions.len(), 3);
    let gaps = report.distribution(MetricKind::CommentInterevent).unwrap();
    assert_eq!(gaps.histogram.iter().collect::<Vec<_>>(), [(60, 1)]);
    assert!(report.fit.is_none());
}

#[test]
fn empty_posts_file_is_an_ingest_failure() {
    let tmp = TempDir::new().unwrap();
    let posts = tmp.path().join("posts.tsv");
    fs::write(&posts, "#\tmessage_id\tauthor_id\tcreated\n").unwrap();
    let out = tmp.path().join("out");
    let run = pubdyn(&["analyze", "--posts", p(&posts), "--posts-only", "--out", p(&out)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("empty corpus"));
    assert!(!out.exists(), "nothing may be written on failure");
}

#[test]
fn usage_errors() {
    assert_eq!(pubdyn(&[]).status.code(), Some(1));
    assert_eq!(pubdyn(&["analyze", "--posts-only", "--comments-only"]).status.code(), Some(1));
    assert_eq!(pubdyn(&["analyze", "--fit-interval", "10"]).status.code(), Some(1));
    assert_eq!(pubdyn(&["analyze", "--posts-only"]).status.code(), Some(1));
}

#[test]
fn unreadable_posts_file_exits_two() {
    let run = pubdyn(&["analyze", "--posts", "/nonexistent/posts.tsv", "--posts-only"]);
    assert_eq!(run.status.code(), Some(2));
}

fn write_series(path: &Path, series: &CountSeries) {
    let mut text = String::from("support,count\n");
    for (s, y) in series.iter() {
        text.push_str(&format!("{s},{y}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_tabulated_constants() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("h.csv");
    write_series(&csv, &CountSeries::from_model(&FitModel::REFERENCE, 1, 245));
    let run = pubdyn(&["fit", p(&csv)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let r = FitModel::REFERENCE;
    for (key, want) in [("a", r.a), ("b", r.b), ("p", r.p), ("c", r.c), ("q", r.q)] {
        let got = json["model"][key].as_f64().unwrap();
        assert!(((got - want) / want).abs() < 1e-3, "{key}: {got} vs {want}");
    }
    assert!(json["anomaly"]["region"].is_null());
}

#[test]
fn fit_reports_an_injected_bump() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("h.csv");
    let mut series = CountSeries::from_model(&FitModel::REFERENCE.scaled(0.1), 1, 3000);
    for s in 85..=160 {
        series.insert(s, series.get(s) + 200.0);
    }
    write_series(&csv, &series);
    let out = tmp.path().join("fit.json");
    let run = pubdyn(&["fit", p(&csv), "--out", p(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    let region = &json["anomaly"]["region"];
    let (lo, hi) = (region[0].as_i64().unwrap(), region[1].as_i64().unwrap());
    assert!((80..=90).contains(&lo) && (155..=165).contains(&hi), "{region}");
    let excess = json["anomaly"]["excess_estimate"].as_f64().unwrap();
    assert!((excess - 76.0 * 200.0).abs() < 0.1 * 76.0 * 200.0, "{excess}");
}

#[test]
fn fit_rejects_malformed_csv() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("h.csv");
    fs::write(&csv, "support,count\n1,10\n2,banana\n").unwrap();
    assert_eq!(pubdyn(&["fit", p(&csv)]).status.code(), Some(2));
    fs::write(&csv, "1,10\n2,5\n3,2\n").unwrap();
    assert_eq!(pubdyn(&["fit", p(&csv)]).status.code(), Some(3), "too few bins is a fit failure");
}

#[test]
fn synth_is_byte_reproducible_and_checks_feasibility() {
    let tmp = TempDir::new().unwrap();
    let conf = write_synth_config(tmp.path(), "bump_region = 85:160\nbump_accounts = 50\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(pubdyn(&["synth", "--config", p(&conf), "--out", p(&a)]).status.success());
    assert!(pubdyn(&["synth", "--config", p(&conf), "--out", p(&b)]).status.success());
    for name in ["posts.tsv", "comments.tsv", "accounts.tsv", "messages.tsv", "ground_truth.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let truth: serde_json::Value = serde_json::from_slice(&fs::read(a.join("ground_truth.json")).unwrap()).unwrap();
    assert_eq!(truth["bump_accounts"], 50);

    let tight = tmp.path().join("tight.conf");
    fs::write(&tight, "window = 0:100\nmax_performance = 500\n").unwrap();
    let run = pubdyn(&["synth", "--config", p(&tight), "--out", p(&tmp.path().join("c"))]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn report_json_is_canonical() {
    let tmp = TempDir::new().unwrap();
    let conf = write_synth_config(tmp.path(), "");
    let data = tmp.path().join("data");
    assert!(pubdyn(&["synth", "--config", p(&conf), "--out", p(&data), "--format", "csv"]).status.success());
    let mut outputs = Vec::new();
    for run in ["x", "y"] {
        let out = tmp.path().join(run);
        let status = pubdyn(&[
            "analyze",
            "--posts",
            p(&data.join("posts.csv")),
            "--comments",
            p(&data.join("comments.csv")),
            "--format",
            "csv",
            "--out",
            p(&out),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(fs::read_to_string(out.join("report.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let value: serde_json::Value = serde_json::from_str(&outputs[0]).unwrap();
    let keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn config_file_sets_fit_options() {
    let tmp = TempDir::new().unwrap();
    let conf = write_synth_config(tmp.path(), "");
    let data = tmp.path().join("data");
    assert!(pubdyn(&["synth", "--config", p(&conf), "--out", p(&data)]).status.success());
    let analyze_conf = tmp.path().join("analyze.conf");
    fs::write(&analyze_conf, "# fit only the head\nfit_interval = 1:120\nthreads = 2\n").unwrap();
    let out = tmp.path().join("out");
    let run = pubdyn(&[
        "analyze",
        "--posts",
        p(&data.join("posts.tsv")),
        "--comments",
        p(&data.join("comments.tsv")),
        "--config",
        p(&analyze_conf),
        "--out",
        p(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = AnalysisReport::read_from_dir(&out).unwrap();
    assert_eq!(report.fit.unwrap().diagnostics.interval, (1, 120));

    fs::write(&analyze_conf, "fit_intervall = 1:120\n").unwrap();
    let run = pubdyn(&["analyze", "--posts", p(&data.join("posts.tsv")), "--posts-only", "--config", p(&analyze_conf)]);
    assert_eq!(run.status.code(), Some(1));
}
