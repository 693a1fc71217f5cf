// Generate a corpus to disk, run the full analysis on the files, and check
// the result against the generator's ground truth.

use pubdyn::cli::{run_analyze, AnalyzeArgs};
use pubdyn::synth::{generate, verify_against_ground_truth, AnomalyBump, SynthConfig};
use pubdyn::ingest::TableFormat;

fn main() {
    let dir = std::env::temp_dir().join(format!("pubdyn-roundtrip-{}", std::process::id()));
    let config = SynthConfig {
        seed: 7,
        n_accounts: 20_000,
        max_performance: 5_000,
        anomaly_bump: Some(AnomalyBump { region: (85, 160), extra_accounts: 1_500 }),
        ..Default::default()
    };
    let corpus = generate(&config).expect("feasible config");
    let files = corpus.write_to_dir(dir.join("data"), &TableFormat::tsv()).expect("temp dir is writable");

    let args = AnalyzeArgs {
        posts: Some(files.posts),
        comments: Some(files.comments),
        config: None,
        out: dir.join("report"),
        posts_only: false,
        comments_only: false,
        exclude_region: None,
        fit_interval: None,
        threads: None,
        format: None,
        skip_fit: false,
        export_graph: false,
    };
    let report = run_analyze(&args).expect("analysis succeeds");

    let checks = verify_against_ground_truth(&report, &corpus.truth);
    for c in &checks {
        println!("{} {}: expected {}, observed {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.expected, c.observed);
    }
    std::fs::remove_dir_all(&dir).ok();
    assert!(checks.iter().all(|c| c.passed));
}
