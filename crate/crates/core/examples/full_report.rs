// Build the complete analysis report in memory and print its headline
// conclusions as canonical JSON.

use pubdyn::corpus::Corpus;
use pubdyn::fitkit::AnalysisOptions;
use pubdyn::metrics::MetricKind;
use pubdyn::report::{build_report, canonical_json};
use pubdyn::synth::{generate, SynthConfig};

fn main() {
    let synth = generate(&SynthConfig { n_accounts: 5_000, max_performance: 3_000, ..Default::default() }).unwrap();
    let corpus = Corpus::build(synth.posts, synth.comments);
    let report = build_report(&corpus, &MetricKind::ALL, Some(&AnalysisOptions::default())).expect("fit succeeds");

    if let Some(fit) = &report.fit {
        println!("fitted model: {:?}", fit.model);
    }
    print!("{}", canonical_json(&report.conclusions));
}
