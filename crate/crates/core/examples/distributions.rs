// Compute every activity distribution on a small synthetic corpus.

use pubdyn::corpus::Corpus;
use pubdyn::metrics::{compute_distributions, compute_summary, MetricKind};
use pubdyn::synth::{generate, SynthConfig};

fn main() {
    let synth = generate(&SynthConfig { n_accounts: 2_000, max_performance: 2_000, ..Default::default() })
        .expect("default config is feasible");
    let corpus = Corpus::build(synth.posts, synth.comments);

    let summary = compute_summary(&corpus);
    println!(
        "{} posts by {} accounts, {} comments by {} commenters",
        summary.n_posts, summary.n_post_accounts, summary.n_comments, summary.n_commenters
    );
    if let Some(mean) = summary.mean_post_performance {
        println!("mean posts per account: {mean:.2}");
    }

    println!("{:<40} {:>10} {:>12} {:>12} {:>10}", "metric", "weight", "median", "mass median", "max");
    for d in compute_distributions(&corpus, &MetricKind::ALL) {
        let show = |v: Option<i64>| v.map_or("-".to_owned(), |v| v.to_string());
        println!(
            "{:<40} {:>10} {:>12} {:>12} {:>10}",
            d.kind.as_str(),
            d.total_weight,
            show(d.median_by_population),
            show(d.median_by_mass),
            show(d.max_support)
        );
    }
}
