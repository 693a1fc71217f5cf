// Inject excess accounts into a smooth performance histogram and recover
// the region and the size of the excess.

use pubdyn::fitkit::{analyze_performance, AnalysisOptions, CountSeries, FitModel};

fn main() {
    let model = FitModel::REFERENCE;
    let mut series = CountSeries::from_model(&model, 1, 36_000);
    // 100000 extra accounts spread evenly over supports 85..=160.
    let (lo, hi, extra) = (85, 160, 100_000.0);
    let per_bin = extra / (hi - lo + 1) as f64;
    for s in lo..=hi {
        series.insert(s, series.get(s) + per_bin);
    }

    let analysis = analyze_performance(&series, &AnalysisOptions::default()).expect("fit succeeds");
    let a = &analysis.anomaly;
    println!("detected region: {:?}", a.region);
    println!("excess estimate: {:.1} (bounds {:.1} .. {:.1})", a.excess_estimate, a.lower_bound, a.upper_bound);
    println!("fit used {} bins, interval {:?}", analysis.diagnostics.bins_used, analysis.diagnostics.interval);
}
