// Tabulate the reference performance model, perturb it, and fit it back.

use pubdyn::fitkit::{fit, CountSeries, FitModel, FitOptions};

fn main() {
    let reference = FitModel::REFERENCE;
    println!("m(1) = {}, m(10) = {:.1}, m(245) = {:.2}", reference.evaluate(1).unwrap(), reference.evaluate(10).unwrap(), reference.evaluate(245).unwrap());

    // Exact tabulation: the fit should land on the generating constants.
    let exact = CountSeries::from_model(&reference, 1, 245);
    let (model, diag) = fit(&exact, &FitOptions::default()).expect("exact series fits");
    println!("exact:  {model:?}");
    println!("        max relative error {:.2e} after {} iterations", diag.max_relative_error, diag.iterations);

    // A deterministic 5% ripple: parameters move, the fit stays close.
    let mut rippled = CountSeries::new();
    for (s, y) in exact.iter() {
        rippled.insert(s, y * (1.0 + 0.05 * (s as f64).sin()));
    }
    let (model, diag) = fit(&rippled, &FitOptions::default()).expect("rippled series fits");
    println!("ripple: {model:?}");
    println!("        max relative error {:.3}", diag.max_relative_error);
}
