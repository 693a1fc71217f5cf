//! Runs each example's `main` so the examples cannot rot.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(ingest_tables);
example!(comment_graph);
example!(distributions);
example!(fit_model);
example!(detect_anomaly);
example!(synth_roundtrip);
example!(full_report);
