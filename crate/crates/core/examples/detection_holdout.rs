//! Patient-disjoint holdout on the default synthetic cohort.
//!
//! Compares the all-negative baseline, class-imbalanced tree and kernel
//! models, and logistic regression trained on SMOTE-balanced data.
//!
//! ```sh
//! cargo run --release --example detection_holdout -- [seed]
//! ```

use seizurekit::eval::split_patients;
use seizurekit::pipeline::{run_holdout, ModelSpec};
use seizurekit::resample::SmoteConfig;
use seizurekit::synth::{generate_synthetic, SynthConfig};

fn main() -> seizurekit::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let data = generate_synthetic(&SynthConfig { seed, ..Default::default() })?;
    let plan = split_patients(&data.patients(), [0.5, 0.25, 0.25], seed)?;
    println!(
        "{} rows, {} positive; train {:?}; test {:?}",
        data.len(),
        data.positives(),
        plan.train_patients,
        plan.test_patients
    );
    let smote_cfg = SmoteConfig { seed, ..Default::default() };
    let runs = [
        ("majority", None),
        ("rf", None),
        ("svm", None),
        ("logreg", None),
        ("logreg", Some(&smote_cfg)),
        ("knn", Some(&smote_cfg)),
    ];
    println!("{:<8} {:<6} {:>8} {:>9} {:>7} {:>7} {:>7}", "model", "smote", "accuracy", "precision", "recall", "f1", "auc");
    for (name, sm) in runs {
        let t = std::time::Instant::now();
        let r = run_holdout(&data, &plan, &ModelSpec::from_name(name, seed)?, sm)?.report;
        println!(
            "{:<8} {:<6} {:>8.4} {:>9.4} {:>7.4} {:>7.4} {:>7} ({:.1}s)",
            name,
            if sm.is_some() { "yes" } else { "no" },
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.auc.map_or("-".into(), |a| format!("{a:.4}")),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
