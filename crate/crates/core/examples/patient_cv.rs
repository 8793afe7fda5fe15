//! Patient-wise five-fold cross-validation of logistic regression with
//! SMOTE on the synthetic cohort.
//!
//! ```sh
//! cargo run --release --example patient_cv -- [model]
//! ```

use seizurekit::pipeline::{run_cv, ModelSpec};
use seizurekit::resample::SmoteConfig;
use seizurekit::synth::{generate_synthetic, SynthConfig};

fn main() -> seizurekit::Result<()> {
    let model = std::env::args().nth(1).unwrap_or_else(|| "logreg".into());
    let data = generate_synthetic(&SynthConfig::default())?;
    let (folds, summary) = run_cv(&data, 5, 0, &ModelSpec::from_name(&model, 0)?, Some(&SmoteConfig::default()))?;
    for f in &folds {
        println!(
            "fold {}: test {:?} accuracy {:.4} recall {:.4}",
            f.fold, f.test_patients, f.report.accuracy, f.report.recall
        );
    }
    print!("{}", summary.render());
    Ok(())
}
