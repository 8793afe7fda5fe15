use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seizurekit::eval::split_patients;
use seizurekit::features::{Dataset, SplitRole};
use seizurekit::models::{LogRegConfig, RfConfig};
use seizurekit::pipeline::{run_holdout, train_model, ModelSpec};
use seizurekit::resample::SmoteConfig;
use seizurekit::synth::{generate_synthetic, SynthConfig};

fn holdout(data: &Dataset, spec: &ModelSpec, smote: bool, seed: u64) -> seizurekit::eval::MetricsReport {
    let plan = split_patients(&data.patients(), [0.5, 0.25, 0.25], seed).unwrap();
    let sm = SmoteConfig { seed, ..Default::default() };
    run_holdout(data, &plan, spec, smote.then_some(&sm)).unwrap().report
}

#[test]
fn zero_separation_is_uninformative() {
    let data = generate_synthetic(&SynthConfig { class_separation: 0.0, n_patients: 12, seed: 5, ..Default::default() }).unwrap();
    let r = holdout(&data, &ModelSpec::LogReg(LogRegConfig::default()), true, 5);
    let auc = r.auc.unwrap();
    assert!((auc - 0.5).abs() <= 0.05, "auc {auc}");
    let r = holdout(&data, &ModelSpec::LogReg(LogRegConfig::default()), false, 5);
    let majority_rate = 1.0 - (r.tp + r.fn_) as f64 / r.n() as f64;
    assert!(r.accuracy <= majority_rate + 0.005, "accuracy {} vs majority rate {majority_rate}", r.accuracy);
}

#[test]
fn default_cohort_is_not_linearly_trivial() {
    let data = generate_synthetic(&SynthConfig::default()).unwrap();
    for smote in [false, true] {
        let r = holdout(&data, &ModelSpec::LogReg(LogRegConfig::default()), smote, 0);
        assert!(r.accuracy < 0.99, "smote {smote}: accuracy {}", r.accuracy);
    }
}

#[test]
fn record_level_split_is_optimistic() {
    let data = generate_synthetic(&SynthConfig { n_patients: 10, epochs_per_patient: 600, seed: 2, ..Default::default() }).unwrap();
    let spec = ModelSpec::Rf(RfConfig { n_trees: 30, seed: 2, ..Default::default() });
    let honest = holdout(&data, &spec, false, 2).auc.unwrap();

    // Same model, rows shuffled into train and test regardless of patient.
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let (tr, te) = idx.split_at(data.len() / 2);
    let mut train = data.select(tr);
    train.x.role = SplitRole::Train;
    let mut test = data.select(te);
    test.x.role = SplitRole::Test;
    let t = train_model(&train, &spec, None).unwrap();
    assert!(t.evaluate(&test, false).is_err(), "leakage gate must refuse shared patients");
    let (leaky, _) = t.evaluate(&test, true).unwrap();
    let leaky = leaky.auc.unwrap();
    assert!(leaky >= honest, "record-level auc {leaky} < patient-disjoint auc {honest}");
}
