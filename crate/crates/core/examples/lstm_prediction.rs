//! Trains the LSTM on windows of ten consecutive epochs with early stopping
//! on validation patients, then scores the held-out patients.
//!
//! ```sh
//! cargo run --release --example lstm_prediction
//! ```

use seizurekit::eval::split_patients;
use seizurekit::features::SplitRole;
use seizurekit::models::LstmTrainConfig;
use seizurekit::pipeline::{subset, train_lstm};
use seizurekit::synth::{generate_synthetic, SynthConfig};

fn main() -> seizurekit::Result<()> {
    let data = generate_synthetic(&SynthConfig { n_patients: 8, epochs_per_patient: 400, n_channels: 8, ..Default::default() })?;
    let plan = split_patients(&data.patients(), [0.5, 0.25, 0.25], 0)?;
    let train = subset(&data, &plan.train_patients, SplitRole::Train);
    let val = subset(&data, &plan.val_patients, SplitRole::Validation);
    let test = subset(&data, &plan.test_patients, SplitRole::Test);
    let cfg = LstmTrainConfig { hidden_dim: 16, epochs: 15, ..Default::default() };
    let t = train_lstm(&train, Some(&val), 10, &cfg, true)?;
    println!("{} training windows, {} after balancing", t.n_train_sequences, t.n_balanced_sequences);
    for h in &t.history {
        println!("epoch {:>2}: train {:.4} val {}", h.epoch, h.train_loss, h.val_loss.map_or("-".into(), |v| format!("{v:.4}")));
    }
    let (r, _, _) = t.evaluate(&test, false)?;
    println!("test: accuracy {:.4} recall {:.4} precision {:.4} auc {:?}", r.accuracy, r.recall, r.precision, r.auc);
    Ok(())
}
