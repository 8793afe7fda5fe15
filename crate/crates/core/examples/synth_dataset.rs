//! Generates the synthetic cohort, prints per-patient prevalence, and
//! optionally writes the feature CSV.
//!
//! ```sh
//! cargo run --release --example synth_dataset -- [out.csv]
//! ```

use std::fs::File;

use seizurekit::features::{extract_features, ChannelPooling};
use seizurekit::synth::{generate_synthetic, raw_epochs, SynthConfig};

fn main() -> seizurekit::Result<()> {
    let cfg = SynthConfig::default();
    let data = generate_synthetic(&cfg)?;
    println!(
        "{} patients x {} epochs, {} features, prevalence {:.4}",
        cfg.n_patients,
        cfg.epochs_per_patient,
        cfg.n_features(),
        data.positives() as f64 / data.len() as f64
    );
    for p in data.patients().iter().take(5) {
        let sub = data.filter_patients(|q| q == p);
        println!("  {p}: {} seizure epochs of {}", sub.positives(), sub.len());
    }

    // Raw sample mode: epochs whose statistics reproduce the feature rows.
    let head = data.select(&[0, 1, 2]);
    let epochs = raw_epochs(&head, 512, cfg.epoch_len_s, cfg.seed)?;
    let back = extract_features(&epochs, ChannelPooling::PerChannel)?;
    println!("row 0 features   {:?}", &head.x.rows[0][..4]);
    println!("row 0 recomputed {:?}", &back.rows[0][..4]);

    if let Some(path) = std::env::args().nth(1) {
        data.write_csv(File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
