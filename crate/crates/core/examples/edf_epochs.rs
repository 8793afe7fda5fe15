//! Writes a two-channel EDF file, reads it back, and turns it into labelled
//! epochs and features.
//!
//! ```sh
//! cargo run --example edf_epochs
//! ```

use chrono::NaiveDate;
use seizurekit::edf::{parse_edf, parse_seizure_summary, write_edf, ChannelMeta, Recording};
use seizurekit::features::{extract_features, ChannelPooling};
use seizurekit::preprocess::{denoise, label_detection, slice_epochs, Denoise};

fn channel(label: &str) -> ChannelMeta {
    ChannelMeta {
        label: label.into(),
        transducer: "AgAgCl electrode".into(),
        physical_dimension: "uV".into(),
        physical_min: -800.0,
        physical_max: 800.0,
        digital_min: -32768,
        digital_max: 32767,
        prefiltering: "HP:0.1Hz".into(),
        samples_per_record: 256,
    }
}

fn main() -> seizurekit::Result<()> {
    let fs = 256.0;
    let seconds = 20;
    let wave = |f: f64, amp: f64| -> Vec<f64> {
        (0..seconds * 256).map(|k| amp * (2.0 * std::f64::consts::PI * f * k as f64 / fs).sin()).collect()
    };
    let mut burst = wave(3.0, 40.0);
    // A high-amplitude rhythmic stretch from 8 s to 12 s.
    for (k, v) in burst.iter_mut().enumerate().skip(8 * 256).take(4 * 256) {
        *v = 300.0 * (2.0 * std::f64::consts::PI * 5.0 * k as f64 / fs).sin();
    }
    let rec = Recording {
        patient_id: "demo".into(),
        recording_id: "example".into(),
        start_datetime: NaiveDate::from_ymd_opt(2010, 6, 1).unwrap().and_hms_opt(9, 30, 0).unwrap(),
        record_duration_s: 1.0,
        num_records: seconds,
        channels: vec![channel("FP1-F7"), channel("F7-T7")],
        signals: vec![burst, wave(10.0, 25.0)],
    };
    let bytes = write_edf(&rec)?;
    println!("EDF: {} bytes", bytes.len());

    let mut back = parse_edf(&bytes)?;
    println!("{} channels, {} s, first label {:?}", back.channels.len(), back.duration_s(), back.channels[0].label);
    denoise(&mut back, Denoise::HighPass { cutoff_hz: 0.5 });

    let summary = "File Name: demo_01.edf\nNumber of Seizures in File: 1\nSeizure Start Time: 8 seconds\nSeizure End Time: 12 seconds\n";
    let seizures = parse_seizure_summary(summary)?;
    let epochs = slice_epochs(&back, "demo_01.edf", 2.0)?;
    let set = label_detection(epochs, &seizures["demo_01.edf"]);
    let feats = extract_features(&set.epochs, ChannelPooling::PerChannel)?;
    for (i, (row, label)) in feats.rows.iter().zip(&set.labels).enumerate() {
        println!("epoch {:>2} [{:>4.1}s) label {label}  ch0 mean {:>7.2} max {:>7.2} min {:>7.2} std {:>6.2}", i, feats.meta[i].start_s, row[0], row[1], row[2], row[3]);
    }
    Ok(())
}
