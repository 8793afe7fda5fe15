//! Builds a small directory of EDF files with a seizure summary, ingests it,
//! and featurizes the result.
//!
//! ```sh
//! cargo run --example ingest_directory
//! ```

use chrono::NaiveDate;
use seizurekit::corpus::{featurize, ingest_dir, IngestConfig};
use seizurekit::edf::{write_edf, ChannelMeta, Recording};
use seizurekit::features::ChannelPooling;
use seizurekit::preprocess::Task;

fn recording(seconds: usize, phase: f64) -> Recording {
    let ch = ChannelMeta {
        label: "T7-P7".into(),
        transducer: String::new(),
        physical_dimension: "uV".into(),
        physical_min: -200.0,
        physical_max: 200.0,
        digital_min: -2048,
        digital_max: 2047,
        prefiltering: String::new(),
        samples_per_record: 64,
    };
    Recording {
        patient_id: String::new(),
        recording_id: String::new(),
        start_datetime: NaiveDate::from_ymd_opt(2005, 3, 2).unwrap().and_hms_opt(11, 0, 0).unwrap(),
        record_duration_s: 1.0,
        num_records: seconds,
        channels: vec![ch],
        signals: vec![(0..seconds * 64).map(|k| 50.0 * (k as f64 * 0.2 + phase).sin()).collect()],
    }
}

fn main() -> seizurekit::Result<()> {
    let dir = std::env::temp_dir().join("seizurekit_ingest_example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("chb90_01.edf"), write_edf(&recording(120, 0.0))?)?;
    std::fs::write(dir.join("chb90_02.edf"), write_edf(&recording(60, 1.0))?)?;
    std::fs::write(
        dir.join("chb90-summary.txt"),
        "File Name: chb90_01.edf\nNumber of Seizures in File: 1\nSeizure 1 Start Time: 40 seconds\nSeizure 1 End Time: 52 seconds\n\n\
         File Name: chb90_02.edf\nNumber of Seizures in File: 0\n",
    )?;

    for task in [Task::Detection, Task::Prediction] {
        let cfg = IngestConfig { task, horizon_s: 20.0, ..Default::default() };
        let store = ingest_dir(&dir, &[], &cfg)?;
        println!("{task:?}:");
        for f in &store.files {
            println!("  {} ({}): {} epochs, {} positive, sha256 {}..", f.file, f.patient, f.n_epochs, f.n_positive, &f.sha256[..12]);
        }
        let data = featurize(&store, ChannelPooling::PerChannel)?;
        println!("  feature table: {} rows x {} columns", data.len(), data.x.n_cols);
    }
    Ok(())
}
