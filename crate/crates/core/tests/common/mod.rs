#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seizurekit::edf::{ChannelMeta, Recording};

/// Printable text of up to `max` characters that survives header trimming.
fn text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let len = rng.random_range(0..=max);
    let mut s: String = (0..len).map(|_| rng.random_range(0x20u8..=0x7e) as char).collect();
    while s.ends_with(' ') {
        s.pop();
    }
    s
}

/// A random valid recording. Numeric header values are chosen so they fit
/// their 8-character fields exactly.
pub fn random_recording(seed: u64) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.random_range(0..5);
    let num_records = rng.random_range(0..4);
    let durations = [0.25, 0.5, 1.0, 2.0, 10.0];
    let record_duration_s = durations[rng.random_range(0..durations.len())];
    let channels: Vec<ChannelMeta> = (0..ns)
        .map(|_| {
            let digital_min = rng.random_range(-32768..0);
            let digital_max = rng.random_range(digital_min + 1..=32767);
            let lo = f64::from(rng.random_range(-4000..4000)) / 4.0;
            let hi = lo + f64::from(rng.random_range(1..8000)) / 4.0;
            let (physical_min, physical_max) = if rng.random_bool(0.1) { (hi, lo) } else { (lo, hi) };
            ChannelMeta {
                label: text(&mut rng, 16),
                transducer: text(&mut rng, 80),
                physical_dimension: text(&mut rng, 8),
                physical_min,
                physical_max,
                digital_min,
                digital_max,
                prefiltering: text(&mut rng, 80),
                samples_per_record: rng.random_range(1..9),
            }
        })
        .collect();
    let signals = channels
        .iter()
        .map(|c| {
            let lo = c.physical_min.min(c.physical_max);
            let hi = c.physical_min.max(c.physical_max);
            (0..num_records * c.samples_per_record)
                .map(|_| rng.random_range(lo..=hi))
                .collect()
        })
        .collect();
    let start_datetime = NaiveDate::from_ymd_opt(rng.random_range(1985..=2084), rng.random_range(1..=12), rng.random_range(1..=28))
        .unwrap()
        .and_hms_opt(rng.random_range(0..24), rng.random_range(0..60), rng.random_range(0..60))
        .unwrap();
    Recording {
        patient_id: text(&mut rng, 80),
        recording_id: text(&mut rng, 80),
        start_datetime,
        record_duration_s,
        num_records,
        channels,
        signals,
    }
}

/// Headers equal and every sample within one digital step. Returns the
/// first discrepancy.
pub fn roundtrip_mismatch(a: &Recording, b: &Recording) -> Option<String> {
    let strip = |r: &Recording| Recording {
        signals: Vec::new(),
        ..r.clone()
    };
    if strip(a) != strip(b) {
        return Some(format!("headers differ:\n{:?}\n{:?}", strip(a), strip(b)));
    }
    for (ch, (c, (sa, sb))) in a.channels.iter().zip(a.signals.iter().zip(&b.signals)).enumerate() {
        let step = (c.physical_max - c.physical_min).abs() / f64::from(c.digital_max - c.digital_min);
        if sa.len() != sb.len() {
            return Some(format!("channel {ch}: {} vs {} samples", sa.len(), sb.len()));
        }
        for (i, (x, y)) in sa.iter().zip(sb).enumerate() {
            if (x - y).abs() > step * (1.0 + 1e-9) {
                return Some(format!("channel {ch} sample {i}: {x} vs {y}, step {step}"));
            }
        }
    }
    None
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_seizurekit")
}

pub fn run_cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn seizurekit")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}
