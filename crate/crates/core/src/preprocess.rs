//! Epoching and labelling.
//!
//! Recordings are tiled into non-overlapping windows starting at `t = 0`; a
//! trailing partial window is dropped. Detection labels mark any epoch that
//! overlaps a seizure. Prediction labels mark epochs inside the preictal
//! horizon before a seizure onset and drop ictal epochs altogether.

use serde::{Deserialize, Serialize};

use crate::edf::{Recording, SeizureInterval};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const DEFAULT_EPOCH_LEN_S: f64 = 2.0;
pub const DEFAULT_HORIZON_S: f64 = 300.0;
pub const DEFAULT_SEQUENCE_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub patient_id: String,
    pub file_name: String,
    pub start_s: f64,
    pub duration_s: f64,
    /// One window per channel, all of equal length.
    pub samples: Vec<Vec<f64>>,
}

impl Epoch {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Ictal (1) vs. non-ictal (0).
    Detection,
    /// Preictal (1) vs. interictal (0); ictal epochs are excluded.
    Prediction,
}

#[derive(Debug, Clone)]
pub struct LabeledEpochSet {
    pub epochs: Vec<Epoch>,
    pub labels: Vec<u8>,
    pub task: Task,
}

impl LabeledEpochSet {
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// Nonzero-measure intersection of `[a0, a1)` and `[b0, b1)`.
pub fn overlaps(a0: f64, a1: f64, b0: f64, b1: f64) -> bool {
    a0.max(b0) < a1.min(b1)
}

/// Slices a recording into contiguous `epoch_len_s` windows.
///
/// All channels must share one sample rate, and `epoch_len_s * rate` must be a
/// whole number of samples.
pub fn slice_epochs(r: &Recording, file_name: &str, epoch_len_s: f64) -> Result<Vec<Epoch>> {
    if !(epoch_len_s.is_finite() && epoch_len_s > 0.0) {
        return Err(Error::Config(format!(
            "epoch length must be positive, got {epoch_len_s}"
        )));
    }
    if r.channels.is_empty() || r.num_records == 0 {
        return Ok(Vec::new());
    }
    let rate = r.sample_rate_hz(0);
    for (i, ch) in r.channels.iter().enumerate().skip(1) {
        if ch.samples_per_record != r.channels[0].samples_per_record {
            return Err(Error::Config(format!(
                "channel `{}` samples at {} Hz but channel `{}` at {} Hz; resampling is not supported",
                ch.label,
                r.sample_rate_hz(i),
                r.channels[0].label,
                rate
            )));
        }
    }
    let exact = epoch_len_s * rate;
    let per_epoch = exact.round();
    if per_epoch < 1.0 || (exact - per_epoch).abs() > 1e-9 * exact.max(1.0) {
        return Err(Error::Config(format!(
            "epoch length {epoch_len_s} s at {rate} Hz is not a whole number of samples"
        )));
    }
    let per_epoch = per_epoch as usize;
    let total = r.signals[0].len();
    let n = total / per_epoch;

    Ok((0..n)
        .map(|e| {
            let lo = e * per_epoch;
            Epoch {
                patient_id: r.patient_id.clone(),
                file_name: file_name.to_string(),
                start_s: e as f64 * epoch_len_s,
                duration_s: epoch_len_s,
                samples: r
                    .signals
                    .iter()
                    .map(|s| s[lo..lo + per_epoch].to_vec())
                    .collect(),
            }
        })
        .collect())
}

fn seizures_for<'a>(
    epoch: &'a Epoch,
    seizures: &'a [SeizureInterval],
) -> impl Iterator<Item = &'a SeizureInterval> + 'a {
    seizures
        .iter()
        .filter(move |s| s.file_name.is_empty() || s.file_name == epoch.file_name)
}

/// Label 1 iff the epoch overlaps any seizure with nonzero measure.
pub fn label_detection(epochs: Vec<Epoch>, seizures: &[SeizureInterval]) -> LabeledEpochSet {
    let labels = epochs
        .iter()
        .map(|e| {
            u8::from(
                seizures_for(e, seizures).any(|s| overlaps(e.start_s, e.end_s(), s.start_s, s.end_s)),
            )
        })
        .collect();
    LabeledEpochSet {
        epochs,
        labels,
        task: Task::Detection,
    }
}

/// Preictal labelling with a horizon of `horizon_s` before each seizure onset.
///
/// Epochs overlapping a seizure are removed. Epochs overlapping
/// `[onset - horizon_s, onset)` for any onset get label 1, all others 0.
pub fn label_prediction(
    epochs: Vec<Epoch>,
    seizures: &[SeizureInterval],
    horizon_s: f64,
) -> Result<LabeledEpochSet> {
    if !(horizon_s.is_finite() && horizon_s > 0.0) {
        return Err(Error::Config(format!(
            "prediction horizon must be positive, got {horizon_s}"
        )));
    }
    let mut kept = Vec::with_capacity(epochs.len());
    let mut labels = Vec::with_capacity(epochs.len());
    for e in epochs {
        let ictal = seizures_for(&e, seizures).any(|s| overlaps(e.start_s, e.end_s(), s.start_s, s.end_s));
        if ictal {
            continue;
        }
        let preictal = seizures_for(&e, seizures)
            .any(|s| overlaps(e.start_s, e.end_s(), s.start_s - horizon_s, s.start_s));
        labels.push(u8::from(preictal));
        kept.push(e);
    }
    let out = LabeledEpochSet {
        epochs: kept,
        labels,
        task: Task::Prediction,
    };
    assert!(
        out.epochs.iter().all(|e| !seizures_for(e, seizures)
            .any(|s| overlaps(e.start_s, e.end_s(), s.start_s, s.end_s))),
        "prediction set must not contain ictal epochs"
    );
    Ok(out)
}

/// Optional noise-reduction stage applied before epoching.
///
/// The default is a pass-through. `HighPass` runs a first-order IIR high-pass
/// filter per channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Denoise {
    #[default]
    None,
    HighPass { cutoff_hz: f64 },
}

pub const DEFAULT_HIGHPASS_HZ: f64 = 0.5;

pub fn denoise(r: &mut Recording, mode: Denoise) {
    let Denoise::HighPass { cutoff_hz } = mode else {
        return;
    };
    for ch in 0..r.channels.len() {
        let fs = r.sample_rate_hz(ch);
        let rc = 1.0 / (2.0 * std::f64::consts::PI * cutoff_hz);
        let alpha = rc / (rc + 1.0 / fs);
        let sig = &mut r.signals[ch];
        let (mut prev_x, mut prev_y) = (sig.first().copied().unwrap_or(0.0), 0.0);
        for v in sig.iter_mut().skip(1) {
            let x = *v;
            let y = alpha * (prev_y + x - prev_x);
            prev_x = x;
            prev_y = y;
            *v = y;
        }
        if let Some(first) = sig.first_mut() {
            *first = 0.0;
        }
    }
}

/// Fixed-length windows of consecutive epoch feature rows.
#[derive(Debug, Clone, Default)]
pub struct SequenceSet {
    /// `[window][step][feature]`
    pub sequences: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<u8>,
    /// Index of the last feature row of each window.
    pub last_row: Vec<usize>,
}

impl SequenceSet {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Sliding windows of `len` consecutive rows within each file.
///
/// Rows are grouped by `(patient, file)` in order of first appearance and must
/// be in ascending time order within a file. A window takes the label of its
/// last row. Files shorter than `len` contribute nothing.
pub fn build_sequences(features: &FeatureMatrix, labels: &[u8], len: usize) -> Result<SequenceSet> {
    if len == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    if labels.len() != features.n_rows() {
        return Err(Error::Shape {
            expected: features.n_rows(),
            got: labels.len(),
        });
    }
    let mut groups: indexmap::IndexMap<(&str, &str), Vec<usize>> = indexmap::IndexMap::new();
    for (i, m) in features.meta.iter().enumerate() {
        groups
            .entry((m.patient.as_str(), m.file.as_str()))
            .or_default()
            .push(i);
    }
    let mut out = SequenceSet::default();
    for ((patient, file), rows) in groups {
        if rows
            .windows(2)
            .any(|w| features.meta[w[0]].start_s >= features.meta[w[1]].start_s)
        {
            return Err(Error::Data(format!(
                "rows of {patient}/{file} are not in ascending time order"
            )));
        }
        for w in rows.windows(len) {
            out.sequences
                .push(w.iter().map(|&i| features.rows[i].clone()).collect());
            let last = *w.last().unwrap();
            out.labels.push(labels[last]);
            out.last_row.push(last);
        }
    }
    Ok(out)
}
