//! Seizure detection and prediction from scalp EEG.
//!
//! The crate covers the whole path from raw recordings to evaluated models:
//!
//! * [`edf`] reads and writes EDF files and CHB-MIT style seizure summaries.
//! * [`preprocess`] cuts recordings into fixed-length epochs and labels them
//!   for detection (ictal vs. non-ictal) or prediction (preictal vs. interictal).
//! * [`features`] computes per-channel mean/max/min/std features and a
//!   train-only z-score scaler.
//! * [`resample`] implements SMOTE for the minority class.
//! * [`models`] holds from-scratch KNN, logistic regression, random forest,
//!   RBF-kernel SVM (SMO) and a single-layer LSTM.
//! * [`eval`] does patient-disjoint splitting, patient-wise k-fold and metrics.
//! * [`synth`] generates a labelled synthetic EEG-feature dataset.
//! * [`cli`] wires everything into reproducible experiment commands.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod edf;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod resample;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

/// Version tag written into every model artifact and run manifest.
pub const FORMAT_VERSION: &str = "1.0";
