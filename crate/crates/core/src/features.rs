//! Per-epoch statistical features and z-score scaling.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Epoch;

/// Which split a matrix was assembled for. Resampling refuses anything that is
/// not training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    #[default]
    Unassigned,
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub patient: String,
    pub file: String,
    pub start_s: f64,
    /// Set on rows created by oversampling.
    #[serde(default)]
    pub synthetic: bool,
}

impl RowMeta {
    pub fn new(patient: impl Into<String>, file: impl Into<String>, start_s: f64) -> Self {
        Self {
            patient: patient.into(),
            file: file.into(),
            start_s,
            synthetic: false,
        }
    }
}

/// Dense row-major feature table with per-row provenance.
///
/// Per-channel layout is `(mean, max, min, std)`, channels in recording order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub n_cols: usize,
    pub rows: Vec<Vec<f64>>,
    pub meta: Vec<RowMeta>,
    pub role: SplitRole,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            ..Default::default()
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<f64>, meta: RowMeta) {
        debug_assert_eq!(row.len(), self.n_cols);
        self.rows.push(row);
        self.meta.push(meta);
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            n_cols: self.n_cols,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            meta: idx.iter().map(|&i| self.meta[i].clone()).collect(),
            role: self.role,
        }
    }

    pub fn with_role(mut self, role: SplitRole) -> Self {
        self.role = role;
        self
    }

    /// Fails on NaN or infinite entries or on ragged rows.
    pub fn check_finite(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.n_cols {
                return Err(Error::Shape {
                    expected: self.n_cols,
                    got: r.len(),
                });
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("non-finite feature at row {i}, column {j}")));
            }
        }
        Ok(())
    }
}

/// Arithmetic mean, max, min and population standard deviation.
pub fn summary_stats(xs: &[f64]) -> [f64; 4] {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ss = 0.0;
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
        ss += (x - mean) * (x - mean);
    }
    [mean, hi, lo, (ss / n).sqrt()]
}

/// How channel statistics are laid out in a feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelPooling {
    /// 4 features per channel.
    #[default]
    PerChannel,
    /// 4 features computed over all channels' samples together.
    Pooled,
}

/// One feature row per epoch.
pub fn extract_features(epochs: &[Epoch], pooling: ChannelPooling) -> Result<FeatureMatrix> {
    let Some(first) = epochs.first() else {
        return Ok(FeatureMatrix::new(0));
    };
    let n_cols = match pooling {
        ChannelPooling::PerChannel => 4 * first.samples.len(),
        ChannelPooling::Pooled => 4,
    };
    let mut m = FeatureMatrix::new(n_cols);
    for (i, e) in epochs.iter().enumerate() {
        if e.samples.len() != first.samples.len() {
            return Err(Error::Data(format!(
                "epoch {i} has {} channels, expected {}",
                e.samples.len(),
                first.samples.len()
            )));
        }
        if let Some(short) = e.samples.iter().find(|c| c.len() < 2) {
            return Err(Error::Data(format!(
                "epoch {i} ({} @ {} s) has a channel with {} samples; need at least 2",
                e.file_name,
                e.start_s,
                short.len()
            )));
        }
        let row = match pooling {
            ChannelPooling::PerChannel => e.samples.iter().flat_map(|c| summary_stats(c)).collect(),
            ChannelPooling::Pooled => {
                let all: Vec<f64> = e.samples.iter().flatten().copied().collect();
                summary_stats(&all).to_vec()
            }
        };
        m.push(row, RowMeta::new(&e.patient_id, &e.file_name, e.start_s));
    }
    m.check_finite()?;
    Ok(m)
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Fits on training rows only. Uses the population standard deviation.
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data("cannot fit a scaler on an empty matrix".into()));
        }
        let n = train.n_rows() as f64;
        let mut mean = vec![0.0; train.n_cols];
        for r in &train.rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; train.n_cols];
        for r in &train.rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }

    /// `(x - mean) / std`; zero-variance columns map to 0.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.n_cols != self.mean.len() {
            return Err(Error::Shape {
                expected: self.mean.len(),
                got: m.n_cols,
            });
        }
        Ok(FeatureMatrix {
            n_cols: m.n_cols,
            rows: m.rows.iter().map(|r| self.transform_row(r)).collect(),
            meta: m.meta.clone(),
            role: m.role,
        })
    }
}

pub fn fit_scaler(train: &FeatureMatrix) -> Result<Scaler> {
    Scaler::fit(train)
}

pub fn apply_scaler(s: &Scaler, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    s.transform(m)
}

/// Features plus binary labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub x: FeatureMatrix,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(x: FeatureMatrix, y: Vec<u8>) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(Error::Shape {
                expected: x.n_rows(),
                got: y.len(),
            });
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("labels must be 0 or 1, found {bad}")));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&l| l == 1).count()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Rows whose patient satisfies `keep`, in original order.
    pub fn filter_patients(&self, keep: impl Fn(&str) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| keep(&self.x.meta[i].patient))
            .collect();
        self.select(&idx)
    }

    /// Distinct patient ids in order of first appearance.
    pub fn patients(&self) -> Vec<String> {
        let mut seen = indexmap::IndexSet::new();
        for m in &self.x.meta {
            seen.insert(m.patient.as_str());
        }
        seen.into_iter().map(String::from).collect()
    }

    /// Writes `patient,file,start_s,label,f0..f{d-1}` with LF line endings.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["patient".to_string(), "file".into(), "start_s".into(), "label".into()];
        header.extend((0..self.x.n_cols).map(|j| format!("f{j}")));
        out.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for ((row, meta), label) in self.x.rows.iter().zip(&self.x.meta).zip(&self.y) {
            rec.clear();
            rec.push(meta.patient.clone());
            rec.push(meta.file.clone());
            rec.push(format!("{}", meta.start_s));
            rec.push(label.to_string());
            rec.extend(row.iter().map(|v| format!("{v}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        let fixed = ["patient", "file", "start_s", "label"];
        if header.len() < 4 || header.iter().take(4).ne(fixed.iter().copied()) {
            return Err(Error::Data(format!(
                "feature CSV header must start with patient,file,start_s,label; got {:?}",
                header.iter().take(4).collect::<Vec<_>>()
            )));
        }
        let n_cols = header.len() - 4;
        let mut x = FeatureMatrix::new(n_cols);
        let mut y = Vec::new();
        for (lineno, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Data(format!("CSV row {}: bad {what}", lineno + 2));
            let start_s: f64 = rec[2].parse().map_err(|_| bad("start_s"))?;
            let label: u8 = rec[3].parse().map_err(|_| bad("label"))?;
            let row = (4..rec.len())
                .map(|j| rec[j].parse::<f64>().map_err(|_| bad(&header[j])))
                .collect::<Result<Vec<_>>>()?;
            x.push(row, RowMeta::new(&rec[0], &rec[1], start_s));
            y.push(label);
        }
        x.check_finite()?;
        Dataset::new(x, y)
    }
}
