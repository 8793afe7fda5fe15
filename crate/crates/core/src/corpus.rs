//! Directory-level ingestion of EDF recordings with seizure annotations.
//!
//! [`ingest_dir`] parses every `.edf` file in a directory, labels its epochs
//! and records a [`Store`]: an index of files with content hashes, epoch
//! counts and the seizure intervals that apply to them. [`featurize`] reads
//! the files back, checks the hashes, and produces the feature table.

use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::edf::{parse_edf, parse_seizure_summary, SeizureInterval};
use crate::error::{Error, Result};
use crate::features::{extract_features, ChannelPooling, Dataset, FeatureMatrix};
use crate::preprocess::{
    denoise, label_detection, label_prediction, slice_epochs, Denoise, LabeledEpochSet, Task, DEFAULT_EPOCH_LEN_S,
    DEFAULT_HORIZON_S,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub epoch_len_s: f64,
    pub task: Task,
    pub horizon_s: f64,
    pub denoise: Denoise,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            epoch_len_s: DEFAULT_EPOCH_LEN_S,
            task: Task::Detection,
            horizon_s: DEFAULT_HORIZON_S,
            denoise: Denoise::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    pub patient: String,
    pub path: PathBuf,
    pub sha256: String,
    pub n_epochs: usize,
    pub n_positive: usize,
    pub seizures: Vec<SeizureInterval>,
    /// Parse or labelling failure; such files are skipped downstream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Store {
    pub config: IngestConfig,
    pub files: Vec<FileEntry>,
    pub warnings: Vec<String>,
}

impl Store {
    pub fn ok_files(&self) -> impl Iterator<Item = &FileEntry> {
        self.files.iter().filter(|f| f.error.is_none())
    }

    pub fn total_seizures(&self) -> usize {
        self.files.iter().map(|f| f.seizures.len()).sum()
    }
}

/// Patient id of a file: the stem up to the first `_`, so `chb01_03.edf`
/// belongs to `chb01`.
pub fn patient_from_file(file: &str) -> String {
    let stem = Path::new(file)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(file);
    stem.split('_').next().unwrap_or(stem).to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files under `dir`, recursively, whose names end with `suffix`
/// (case-insensitive), sorted by path.
fn list_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io(e.into()))?;
        if entry.file_type().is_file() && entry.file_name().to_string_lossy().to_ascii_lowercase().ends_with(suffix) {
            out.push(entry.into_path());
        }
    }
    out.sort();
    Ok(out)
}

/// Parses, filters, epochs and labels one file.
pub fn load_labeled(bytes: &[u8], file: &str, seizures: &[SeizureInterval], cfg: &IngestConfig) -> Result<LabeledEpochSet> {
    let mut rec = parse_edf(bytes)?;
    denoise(&mut rec, cfg.denoise);
    let mut epochs = slice_epochs(&rec, file, cfg.epoch_len_s)?;
    let patient = patient_from_file(file);
    for e in &mut epochs {
        e.patient_id.clone_from(&patient);
    }
    match cfg.task {
        Task::Detection => Ok(label_detection(epochs, seizures)),
        Task::Prediction => label_prediction(epochs, seizures, cfg.horizon_s),
    }
}

/// Summary files named explicitly, or else every `*summary.txt` under `dir`.
pub fn read_summaries(dir: &Path, summaries: &[PathBuf]) -> Result<IndexMap<String, Vec<SeizureInterval>>> {
    let paths = if summaries.is_empty() {
        list_with_suffix(dir, "summary.txt")?
    } else {
        summaries.to_vec()
    };
    let mut all = IndexMap::new();
    for p in paths {
        let text = fs::read_to_string(&p)?;
        for (file, ivs) in parse_seizure_summary(&text)? {
            all.insert(file, ivs);
        }
    }
    Ok(all)
}

/// Ingests every EDF file under `dir`, including subdirectories, so a
/// CHB-MIT root with one folder per patient works as is. Per-file failures are recorded and the
/// run continues; it fails only if there are no EDF files or none parse.
pub fn ingest_dir(dir: &Path, summaries: &[PathBuf], cfg: &IngestConfig) -> Result<Store> {
    let edfs = list_with_suffix(dir, ".edf")?;
    if edfs.is_empty() {
        return Err(Error::Data(format!("no EDF files found in {}", dir.display())));
    }
    let annotations = read_summaries(dir, summaries)?;
    let names: Vec<String> = edfs
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let mut warnings = Vec::new();
    for (file, ivs) in &annotations {
        if !ivs.is_empty() && !names.contains(file) {
            let w = format!("summary lists {} seizure(s) for missing file {file}; ignored", ivs.len());
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let files: Vec<FileEntry> = edfs
        .par_iter()
        .zip(&names)
        .map(|(path, file)| {
            let seizures = annotations.get(file).cloned().unwrap_or_default();
            let mut entry = FileEntry {
                file: file.clone(),
                patient: patient_from_file(file),
                path: path.clone(),
                sha256: String::new(),
                n_epochs: 0,
                n_positive: 0,
                seizures,
                error: None,
            };
            let outcome = fs::read(path).map_err(Error::from).and_then(|bytes| {
                entry.sha256 = sha256_hex(&bytes);
                load_labeled(&bytes, file, &entry.seizures, cfg)
            });
            match outcome {
                Ok(set) => {
                    entry.n_epochs = set.epochs.len();
                    entry.n_positive = set.positives();
                    log::info!("{file}: {} epochs, {} positive", entry.n_epochs, entry.n_positive);
                }
                Err(e) => {
                    log::warn!("{file}: {e}");
                    entry.error = Some(e.to_string());
                }
            }
            entry
        })
        .collect();
    if files.iter().all(|f| f.error.is_some()) {
        return Err(Error::Data(format!("all {} EDF files failed to parse", files.len())));
    }
    Ok(Store {
        config: cfg.clone(),
        files,
        warnings,
    })
}

/// Feature table for every successfully ingested file, in store order.
///
/// Fails if a file changed since ingestion.
pub fn featurize(store: &Store, pooling: ChannelPooling) -> Result<Dataset> {
    let parts: Vec<(FeatureMatrix, Vec<u8>)> = store
        .ok_files()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|f| {
            let bytes = fs::read(&f.path)?;
            let digest = sha256_hex(&bytes);
            if digest != f.sha256 {
                return Err(Error::Data(format!(
                    "{} changed since ingestion (sha256 {digest}, expected {})",
                    f.path.display(),
                    f.sha256
                )));
            }
            let set = load_labeled(&bytes, &f.file, &f.seizures, &store.config)?;
            Ok((extract_features(&set.epochs, pooling)?, set.labels))
        })
        .collect::<Result<_>>()?;
    let n_cols = parts.iter().find(|(m, _)| !m.is_empty()).map_or(0, |(m, _)| m.n_cols);
    let mut x = FeatureMatrix::new(n_cols);
    let mut y = Vec::new();
    for (m, labels) in parts {
        if m.is_empty() {
            continue;
        }
        if m.n_cols != n_cols {
            return Err(Error::Shape {
                expected: n_cols,
                got: m.n_cols,
            });
        }
        for (row, meta) in m.rows.into_iter().zip(m.meta) {
            x.push(row, meta);
        }
        y.extend(labels);
    }
    Dataset::new(x, y)
}
