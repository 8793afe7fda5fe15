//! Command-line harness over the library.
//!
//! Every command writes its outputs plus a `manifest.json` into the output
//! directory. The manifest echoes the resolved configuration, the seed and
//! the SHA-256 of every input file, and carries no timestamps, so rerunning
//! with the same inputs reproduces every file byte for byte.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 leakage-gate abort.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{featurize, ingest_dir, sha256_hex, IngestConfig, Store};
use crate::error::{Error, Result};
use crate::eval::{split_patients, MetricsReport, SplitPlan};
use crate::features::{ChannelPooling, Dataset, Scaler, SplitRole};
use crate::models::{
    KnnConfig, LogRegConfig, LstmTrainConfig, Model, ModelArtifact, RfConfig, SvmConfig,
};
use crate::pipeline::{
    leakage_gate, run_cv, scaled_sequences, subset, train_lstm, train_model, ModelSpec, TrainedLstm,
};
use crate::preprocess::{Denoise, Task, DEFAULT_SEQUENCE_LEN};
use crate::resample::SmoteConfig;
use crate::synth::{generate_synthetic, SynthConfig};
use crate::FORMAT_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_LEAKAGE: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Leakage(_) => EXIT_LEAKAGE,
        _ => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "seizurekit", version, about = "Seizure detection and prediction from scalp EEG")]
pub struct Cli {
    /// TOML experiment configuration; flags given here take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic patient-tagged feature dataset.
    Synth(SynthArgs),
    /// Index a directory of EDF files and their seizure summaries.
    Ingest(IngestArgs),
    /// Turn an ingested store into a feature CSV.
    Featurize(FeaturizeArgs),
    /// Fit a model on a patient-disjoint training split.
    Train(TrainArgs),
    /// Evaluate a saved model on held-out patients.
    Eval(EvalArgs),
    /// Patient-wise k-fold cross-validation.
    Cv(CvArgs),
    /// Score rows with a saved model.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub patients: Option<usize>,
    #[arg(long)]
    pub epochs_per_patient: Option<usize>,
    #[arg(long)]
    pub prevalence: Option<f64>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub edf_dir: Option<PathBuf>,
    /// Seizure summary file; repeatable. Defaults to `*summary.txt` in the directory.
    #[arg(long = "summary")]
    pub summaries: Vec<PathBuf>,
    #[command(flatten)]
    pub epoching: EpochArgs,
    /// CSV with `patient,age,gender` columns; writes age and gender counts.
    #[arg(long)]
    pub demographics: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct EpochArgs {
    /// `detection` or `prediction`.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub epoch_len: Option<f64>,
    /// Preictal horizon in seconds (prediction task).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// High-pass cutoff in Hz applied before epoching.
    #[arg(long)]
    pub highpass: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Store written by `ingest` (default `<out>/store.json`).
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Pool channels into four features instead of four per channel.
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Feature CSV.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Generate the synthetic dataset from the `[synth]` configuration.
    #[arg(long)]
    pub synthetic: bool,
    /// EDF directory, ingested and featurized in memory.
    #[arg(long)]
    pub edf_dir: Option<PathBuf>,
    #[arg(long = "summary")]
    pub summaries: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// majority, knn, logreg, rf, svm or lstm.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, overrides_with = "no_smote")]
    pub smote: bool,
    #[arg(long)]
    pub no_smote: bool,
    /// Explicit training patients (comma separated) instead of a seeded split.
    #[arg(long, value_delimiter = ',')]
    pub train_patients: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub test_patients: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model_file: PathBuf,
    /// Patients to evaluate on (default: the saved test split).
    #[arg(long, value_delimiter = ',')]
    pub patients: Vec<String>,
    /// Permit evaluation on training patients. Results are optimistic.
    #[arg(long)]
    pub allow_leaky_split: bool,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, overrides_with = "no_smote")]
    pub smote: bool,
    #[arg(long)]
    pub no_smote: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub features: Option<PathBuf>,
    pub synthetic: bool,
    pub edf_dir: Option<PathBuf>,
    pub summaries: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub knn: KnnConfig,
    pub logreg: LogRegConfig,
    pub rf: RfConfig,
    pub svm: SvmConfig,
    pub lstm: LstmTrainConfig,
    pub sequence_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            name: "logreg".into(),
            knn: KnnConfig::default(),
            logreg: LogRegConfig::default(),
            rf: RfConfig::default(),
            svm: SvmConfig::default(),
            lstm: LstmTrainConfig::default(),
            sequence_len: DEFAULT_SEQUENCE_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub enabled: bool,
    pub k_neighbors: usize,
    pub target_ratio: f64,
}

impl Default for SmoteSection {
    fn default() -> Self {
        let d = SmoteConfig::default();
        Self {
            enabled: true,
            k_neighbors: d.k_neighbors,
            target_ratio: d.target_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub folds: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratios: [0.5, 0.25, 0.25],
            folds: 5,
        }
    }
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags.
///
/// The top-level `seed` is the single source of randomness: it replaces the
/// seed fields of every sub-configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub ingest: IngestConfig,
    pub pooled: bool,
    pub model: ModelConfig,
    pub smote: SmoteSection,
    pub split: SplitConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn propagate_seed(&mut self) {
        let s = self.seed;
        self.synth.seed = s;
        self.model.logreg.seed = s;
        self.model.rf.seed = s;
        self.model.svm.seed = s;
        self.model.lstm.seed = s;
    }

    pub fn smote_config(&self) -> Option<SmoteConfig> {
        self.smote.enabled.then_some(SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            target_ratio: self.smote.target_ratio,
            seed: self.seed,
        })
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        Ok(match m.name.as_str() {
            "majority" | "dummy" => ModelSpec::Majority,
            "knn" => ModelSpec::Knn(m.knn.clone()),
            "logreg" => ModelSpec::LogReg(m.logreg.clone()),
            "rf" => ModelSpec::Rf(m.rf.clone()),
            "svm" => ModelSpec::Svm(m.svm.clone()),
            other => return ModelSpec::from_name(other, self.seed),
        })
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn apply_epoching(&mut self, a: &EpochArgs) -> Result<()> {
        if let Some(t) = &a.task {
            self.ingest.task = match t.as_str() {
                "detection" => Task::Detection,
                "prediction" => Task::Prediction,
                other => return Err(Error::Config(format!("unknown task `{other}`"))),
            };
        }
        if let Some(v) = a.epoch_len {
            self.ingest.epoch_len_s = v;
        }
        if let Some(v) = a.horizon {
            self.ingest.horizon_s = v;
        }
        if let Some(v) = a.highpass {
            if !(v > 0.0) {
                return Err(Error::Config(format!("high-pass cutoff must be positive, got {v}")));
            }
            self.ingest.denoise = Denoise::HighPass { cutoff_hz: v };
        }
        Ok(())
    }

    fn apply_data(&mut self, a: &DataArgs) {
        if a.features.is_some() || a.synthetic || a.edf_dir.is_some() {
            self.data = DataConfig {
                features: a.features.clone(),
                synthetic: a.synthetic,
                edf_dir: a.edf_dir.clone(),
                summaries: a.summaries.clone(),
            };
        } else if !a.summaries.is_empty() {
            self.data.summaries = a.summaries.clone();
        }
    }

    fn apply_smote_flags(&mut self, on: bool, off: bool) {
        if on {
            self.smote.enabled = true;
        }
        if off {
            self.smote.enabled = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub spec_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
}

/// Pipeline state stored next to the model parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineInfo {
    pub scaler: Scaler,
    pub train_patients: Vec<String>,
    #[serde(default)]
    pub split: Option<SplitPlan>,
    #[serde(default)]
    pub smote: Option<SmoteConfig>,
    /// Window length for sequence models.
    #[serde(default)]
    pub sequence_len: Option<usize>,
}

/// `model.json`: the versioned model artifact plus its pipeline state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub artifact: ModelArtifact,
    pub pipeline: PipelineInfo,
}

impl ModelFile {
    pub fn read(path: &Path) -> Result<(Model, PipelineInfo)> {
        let text = fs::read_to_string(path)?;
        let f: ModelFile = serde_json::from_str(&text)?;
        Ok((Model::from_artifact(f.artifact)?, f.pipeline))
    }
}

/// Collects output files and writes the manifest last.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
    inputs: Vec<InputHash>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            written: Vec::new(),
            inputs: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.path(name), data)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.bytes(name, s.as_bytes())
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.inputs.push(InputHash {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &ExperimentConfig) -> Result<()> {
        let manifest = Manifest {
            command: command.into(),
            spec_version: FORMAT_VERSION.into(),
            seed: cfg.seed,
            config: cfg.clone(),
            inputs: std::mem::take(&mut self.inputs),
            outputs: self.written.clone(),
        };
        self.json("manifest.json", &manifest)
    }
}

fn csv_bytes(d: &Dataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    Ok(buf)
}

fn roc_csv(r: &MetricsReport) -> Vec<u8> {
    let mut s = String::from("fpr,tpr\n");
    for (f, t) in &r.roc_points {
        s.push_str(&format!("{f},{t}\n"));
    }
    s.into_bytes()
}

/// Loads the one configured data source.
fn load_data(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Dataset> {
    let d = &cfg.data;
    let n = usize::from(d.features.is_some()) + usize::from(d.synthetic) + usize::from(d.edf_dir.is_some());
    if n != 1 {
        return Err(Error::Config(format!(
            "exactly one data source is required (--features, --synthetic or --edf-dir), got {n}"
        )));
    }
    for p in d.features.iter().chain(&d.edf_dir).chain(&d.summaries) {
        if !p.exists() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    if let Some(p) = &d.features {
        out.input(p)?;
        return Dataset::read_csv(fs::File::open(p)?);
    }
    if d.synthetic {
        return generate_synthetic(&cfg.synth);
    }
    let dir = d.edf_dir.as_ref().expect("counted above");
    let store = ingest_dir(dir, &d.summaries, &cfg.ingest)?;
    for f in store.ok_files() {
        out.inputs.push(InputHash {
            path: f.path.clone(),
            sha256: f.sha256.clone(),
        });
    }
    featurize(&store, pooling(cfg.pooled))
}

fn pooling(pooled: bool) -> ChannelPooling {
    if pooled {
        ChannelPooling::Pooled
    } else {
        ChannelPooling::PerChannel
    }
}

fn check_known(data: &Dataset, patients: &[String]) -> Result<()> {
    let known = data.patients();
    match patients.iter().find(|p| !known.contains(p)) {
        Some(p) => Err(Error::Data(format!("patient `{p}` does not occur in the data"))),
        None => Ok(()),
    }
}

fn cmd_synth(cfg: &mut ExperimentConfig, a: &SynthArgs) -> Result<()> {
    let s = &mut cfg.synth;
    if let Some(v) = a.patients {
        s.n_patients = v;
    }
    if let Some(v) = a.epochs_per_patient {
        s.epochs_per_patient = v;
    }
    if let Some(v) = a.prevalence {
        s.seizure_prevalence = v;
    }
    if let Some(v) = a.channels {
        s.n_channels = v;
    }
    if let Some(v) = a.separation {
        s.class_separation = v;
    }
    let data = generate_synthetic(&cfg.synth)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    out.bytes("features.csv", &csv_bytes(&data)?)?;
    println!(
        "synth: {} rows, {} features, {} positive ({:.4})",
        data.len(),
        data.x.n_cols,
        data.positives(),
        data.positives() as f64 / data.len() as f64
    );
    out.finish("synth", cfg)
}

#[derive(Debug, Deserialize)]
struct DemographicRow {
    patient: String,
    age: Option<f64>,
    gender: Option<String>,
}

/// Patient counts by gender and by five-year age band.
fn demographics_csv(path: &Path, patients: &[String]) -> Result<Vec<u8>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut gender: BTreeMap<String, usize> = BTreeMap::new();
    let mut age: BTreeMap<u32, usize> = BTreeMap::new();
    for row in rdr.deserialize() {
        let r: DemographicRow = row?;
        if !patients.is_empty() && !patients.contains(&r.patient) {
            continue;
        }
        let g = r.gender.map_or("unknown".to_string(), |g| g.trim().to_ascii_uppercase());
        *gender.entry(g).or_default() += 1;
        if let Some(a) = r.age.filter(|a| a.is_finite() && *a >= 0.0) {
            *age.entry((a / 5.0).floor() as u32 * 5).or_default() += 1;
        }
    }
    let mut s = String::from("category,value,patients\n");
    for (g, n) in gender {
        s.push_str(&format!("gender,{g},{n}\n"));
    }
    for (lo, n) in age {
        s.push_str(&format!("age,{lo}-{},{n}\n", lo + 4));
    }
    Ok(s.into_bytes())
}

fn cmd_ingest(cfg: &mut ExperimentConfig, a: &IngestArgs) -> Result<()> {
    cfg.apply_epoching(&a.epoching)?;
    if let Some(d) = &a.edf_dir {
        cfg.data.edf_dir = Some(d.clone());
    }
    if !a.summaries.is_empty() {
        cfg.data.summaries = a.summaries.clone();
    }
    let dir = cfg
        .data
        .edf_dir
        .clone()
        .ok_or_else(|| Error::Config("ingest needs --edf-dir".into()))?;
    let store = ingest_dir(&dir, &cfg.data.summaries, &cfg.ingest)?;
    let mut out = Outputs::new(cfg.out_dir())?;
    for f in store.ok_files() {
        out.inputs.push(InputHash {
            path: f.path.clone(),
            sha256: f.sha256.clone(),
        });
    }
    let mut table = String::from("file,patient,epochs,positive,seizures,error\n");
    for f in &store.files {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.file,
            f.patient,
            f.n_epochs,
            f.n_positive,
            f.seizures.len(),
            f.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
        ));
    }
    out.json("store.json", &store)?;
    out.bytes("ingest_summary.csv", table.as_bytes())?;
    if let Some(p) = &a.demographics {
        out.input(p)?;
        let patients: Vec<String> = store.files.iter().map(|f| f.patient.clone()).collect();
        out.bytes("demographics.csv", &demographics_csv(p, &patients)?)?;
    }
    let ok = store.ok_files().count();
    println!(
        "ingest: {ok}/{} files, {} epochs, {} positive, {} seizures",
        store.files.len(),
        store.ok_files().map(|f| f.n_epochs).sum::<usize>(),
        store.ok_files().map(|f| f.n_positive).sum::<usize>(),
        store.total_seizures()
    );
    out.finish("ingest", cfg)
}

fn cmd_featurize(cfg: &mut ExperimentConfig, a: &FeaturizeArgs) -> Result<()> {
    if a.pooled {
        cfg.pooled = true;
    }
    let path = a.store.clone().unwrap_or_else(|| cfg.out_dir().join("store.json"));
    let store: Store = serde_json::from_str(&fs::read_to_string(&path)?)?;
    cfg.ingest = store.config.clone();
    let data = featurize(&store, pooling(cfg.pooled))?;
    let mut out = Outputs::new(cfg.out_dir())?;
    out.input(&path)?;
    out.bytes("features.csv", &csv_bytes(&data)?)?;
    println!("featurize: {} rows, {} features, {} positive", data.len(), data.x.n_cols, data.positives());
    out.finish("featurize", cfg)
}

fn lstm_model_file(t: &TrainedLstm, split: Option<SplitPlan>) -> Result<ModelFile> {
    Ok(ModelFile {
        artifact: Model::Lstm(t.model.clone()).to_artifact()?,
        pipeline: PipelineInfo {
            scaler: t.scaler.clone(),
            train_patients: t.train_patients.clone(),
            split,
            smote: None,
            sequence_len: Some(t.seq_len),
        },
    })
}

#[derive(Debug, Serialize)]
struct TrainReport {
    model_type: String,
    train_rows: usize,
    resampled_rows: usize,
    split: SplitPlan,
    test: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    history: Option<Vec<crate::models::lstm::EpochRecord>>,
}

fn cmd_train(cfg: &mut ExperimentConfig, a: &TrainArgs) -> Result<()> {
    cfg.apply_data(&a.data);
    if let Some(m) = &a.model {
        cfg.model.name = m.clone();
    }
    cfg.apply_smote_flags(a.smote, a.no_smote);
    let mut out = Outputs::new(cfg.out_dir())?;
    let data = load_data(cfg, &mut out)?;

    let plan = if a.train_patients.is_empty() && a.test_patients.is_empty() {
        split_patients(&data.patients(), cfg.split.ratios, cfg.seed)?
    } else {
        check_known(&data, &a.train_patients)?;
        check_known(&data, &a.test_patients)?;
        if let Some(p) = a.train_patients.iter().find(|p| a.test_patients.contains(p)) {
            return Err(Error::Leakage(format!("patient `{p}` is in both the training and test lists")));
        }
        SplitPlan {
            train_patients: a.train_patients.clone(),
            val_patients: Vec::new(),
            test_patients: a.test_patients.clone(),
            seed: cfg.seed,
        }
    };
    let train = subset(&data, &plan.train_patients, SplitRole::Train);
    let test = subset(&data, &plan.test_patients, SplitRole::Test);
    crate::eval::check_disjoint(&train.x.meta, &test.x.meta)?;

    let (file, report) = if cfg.model.name == "lstm" {
        let val = subset(&data, &plan.val_patients, SplitRole::Validation);
        let t = train_lstm(
            &train,
            (!val.is_empty()).then_some(&val),
            cfg.model.sequence_len,
            &cfg.model.lstm,
            cfg.smote.enabled,
        )?;
        let metrics = if test.is_empty() { None } else { Some(t.evaluate(&test, false)?.0) };
        let report = TrainReport {
            model_type: "lstm".into(),
            train_rows: t.n_train_sequences,
            resampled_rows: t.n_balanced_sequences,
            split: plan.clone(),
            test: metrics,
            history: Some(t.history.clone()),
        };
        (lstm_model_file(&t, Some(plan))?, report)
    } else {
        let spec = cfg.model_spec()?;
        let smote_cfg = cfg.smote_config();
        let t = train_model(&train, &spec, smote_cfg.as_ref())?;
        let metrics = if test.is_empty() { None } else { Some(t.evaluate(&test, false)?.0) };
        let file = ModelFile {
            artifact: t.model.to_artifact()?,
            pipeline: PipelineInfo {
                scaler: t.scaler.clone(),
                train_patients: t.train_patients.clone(),
                split: Some(plan.clone()),
                smote: smote_cfg,
                sequence_len: None,
            },
        };
        let report = TrainReport {
            model_type: t.model.model_type().into(),
            train_rows: t.n_train_rows,
            resampled_rows: t.n_resampled_rows,
            split: plan,
            test: metrics,
            history: None,
        };
        (file, report)
    };
    out.json("model.json", &file)?;
    out.json("train_report.json", &report)?;
    if let Some(m) = &report.test {
        out.bytes("roc.csv", &roc_csv(m))?;
        println!(
            "train: {} on {} rows; test accuracy {:.4} recall {:.4}",
            report.model_type, report.resampled_rows, m.accuracy, m.recall
        );
    } else {
        println!("train: {} on {} rows; no test patients", report.model_type, report.resampled_rows);
    }
    out.finish("train", cfg)
}

fn cmd_eval(cfg: &mut ExperimentConfig, a: &EvalArgs) -> Result<()> {
    cfg.apply_data(&a.data);
    let mut out = Outputs::new(cfg.out_dir())?;
    out.input(&a.model_file)?;
    let (model, info) = ModelFile::read(&a.model_file)?;
    let data = load_data(cfg, &mut out)?;
    let patients = if a.patients.is_empty() {
        info.split
            .as_ref()
            .map(|s| s.test_patients.clone())
            .filter(|p| !p.is_empty())
            .ok_or_else(|| Error::Config("model has no saved test split; pass --patients".into()))?
    } else {
        check_known(&data, &a.patients)?;
        a.patients.clone()
    };
    let test = subset(&data, &patients, SplitRole::Test);
    if a.allow_leaky_split {
        log::warn!("leakage gate disabled: metrics may include training patients");
    } else {
        leakage_gate(&info.train_patients, &test)?;
    }
    let report = match model {
        Model::Lstm(m) => {
            let t = TrainedLstm {
                model: m,
                scaler: info.scaler,
                seq_len: info.sequence_len.unwrap_or(DEFAULT_SEQUENCE_LEN),
                train_patients: info.train_patients,
                history: Vec::new(),
                n_train_sequences: 0,
                n_balanced_sequences: 0,
            };
            t.evaluate(&test, a.allow_leaky_split)?.0
        }
        other => {
            let t = crate::pipeline::Trained {
                model: other,
                scaler: info.scaler,
                n_train_rows: 0,
                n_resampled_rows: 0,
                train_patients: info.train_patients,
            };
            t.evaluate(&test, a.allow_leaky_split)?.0
        }
    };
    out.json("metrics.json", &report)?;
    out.bytes("roc.csv", &roc_csv(&report))?;
    println!(
        "eval: n={} accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} auc {}",
        report.n(),
        report.accuracy,
        report.precision,
        report.recall,
        report.f1,
        report.auc.map_or("undefined".into(), |v| format!("{v:.4}"))
    );
    out.finish("eval", cfg)
}

fn cmd_cv(cfg: &mut ExperimentConfig, a: &CvArgs) -> Result<()> {
    cfg.apply_data(&a.data);
    if let Some(m) = &a.model {
        cfg.model.name = m.clone();
    }
    if let Some(k) = a.folds {
        cfg.split.folds = k;
    }
    cfg.apply_smote_flags(a.smote, a.no_smote);
    let mut out = Outputs::new(cfg.out_dir())?;
    let data = load_data(cfg, &mut out)?;
    let (folds, summary) = if cfg.model.name == "lstm" {
        crate::pipeline::run_cv_lstm(
            &data,
            cfg.split.folds,
            cfg.seed,
            cfg.model.sequence_len,
            &cfg.model.lstm,
            cfg.smote.enabled,
        )?
    } else {
        let smote_cfg = cfg.smote_config();
        run_cv(&data, cfg.split.folds, cfg.seed, &cfg.model_spec()?, smote_cfg.as_ref())?
    };
    let mut table = String::from("fold,test_patients,n,tp,fp,tn,fn,accuracy,precision,recall,f1,auc\n");
    for f in &folds {
        out.json(&format!("fold_{}.json", f.fold), f)?;
        let r = &f.report;
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            f.fold,
            f.test_patients.join(";"),
            r.n(),
            r.tp,
            r.fp,
            r.tn,
            r.fn_,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.auc.map_or(String::new(), |v| v.to_string())
        ));
    }
    out.bytes("cv_folds.csv", table.as_bytes())?;
    out.json("cv_summary.json", &summary)?;
    let text = summary.render();
    out.bytes("cv_summary.txt", text.as_bytes())?;
    print!("{text}");
    out.finish("cv", cfg)
}

fn cmd_predict(cfg: &mut ExperimentConfig, a: &PredictArgs) -> Result<()> {
    cfg.apply_data(&a.data);
    let mut out = Outputs::new(cfg.out_dir())?;
    out.input(&a.model_file)?;
    let (model, info) = ModelFile::read(&a.model_file)?;
    let data = load_data(cfg, &mut out)?;
    let mut s = String::from("patient,file,start_s,score,prediction\n");
    let mut n = 0;
    match &model {
        Model::Lstm(m) => {
            let seq_len = info.sequence_len.unwrap_or(DEFAULT_SEQUENCE_LEN);
            let seqs = scaled_sequences(&data, &info.scaler, seq_len)?;
            let (pred, scores) =
                crate::models::lstm::lstm_predict(&m.params, &seqs.sequences, m.config.threshold)?;
            for ((&row, p), sc) in seqs.last_row.iter().zip(pred).zip(scores) {
                let meta = &data.x.meta[row];
                s.push_str(&format!("{},{},{},{sc},{p}\n", meta.patient, meta.file, meta.start_s));
                n += 1;
            }
        }
        other => {
            let clf = other.as_classifier().expect("tabular model");
            let x = info.scaler.transform(&data.x)?;
            let scores = clf.scores(&x.rows)?;
            let pred = clf.predict(&x.rows)?;
            for ((meta, p), sc) in data.x.meta.iter().zip(pred).zip(scores) {
                s.push_str(&format!("{},{},{},{sc},{p}\n", meta.patient, meta.file, meta.start_s));
                n += 1;
            }
        }
    }
    out.bytes("predictions.csv", s.as_bytes())?;
    println!("predict: {n} rows scored with {}", model.model_type());
    out.finish("predict", cfg)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.propagate_seed();
    match &cli.command {
        Command::Synth(a) => cmd_synth(&mut cfg, a),
        Command::Ingest(a) => cmd_ingest(&mut cfg, a),
        Command::Featurize(a) => cmd_featurize(&mut cfg, a),
        Command::Train(a) => cmd_train(&mut cfg, a),
        Command::Eval(a) => cmd_eval(&mut cfg, a),
        Command::Cv(a) => cmd_cv(&mut cfg, a),
        Command::Predict(a) => cmd_predict(&mut cfg, a),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(std::io::stderr(), "error: {e}");
            code
        }
    }
}
