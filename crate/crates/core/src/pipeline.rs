//! Leakage-safe training and evaluation on patient-tagged feature data.
//!
//! The order is fixed: split by patient, fit the scaler on training rows,
//! scale every split with it, oversample the scaled training rows, fit.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{check_disjoint, full_report, kfold_patients, CvSummary, MetricsReport, SplitPlan};
use crate::features::{Dataset, RowMeta, Scaler, SplitRole};
use crate::models::{
    ClassWeights, KnnConfig, KnnModel, LogRegConfig, LogRegModel, MajorityModel, Model, RfConfig, RfModel,
    SvmConfig, SvmModel,
};
use crate::models::lstm::{lstm_predict, lstm_train, EpochRecord, LstmModel, LstmTrainConfig};
use crate::preprocess::{build_sequences, SequenceSet};
use crate::resample::{duplicate_minority, smote, SmoteConfig};

/// A tabular model family with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    /// Predicts the most frequent training label everywhere.
    Majority,
    Knn(KnnConfig),
    #[serde(rename = "logreg")]
    LogReg(LogRegConfig),
    Rf(RfConfig),
    Svm(SvmConfig),
}

impl ModelSpec {
    /// Defaults for a model name as used on the command line.
    pub fn from_name(name: &str, seed: u64) -> Result<Self> {
        Ok(match name {
            "majority" | "dummy" => ModelSpec::Majority,
            "knn" => ModelSpec::Knn(KnnConfig::default()),
            "logreg" => ModelSpec::LogReg(LogRegConfig { seed, ..Default::default() }),
            "rf" => ModelSpec::Rf(RfConfig { seed, ..Default::default() }),
            "svm" => ModelSpec::Svm(SvmConfig { seed, ..Default::default() }),
            other => {
                return Err(Error::Config(format!(
                    "unknown model `{other}` (expected majority, knn, logreg, rf or svm)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Majority => "majority",
            ModelSpec::Knn(_) => "knn",
            ModelSpec::LogReg(_) => "logreg",
            ModelSpec::Rf(_) => "rf",
            ModelSpec::Svm(_) => "svm",
        }
    }

    pub fn fit(&self, train: &Dataset) -> Result<Model> {
        let (x, y) = (&train.x.rows, &train.y);
        Ok(match self {
            ModelSpec::Majority => Model::Majority(MajorityModel::fit(x, y)?),
            ModelSpec::Knn(c) => Model::Knn(KnnModel::fit(x, y, c.clone())?),
            ModelSpec::LogReg(c) => Model::LogReg(LogRegModel::fit(x, y, c.clone())?),
            ModelSpec::Rf(c) => Model::RandomForest(RfModel::fit(x, y, c.clone())?),
            ModelSpec::Svm(c) => Model::Svm(SvmModel::fit(x, y, c.clone())?),
        })
    }

    /// Class weighting, for the families that support it.
    pub fn with_class_weights(self, w: ClassWeights) -> Self {
        match self {
            ModelSpec::Knn(c) => ModelSpec::Knn(KnnConfig { class_weights: w, ..c }),
            ModelSpec::LogReg(c) => ModelSpec::LogReg(LogRegConfig { class_weights: w, ..c }),
            other => other,
        }
    }
}

/// Rows of `data` whose patient is in `patients`, tagged with `role`.
pub fn subset(data: &Dataset, patients: &[String], role: SplitRole) -> Dataset {
    let keep: BTreeSet<&str> = patients.iter().map(String::as_str).collect();
    let mut d = data.filter_patients(|p| keep.contains(p));
    d.x.role = role;
    d
}

/// A model fitted on one training split, with everything needed to apply it.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Model,
    pub scaler: Scaler,
    /// Training rows before and after oversampling.
    pub n_train_rows: usize,
    pub n_resampled_rows: usize,
    pub train_patients: Vec<String>,
}

impl Trained {
    /// Scales `data` with the training statistics and scores it.
    ///
    /// Refuses rows from training patients unless `allow_leaky` is set.
    pub fn evaluate(&self, data: &Dataset, allow_leaky: bool) -> Result<(MetricsReport, Vec<f64>)> {
        if !allow_leaky {
            leakage_gate(&self.train_patients, data)?;
        }
        if data.is_empty() {
            return Err(Error::Data("evaluation set is empty".into()));
        }
        let x = self.scaler.transform(&data.x)?;
        let clf = self
            .model
            .as_classifier()
            .ok_or_else(|| Error::Config("sequence models are evaluated separately".into()))?;
        let scores = clf.scores(&x.rows)?;
        let pred = clf.predict(&x.rows)?;
        Ok((full_report(&data.y, &pred, &scores)?, scores))
    }
}

/// Fails if any row of `data` belongs to a training patient.
pub fn leakage_gate(train_patients: &[String], data: &Dataset) -> Result<()> {
    let train_meta: Vec<RowMeta> = train_patients.iter().map(|p| RowMeta::new(p.as_str(), "", 0.0)).collect();
    check_disjoint(&train_meta, &data.x.meta)
}

/// Fits the scaler on `train`, applies it, optionally runs SMOTE on the
/// scaled rows and fits `spec`.
pub fn train_model(train: &Dataset, spec: &ModelSpec, smote_cfg: Option<&SmoteConfig>) -> Result<Trained> {
    if train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let scaler = Scaler::fit(&train.x)?;
    let mut scaled = Dataset::new(scaler.transform(&train.x)?, train.y.clone())?;
    scaled.x.role = SplitRole::Train;
    let resampled = match smote_cfg {
        Some(c) => smote(&scaled, c)?.data,
        None => scaled,
    };
    let model = spec.fit(&resampled)?;
    Ok(Trained {
        model,
        scaler,
        n_train_rows: train.len(),
        n_resampled_rows: resampled.len(),
        train_patients: train.patients(),
    })
}

#[derive(Debug, Clone)]
pub struct HoldoutResult {
    pub trained: Trained,
    pub report: MetricsReport,
    pub scores: Vec<f64>,
    pub test: Dataset,
}

/// Trains on `plan.train_patients` and reports on `plan.test_patients`.
pub fn run_holdout(
    data: &Dataset,
    plan: &SplitPlan,
    spec: &ModelSpec,
    smote_cfg: Option<&SmoteConfig>,
) -> Result<HoldoutResult> {
    let train = subset(data, &plan.train_patients, SplitRole::Train);
    let test = subset(data, &plan.test_patients, SplitRole::Test);
    check_disjoint(&train.x.meta, &test.x.meta)?;
    let trained = train_model(&train, spec, smote_cfg)?;
    let (report, scores) = trained.evaluate(&test, false)?;
    Ok(HoldoutResult {
        trained,
        report,
        scores,
        test,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_patients: Vec<String>,
    pub test_patients: Vec<String>,
    pub report: MetricsReport,
}

/// Patient-wise k-fold cross-validation. Folds run in parallel and are
/// returned in fold order.
pub fn run_cv(
    data: &Dataset,
    k: usize,
    seed: u64,
    spec: &ModelSpec,
    smote_cfg: Option<&SmoteConfig>,
) -> Result<(Vec<FoldResult>, CvSummary)> {
    let folds = kfold_patients(&data.patients(), k, seed)?;
    let results: Vec<FoldResult> = folds
        .into_par_iter()
        .enumerate()
        .map(|(i, f)| {
            let plan = SplitPlan {
                train_patients: f.train_patients.clone(),
                val_patients: Vec::new(),
                test_patients: f.test_patients.clone(),
                seed,
            };
            let r = run_holdout(data, &plan, spec, smote_cfg)?;
            Ok(FoldResult {
                fold: i,
                train_patients: f.train_patients,
                test_patients: f.test_patients,
                report: r.report,
            })
        })
        .collect::<Result<_>>()?;
    let reports: Vec<MetricsReport> = results.iter().map(|r| r.report.clone()).collect();
    let summary = CvSummary::from_reports(&reports)?;
    Ok((results, summary))
}

/// Patient-wise k-fold cross-validation of the LSTM. Every window of a
/// held-out patient is scored.
pub fn run_cv_lstm(
    data: &Dataset,
    k: usize,
    seed: u64,
    seq_len: usize,
    cfg: &LstmTrainConfig,
    balance: bool,
) -> Result<(Vec<FoldResult>, CvSummary)> {
    let folds = kfold_patients(&data.patients(), k, seed)?;
    let results: Vec<FoldResult> = folds
        .into_par_iter()
        .enumerate()
        .map(|(i, f)| {
            let train = subset(data, &f.train_patients, SplitRole::Train);
            let test = subset(data, &f.test_patients, SplitRole::Test);
            let t = train_lstm(&train, None, seq_len, cfg, balance)?;
            let (report, _, _) = t.evaluate(&test, false)?;
            Ok(FoldResult {
                fold: i,
                train_patients: f.train_patients,
                test_patients: f.test_patients,
                report,
            })
        })
        .collect::<Result<_>>()?;
    let reports: Vec<MetricsReport> = results.iter().map(|r| r.report.clone()).collect();
    let summary = CvSummary::from_reports(&reports)?;
    Ok((results, summary))
}

/// A sequence model with the scaler and window length it was trained with.
#[derive(Debug, Clone)]
pub struct TrainedLstm {
    pub model: LstmModel,
    pub scaler: Scaler,
    pub seq_len: usize,
    pub train_patients: Vec<String>,
    pub history: Vec<EpochRecord>,
    /// Training windows before and after minority duplication.
    pub n_train_sequences: usize,
    pub n_balanced_sequences: usize,
}

/// Scaled windows of `seq_len` consecutive epochs.
pub fn scaled_sequences(data: &Dataset, scaler: &Scaler, seq_len: usize) -> Result<SequenceSet> {
    build_sequences(&scaler.transform(&data.x)?, &data.y, seq_len)
}

/// Trains the LSTM on windows from `train`, early-stopping on `val`.
///
/// With `balance`, minority windows are duplicated until the classes are
/// even; interpolating between whole windows is not meaningful.
pub fn train_lstm(
    train: &Dataset,
    val: Option<&Dataset>,
    seq_len: usize,
    cfg: &LstmTrainConfig,
    balance: bool,
) -> Result<TrainedLstm> {
    if train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let scaler = Scaler::fit(&train.x)?;
    let seqs = scaled_sequences(train, &scaler, seq_len)?;
    if seqs.is_empty() {
        return Err(Error::Data(format!("no file has {seq_len} consecutive epochs")));
    }
    let n_train_sequences = seqs.len();
    let seqs = if balance && seqs.labels.contains(&1) && seqs.labels.contains(&0) {
        let idx = duplicate_minority(&seqs.labels);
        SequenceSet {
            sequences: idx.iter().map(|&i| seqs.sequences[i].clone()).collect(),
            labels: idx.iter().map(|&i| seqs.labels[i]).collect(),
            last_row: idx.iter().map(|&i| seqs.last_row[i]).collect(),
        }
    } else {
        seqs
    };
    let val_seqs = val.map(|v| scaled_sequences(v, &scaler, seq_len)).transpose()?;
    let (model, history) = lstm_train(&seqs, val_seqs.as_ref(), cfg)?;
    Ok(TrainedLstm {
        model,
        scaler,
        seq_len,
        train_patients: train.patients(),
        history,
        n_train_sequences,
        n_balanced_sequences: seqs.len(),
    })
}

impl TrainedLstm {
    /// Metrics over every window of `data`; also returns the window scores
    /// and labels.
    pub fn evaluate(&self, data: &Dataset, allow_leaky: bool) -> Result<(MetricsReport, Vec<f64>, Vec<u8>)> {
        if !allow_leaky {
            leakage_gate(&self.train_patients, data)?;
        }
        let seqs = scaled_sequences(data, &self.scaler, self.seq_len)?;
        if seqs.is_empty() {
            return Err(Error::Data("evaluation data yields no complete window".into()));
        }
        let (pred, scores) = lstm_predict(&self.model.params, &seqs.sequences, self.model.config.threshold)?;
        Ok((full_report(&seqs.labels, &pred, &scores)?, scores, seqs.labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::split_patients;
    use crate::synth::{generate_synthetic, SynthConfig};

    fn small() -> Dataset {
        generate_synthetic(&SynthConfig {
            n_patients: 8,
            epochs_per_patient: 120,
            n_channels: 4,
            seizure_prevalence: 0.2,
            seed: 2,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn holdout_is_patient_disjoint() {
        let d = small();
        let plan = split_patients(&d.patients(), [0.5, 0.25, 0.25], 1).unwrap();
        let r = run_holdout(&d, &plan, &ModelSpec::from_name("logreg", 0).unwrap(), Some(&SmoteConfig::default()))
            .unwrap();
        assert_eq!(r.report.n(), r.test.len());
        assert!(r.trained.n_resampled_rows > r.trained.n_train_rows);
        assert!(matches!(r.trained.evaluate(&subset(&d, &plan.train_patients, SplitRole::Test), false), Err(Error::Leakage(_))));
        assert!(r.trained.evaluate(&subset(&d, &plan.train_patients, SplitRole::Test), true).is_ok());
    }

    #[test]
    fn scaler_ignores_test_rows() {
        let d = small();
        let plan = split_patients(&d.patients(), [0.5, 0.25, 0.25], 1).unwrap();
        let spec = ModelSpec::Majority;
        let a = run_holdout(&d, &plan, &spec, None).unwrap();
        let mut tampered = d.clone();
        let test: BTreeSet<&String> = plan.test_patients.iter().collect();
        for (row, m) in tampered.x.rows.iter_mut().zip(&tampered.x.meta) {
            if test.contains(&m.patient) {
                row.iter_mut().for_each(|v| *v = *v * 1e3 + 7.0);
            }
        }
        let b = run_holdout(&tampered, &plan, &spec, None).unwrap();
        assert_eq!(a.trained.scaler, b.trained.scaler);
    }

    #[test]
    fn cv_shape() {
        let d = small();
        let (folds, summary) = run_cv(&d, 4, 3, &ModelSpec::from_name("logreg", 0).unwrap(), None).unwrap();
        assert_eq!(folds.len(), 4);
        assert_eq!(summary.folds, 4);
        assert!(folds.iter().enumerate().all(|(i, f)| f.fold == i && f.test_patients.len() == 2));
    }

    #[test]
    fn lstm_round() {
        let d = small();
        let plan = split_patients(&d.patients(), [0.5, 0.25, 0.25], 1).unwrap();
        let train = subset(&d, &plan.train_patients, SplitRole::Train);
        let val = subset(&d, &plan.val_patients, SplitRole::Validation);
        let cfg = LstmTrainConfig { hidden_dim: 4, epochs: 2, ..Default::default() };
        let t = train_lstm(&train, Some(&val), 5, &cfg, true).unwrap();
        assert_eq!(t.n_train_sequences, 4 * (120 - 4));
        assert!(t.n_balanced_sequences > t.n_train_sequences);
        let (r, scores, _) = t.evaluate(&subset(&d, &plan.test_patients, SplitRole::Test), false).unwrap();
        assert_eq!(r.n(), scores.len());
        assert!(matches!(t.evaluate(&train, false), Err(Error::Leakage(_))));
    }

    #[test]
    fn unknown_model_name() {
        assert!(matches!(ModelSpec::from_name("xgboost", 0), Err(Error::Config(_))));
    }
}
