//! Classifiers.
//!
//! Tabular models implement [`Classifier`]; the LSTM works on sequences and
//! has its own interface in [`lstm`]. [`Model`] is the closed set of trained
//! models that can be written to and read from a JSON artifact.

pub mod forest;
pub mod knn;
pub mod logreg;
pub mod lstm;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::FORMAT_VERSION;

pub use forest::{RfConfig, RfModel};
pub use knn::{KnnConfig, KnnModel};
pub use logreg::{LogRegConfig, LogRegModel};
pub use lstm::{LstmDims, LstmModel, LstmParams, LstmTrainConfig};
pub use svm::{SvmConfig, SvmModel};

/// Binary classifier over feature rows.
pub trait Classifier {
    /// Number of input features the model expects.
    fn n_features(&self) -> usize;

    /// Seizure score per row; larger means more likely class 1. Used for ROC.
    fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>>;

    /// Hard class decisions.
    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>>;
}

pub(crate) fn check_width(rows: &[Vec<f64>], n: usize) -> Result<()> {
    match rows.iter().find(|r| r.len() != n) {
        Some(r) => Err(Error::Shape {
            expected: n,
            got: r.len(),
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_labels(rows: &[Vec<f64>], y: &[u8]) -> Result<()> {
    if rows.len() != y.len() {
        return Err(Error::Shape {
            expected: rows.len(),
            got: y.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if let Some(l) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Data(format!("labels must be 0 or 1, found {l}")));
    }
    let width = rows[0].len();
    check_width(rows, width)?;
    if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Data(format!("non-finite feature in training row {i}")));
    }
    Ok(())
}

/// Per-class weights used in losses and votes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeights {
    #[default]
    Uniform,
    /// `n / (2 * n_c)` for class `c`.
    Balanced,
    Explicit([f64; 2]),
}

impl ClassWeights {
    pub fn resolve(&self, y: &[u8]) -> [f64; 2] {
        match *self {
            ClassWeights::Uniform => [1.0, 1.0],
            ClassWeights::Explicit(w) => w,
            ClassWeights::Balanced => {
                let pos = y.iter().filter(|&&l| l == 1).count();
                let n = y.len() as f64;
                let w = |c: usize| if c == 0 { 1.0 } else { n / (2.0 * c as f64) };
                [w(y.len() - pos), w(pos)]
            }
        }
    }
}

/// Always predicts the majority class of its training labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub label: u8,
    pub n_features: usize,
    pub config: Value,
}

impl MajorityModel {
    pub fn fit(rows: &[Vec<f64>], y: &[u8]) -> Result<Self> {
        check_labels(rows, y)?;
        let pos = y.iter().filter(|&&l| l == 1).count();
        Ok(Self {
            label: u8::from(2 * pos > y.len()),
            n_features: rows[0].len(),
            config: Value::Object(Default::default()),
        })
    }

    pub fn constant(label: u8, n_features: usize) -> Self {
        Self {
            label,
            n_features,
            config: Value::Object(Default::default()),
        }
    }
}

impl Classifier for MajorityModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_width(rows, self.n_features)?;
        Ok(vec![f64::from(self.label); rows.len()])
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        check_width(rows, self.n_features)?;
        Ok(vec![self.label; rows.len()])
    }
}

/// Any trained model.
#[derive(Debug, Clone)]
pub enum Model {
    Majority(MajorityModel),
    Knn(KnnModel),
    LogReg(LogRegModel),
    RandomForest(RfModel),
    Svm(SvmModel),
    Lstm(LstmModel),
}

/// Versioned JSON document for a trained model.
///
/// Tabular models store their learned state under `params`; the LSTM stores
/// `dims` and a flat `weights` array instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub model_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<LstmDims>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub config: Value,
    pub spec_version: String,
}

fn split_config<T: Serialize>(m: &T) -> Result<(Value, Value)> {
    let mut v = serde_json::to_value(m)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Data("model did not serialize to an object".into()))?;
    let config = obj.remove("config").unwrap_or(Value::Null);
    Ok((v, config))
}

fn join_config<T: for<'de> Deserialize<'de>>(params: Option<Value>, config: Value) -> Result<T> {
    let mut v = params.ok_or_else(|| Error::Data("artifact is missing `params`".into()))?;
    v.as_object_mut()
        .ok_or_else(|| Error::Data("`params` must be an object".into()))?
        .insert("config".into(), config);
    Ok(serde_json::from_value(v)?)
}

impl Model {
    pub fn model_type(&self) -> &'static str {
        match self {
            Model::Majority(_) => "majority",
            Model::Knn(_) => "knn",
            Model::LogReg(_) => "logreg",
            Model::RandomForest(_) => "rf",
            Model::Svm(_) => "svm",
            Model::Lstm(_) => "lstm",
        }
    }

    /// The tabular view of this model, if it has one.
    pub fn as_classifier(&self) -> Option<&dyn Classifier> {
        match self {
            Model::Majority(m) => Some(m),
            Model::Knn(m) => Some(m),
            Model::LogReg(m) => Some(m),
            Model::RandomForest(m) => Some(m),
            Model::Svm(m) => Some(m),
            Model::Lstm(_) => None,
        }
    }

    pub fn to_artifact(&self) -> Result<ModelArtifact> {
        let tabular = |(params, config): (Value, Value)| ModelArtifact {
            model_type: self.model_type().into(),
            params: Some(params),
            dims: None,
            weights: None,
            config,
            spec_version: FORMAT_VERSION.into(),
        };
        Ok(match self {
            Model::Majority(m) => tabular(split_config(m)?),
            Model::Knn(m) => tabular(split_config(m)?),
            Model::LogReg(m) => tabular(split_config(m)?),
            Model::RandomForest(m) => tabular(split_config(m)?),
            Model::Svm(m) => tabular(split_config(m)?),
            Model::Lstm(m) => ModelArtifact {
                model_type: "lstm".into(),
                params: None,
                dims: Some(m.params.dims),
                weights: Some(m.params.weights.clone()),
                config: serde_json::to_value(&m.config)?,
                spec_version: FORMAT_VERSION.into(),
            },
        })
    }

    pub fn from_artifact(a: ModelArtifact) -> Result<Self> {
        if a.spec_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported artifact version {} (expected {FORMAT_VERSION})",
                a.spec_version
            )));
        }
        Ok(match a.model_type.as_str() {
            "majority" => Model::Majority(join_config(a.params, a.config)?),
            "knn" => Model::Knn(join_config(a.params, a.config)?),
            "logreg" => Model::LogReg(join_config(a.params, a.config)?),
            "rf" => Model::RandomForest(join_config(a.params, a.config)?),
            "svm" => Model::Svm(join_config(a.params, a.config)?),
            "lstm" => {
                let dims = a.dims.ok_or_else(|| Error::Data("lstm artifact missing `dims`".into()))?;
                let weights = a
                    .weights
                    .ok_or_else(|| Error::Data("lstm artifact missing `weights`".into()))?;
                let params = LstmParams::from_weights(dims, weights)?;
                Model::Lstm(LstmModel {
                    params,
                    config: serde_json::from_value(a.config)?,
                })
            }
            other => return Err(Error::Data(format!("unknown model_type `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_weights() {
        let w = ClassWeights::Balanced.resolve(&[0, 0, 0, 1]);
        assert_eq!(w, [4.0 / 6.0, 2.0]);
    }

    #[test]
    fn majority_artifact_round_trip() {
        let m = MajorityModel::fit(&[vec![0.0], vec![1.0], vec![2.0]], &[0, 0, 1]).unwrap();
        assert_eq!(m.predict(&[vec![5.0]]).unwrap(), vec![0]);
        let a = Model::Majority(m.clone()).to_artifact().unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"model_type\":\"majority\""));
        assert!(json.contains("\"spec_version\""));
        let back: ModelArtifact = serde_json::from_str(&json).unwrap();
        match Model::from_artifact(back).unwrap() {
            Model::Majority(b) => assert_eq!(b, m),
            other => panic!("{other:?}"),
        }
    }
}
