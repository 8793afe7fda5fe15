//! Patient-independent splits, cross-validation folds and metrics.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RowMeta;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_patients: Vec<String>,
    pub val_patients: Vec<String>,
    pub test_patients: Vec<String>,
    pub seed: u64,
}

fn unique_sorted(ids: &[String]) -> Vec<String> {
    ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Round half up.
fn round_count(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Shuffles the distinct patients under `seed` and cuts them into
/// train/validation/test. Sizes are `round(r0 * n)`, `round(r1 * n)` and the
/// remainder. Duplicate ids are collapsed first.
pub fn split_patients(patient_ids: &[String], ratios: [f64; 3], seed: u64) -> Result<SplitPlan> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be in [0,1] and sum to 1")));
    }
    let mut ids = unique_sorted(patient_ids);
    let n = ids.len();
    if n < 3 {
        return Err(Error::Data(format!("need at least 3 patients to split, got {n}")));
    }
    ids.shuffle(&mut seeded(seed));
    let n_train = round_count(ratios[0] * n as f64).min(n);
    let n_val = round_count(ratios[1] * n as f64).min(n - n_train);
    let test = ids.split_off(n_train + n_val);
    let val = ids.split_off(n_train);
    Ok(SplitPlan {
        train_patients: ids,
        val_patients: val,
        test_patients: test,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train_patients: Vec<String>,
    pub test_patients: Vec<String>,
}

/// Seeded shuffle then contiguous chunks; the first `n % k` folds get one
/// extra patient.
pub fn kfold_patients(patient_ids: &[String], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let mut ids = unique_sorted(patient_ids);
    let n = ids.len();
    if k < 2 || k > n {
        return Err(Error::Config(format!("k = {k} folds needs 2 <= k <= {n} patients")));
    }
    ids.shuffle(&mut seeded(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let end = start + base + usize::from(i < extra);
        let test = ids[start..end].to_vec();
        let train = ids[..start].iter().chain(&ids[end..]).cloned().collect();
        folds.push(Fold {
            train_patients: train,
            test_patients: test,
        });
        start = end;
    }
    Ok(folds)
}

/// Fails with [`Error::Leakage`] if any patient occurs in both row sets.
pub fn check_disjoint(train: &[RowMeta], test: &[RowMeta]) -> Result<()> {
    let seen: BTreeSet<&str> = train.iter().map(|m| m.patient.as_str()).collect();
    let shared: BTreeSet<&str> = test
        .iter()
        .map(|m| m.patient.as_str())
        .filter(|p| seen.contains(p))
        .collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(Error::Leakage(format!(
            "patients present in both training and evaluation rows: {}",
            shared.into_iter().collect::<Vec<_>>().join(", ")
        )))
    }
}

/// Metrics whose denominator was zero; the value is reported as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedFlags {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub undefined: UndefinedFlags,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub roc_points: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<f64>,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl MetricsReport {
    /// Derives every rate from the four confusion counts.
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let n = tp + fp + tn + fn_;
        if n == 0 {
            return Err(Error::Data("metrics of an empty prediction set".into()));
        }
        let (precision, p_undef) = ratio(tp, tp + fp);
        let (recall, r_undef) = ratio(tp, tp + fn_);
        let f1_undef = precision + recall == 0.0;
        let f1 = if f1_undef { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        // Class 0 viewed as the positive class.
        let (precision0, _) = ratio(tn, tn + fn_);
        let (recall0, _) = ratio(tn, tn + fp);
        let (s1, s0) = ((tp + fn_) as f64, (tn + fp) as f64);
        let nf = n as f64;
        Ok(Self {
            tp,
            fp,
            tn,
            fn_,
            accuracy: (tp + tn) as f64 / nf,
            precision,
            recall,
            f1,
            weighted_precision: (s1 * precision + s0 * precision0) / nf,
            weighted_recall: (s1 * recall + s0 * recall0) / nf,
            undefined: UndefinedFlags {
                precision: p_undef,
                recall: r_undef,
                f1: f1_undef,
            },
            roc_points: Vec::new(),
            auc: None,
        })
    }

    pub fn n(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_binary(y: &[u8]) -> Result<()> {
    match y.iter().find(|&&v| v > 1) {
        Some(v) => Err(Error::Data(format!("labels must be 0 or 1, found {v}"))),
        None => Ok(()),
    }
}

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    check_binary(y_true)?;
    check_binary(y_pred)?;
    let mut c = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        c[usize::from(t)][usize::from(p)] += 1;
    }
    MetricsReport::from_counts(c[1][1], c[0][1], c[0][0], c[1][0])
}

/// ROC points for every distinct threshold (from `(0,0)` to `(1,1)`) and the
/// area under them.
///
/// The area is accumulated as an exact integer count of `2 * wins + ties`
/// over positive-negative pairs, so it equals the Mann-Whitney statistic.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
    if y_true.len() != scores.len() {
        return Err(Error::Shape {
            expected: y_true.len(),
            got: scores.len(),
        });
    }
    check_binary(y_true)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("NaN score".into()));
    }
    let p = y_true.iter().filter(|&&y| y == 1).count();
    let n = y_true.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::Undefined("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area in units of 1/(P*N).
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut dtp, mut dfp) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        // Trapezoid: dfp * (tp + tp + dtp) / 2.
        twice_area += u128::from(dfp) * u128::from(2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    let auc = twice_area as f64 / (2 * p as u128 * n as u128) as f64;
    Ok((points, auc))
}

/// `compute_metrics` plus ROC and AUC when both classes are present.
pub fn full_report(y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<MetricsReport> {
    let mut r = compute_metrics(y_true, y_pred)?;
    match roc_auc(y_true, scores) {
        Ok((pts, auc)) => {
            r.roc_points = pts;
            r.auc = Some(auc);
        }
        Err(Error::Undefined(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }

    /// `"70.77% (±3.55%)"`.
    pub fn as_percent(&self) -> String {
        format!("{:.2}% (±{:.2}%)", 100.0 * self.mean, 100.0 * self.std)
    }

    /// `"0.7728 (±0.0268)"`.
    pub fn as_fraction(&self) -> String {
        format!("{:.4} (±{:.4})", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: usize,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    /// Over folds whose AUC was defined.
    pub auc: Option<MeanStd>,
}

impl CvSummary {
    pub fn from_reports(reports: &[MetricsReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::Data("no fold reports to summarize".into()));
        }
        let col = |f: fn(&MetricsReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
        let aucs: Vec<f64> = reports.iter().filter_map(|r| r.auc).collect();
        Ok(Self {
            folds: reports.len(),
            accuracy: col(|r| r.accuracy),
            precision: col(|r| r.precision),
            recall: col(|r| r.recall),
            f1: col(|r| r.f1),
            auc: (!aucs.is_empty()).then(|| MeanStd::of(&aucs)),
        })
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{}-fold cross-validation\n\
             mean accuracy of {}\n\
             mean precision of {}\n\
             mean recall of {}\n\
             mean F1 of {}\n",
            self.folds,
            self.accuracy.as_percent(),
            self.precision.as_percent(),
            self.recall.as_percent(),
            self.f1.as_percent(),
        );
        if let Some(a) = &self.auc {
            s.push_str(&format!("mean AUC of {}\n", a.as_fraction()));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:02}")).collect()
    }

    #[test]
    fn split_sizes() {
        for (n, sizes) in [(8, (4, 2, 2)), (23, (12, 6, 5)), (3, (2, 1, 0)), (4, (2, 1, 1))] {
            let p = split_patients(&ids(n), [0.5, 0.25, 0.25], 1).unwrap();
            assert_eq!((p.train_patients.len(), p.val_patients.len(), p.test_patients.len()), sizes, "n={n}");
        }
        assert!(split_patients(&ids(2), [0.5, 0.25, 0.25], 1).is_err());
        assert!(matches!(split_patients(&ids(8), [0.5, 0.3, 0.3], 1), Err(Error::Config(_))));
    }

    #[test]
    fn split_seed_behaviour() {
        let a = split_patients(&ids(23), [0.5, 0.25, 0.25], 5).unwrap();
        assert_eq!(a, split_patients(&ids(23), [0.5, 0.25, 0.25], 5).unwrap());
        let b = split_patients(&ids(23), [0.5, 0.25, 0.25], 6).unwrap();
        assert_ne!(a.train_patients, b.train_patients);
    }

    #[test]
    fn kfold_sizes() {
        let f = kfold_patients(&ids(23), 5, 0).unwrap();
        let sizes: Vec<usize> = f.iter().map(|f| f.test_patients.len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
        let f = kfold_patients(&ids(10), 5, 0).unwrap();
        assert!(f.iter().all(|f| f.test_patients.len() == 2 && f.train_patients.len() == 8));
        assert!(kfold_patients(&ids(4), 5, 0).is_err());
    }

    proptest! {
        #[test]
        fn splits_partition_patients(n in 3usize..40, k in 2usize..8, seed: u64) {
            let all: BTreeSet<String> = ids(n).into_iter().collect();
            let p = split_patients(&ids(n), [0.5, 0.25, 0.25], seed).unwrap();
            let parts = [&p.train_patients, &p.val_patients, &p.test_patients];
            let union: BTreeSet<String> = parts.iter().flat_map(|v| v.iter().cloned()).collect();
            prop_assert_eq!(union.len(), n);
            prop_assert_eq!(&union, &all);
            if k <= n {
                let folds = kfold_patients(&ids(n), k, seed).unwrap();
                let mut seen = Vec::new();
                for f in &folds {
                    prop_assert!(f.test_patients.iter().all(|t| !f.train_patients.contains(t)));
                    prop_assert_eq!(f.test_patients.len() + f.train_patients.len(), n);
                    seen.extend(f.test_patients.iter().cloned());
                }
                seen.sort();
                prop_assert_eq!(seen, all.into_iter().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn hand_counted_metrics() {
        let r = compute_metrics(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!((r.tp, r.fp, r.tn, r.fn_), (1, 0, 2, 1));
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
        // class 1: p=1, r=.5 ; class 0: p=2/3, r=1 ; supports 2/2
        assert!((r.weighted_precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((r.weighted_recall - 0.75).abs() < 1e-15);
    }

    #[test]
    fn all_negative_predictor() {
        let y: Vec<u8> = (0..100).map(|i| u8::from(i < 6)).collect();
        let r = compute_metrics(&y, &[0; 100]).unwrap();
        assert_eq!(r.accuracy, 0.94);
        assert_eq!(r.recall, 0.0);
        assert!(r.undefined.precision && !r.undefined.recall && r.undefined.f1);
        let perfect = compute_metrics(&y, &y).unwrap();
        assert_eq!((perfect.accuracy, perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0, 1.0));
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[0], &[0, 1]).is_err());
        assert!(compute_metrics(&[0], &[0]).unwrap().undefined.recall);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[1, 1, 0, 0], &[0.9, 0.8, 0.7, 0.1]).unwrap().1, 1.0);
        assert_eq!(roc_auc(&[1, 1, 0, 0], &[0.3; 4]).unwrap().1, 0.5);
        let (pts, auc) = roc_auc(&[1, 1, 0, 0], &[0.9, 0.4, 0.5, 0.1]).unwrap();
        assert_eq!(auc, 0.75);
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        assert!(matches!(roc_auc(&[1, 1], &[0.1, 0.2]), Err(Error::Undefined(_))));
    }

    fn brute_auc(y: &[u8], s: &[f64]) -> f64 {
        let (mut num, mut pairs) = (0u64, 0u64);
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1;
                    num += if s[i] > s[j] { 2 } else if s[i] == s[j] { 1 } else { 0 };
                }
            }
        }
        num as f64 / (2 * pairs) as f64
    }

    #[test]
    fn auc_equals_pair_statistic() {
        let mut rng = seeded(77);
        for _ in 0..300 {
            let n = rng.random_range(2..=50);
            let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            y[0] = 0;
            y[1] = 1;
            let s: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6)) / 5.0).collect();
            let (_, auc) = roc_auc(&y, &s).unwrap();
            assert_eq!(auc, brute_auc(&y, &s));
            // Strictly monotone transform.
            let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            assert_eq!(roc_auc(&y, &t).unwrap().1, auc);
        }
    }

    #[test]
    fn recompute_from_counts() {
        let mut rng = seeded(3);
        let y: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let p: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let r = compute_metrics(&y, &p).unwrap();
        assert_eq!(r.n(), 64);
        assert_eq!(MetricsReport::from_counts(r.tp, r.fp, r.tn, r.fn_).unwrap(), r);
    }

    #[test]
    fn leakage_gate() {
        let a = [RowMeta::new("p1", "f", 0.0), RowMeta::new("p2", "f", 0.0)];
        let b = [RowMeta::new("p3", "f", 0.0)];
        assert!(check_disjoint(&a, &b).is_ok());
        let c = [RowMeta::new("p2", "g", 4.0)];
        assert!(matches!(check_disjoint(&a, &c), Err(Error::Leakage(m)) if m.contains("p2")));
    }

    #[test]
    fn summary_format() {
        let m = MeanStd::of(&[0.7, 0.75, 0.68]);
        assert!((m.std - 0.036055512754639855).abs() < 1e-12);
        assert_eq!(MeanStd { mean: 0.7077, std: 0.0355 }.as_percent(), "70.77% (±3.55%)");
        assert_eq!(MeanStd::of(&[0.4]).std, 0.0);
    }
}
