//! Confusion counts, the derived metrics and the ROC curve for a handful of
//! scored epochs.
//!
//! ```sh
//! cargo run --example metrics_roc
//! ```

use seizurekit::eval::full_report;

fn main() -> seizurekit::Result<()> {
    let y = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    let scores = [0.92, 0.71, 0.35, 0.64, 0.40, 0.35, 0.22, 0.18, 0.10, 0.05];
    let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    let r = full_report(&y, &pred, &scores)?;
    println!("tp {} fp {} tn {} fn {}", r.tp, r.fp, r.tn, r.fn_);
    println!("accuracy {:.3} precision {:.3} recall {:.3} f1 {:.3}", r.accuracy, r.precision, r.recall, r.f1);
    println!("weighted precision {:.3} weighted recall {:.3}", r.weighted_precision, r.weighted_recall);
    println!("auc {:?}", r.auc);
    for (fpr, tpr) in &r.roc_points {
        println!("  fpr {fpr:.3} tpr {tpr:.3}");
    }

    // Predicting nothing looks accurate on imbalanced data.
    let none = vec![0; y.len()];
    let r = full_report(&y, &none, &scores)?;
    println!("all-negative: accuracy {:.2}, recall {:.2}", r.accuracy, r.recall);
    Ok(())
}
