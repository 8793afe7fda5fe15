//! XOR needs a kernel: the RBF support vector machine separates it, linear
//! logistic regression cannot.
//!
//! ```sh
//! cargo run --example kernel_svm
//! ```

use seizurekit::models::{Classifier, LogRegConfig, LogRegModel, SvmConfig, SvmModel};

fn main() -> seizurekit::Result<()> {
    let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let y = vec![0, 0, 1, 1];
    let svm = SvmModel::fit(&x, &y, SvmConfig { c: 10.0, gamma: Some(1.0), ..Default::default() })?;
    let lr = LogRegModel::fit(&x, &y, LogRegConfig::default())?;
    println!("labels  {y:?}");
    println!("svm     {:?}  decision {:.3?}", svm.predict(&x)?, svm.decision(&x)?);
    println!("logreg  {:?}  scores {:.3?}", lr.predict(&x)?, lr.scores(&x)?);
    println!("alphas {:.4?}, bias {:.4}, sum alpha*y {:.1e}, passes {}", svm.alphas, svm.bias, svm.dual_balance(), svm.passes);
    Ok(())
}
