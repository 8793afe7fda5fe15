//! Oversamples a small two-dimensional minority class and shows where each
//! synthetic point came from.
//!
//! ```sh
//! cargo run --example smote_geometry
//! ```

use seizurekit::features::{Dataset, FeatureMatrix, RowMeta, SplitRole};
use seizurekit::resample::{smote, SmoteConfig};

fn main() -> seizurekit::Result<()> {
    let mut x = FeatureMatrix::new(2);
    let mut y = Vec::new();
    let minority = [[0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [3.0, 0.5]];
    for (i, p) in minority.iter().enumerate() {
        x.push(p.to_vec(), RowMeta::new("p1", "f", i as f64));
        y.push(1);
    }
    for i in 0..10 {
        x.push(vec![6.0 + i as f64 * 0.3, -1.0 + (i % 3) as f64], RowMeta::new("p1", "f", 10.0 + i as f64));
        y.push(0);
    }
    let data = Dataset::new(x.with_role(SplitRole::Train), y)?;
    let out = smote(&data, &SmoteConfig { k_neighbors: 2, ..Default::default() })?;
    println!("minority {} -> {}, k = {}", data.positives(), out.data.positives(), out.k);
    for (row, o) in out.data.x.rows[data.len()..].iter().zip(&out.origins) {
        println!(
            "({:.3}, {:.3}) = row {} + {:.3} * (row {} - row {})",
            row[0], row[1], o.source, o.lambda, o.neighbor, o.source
        );
    }

    // Validation and test rows are never oversampled.
    let mut test = out.data.clone();
    test.x.role = SplitRole::Test;
    println!("on test rows: {}", smote(&test, &SmoteConfig::default()).unwrap_err());
    Ok(())
}
