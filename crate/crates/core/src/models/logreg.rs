//! Logistic regression by full-batch gradient descent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, check_width, ClassWeights, Classifier};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the gradient's max-norm drops below this.
    pub tolerance: f64,
    pub class_weights: ClassWeights,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2_lambda: 1e-4,
            max_iters: 1000,
            tolerance: 1e-6,
            class_weights: ClassWeights::Uniform,
            threshold: 0.5,
            seed: 0,
        }
    }
}

/// Overflow-safe logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub final_loss: f64,
    pub config: LogRegConfig,
}

const CHUNK: usize = 2048;

/// Objective and gradient of the class-weighted logistic loss.
///
/// `L = (1/n) * sum_i c_i * bce(sigmoid(w.x_i + b), y_i) + (lambda/2) * |w|^2`
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [u8],
    pub class_weights: [f64; 2],
    pub l2_lambda: f64,
}

impl Objective<'_> {
    /// Returns `(loss, grad_w, grad_b)`.
    pub fn eval(&self, w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
        let d = w.len();
        let n = self.x.len() as f64;
        // Fixed chunking then an in-order sum keeps results independent of
        // the thread count.
        let partial: Vec<(f64, Vec<f64>, f64)> = self
            .x
            .par_chunks(CHUNK)
            .zip(self.y.par_chunks(CHUNK))
            .map(|(xs, ys)| {
                let mut loss = 0.0;
                let mut gw = vec![0.0; d];
                let mut gb = 0.0;
                for (row, &label) in xs.iter().zip(ys) {
                    let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                    let c = self.class_weights[usize::from(label)];
                    let t = f64::from(label);
                    loss += c * (softplus(z) - t * z);
                    let r = c * (sigmoid(z) - t);
                    gb += r;
                    for (g, xv) in gw.iter_mut().zip(row) {
                        *g += r * xv;
                    }
                }
                (loss, gw, gb)
            })
            .collect();
        let mut loss = 0.0;
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (l, g, b) in partial {
            loss += l;
            gb += b;
            for (acc, v) in gw.iter_mut().zip(g) {
                *acc += v;
            }
        }
        let reg: f64 = w.iter().map(|v| v * v).sum::<f64>();
        for (g, wv) in gw.iter_mut().zip(w) {
            *g = *g / n + self.l2_lambda * wv;
        }
        (loss / n + 0.5 * self.l2_lambda * reg, gw, gb / n)
    }
}

impl LogRegModel {
    pub fn fit(x: &[Vec<f64>], y: &[u8], config: LogRegConfig) -> Result<Self> {
        Self::fit_traced(x, y, config, |_, _| {})
    }

    /// Like [`fit`](Self::fit), calling `trace(iteration, loss)` before each step.
    pub fn fit_traced(
        x: &[Vec<f64>],
        y: &[u8],
        config: LogRegConfig,
        mut trace: impl FnMut(usize, f64),
    ) -> Result<Self> {
        check_labels(x, y)?;
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                config.learning_rate
            )));
        }
        if config.l2_lambda < 0.0 {
            return Err(Error::Config("l2_lambda must be nonnegative".into()));
        }
        let obj = Objective {
            x,
            y,
            class_weights: config.class_weights.resolve(y),
            l2_lambda: config.l2_lambda,
        };
        let mut w = vec![0.0; x[0].len()];
        let mut b = 0.0;
        let mut iterations = 0;
        let mut loss = f64::NAN;
        for it in 0..config.max_iters {
            let (l, gw, gb) = obj.eval(&w, b);
            loss = l;
            trace(it, l);
            let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
            if gmax < config.tolerance {
                break;
            }
            for (wv, g) in w.iter_mut().zip(&gw) {
                *wv -= config.learning_rate * g;
            }
            b -= config.learning_rate * gb;
            iterations = it + 1;
        }
        if config.max_iters == 0 || iterations == config.max_iters {
            loss = obj.eval(&w, b).0;
        }
        Ok(Self {
            weights: w,
            bias: b,
            iterations,
            final_loss: loss,
            config,
        })
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_width(rows, self.weights.len())?;
        Ok(rows
            .iter()
            .map(|r| sigmoid(self.bias + r.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()))
            .collect())
    }
}

impl Classifier for LogRegModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.predict_proba(rows)
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(rows)?
            .into_iter()
            .map(|p| u8::from(p >= self.config.threshold))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_iterations_is_half_everywhere() {
        let x = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        let m = LogRegModel::fit(&x, &[0, 1], LogRegConfig { max_iters: 0, ..Default::default() }).unwrap();
        assert_eq!(m.weights, vec![0.0, 0.0]);
        assert_eq!(m.predict_proba(&x).unwrap(), vec![0.5, 0.5]);
        assert_eq!(m.predict(&x).unwrap(), vec![1, 1]);
    }

    #[test]
    fn separable_line() {
        let x = vec![vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]];
        let y = [0, 1, 0, 1];
        let m = LogRegModel::fit(&x, &y, LogRegConfig { l2_lambda: 0.0, ..Default::default() }).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y.to_vec());
    }

    #[test]
    fn saturation() {
        assert!(sigmoid(50.0) >= 1.0 - 1e-20 && sigmoid(50.0) <= 1.0);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert!(sigmoid(800.0).is_finite());
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config_and_data() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            LogRegModel::fit(&x, &[0, 1], LogRegConfig { learning_rate: 0.0, ..Default::default() }),
            Err(Error::Config(_))
        ));
        assert!(LogRegModel::fit(&[vec![f64::NAN], vec![1.0]], &[0, 1], LogRegConfig::default()).is_err());
        let m = LogRegModel::fit(&x, &[0, 1], LogRegConfig::default()).unwrap();
        assert!(matches!(m.predict_proba(&[vec![1.0, 2.0]]), Err(Error::Shape { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = crate::rng::seeded(11);
        for _ in 0..10 {
            let n = 12;
            let d = 4;
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let obj = Objective { x: &x, y: &y, class_weights: [0.7, 2.3], l2_lambda: 0.1 };
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let (_, gw, gb) = obj.eval(&w, b);
            let eps = 1e-5;
            let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            for j in 0..d {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[j] += eps;
                wm[j] -= eps;
                let num = (obj.eval(&wp, b).0 - obj.eval(&wm, b).0) / (2.0 * eps);
                assert!(rel(gw[j], num) < 1e-6, "w[{j}]: {} vs {num}", gw[j]);
            }
            let num = (obj.eval(&w, b + eps).0 - obj.eval(&w, b - eps).0) / (2.0 * eps);
            assert!(rel(gb, num) < 1e-6);
        }
    }

    #[test]
    fn loss_never_increases() {
        let mut rng = crate::rng::seeded(5);
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] + 0.5 * r[1] + rng.random_range(-0.5..0.5) > 0.0)).collect();
        let mut losses = Vec::new();
        LogRegModel::fit_traced(&x, &y, LogRegConfig { learning_rate: 0.1, max_iters: 300, ..Default::default() }, |_, l| losses.push(l))
            .unwrap();
        assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn probabilities_monotone_in_logit() {
        let m = LogRegModel {
            weights: vec![0.7, -1.3],
            bias: 0.2,
            iterations: 0,
            final_loss: 0.0,
            config: LogRegConfig::default(),
        };
        let mut rng = crate::rng::seeded(9);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)])
            .collect();
        let p = m.predict_proba(&rows).unwrap();
        let mut pairs: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| 0.2 + 0.7 * r[0] - 1.3 * r[1])
            .zip(p)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
