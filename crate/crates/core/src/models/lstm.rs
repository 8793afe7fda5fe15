//! Single-layer LSTM sequence classifier trained with BPTT.
//!
//! All parameters live in one flat vector so that gradients, SGD updates and
//! serialization share a layout:
//!
//! ```text
//! [W_i | W_f | W_o | W_g]   each hidden x (input + hidden), row-major,
//!                           input columns first
//! [b_i | b_f | b_o | b_g]   each hidden
//! w_out                     hidden
//! b_out                     1
//! ```

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{sigmoid, softplus};
use crate::error::{Error, Result};
use crate::preprocess::SequenceSet;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmDims {
    pub input: usize,
    pub hidden: usize,
}

impl LstmDims {
    fn cols(&self) -> usize {
        self.input + self.hidden
    }

    fn gate_w(&self, q: usize) -> usize {
        q * self.hidden * self.cols()
    }

    fn gate_b(&self, q: usize) -> usize {
        4 * self.hidden * self.cols() + q * self.hidden
    }

    fn w_out(&self) -> usize {
        4 * self.hidden * self.cols() + 4 * self.hidden
    }

    fn b_out(&self) -> usize {
        self.w_out() + self.hidden
    }

    pub fn n_params(&self) -> usize {
        self.b_out() + 1
    }
}

const I: usize = 0;
const F: usize = 1;
const O: usize = 2;
const G: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub dims: LstmDims,
    pub weights: Vec<f64>,
}

impl LstmParams {
    /// Uniform(-s, s) with `s = 1/sqrt(hidden)`, forget-gate bias 1.
    pub fn init(dims: LstmDims, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let s = 1.0 / (dims.hidden as f64).sqrt();
        let mut weights: Vec<f64> = (0..dims.n_params())
            .map(|_| rng.random_range(-s..s))
            .collect();
        let fb = dims.gate_b(F);
        weights[fb..fb + dims.hidden].fill(1.0);
        Self { dims, weights }
    }

    pub fn zeros(dims: LstmDims) -> Self {
        Self {
            dims,
            weights: vec![0.0; dims.n_params()],
        }
    }

    pub fn from_weights(dims: LstmDims, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != dims.n_params() {
            return Err(Error::Shape {
                expected: dims.n_params(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Data("LSTM weights must be finite".into()));
        }
        Ok(Self { dims, weights })
    }

    pub fn b_out_mut(&mut self) -> &mut f64 {
        let k = self.dims.b_out();
        &mut self.weights[k]
    }
}

/// Activations of one time step.
#[derive(Debug, Clone)]
pub struct StepCache {
    /// `[x_t; h_{t-1}]`
    pub z: Vec<f64>,
    /// Gate activations, indexed by gate.
    pub gates: [Vec<f64>; 4],
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub steps: Vec<StepCache>,
    pub logit: f64,
    pub prob: f64,
}

fn check_seq(p: &LstmParams, seq: &[Vec<f64>]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::Data("sequence must have at least one step".into()));
    }
    match seq.iter().find(|x| x.len() != p.dims.input) {
        Some(x) => Err(Error::Shape {
            expected: p.dims.input,
            got: x.len(),
        }),
        None => Ok(()),
    }
}

/// Runs the recurrence from `h_0 = c_0 = 0` and returns `sigmoid(w_out . h_T + b_out)`.
pub fn lstm_forward(p: &LstmParams, seq: &[Vec<f64>]) -> Result<ForwardCache> {
    check_seq(p, seq)?;
    let LstmDims { input: d, hidden: h } = p.dims;
    let cols = d + h;
    let w = &p.weights;
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    let mut steps = Vec::with_capacity(seq.len());
    for x in seq {
        let mut z = Vec::with_capacity(cols);
        z.extend_from_slice(x);
        z.extend_from_slice(&h_prev);
        let gates: [Vec<f64>; 4] = std::array::from_fn(|q| {
            let wq = &w[p.dims.gate_w(q)..p.dims.gate_w(q) + h * cols];
            let bq = &w[p.dims.gate_b(q)..p.dims.gate_b(q) + h];
            (0..h)
                .map(|r| {
                    let a = bq[r] + wq[r * cols..(r + 1) * cols].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
                    if q == G {
                        a.tanh()
                    } else {
                        sigmoid(a)
                    }
                })
                .collect()
        });
        let c: Vec<f64> = (0..h)
            .map(|r| gates[F][r] * c_prev[r] + gates[I][r] * gates[G][r])
            .collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let hh: Vec<f64> = (0..h).map(|r| gates[O][r] * tanh_c[r]).collect();
        h_prev.clone_from(&hh);
        c_prev.clone_from(&c);
        steps.push(StepCache {
            z,
            gates,
            c,
            tanh_c,
            h: hh,
        });
    }
    let wo = &w[p.dims.w_out()..p.dims.w_out() + h];
    let logit = w[p.dims.b_out()] + wo.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
    Ok(ForwardCache {
        steps,
        logit,
        prob: sigmoid(logit),
    })
}

/// Binary cross-entropy on the logit, stable for large magnitudes.
fn bce(logit: f64, label: u8) -> f64 {
    softplus(logit) - f64::from(label) * logit
}

/// Adds `scale * dL/dtheta` for one sequence into `grad`. Returns its loss.
fn backward(p: &LstmParams, seq: &[Vec<f64>], label: u8, scale: f64, grad: &mut [f64]) -> Result<f64> {
    let fc = lstm_forward(p, seq)?;
    let LstmDims { input: d, hidden: h } = p.dims;
    let cols = d + h;
    let w = &p.weights;
    let dlogit = scale * (fc.prob - f64::from(label));

    let last = fc.steps.last().unwrap();
    let (wo, bo) = (p.dims.w_out(), p.dims.b_out());
    for r in 0..h {
        grad[wo + r] += dlogit * last.h[r];
    }
    grad[bo] += dlogit;

    let mut dh: Vec<f64> = (0..h).map(|r| dlogit * w[wo + r]).collect();
    let mut dc_next = vec![0.0; h];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h]);
    for t in (0..fc.steps.len()).rev() {
        let s = &fc.steps[t];
        let zero = vec![0.0; h];
        let c_prev = if t > 0 { &fc.steps[t - 1].c } else { &zero };
        let [gi, gf, go, gg] = &s.gates;
        for r in 0..h {
            let dc = dc_next[r] + dh[r] * go[r] * (1.0 - s.tanh_c[r] * s.tanh_c[r]);
            da[I][r] = dc * gg[r] * gi[r] * (1.0 - gi[r]);
            da[F][r] = dc * c_prev[r] * gf[r] * (1.0 - gf[r]);
            da[O][r] = dh[r] * s.tanh_c[r] * go[r] * (1.0 - go[r]);
            da[G][r] = dc * gi[r] * (1.0 - gg[r] * gg[r]);
            dc_next[r] = dc * gf[r];
        }
        let mut dz = vec![0.0; cols];
        for (q, daq) in da.iter().enumerate() {
            let (wq, bq) = (p.dims.gate_w(q), p.dims.gate_b(q));
            for r in 0..h {
                let a = daq[r];
                grad[bq + r] += a;
                let row = wq + r * cols;
                for k in 0..cols {
                    grad[row + k] += a * s.z[k];
                    dz[k] += a * w[row + k];
                }
            }
        }
        dh.copy_from_slice(&dz[d..]);
    }
    Ok(bce(fc.logit, label))
}

#[derive(Debug, Clone)]
pub struct LstmGrad {
    pub grad: Vec<f64>,
    /// Mean binary cross-entropy over the batch.
    pub loss: f64,
    /// Global L2 norm before clipping.
    pub norm: f64,
}

/// Exact gradient of the mean BCE over `batch` by backpropagation through
/// time, rescaled to global norm `clip` when it exceeds it.
pub fn lstm_grad(p: &LstmParams, batch: &[(&[Vec<f64>], u8)], clip: Option<f64>) -> Result<LstmGrad> {
    if batch.is_empty() {
        return Err(Error::Data("gradient of an empty batch".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let parts: Vec<Result<(Vec<f64>, f64)>> = batch
        .par_iter()
        .map(|(seq, label)| {
            let mut g = vec![0.0; p.weights.len()];
            let loss = backward(p, seq, *label, scale, &mut g)?;
            Ok((g, loss))
        })
        .collect();
    let mut grad = vec![0.0; p.weights.len()];
    let mut loss = 0.0;
    for (i, part) in parts.into_iter().enumerate() {
        let (g, l) = part?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { index: i });
        }
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if let Some(c) = clip {
        if norm > c {
            let k = c / norm;
            grad.iter_mut().for_each(|g| *g *= k);
        }
    }
    Ok(LstmGrad {
        grad,
        loss: loss * scale,
        norm,
    })
}

/// Mean BCE of `p` over a sequence set.
pub fn lstm_loss(p: &LstmParams, data: &SequenceSet) -> Result<f64> {
    let losses: Vec<f64> = data
        .sequences
        .par_iter()
        .zip(data.labels.par_iter())
        .map(|(s, &l)| lstm_forward(p, s).map(|fc| bce(fc.logit, l)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmTrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub grad_clip_norm: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for LstmTrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            grad_clip_norm: 5.0,
            patience: 5,
            seed: 0,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub params: LstmParams,
    pub config: LstmTrainConfig,
}

/// Mini-batch SGD over shuffled batches.
///
/// History entry 0 is the untrained network. The returned parameters are
/// those with the lowest validation loss (training loss when `val` is `None`).
pub fn lstm_train(
    train: &SequenceSet,
    val: Option<&SequenceSet>,
    cfg: &LstmTrainConfig,
) -> Result<(LstmModel, Vec<EpochRecord>)> {
    if train.is_empty() {
        return Err(Error::Data("LSTM training set is empty".into()));
    }
    if cfg.hidden_dim == 0 || cfg.batch_size == 0 || cfg.epochs == 0 || cfg.patience == 0 {
        return Err(Error::Config(
            "hidden_dim, batch_size, epochs and patience must be positive".into(),
        ));
    }
    if !(cfg.learning_rate > 0.0 && cfg.grad_clip_norm > 0.0) {
        return Err(Error::Config(
            "learning_rate and grad_clip_norm must be positive".into(),
        ));
    }
    let dims = LstmDims {
        input: train.sequences[0][0].len(),
        hidden: cfg.hidden_dim,
    };
    let mut params = LstmParams::init(dims, cfg.seed);
    let mut rng = seeded(crate::rng::sub_seed(cfg.seed, 1));
    let val = val.filter(|v| !v.is_empty());
    let monitor = |p: &LstmParams| -> Result<(f64, Option<f64>)> {
        Ok((lstm_loss(p, train)?, val.map(|v| lstm_loss(p, v)).transpose()?))
    };

    let (tl, vl) = monitor(&params)?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: tl,
        val_loss: vl,
    }];
    let mut best = (vl.unwrap_or(tl), params.clone());
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[Vec<f64>], u8)> = chunk
                .iter()
                .map(|&i| (train.sequences[i].as_slice(), train.labels[i]))
                .collect();
            let g = lstm_grad(&params, &batch, Some(cfg.grad_clip_norm))?;
            for (w, d) in params.weights.iter_mut().zip(&g.grad) {
                *w -= cfg.learning_rate * d;
            }
        }
        let (tl, vl) = monitor(&params)?;
        history.push(EpochRecord {
            epoch,
            train_loss: tl,
            val_loss: vl,
        });
        let score = vl.unwrap_or(tl);
        if score < best.0 {
            best = (score, params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((
        LstmModel {
            params: best.1,
            config: cfg.clone(),
        },
        history,
    ))
}

/// Probabilities and classes (`p >= threshold`).
pub fn lstm_predict(p: &LstmParams, seqs: &[Vec<Vec<f64>>], threshold: f64) -> Result<(Vec<u8>, Vec<f64>)> {
    let probs: Vec<f64> = seqs
        .par_iter()
        .map(|s| lstm_forward(p, s).map(|fc| fc.prob))
        .collect::<Result<_>>()?;
    let classes = probs.iter().map(|&q| u8::from(q >= threshold)).collect();
    Ok((classes, probs))
}
