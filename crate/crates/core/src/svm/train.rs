//! Primal hinge-loss minimization by epoch-wise stochastic subgradient
//! descent.
//!
//! Objective: `½‖w‖² + C · Σ max(0, 1 − yᵢ(w·xᵢ + b))`, bias unregularized.
//!
//! Each epoch visits every example once in a seeded order, spreading the
//! regularizer evenly over the `n` per-example steps. An epoch is kept only
//! if it does not increase the full objective; otherwise it is discarded and
//! the step size is halved. Training stops when a kept epoch improves the
//! objective by less than `tol` (relative) or after `max_epochs`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CountMatrix, LinearModel, SvmError};

/// Smallest step before training is considered stalled.
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub reg_c: f64,
    pub seed: u64,
    pub max_epochs: usize,
    /// Relative objective change that counts as converged.
    pub tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            reg_c: 1.0,
            seed: 0,
            max_epochs: 2000,
            tol: 1e-6,
        }
    }
}

/// Weight vector stored as `scale · v` so the per-step shrink is O(1).
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn dot(&self, row: &[(usize, f64)]) -> f64 {
        self.scale * row.iter().map(|&(j, x)| self.v[j] * x).sum::<f64>()
    }

    fn shrink(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.rescale();
        }
    }

    fn add_row(&mut self, row: &[(usize, f64)], coef: f64) {
        let c = coef / self.scale;
        for &(j, x) in row {
            self.v[j] += c * x;
        }
    }

    fn rescale(&mut self) {
        for x in &mut self.v {
            *x *= self.scale;
        }
        self.scale = 1.0;
    }

    fn to_vec(&self) -> Vec<f64> {
        self.v.iter().map(|x| x * self.scale).collect()
    }
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn objective(x: &CountMatrix, y: &[bool], w: &[f64], b: f64, reg_c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = x
        .rows()
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let f: f64 = row.iter().map(|&(j, v)| w[j] * v).sum::<f64>() + b;
            (1.0 - sign(label) * f).max(0.0)
        })
        .sum();
    reg + reg_c * loss
}

/// Trains a linear SVM; `true` labels are the positive (marked) class.
///
/// Hitting `max_epochs` is not an error: the model is returned with
/// `converged == false`.
pub fn train_linear_svm(
    x: &CountMatrix,
    y: &[bool],
    config: &TrainConfig,
) -> Result<LinearModel, SvmError> {
    if x.n_rows() != y.len() {
        return Err(SvmError::ShapeMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if !(config.reg_c.is_finite() && config.reg_c > 0.0) {
        return Err(SvmError::InvalidConfig(format!("reg_c = {}", config.reg_c)));
    }
    if !y.iter().any(|&l| l) || !y.iter().any(|&l| !l) {
        return Err(SvmError::SingleClass);
    }

    let n = y.len();
    let nf = n as f64;
    let c = config.reg_c;
    let max_sq = x
        .rows()
        .iter()
        .map(|r| r.iter().map(|&(_, v)| v * v).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let mut step = (1.0 / (c * max_sq)).min(0.5 * nf);

    let mut w = vec![0.0; x.n_cols()];
    let mut b = 0.0;
    let mut obj = objective(x, y, &w, b, c);
    let mut trace = vec![obj];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut converged = false;
    let mut epochs = 0;

    while epochs < config.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);

        let mut cand = ScaledWeights {
            v: w.clone(),
            scale: 1.0,
        };
        let mut cand_b = b;
        let shrink = 1.0 - step / nf;
        for &i in &order {
            let row = x.row(i);
            let yi = sign(y[i]);
            let margin = yi * (cand.dot(row) + cand_b);
            cand.shrink(shrink);
            if margin < 1.0 {
                cand.add_row(row, step * c * yi);
                cand_b += step * c * yi;
            }
        }
        let cand_w = cand.to_vec();
        let cand_obj = objective(x, y, &cand_w, cand_b, c);

        if cand_obj <= obj {
            let rel = (obj - cand_obj) / obj.max(f64::MIN_POSITIVE);
            w = cand_w;
            b = cand_b;
            obj = cand_obj;
            trace.push(obj);
            if rel < config.tol {
                converged = true;
                break;
            }
        } else {
            step *= 0.5;
            if step < MIN_STEP {
                converged = true;
                break;
            }
        }
    }

    if !converged {
        log::warn!(
            "linear SVM stopped after {epochs} epochs without reaching tol {}",
            config.tol
        );
    }

    Ok(LinearModel {
        weights: w,
        bias: b,
        reg_c: c,
        seed: config.seed,
        epochs,
        converged,
        objective: obj,
        objective_trace: trace,
    })
}
