//! One-hidden-layer perceptron regressor, loss, and top-k selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::multiplex::NodeId;

pub const DEFAULT_HIDDEN: usize = 64;

/// `in -> hidden (ReLU) -> 1` perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// `in x hidden`.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Pre-activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pre: Matrix,
}

impl Mlp {
    /// He-initialized weights, zero biases.
    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let w1 = Matrix::random_normal(inputs, hidden, (2.0 / inputs.max(1) as f64).sqrt(), rng);
        let w2 = Matrix::random_normal(1, hidden, (1.0 / hidden as f64).sqrt(), rng);
        Self {
            w1,
            b1: vec![0.0; hidden],
            w2: w2.as_slice().to_vec(),
            b2: 0.0,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite()
            && self.b1.iter().all(|x| x.is_finite())
            && self.w2.iter().all(|x| x.is_finite())
            && self.b2.is_finite()
    }

    fn check_shape(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.inputs() {
            return Err(Error::Shape(format!(
                "regressor expects {} inputs, got {}",
                self.inputs(),
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Vec<f64>, MlpCache)> {
        self.check_shape(x)?;
        let (n, h) = (x.rows(), self.hidden());
        let mut pre = Matrix::zeros(n, h);
        for r in 0..n {
            let out = pre.row_mut(r);
            out.copy_from_slice(&self.b1);
            for (i, &xi) in x.row(r).iter().enumerate() {
                if xi != 0.0 {
                    for (o, &w) in out.iter_mut().zip(self.w1.row(i)) {
                        *o += xi * w;
                    }
                }
            }
        }
        let pred = pre
            .iter_rows()
            .map(|z| {
                self.b2
                    + z.iter()
                        .zip(&self.w2)
                        .map(|(&z, &w)| z.max(0.0) * w)
                        .sum::<f64>()
            })
            .collect();
        Ok((pred, MlpCache { pre }))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let scores = self.forward(x)?.0;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("predicted scores".into()));
        }
        Ok(scores)
    }

    /// Parameter gradients and input gradient given `d loss / d pred`.
    pub fn backward(&self, x: &Matrix, cache: &MlpCache, grad_pred: &[f64]) -> (MlpGrads, Matrix) {
        let (n, h) = (x.rows(), self.hidden());
        let mut grads = MlpGrads {
            w1: Matrix::zeros(self.inputs(), h),
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: grad_pred.iter().sum(),
        };
        let mut grad_x = Matrix::zeros(n, self.inputs());
        let mut grad_pre = vec![0.0; h];
        for r in 0..n {
            let g = grad_pred[r];
            let z = cache.pre.row(r);
            for j in 0..h {
                grads.w2[j] += g * z[j].max(0.0);
                grad_pre[j] = if z[j] > 0.0 { g * self.w2[j] } else { 0.0 };
                grads.b1[j] += grad_pre[j];
            }
            for (i, &xi) in x.row(r).iter().enumerate() {
                let wrow = self.w1.row(i);
                let mut acc = 0.0;
                for j in 0..h {
                    acc += grad_pre[j] * wrow[j];
                }
                grad_x.set(r, i, acc);
                if xi != 0.0 {
                    for (gw, &gp) in grads.w1.row_mut(i).iter_mut().zip(&grad_pre) {
                        *gw += xi * gp;
                    }
                }
            }
        }
        (grads, grad_x)
    }

    pub fn apply(&mut self, grads: &MlpGrads, lr: f64) {
        self.w1.add_scaled(&grads.w1, -lr);
        for (w, g) in self.b1.iter_mut().zip(&grads.b1) {
            *w -= lr * g;
        }
        for (w, g) in self.w2.iter_mut().zip(&grads.w2) {
            *w -= lr * g;
        }
        self.b2 -= lr * grads.b2;
    }
}

/// Mean squared error.
pub fn mse_loss(pred: &[f64], labels: &[f64]) -> Result<f64> {
    if pred.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions against {} labels",
            pred.len(),
            labels.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = pred
        .iter()
        .zip(labels)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Gradient of [`mse_loss`] with respect to the predictions.
pub fn mse_grad(pred: &[f64], labels: &[f64]) -> Vec<f64> {
    let scale = 2.0 / pred.len() as f64;
    pred.iter()
        .zip(labels)
        .map(|(p, y)| scale * (p - y))
        .collect()
}

/// The `k` highest-scoring nodes, best first, ties by ascending id.
pub fn select_seeds(scores: &[f64], k: usize) -> Result<Vec<NodeId>> {
    if k == 0 || k > scores.len() {
        return Err(Error::invalid(format!(
            "cannot select {k} seeds from {} nodes",
            scores.len()
        )));
    }
    let mut order: Vec<NodeId> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}
