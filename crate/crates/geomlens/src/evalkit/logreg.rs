//! Binary logistic regression with L2 penalty, trained by full-batch
//! gradient descent with backtracking line search.

use crate::error::{Error, Result};

pub const GRAD_TOL: f64 = 1e-5;
pub const MAX_ITERS: usize = 1000;

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn predict_prob(&self, x: &[f64]) -> f64 {
        let z = self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        sigmoid(z)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        usize::from(self.predict_prob(x) >= 0.5)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean negative log-likelihood plus (l2/2) |w|^2, and its gradient.
/// The bias is not penalized.
pub fn loss_and_gradient(
    features: &[f64],
    dim: usize,
    labels: &[u8],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = labels.len();
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; dim];
    let mut grad_b = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let x = &features[i * dim..(i + 1) * dim];
        let z = bias + x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        let p = sigmoid(z);
        let yf = y as f64;
        // numerically stable log loss
        loss += if z >= 0.0 {
            (1.0 + (-z).exp()).ln() + z * (1.0 - yf)
        } else {
            (1.0 + z.exp()).ln() - z * yf
        };
        let err = p - yf;
        for (g, &xi) in grad_w.iter_mut().zip(x) {
            *g += err * xi;
        }
        grad_b += err;
    }
    let nf = n as f64;
    loss /= nf;
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = *g / nf + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    grad_b /= nf;
    (loss, grad_w, grad_b)
}

/// Train until the gradient norm drops below `GRAD_TOL` or `MAX_ITERS`
/// iterations. The backtracking step keeps the loss non-increasing.
pub fn train(features: &[f64], dim: usize, labels: &[u8], l2: f64) -> Result<LogisticModel> {
    let n = labels.len();
    if n == 0 || features.len() != n * dim {
        return Err(Error::InvalidArg("empty or misshapen training data".into()));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::InvalidArg("training split must contain both labels".into()));
    }
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let (mut loss, mut gw, mut gb) = loss_and_gradient(features, dim, labels, &weights, bias, l2);
    let mut step = 1.0;
    for _ in 0..MAX_ITERS {
        let gnorm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if gnorm < GRAD_TOL {
            break;
        }
        // backtracking: shrink until the loss decreases
        let mut accepted = false;
        for _ in 0..50 {
            let cand_w: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
            let cand_b = bias - step * gb;
            let (cand_loss, cand_gw, cand_gb) =
                loss_and_gradient(features, dim, labels, &cand_w, cand_b, l2);
            if cand_loss <= loss {
                weights = cand_w;
                bias = cand_b;
                loss = cand_loss;
                gw = cand_gw;
                gb = cand_gb;
                accepted = true;
                step *= 1.5; // try a larger step next time
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // no descent direction progress at float precision
        }
    }
    Ok(LogisticModel { weights, bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_problem_perfect_accuracy() {
        // one-hot features, label = presence of feature 0
        let features = vec![
            1.0, 0.0, //
            0.0, 1.0, //
            1.0, 0.0, //
            0.0, 1.0,
        ];
        let labels = [1u8, 0, 1, 0];
        let model = train(&features, 2, &labels, 1e-4).unwrap();
        for i in 0..4 {
            assert_eq!(model.predict(&features[i * 2..(i + 1) * 2]), labels[i] as usize);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10;
        let dim = 3;
        let features: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let weights: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let bias = 0.2;
        let l2 = 0.1;
        let (_, gw, gb) = loss_and_gradient(&features, dim, &labels, &weights, bias, l2);
        let h = 1e-6;
        for j in 0..dim {
            let mut wp = weights.clone();
            wp[j] += h;
            let (lp, _, _) = loss_and_gradient(&features, dim, &labels, &wp, bias, l2);
            wp[j] -= 2.0 * h;
            let (lm, _, _) = loss_and_gradient(&features, dim, &labels, &wp, bias, l2);
            let numeric = (lp - lm) / (2.0 * h);
            let denom = gw[j].abs().max(numeric.abs()).max(1e-8);
            assert!(((gw[j] - numeric) / denom).abs() < 1e-5, "w[{j}]");
        }
        let (lp, _, _) = loss_and_gradient(&features, dim, &labels, &weights, bias + h, l2);
        let (lm, _, _) = loss_and_gradient(&features, dim, &labels, &weights, bias - h, l2);
        let numeric = (lp - lm) / (2.0 * h);
        assert!(((gb - numeric) / numeric.abs().max(1e-8)).abs() < 1e-5);
    }

    #[test]
    fn loss_non_increasing_during_training() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 50;
        let dim = 4;
        let features: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        // train twice with snooped losses via a small reimplementation of the loop
        let mut weights = vec![0.0; dim];
        let mut bias = 0.0;
        let (mut loss, mut gw, mut gb) = loss_and_gradient(&features, dim, &labels, &weights, bias, 0.01);
        let mut step = 1.0;
        for _ in 0..100 {
            let mut ok = false;
            for _ in 0..50 {
                let cw: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
                let cb = bias - step * gb;
                let (cl, cgw, cgb) = loss_and_gradient(&features, dim, &labels, &cw, cb, 0.01);
                if cl <= loss {
                    assert!(cl <= loss + 1e-15);
                    weights = cw;
                    bias = cb;
                    loss = cl;
                    gw = cgw;
                    gb = cgb;
                    step *= 1.5;
                    ok = true;
                    break;
                }
                step *= 0.5;
            }
            if !ok {
                break;
            }
        }
        assert!(loss.is_finite());
    }

    #[test]
    fn single_label_rejected() {
        let features = vec![1.0, 0.0, 0.0, 1.0];
        assert!(train(&features, 2, &[1, 1], 0.01).is_err());
    }
}
