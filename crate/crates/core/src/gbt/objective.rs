//! Second-order objective: gradients, closed-form leaf weights, structure
//! score and split gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hessians are floored here for the softmax loss so a saturated
/// probability cannot zero a leaf denominator.
const MIN_SOFTMAX_HESS: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `½(ŷ - y)²` against one-hot targets, one regression per class.
    #[default]
    SquaredOneHot,
    /// Cross-entropy over the softmax of all class scores.
    Softmax,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::SquaredOneHot => "squared_one_hot",
            Loss::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "squared_one_hot" => Ok(Loss::SquaredOneHot),
            "softmax" => Ok(Loss::Softmax),
            other => Err(Error::Parse(format!("unknown loss {other:?}"))),
        }
    }
}

/// Per-instance first and second derivatives of the loss.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradHess {
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl GradHess {
    pub fn len(&self) -> usize {
        self.grad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad.is_empty()
    }
}

/// Gradients and hessians for one output.
///
/// For [`Loss::SquaredOneHot`] `predictions` are raw scores and
/// `g = ŷ - y`, `h = 1`. For [`Loss::Softmax`] `predictions` are the
/// class probabilities `p_c` and `g = p_c - y_c`, `h = p_c (1 - p_c)`.
pub fn compute_grad_hess(predictions: &[f64], targets: &[f64], loss: Loss) -> Result<GradHess> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: predictions.len(),
            found: targets.len(),
        });
    }
    let grad = predictions.iter().zip(targets).map(|(p, y)| p - y).collect();
    let hess = match loss {
        Loss::SquaredOneHot => vec![1.0; predictions.len()],
        Loss::Softmax => predictions
            .iter()
            .map(|p| (p * (1.0 - p)).max(MIN_SOFTMAX_HESS))
            .collect(),
    };
    Ok(GradHess { grad, hess })
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn check_denominator(h: f64, lambda_l2: f64) -> Result<f64> {
    let d = h + lambda_l2;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::invalid(format!("nonpositive denominator H + λ = {d}")))
    }
}

/// `ω* = -G / (H + λ)`.
pub fn optimal_leaf_weight(g: f64, h: f64, lambda_l2: f64) -> Result<f64> {
    Ok(-g / check_denominator(h, lambda_l2)?)
}

/// `-½ Σ_j G_j² / (H_j + λ) + γ T` for a tree with leaf statistics
/// `(G_j, H_j)`.
pub fn structure_score(leaf_stats: &[(f64, f64)], lambda_l2: f64, gamma_leaf: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &(g, h) in leaf_stats {
        sum += g * g / check_denominator(h, lambda_l2)?;
    }
    Ok(-0.5 * sum + gamma_leaf * leaf_stats.len() as f64)
}

/// Reduction in structure score from splitting one leaf into two.
pub fn split_gain(
    g_left: f64,
    h_left: f64,
    g_right: f64,
    h_right: f64,
    lambda_l2: f64,
    gamma_leaf: f64,
) -> Result<f64> {
    check_denominator(h_left, lambda_l2)?;
    check_denominator(h_right, lambda_l2)?;
    check_denominator(h_left + h_right, lambda_l2)?;
    Ok(split_gain_unchecked(g_left, h_left, g_right, h_right, lambda_l2, gamma_leaf))
}

#[inline]
pub(crate) fn split_gain_unchecked(
    g_left: f64,
    h_left: f64,
    g_right: f64,
    h_right: f64,
    lambda_l2: f64,
    gamma_leaf: f64,
) -> f64 {
    let g = g_left + g_right;
    let h = h_left + h_right;
    0.5 * (g_left * g_left / (h_left + lambda_l2) + g_right * g_right / (h_right + lambda_l2)
        - g * g / (h + lambda_l2))
        - gamma_leaf
}
