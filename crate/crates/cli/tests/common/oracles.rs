//! Direct-from-definition references used by the acceptance checks.

use std::f64::consts::PI;

use timbre_core::gbt::{GradHess, SplitParams, TreeNode};
use timbre_core::DenseMatrix;

pub fn hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Windowed DFT `|X(k)|` for `k = 0..=N/2`, evaluated term by term.
pub fn naive_dft_magnitudes(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let w = hamming(n);
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                let phase = -2.0 * PI * ((i * k) % n) as f64 / n as f64;
                re += frame[i] * w[i] * phase.cos();
                im += frame[i] * w[i] * phase.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Exhaustive split enumeration; the first of equal gains is kept.
pub fn brute_force_split(
    data: &DenseMatrix,
    rows: &[usize],
    gh: &GradHess,
    params: &SplitParams,
) -> Option<(usize, f64, f64)> {
    let lam = params.lambda_l2;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..data.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| data.get(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for &r in rows {
                if data.get(r, f) < thr {
                    gl += gh.grad[r];
                    hl += gh.hess[r];
                } else {
                    gr += gh.grad[r];
                    hr += gh.hess[r];
                }
            }
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let (g, h) = (gl + gr, hl + hr);
            let gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - g * g / (h + lam)) - params.gamma_leaf;
            if gain > 0.0 && best.is_none_or(|(_, _, b)| gain > b) {
                best = Some((f, thr, gain));
            }
        }
    }
    best
}

/// Preorder index of the leaf `x` lands in.
pub fn leaf_index(tree: &TreeNode, x: &[f64]) -> usize {
    fn go(node: &TreeNode, x: &[f64], offset: usize) -> usize {
        match node {
            TreeNode::Leaf { .. } => offset,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] < *threshold {
                    go(left, x, offset)
                } else {
                    go(right, x, offset + left.num_leaves())
                }
            }
        }
    }
    go(tree, x, 0)
}

pub fn leaf_weights(tree: &TreeNode) -> Vec<f64> {
    let mut out = Vec::new();
    tree.walk(&mut |n| {
        if let TreeNode::Leaf { weight } = n {
            out.push(*weight);
        }
    });
    out
}
