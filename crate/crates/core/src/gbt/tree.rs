//! Regression trees grown by exact greedy split search.

use rayon::prelude::*;

use super::objective::{optimal_leaf_weight, split_gain_unchecked, GradHess};
use crate::matrix::DenseMatrix;

/// Nodes smaller than this (rows × features) scan features sequentially.
const PARALLEL_SCAN_WORK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        weight: f64,
    },
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(weight: f64) -> Self {
        TreeNode::Leaf { weight }
    }

    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    /// Largest feature index referenced by any split.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature, left, right, ..
            } => Some(
                (*feature)
                    .max(left.max_feature().unwrap_or(0))
                    .max(right.max_feature().unwrap_or(0)),
            ),
        }
    }

    /// Visits nodes in preorder.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a TreeNode)) {
        visit(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.walk(visit);
            right.walk(visit);
        }
    }
}

/// Tree-growing constraints and regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub max_depth: usize,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    pub lambda_l2: f64,
    pub gamma_leaf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Canonical threshold between two adjacent distinct sorted values. When
/// the midpoint rounds down onto `lo` the upper value is used, so `x <
/// threshold` always separates the two.
pub fn midpoint_threshold(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid <= lo {
        hi
    } else {
        mid
    }
}

/// Best split of `rows` over `features`.
///
/// Every boundary between distinct sorted values of every feature is
/// evaluated; the candidate with the largest gain wins if that gain is
/// strictly positive and both children carry at least `min_child_weight`
/// hessian. Ties go to the lowest feature index, then the lowest threshold.
pub fn find_best_split(
    data: &DenseMatrix,
    rows: &[usize],
    grad_hess: &GradHess,
    features: &[usize],
    params: &SplitParams,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let (g_total, h_total) = totals(rows, grad_hess);
    let mut sorted = rows.to_vec();
    let mut best: Option<SplitCandidate> = None;
    for &f in features {
        sorted.sort_by(|&a, &b| data.get(a, f).total_cmp(&data.get(b, f)));
        let cand = scan_feature(data, f, &sorted, grad_hess, g_total, h_total, params);
        best = better(best, cand);
    }
    best
}

fn totals(rows: &[usize], gh: &GradHess) -> (f64, f64) {
    rows.iter()
        .fold((0.0, 0.0), |(g, h), &r| (g + gh.grad[r], h + gh.hess[r]))
}

fn better(current: Option<SplitCandidate>, cand: Option<SplitCandidate>) -> Option<SplitCandidate> {
    match (current, cand) {
        (Some(c), Some(n)) if n.gain > c.gain => Some(n),
        (None, n) => n,
        (c, _) => c,
    }
}

fn scan_feature(
    data: &DenseMatrix,
    feature: usize,
    sorted: &[usize],
    gh: &GradHess,
    g_total: f64,
    h_total: f64,
    params: &SplitParams,
) -> Option<SplitCandidate> {
    let lambda = params.lambda_l2;
    let mut best: Option<SplitCandidate> = None;
    let mut best_gain = 0.0;
    let (mut g_left, mut h_left) = (0.0, 0.0);
    for pair in sorted.windows(2) {
        let (r, next) = (pair[0], pair[1]);
        g_left += gh.grad[r];
        h_left += gh.hess[r];
        let x = data.get(r, feature);
        let x_next = data.get(next, feature);
        if x_next <= x {
            continue;
        }
        let g_right = g_total - g_left;
        let h_right = h_total - h_left;
        if h_left < params.min_child_weight || h_right < params.min_child_weight {
            continue;
        }
        if h_left + lambda <= 0.0 || h_right + lambda <= 0.0 || h_total + lambda <= 0.0 {
            continue;
        }
        let gain = split_gain_unchecked(g_left, h_left, g_right, h_right, lambda, params.gamma_leaf);
        if gain > best_gain {
            best_gain = gain;
            best = Some(SplitCandidate {
                feature,
                threshold: midpoint_threshold(x, x_next),
                gain,
            });
        }
    }
    best
}

/// Grows a tree on `rows` with the given gradient statistics.
pub fn build_tree(data: &DenseMatrix, rows: &[usize], grad_hess: &GradHess, params: &SplitParams) -> TreeNode {
    let sorted: Vec<Vec<usize>> = (0..data.cols())
        .map(|f| {
            let mut s = rows.to_vec();
            s.sort_by(|&a, &b| data.get(a, f).total_cmp(&data.get(b, f)));
            s
        })
        .collect();
    build_tree_presorted(data, sorted, grad_hess, params)
}

/// As [`build_tree`], with each feature's rows already sorted by value.
/// Every list must hold the same row set.
pub(crate) fn build_tree_presorted(
    data: &DenseMatrix,
    sorted: Vec<Vec<usize>>,
    grad_hess: &GradHess,
    params: &SplitParams,
) -> TreeNode {
    let mut grower = Grower {
        data,
        gh: grad_hess,
        params,
        goes_left: vec![false; data.rows()],
    };
    grower.grow(sorted, 0)
}

struct Grower<'a> {
    data: &'a DenseMatrix,
    gh: &'a GradHess,
    params: &'a SplitParams,
    goes_left: Vec<bool>,
}

impl Grower<'_> {
    fn leaf(&self, rows: &[usize]) -> TreeNode {
        let (g, h) = totals(rows, self.gh);
        TreeNode::leaf(optimal_leaf_weight(g, h, self.params.lambda_l2).unwrap_or(0.0))
    }

    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> TreeNode {
        let rows = match sorted.first() {
            Some(r) => r,
            None => return TreeNode::leaf(0.0),
        };
        if depth >= self.params.max_depth || rows.len() < 2 {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(&sorted) else {
            return self.leaf(rows);
        };

        for &r in rows {
            self.goes_left[r] = self.data.get(r, split.feature) < split.threshold;
        }
        let (left, right): (Vec<_>, Vec<_>) = sorted
            .into_iter()
            .map(|list| list.into_iter().partition::<Vec<_>, _>(|&r| self.goes_left[r]))
            .unzip();
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        TreeNode::split(split.feature, split.threshold, left, right)
    }

    fn best_split(&self, sorted: &[Vec<usize>]) -> Option<SplitCandidate> {
        let (g_total, h_total) = totals(&sorted[0], self.gh);
        let scan = |(f, list): (usize, &Vec<usize>)| {
            scan_feature(self.data, f, list, self.gh, g_total, h_total, self.params)
        };
        let candidates: Vec<_> = if sorted[0].len() * sorted.len() >= PARALLEL_SCAN_WORK {
            sorted.par_iter().enumerate().map(scan).collect()
        } else {
            sorted.iter().enumerate().map(scan).collect()
        };
        candidates.into_iter().fold(None, better)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(max_depth: usize) -> SplitParams {
        SplitParams {
            max_depth,
            min_child_weight: 1.0,
            lambda_l2: 0.0,
            gamma_leaf: 0.0,
        }
    }

    fn column(xs: &[f64]) -> DenseMatrix {
        DenseMatrix::new(xs.to_vec(), xs.len(), 1).unwrap()
    }

    #[test]
    fn four_point_example() {
        let data = column(&[1.0, 2.0, 3.0, 4.0]);
        let gh = GradHess {
            grad: vec![-1.0, -1.0, 1.0, 1.0],
            hess: vec![1.0; 4],
        };
        let s = find_best_split(&data, &[0, 1, 2, 3], &gh, &[0], &params(6)).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.gain, 2.0);

        let tree = build_tree(&data, &[0, 1, 2, 3], &gh, &params(1));
        assert_eq!(tree, TreeNode::split(0, 2.5, TreeNode::leaf(1.0), TreeNode::leaf(-1.0)));
    }

    #[test]
    fn zero_gradients_never_split() {
        let data = column(&[1.0, 2.0, 3.0]);
        let gh = GradHess {
            grad: vec![0.0; 3],
            hess: vec![1.0; 3],
        };
        assert!(find_best_split(&data, &[0, 1, 2], &gh, &[0], &params(3)).is_none());
    }

    #[test]
    fn depth_zero_is_a_single_leaf() {
        let data = column(&[1.0, 2.0, 3.0]);
        let gh = GradHess {
            grad: vec![1.0, 2.0, 3.0],
            hess: vec![1.0; 3],
        };
        let p = SplitParams {
            lambda_l2: 1.0,
            ..params(0)
        };
        assert_eq!(build_tree(&data, &[0, 1, 2], &gh, &p), TreeNode::leaf(-6.0 / 4.0));
    }

    #[test]
    fn midpoint_of_adjacent_floats_separates_them() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint_threshold(lo, hi);
        assert!(lo < t && !(hi < t));
        assert_eq!(midpoint_threshold(2.0, 3.0), 2.5);
    }

    #[test]
    fn equal_values_are_not_separated() {
        let data = column(&[1.0, 1.0, 1.0, 1.0]);
        let gh = GradHess {
            grad: vec![-1.0, -1.0, 1.0, 1.0],
            hess: vec![1.0; 4],
        };
        assert!(find_best_split(&data, &[0, 1, 2, 3], &gh, &[0], &params(2)).is_none());
    }
}
