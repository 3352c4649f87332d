//! Regularized gradient-boosted regression trees.
//!
//! Each boosting round fits one tree per class to the second-order
//! expansion of the loss at the current scores. A leaf's weight is
//! `-G / (H + λ)`, and candidate splits are ranked by the reduction in
//! structure score `-½ Σ G²/(H + λ) + γT`.

mod ensemble;
mod model_io;
mod objective;
mod tree;

pub use ensemble::{
    argmax, subsample_rows, train, train_regression, train_with_history, training_loss, ClassTree,
    Prediction, TrainConfig, TrainingRun, TreeEnsemble,
};
pub use objective::{
    compute_grad_hess, optimal_leaf_weight, softmax, split_gain, structure_score, GradHess, Loss,
};
pub use tree::{build_tree, find_best_split, midpoint_threshold, SplitCandidate, SplitParams, TreeNode};
