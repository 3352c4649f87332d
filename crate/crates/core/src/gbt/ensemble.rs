use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{compute_grad_hess, softmax, Loss};
use super::tree::{build_tree_presorted, SplitParams, TreeNode};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Boosting hyperparameters. Defaults are learning rate 0.05, 100 rounds,
/// depth 6, minimum child weight 1 and row subsampling 0.8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// Fraction of rows, drawn without replacement, each tree is fit on.
    pub subsample: f64,
    /// L2 penalty on leaf weights.
    pub lambda_l2: f64,
    /// Penalty per leaf.
    pub gamma_leaf: f64,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            n_estimators: 100,
            max_depth: 6,
            min_child_weight: 1.0,
            subsample: 0.8,
            lambda_l2: 1.0,
            gamma_leaf: 0.0,
            loss: Loss::SquaredOneHot,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub const KEYS: &'static [&'static str] = &[
        "learning_rate",
        "n_estimators",
        "max_depth",
        "min_child_weight",
        "subsample",
        "lambda_l2",
        "gamma_leaf",
        "loss",
        "seed",
    ];

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::invalid("subsample must be in (0, 1]"));
        }
        if !(self.lambda_l2 >= 0.0) || !(self.gamma_leaf >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::invalid("lambda_l2, gamma_leaf and min_child_weight must be >= 0"));
        }
        Ok(())
    }

    pub fn split_params(&self) -> SplitParams {
        SplitParams {
            max_depth: self.max_depth,
            min_child_weight: self.min_child_weight,
            lambda_l2: self.lambda_l2,
            gamma_leaf: self.gamma_leaf,
        }
    }

    /// `key=value` pairs in a fixed order, for report and model headers.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("learning_rate", self.learning_rate.to_string()),
            ("n_estimators", self.n_estimators.to_string()),
            ("max_depth", self.max_depth.to_string()),
            ("min_child_weight", self.min_child_weight.to_string()),
            ("subsample", self.subsample.to_string()),
            ("lambda_l2", self.lambda_l2.to_string()),
            ("gamma_leaf", self.gamma_leaf.to_string()),
            ("loss", self.loss.name().to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassTree {
    pub class: usize,
    pub tree: TreeNode,
}

/// Additive trees; class `c` scores `base_score + η Σ f_k(x)` over the
/// trees assigned to `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub config: TrainConfig,
    pub num_classes: usize,
    pub num_features: usize,
    pub base_score: f64,
    pub trees: Vec<ClassTree>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

impl TreeEnsemble {
    pub fn empty(config: TrainConfig, num_classes: usize, num_features: usize) -> Self {
        Self {
            config,
            num_classes,
            num_features,
            base_score: 0.0,
            trees: Vec::new(),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate
    }

    pub fn push(&mut self, class: usize, tree: TreeNode) -> Result<()> {
        if class >= self.num_classes {
            return Err(Error::invalid(format!("class {class} out of range")));
        }
        if tree.max_feature().is_some_and(|f| f >= self.num_features) {
            return Err(Error::invalid("tree references a feature beyond the input width"));
        }
        self.trees.push(ClassTree { class, tree });
        Ok(())
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.num_features {
            return Err(Error::DimensionMismatch {
                expected: self.num_features,
                found: x.len(),
            });
        }
        let mut sums = vec![0.0; self.num_classes];
        for t in &self.trees {
            sums[t.class] += t.tree.predict(x);
        }
        let eta = self.learning_rate();
        Ok(sums.into_iter().map(|s| self.base_score + eta * s).collect())
    }

    /// Class scores and their argmax, ties resolved to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let scores = self.scores(x)?;
        Ok(Prediction {
            class: argmax(&scores),
            scores,
        })
    }

    pub fn predict_matrix(&self, data: &DenseMatrix) -> Result<Vec<Prediction>> {
        data.iter_rows().map(|r| self.predict(r)).collect()
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// An ensemble together with the training loss before the first round and
/// after each round.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub ensemble: TreeEnsemble,
    pub loss_history: Vec<f64>,
}

/// One-vs-rest multiclass training on `labels` in `0..num_classes`.
pub fn train(
    features: &DenseMatrix,
    labels: &[usize],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<TreeEnsemble> {
    train_with_history(features, labels, num_classes, config).map(|r| r.ensemble)
}

pub fn train_with_history(
    features: &DenseMatrix,
    labels: &[usize],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<TrainingRun> {
    if labels.len() != features.rows() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            found: labels.len(),
        });
    }
    if num_classes == 0 {
        return Err(Error::invalid("num_classes must be positive"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!("label {l} outside 0..{num_classes}")));
    }
    let mut targets = DenseMatrix::zeros(labels.len(), num_classes);
    for (i, &l) in labels.iter().enumerate() {
        targets.set(i, l, 1.0);
    }
    fit(features, &targets, config)
}

/// Single-output regression with the squared loss.
pub fn train_regression(features: &DenseMatrix, targets: &[f64], config: &TrainConfig) -> Result<TrainingRun> {
    if config.loss != Loss::SquaredOneHot {
        return Err(Error::invalid("regression requires the squared loss"));
    }
    let targets = DenseMatrix::new(targets.to_vec(), targets.len(), 1)?;
    fit(features, &targets, config)
}

fn fit(features: &DenseMatrix, targets: &DenseMatrix, config: &TrainConfig) -> Result<TrainingRun> {
    config.validate()?;
    let n = features.rows();
    let k = targets.cols();
    if n == 0 {
        return Err(Error::Empty("training set"));
    }
    if targets.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: targets.rows(),
        });
    }
    if features.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training features must be finite"));
    }

    let mut ensemble = TreeEnsemble::empty(config.clone(), k, features.cols());
    let mut scores = DenseMatrix::new(vec![ensemble.base_score; n * k], n, k)?;
    let presorted: Vec<Vec<usize>> = (0..features.cols())
        .map(|f| {
            let mut s: Vec<usize> = (0..n).collect();
            s.sort_by(|&a, &b| features.get(a, f).total_cmp(&features.get(b, f)));
            s
        })
        .collect();
    let params = config.split_params();
    let mut in_sample = vec![false; n];
    let mut history = vec![training_loss(&scores, targets, config.loss)];

    for round in 0..config.n_estimators {
        // Softmax gradients for a round are taken at the scores before any of
        // its trees are added.
        let probs = (config.loss == Loss::Softmax).then(|| {
            let rows: Vec<Vec<f64>> = scores.iter_rows().map(softmax).collect();
            DenseMatrix::from_rows(&rows).expect("uniform width")
        });
        for class in 0..k {
            let preds = match &probs {
                Some(p) => p.column(class),
                None => scores.column(class),
            };
            let gh = compute_grad_hess(&preds, &targets.column(class), config.loss)?;

            let sample = subsample_rows(n, config.subsample, config.seed, (round * k + class) as u64);
            in_sample.iter_mut().for_each(|s| *s = false);
            for &r in &sample {
                in_sample[r] = true;
            }
            let sorted = presorted
                .iter()
                .map(|list| list.iter().copied().filter(|&r| in_sample[r]).collect())
                .collect();
            let tree = build_tree_presorted(features, sorted, &gh, &params);

            for i in 0..n {
                let s = scores.get(i, class) + config.learning_rate * tree.predict(features.row(i));
                scores.set(i, class, s);
            }
            ensemble.push(class, tree)?;
        }
        history.push(training_loss(&scores, targets, config.loss));
    }
    Ok(TrainingRun {
        ensemble,
        loss_history: history,
    })
}

/// Sorted row indices for one tree. Rates below 1 draw
/// `round(rate · n)` rows without replacement from a ChaCha stream keyed by
/// `(seed, stream)`.
pub fn subsample_rows(n: usize, rate: f64, seed: u64, stream: u64) -> Vec<usize> {
    if rate >= 1.0 {
        return (0..n).collect();
    }
    let k = ((rate * n as f64).round() as usize).clamp(1, n.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut rows = rand::seq::index::sample(&mut rng, n, k).into_vec();
    rows.sort_unstable();
    rows
}

/// Mean per-instance loss.
pub fn training_loss(scores: &DenseMatrix, targets: &DenseMatrix, loss: Loss) -> f64 {
    let n = scores.rows().max(1) as f64;
    let total: f64 = match loss {
        Loss::SquaredOneHot => scores
            .as_slice()
            .iter()
            .zip(targets.as_slice())
            .map(|(s, y)| 0.5 * (s - y) * (s - y))
            .sum(),
        Loss::Softmax => scores
            .iter_rows()
            .zip(targets.iter_rows())
            .map(|(s, y)| {
                let p = softmax(s);
                -y.iter()
                    .zip(&p)
                    .filter(|(y, _)| **y > 0.0)
                    .map(|(y, p)| y * p.max(f64::MIN_POSITIVE).ln())
                    .sum::<f64>()
            })
            .sum(),
    };
    total / n
}
