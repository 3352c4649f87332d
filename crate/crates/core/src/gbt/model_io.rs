//! Line-oriented text serialization for [`TreeEnsemble`].
//!
//! ```text
//! timbre-gbt-model 1
//! num_classes 8
//! num_features 36
//! base_score 0
//! learning_rate 0.05
//! ...remaining config keys...
//! trees 800
//! tree 0 class 0
//! split 3 0.4125
//! leaf -0.25
//! leaf 0.5
//! end
//! ```
//!
//! Trees are listed in preorder. Floats use Rust's shortest round-trip
//! formatting, so a save/load cycle reproduces every score bit for bit.

use std::path::Path;

use super::ensemble::{TrainConfig, TreeEnsemble};
use super::objective::Loss;
use super::tree::TreeNode;
use crate::error::{Error, Result};

const MAGIC: &str = "timbre-gbt-model";
const VERSION: u32 = 1;

impl TreeEnsemble {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("{MAGIC} {VERSION}"));
        line(format!("num_classes {}", self.num_classes));
        line(format!("num_features {}", self.num_features));
        line(format!("base_score {}", self.base_score));
        for (k, v) in self.config.echo() {
            line(format!("{k} {v}"));
        }
        line(format!("trees {}", self.trees.len()));
        for (i, t) in self.trees.iter().enumerate() {
            line(format!("tree {i} class {}", t.class));
            t.tree.walk(&mut |node| match node {
                TreeNode::Leaf { weight } => line(format!("leaf {weight}")),
                TreeNode::Split {
                    feature, threshold, ..
                } => line(format!("split {feature} {threshold}")),
            });
        }
        line("end".into());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let header = lines.next_tokens()?;
        match header.as_slice() {
            [magic, version] if *magic == MAGIC => {
                if parse::<u32>(version, "version")? != VERSION {
                    return Err(Error::Parse(format!("unsupported model version {version}")));
                }
            }
            _ => return Err(Error::Parse("not a model file".into())),
        }
        let num_classes: usize = lines.field("num_classes")?;
        let num_features: usize = lines.field("num_features")?;
        let base_score: f64 = lines.field("base_score")?;
        let config = TrainConfig {
            learning_rate: lines.field("learning_rate")?,
            n_estimators: lines.field("n_estimators")?,
            max_depth: lines.field("max_depth")?,
            min_child_weight: lines.field("min_child_weight")?,
            subsample: lines.field("subsample")?,
            lambda_l2: lines.field("lambda_l2")?,
            gamma_leaf: lines.field("gamma_leaf")?,
            loss: Loss::parse(&lines.field::<String>("loss")?)?,
            seed: lines.field("seed")?,
        };
        let count: usize = lines.field("trees")?;
        let mut ensemble = TreeEnsemble {
            config,
            num_classes,
            num_features,
            base_score,
            trees: Vec::with_capacity(count),
        };
        for i in 0..count {
            let t = lines.next_tokens()?;
            let class = match t.as_slice() {
                ["tree", idx, "class", class] if parse::<usize>(idx, "tree index")? == i => {
                    parse::<usize>(class, "class")?
                }
                _ => return Err(lines.error("expected tree header")),
            };
            let tree = read_node(&mut lines)?;
            ensemble.push(class, tree)?;
        }
        if lines.next_tokens()? != ["end"] {
            return Err(lines.error("expected end"));
        }
        Ok(ensemble)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn read_node(lines: &mut Lines<'_>) -> Result<TreeNode> {
    let t = lines.next_tokens()?;
    match t.as_slice() {
        ["leaf", w] => Ok(TreeNode::leaf(parse(w, "leaf weight")?)),
        ["split", f, thr] => {
            let feature = parse(f, "feature")?;
            let threshold = parse(thr, "threshold")?;
            let left = read_node(lines)?;
            let right = read_node(lines)?;
            Ok(TreeNode::split(feature, threshold, left, right))
        }
        _ => Err(lines.error("expected leaf or split")),
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line_no = i + 1;
            let tokens: Vec<&str> = l.split_whitespace().collect();
            if !tokens.is_empty() {
                return Ok(tokens);
            }
        }
        Err(Error::Parse("unexpected end of model file".into()))
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        match self.next_tokens()?.as_slice() {
            [k, v] if *k == key => parse(v, key),
            _ => Err(self.error(&format!("expected {key}"))),
        }
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("line {}: {msg}", self.line_no))
    }
}
