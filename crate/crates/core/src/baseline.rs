//! A small random-forest soft classifier and the fixed dataset split.
//!
//! The toolkit is classifier-agnostic; this forest exists so the synthetic
//! pipeline runs end-to-end without external ML dependencies.  Categorical
//! features are one-hot encoded and trees are grown by CART with Gini
//! impurity, bootstrap resampling, and per-split feature subsampling.
//! Soft predictions average per-tree leaf class frequencies, because the
//! rest of the pipeline consumes label distributions rather than votes.

use crate::dataset::{
    DataError, Dataset, FeatureKind, FeatureSchema, FeatureValue, LabelSpace,
};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

pub const MODEL_FORMAT: &str = "fairpost-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("tree_count must be at least 1")]
    NoTrees,
    #[error("max_depth must be at least 1")]
    ZeroDepth,
    #[error("min_leaf must be at least 1")]
    ZeroMinLeaf,
    #[error("cannot exclude unknown feature `{0}`")]
    UnknownExcludedFeature(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("input does not match the model schema: {0}")]
    SchemaMismatch(String),
    #[error("not a recognized model file: {0}")]
    Format(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("model (de)serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shuffles by seed and cuts 20% / 16% / 64% (train, validation, test).
/// Sizes round down, with the remainder going to the test split.
pub fn split_dataset(
    d: &Dataset,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DataError> {
    if d.len() < 10 {
        return Err(DataError::TooSmallToSplit(d.len()));
    }
    let mut idx: Vec<usize> = (0..d.len()).collect();
    Rng::new(seed).shuffle(&mut idx);
    let n_train = d.len() * 20 / 100;
    let n_val = d.len() * 16 / 100;
    Ok((
        d.subset(&idx[..n_train]),
        d.subset(&idx[n_train..n_train + n_val]),
        d.subset(&idx[n_train + n_val..]),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
    /// Schema features withheld from training, e.g. the group indicator.
    /// Empty by default: the baseline deliberately sees everything.
    pub exclude_features: BTreeSet<String>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            tree_count: 100,
            max_depth: 10,
            min_leaf: 5,
            seed: 0,
            exclude_features: BTreeSet::new(),
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.tree_count == 0 {
            return Err(ModelError::NoTrees);
        }
        if self.max_depth == 0 {
            return Err(ModelError::ZeroDepth);
        }
        if self.min_leaf == 0 {
            return Err(ModelError::ZeroMinLeaf);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        probs: Vec<f64>,
    },
    /// Samples with encoded value <= threshold go left.
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    /// Index 0 is the root.
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf_probs(&self, encoded: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { probs } => return probs,
                Node::Split { column, threshold, left, right } => {
                    at = if encoded[*column] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    format: String,
    version: u32,
    label_space: LabelSpace,
    schema: FeatureSchema,
    /// Schema feature indices used for training, ascending.
    included: Vec<usize>,
    trees: Vec<Tree>,
}

/// Width of the one-hot encoding over the included features.
fn encoded_width(schema: &FeatureSchema, included: &[usize]) -> usize {
    included
        .iter()
        .map(|&i| match schema.kind(i) {
            FeatureKind::Numeric => 1,
            FeatureKind::Categorical(cats) => cats.len(),
        })
        .sum()
}

fn encode_into(
    schema: &FeatureSchema,
    included: &[usize],
    features: &[FeatureValue],
    out: &mut Vec<f64>,
) {
    out.clear();
    for &i in included {
        match (schema.kind(i), &features[i]) {
            (FeatureKind::Numeric, FeatureValue::Numeric(v)) => out.push(*v),
            (FeatureKind::Categorical(cats), FeatureValue::Categorical(c)) => {
                for k in 0..cats.len() {
                    out.push(if k == *c { 1.0 } else { 0.0 });
                }
            }
            _ => unreachable!("dataset construction validates feature kinds"),
        }
    }
}

pub fn train_forest(train: &Dataset, cfg: &ForestConfig) -> Result<ForestModel, ModelError> {
    cfg.validate()?;
    let schema = train.schema();
    for name in &cfg.exclude_features {
        if schema.index_of(name).is_none() {
            return Err(ModelError::UnknownExcludedFeature(name.clone()));
        }
    }
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let included: Vec<usize> = (0..schema.len())
        .filter(|&i| !cfg.exclude_features.contains(schema.name(i)))
        .collect();
    let width = encoded_width(schema, &included);
    let labels = train.label_space().len();

    let n = train.len();
    let mut rows = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(width);
    for s in train.samples() {
        encode_into(schema, &included, &s.features, &mut buf);
        rows.push(buf.clone());
    }
    let ys: Vec<usize> = train.samples().iter().map(|s| s.y).collect();

    // Bootstrap positions index this content order, not the input order,
    // so training is invariant to sample permutation for a fixed seed.
    let mut canon: Vec<usize> = (0..n).collect();
    canon.sort_by(|&a, &b| {
        let by_content = rows[a]
            .iter()
            .zip(&rows[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal);
        by_content
            .then(ys[a].cmp(&ys[b]))
            .then(train.samples()[a].z.cmp(&train.samples()[b].z))
    });

    if ys.iter().all(|&y| y == ys[0]) {
        log::warn!("training set has a single class; the model will be constant");
    }

    // Per-split subsampling works on schema features, not encoded columns:
    // a 16-category one-hot block counts once, so wide categoricals do not
    // crowd out the numeric features.
    let mut feature_columns = Vec::with_capacity(included.len());
    let mut at = 0;
    for &i in &included {
        let span = match schema.kind(i) {
            FeatureKind::Numeric => 1,
            FeatureKind::Categorical(cats) => cats.len(),
        };
        feature_columns.push(at..at + span);
        at += span;
    }
    let mtry = ((included.len() as f64).sqrt().floor() as usize).max(1);
    let root_rng = Rng::new(cfg.seed);
    let mut trees = Vec::with_capacity(cfg.tree_count);
    for t in 0..cfg.tree_count {
        let mut rng = root_rng.derive(t as u64 + 1);
        let sample: Vec<usize> = (0..n).map(|_| canon[rng.next_index(n)]).collect();
        let mut builder = TreeBuilder {
            rows: &rows,
            ys: &ys,
            labels,
            feature_columns: &feature_columns,
            mtry,
            cfg,
            rng: &mut rng,
            nodes: Vec::new(),
        };
        builder.build(sample, 0);
        trees.push(Tree { nodes: builder.nodes });
    }

    Ok(ForestModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        label_space: train.label_space().clone(),
        schema: schema.clone(),
        included,
        trees,
    })
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<f64>],
    ys: &'a [usize],
    labels: usize,
    /// Encoded column range of each candidate feature.
    feature_columns: &'a [std::ops::Range<usize>],
    mtry: usize,
    cfg: &'a ForestConfig,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.labels];
        for &i in idx {
            counts[self.ys[i]] += 1;
        }
        counts
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.cfg.max_depth
            || pure
            || idx.len() < 2 * self.cfg.min_leaf
            || self.feature_columns.is_empty()
        {
            return self.push_leaf(&counts, idx.len());
        }
        match self.best_split(&idx, &counts) {
            None => self.push_leaf(&counts, idx.len()),
            Some((column, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.rows[i][column] <= threshold);
                let at = self.nodes.len();
                self.nodes.push(Node::Leaf { probs: Vec::new() }); // placeholder
                let left = self.build(left_idx, depth + 1);
                let right = self.build(right_idx, depth + 1);
                self.nodes[at] = Node::Split { column, threshold, left, right };
                at
            }
        }
    }

    fn push_leaf(&mut self, counts: &[usize], total: usize) -> usize {
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        self.nodes.push(Node::Leaf { probs });
        self.nodes.len() - 1
    }

    /// Partial Fisher-Yates draw of `mtry` distinct features, expanded to
    /// their encoded columns.
    fn sample_columns(&mut self) -> Vec<usize> {
        let total = self.feature_columns.len();
        let mut feats: Vec<usize> = (0..total).collect();
        let take = self.mtry.min(total);
        for i in 0..take {
            let j = i + self.rng.next_index(total - i);
            feats.swap(i, j);
        }
        feats.truncate(take);
        feats.sort_unstable();
        feats
            .into_iter()
            .flat_map(|f| self.feature_columns[f].clone())
            .collect()
    }

    fn best_split(&mut self, idx: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
        let total = idx.len();
        let parent = gini(counts, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let candidates = self.sample_columns();
        let mut sorted = idx.to_vec();
        for column in candidates {
            sorted.sort_by(|&a, &b| self.rows[a][column].total_cmp(&self.rows[b][column]));
            let mut left = vec![0usize; self.labels];
            let mut right = counts.to_vec();
            for cut in 1..total {
                let moved = sorted[cut - 1];
                left[self.ys[moved]] += 1;
                right[self.ys[moved]] -= 1;
                let lo = self.rows[moved][column];
                let hi = self.rows[sorted[cut]][column];
                if lo == hi || cut < self.cfg.min_leaf || total - cut < self.cfg.min_leaf {
                    continue;
                }
                let score = (cut as f64 * gini(&left, cut)
                    + (total - cut) as f64 * gini(&right, total - cut))
                    / total as f64;
                if best.is_none_or(|(b, _, _)| score < b) {
                    best = Some((score, column, lo + (hi - lo) / 2.0));
                }
            }
        }
        // Splitting must strictly reduce impurity; otherwise stay a leaf.
        best.filter(|&(score, _, _)| score < parent - 1e-12).map(|(_, c, t)| (c, t))
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

impl ForestModel {
    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Mean of per-tree leaf class frequencies; a valid distribution.
    pub fn predict_soft(&self, features: &[FeatureValue]) -> Result<Vec<f64>, ModelError> {
        if features.len() != self.schema.len() {
            return Err(ModelError::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.schema.len(),
                features.len()
            )));
        }
        for (i, value) in features.iter().enumerate() {
            let ok = match (self.schema.kind(i), value) {
                (FeatureKind::Numeric, FeatureValue::Numeric(v)) => v.is_finite(),
                (FeatureKind::Categorical(cats), FeatureValue::Categorical(c)) => {
                    c < &cats.len()
                }
                _ => false,
            };
            if !ok {
                return Err(ModelError::SchemaMismatch(format!(
                    "feature `{}` has the wrong kind or an invalid value",
                    self.schema.name(i)
                )));
            }
        }
        let mut encoded = Vec::new();
        encode_into(&self.schema, &self.included, features, &mut encoded);
        let mut mean = vec![0.0; self.label_space.len()];
        for tree in &self.trees {
            for (m, p) in mean.iter_mut().zip(tree.leaf_probs(&encoded)) {
                *m += p;
            }
        }
        let scale = 1.0 / self.trees.len() as f64;
        for m in &mut mean {
            *m *= scale;
        }
        Ok(mean)
    }

    /// Returns a copy of `d` with `p_hat` filled in for every sample.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Dataset, ModelError> {
        if d.schema() != &self.schema || d.label_space() != &self.label_space {
            return Err(ModelError::SchemaMismatch(
                "dataset schema or label space differs from the model's".into(),
            ));
        }
        let mut predictions = Vec::with_capacity(d.len());
        for s in d.samples() {
            predictions.push(self.predict_soft(&s.features)?);
        }
        Ok(d.with_predictions(predictions)?)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let mut model: ForestModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("format `{}`", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("unsupported version {}", model.version)));
        }
        model.schema.rebuild_index();
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Mean probability assigned to the true label; the soft analogue of
/// accuracy for a classifier attached to `d`.
pub fn soft_accuracy(d: &Dataset) -> Option<f64> {
    if d.is_empty() || !d.has_predictions() {
        return None;
    }
    let total: f64 = d
        .samples()
        .iter()
        .map(|s| s.p_hat.as_ref().expect("checked above")[s.y])
        .sum();
    Some(total / d.len() as f64)
}
