//! From-scratch CART decision trees and a bagged random forest for binary
//! classification.
//!
//! Numeric features split at midpoints between consecutive distinct values;
//! categorical features split one-code-vs-rest. Ties are broken toward the
//! lowest feature index, then the lowest threshold or code, so training is
//! fully deterministic. Each tree draws its own RNG stream from
//! `(seed, tree index)`, which makes parallel and serial training produce
//! identical models.

mod split;
mod tree;

pub use split::{best_split, gini, impurity_decrease, ClassCounts, SplitCandidate, SplitRule};
pub use tree::{train_tree, Node, TreeConfig, TreeModel};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::rng;
use crate::{Error, Result};

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    /// Every feature (plain decision tree).
    All,
    /// `ceil(sqrt(n_features))`, the usual forest default.
    Sqrt,
    /// A fixed count, clamped to the feature count.
    Fixed(usize),
}

impl FeatureSubsample {
    fn resolve(&self, n_features: usize) -> Option<usize> {
        match self {
            FeatureSubsample::All => None,
            FeatureSubsample::Sqrt => Some((n_features as f64).sqrt().ceil() as usize),
            FeatureSubsample::Fixed(m) => Some((*m).clamp(1, n_features)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Draw each tree's sample with replacement (size = rows). Disabled,
    /// every tree sees the full data and records no out-of-bag rows.
    pub bootstrap: bool,
    pub subsample: FeatureSubsample,
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            bootstrap: true,
            subsample: FeatureSubsample::Sqrt,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl ForestConfig {
    /// Single fully-grown tree on the full data: the plain decision tree
    /// used as the DT evaluation model.
    pub fn single_tree() -> Self {
        ForestConfig {
            n_trees: 1,
            bootstrap: false,
            subsample: FeatureSubsample::All,
            ..Default::default()
        }
    }
}

/// Name and split behavior of one training feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub categorical: bool,
}

/// Read-only view of a dataset's feature columns in a model's training
/// order. Built through [`ForestModel::feature_view`], which checks that
/// the dataset matches the training schema.
pub struct FeatureView<'a> {
    columns: Vec<&'a Column>,
}

impl<'a> FeatureView<'a> {
    pub(crate) fn new(columns: Vec<&'a Column>) -> Self {
        FeatureView { columns }
    }

    pub fn from_dataset(d: &'a Dataset) -> Self {
        FeatureView {
            columns: d.feature_columns(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, feature: usize) -> &'a Column {
        self.columns[feature]
    }

    #[inline]
    pub fn value(&self, feature: usize, row: usize) -> f64 {
        self.columns[feature].value(row)
    }

    #[inline]
    pub fn code(&self, feature: usize, row: usize) -> u32 {
        match self.columns[feature].code_slice() {
            Some(codes) => codes[row],
            None => self.columns[feature].value(row) as u32,
        }
    }
}

/// Bagged ensemble of CART trees with per-tree out-of-bag row sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub seed: u64,
    pub features: Vec<FeatureInfo>,
    pub trees: Vec<TreeModel>,
}

/// Train a forest of `cfg.n_trees` trees, deterministic under `seed`.
pub fn train_forest(d: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<ForestModel> {
    if cfg.n_trees == 0 {
        return Err(Error::Argument("a forest needs at least one tree".into()));
    }
    if !d.is_encoded() {
        return Err(Error::Argument(
            "dataset holds raw string columns; call encode_categories first".into(),
        ));
    }
    let rows = d.n_rows();
    if rows < 2 {
        return Err(Error::Training(format!(
            "need at least 2 training rows, got {rows}"
        )));
    }
    let attacks = d.attack_count();
    if attacks == 0 || attacks == rows {
        return Err(Error::Training(
            "training data contains a single class".into(),
        ));
    }
    let features = d.feature_columns();
    if features.is_empty() {
        return Err(Error::Training("no feature columns to train on".into()));
    }

    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        split_features: cfg.subsample.resolve(features.len()),
    };

    let trees: Vec<TreeModel> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut tree_rng = rng::stream(seed, &[rng::TREE, t as u64]);
            let (sample, oob) = if cfg.bootstrap {
                bootstrap_sample(rows, &mut tree_rng)
            } else {
                ((0..rows).collect(), Vec::new())
            };
            train_tree_with_oob(d, &sample, oob, &tree_cfg, &mut tree_rng)
        })
        .collect::<Result<_>>()?;

    Ok(ForestModel {
        config: cfg.clone(),
        seed,
        features: features
            .iter()
            .map(|c| FeatureInfo {
                name: c.name.clone(),
                categorical: c.is_categorical(),
            })
            .collect(),
        trees,
    })
}

fn bootstrap_sample(rows: usize, rng: &mut impl rand::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut drawn = vec![false; rows];
    let mut sample = Vec::with_capacity(rows);
    for _ in 0..rows {
        let r = rng.gen_range(0..rows);
        drawn[r] = true;
        sample.push(r);
    }
    let oob = (0..rows).filter(|&r| !drawn[r]).collect();
    (sample, oob)
}

fn train_tree_with_oob(
    d: &Dataset,
    rows: &[usize],
    oob: Vec<usize>,
    cfg: &TreeConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<TreeModel> {
    let mut tree = train_tree(d, rows, cfg, rng)?;
    tree.oob_rows = oob;
    Ok(tree)
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Validate `d` against the training schema and expose its feature
    /// columns in training order.
    pub fn feature_view<'a>(&self, d: &'a Dataset) -> Result<FeatureView<'a>> {
        let columns = d.feature_columns();
        if columns.len() != self.features.len() {
            return Err(Error::Argument(format!(
                "dataset has {} feature columns, model was trained on {}",
                columns.len(),
                self.features.len()
            )));
        }
        for (col, info) in columns.iter().zip(&self.features) {
            if col.name != info.name || col.is_categorical() != info.categorical {
                return Err(Error::Argument(format!(
                    "feature mismatch: dataset has `{}`, model expects `{}`",
                    col.name, info.name
                )));
            }
        }
        Ok(FeatureView::new(columns))
    }

    /// Per-row majority vote over all trees; ties vote attack.
    pub fn predict(&self, d: &Dataset) -> Result<Vec<u8>> {
        let view = self.feature_view(d)?;
        Ok((0..d.n_rows())
            .map(|row| self.predict_row(&view, row))
            .collect())
    }

    pub fn predict_row(&self, view: &FeatureView, row: usize) -> u8 {
        let attack_votes = self
            .trees
            .iter()
            .filter(|t| t.predict_row(view, row) == 1)
            .count();
        u8::from(2 * attack_votes >= self.trees.len())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = serde_json::json!({
            "format": FOREST_FORMAT,
            "model": self,
        });
        std::fs::write(path, serde_json::to_string(&doc)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ForestModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: serde_json::Value = serde_json::from_str(&text)?;
        let format = doc.get("format").and_then(|f| f.as_str()).unwrap_or("");
        if format != FOREST_FORMAT {
            return Err(Error::Schema(format!(
                "unsupported forest format `{format}`, expected `{FOREST_FORMAT}`"
            )));
        }
        Ok(serde_json::from_value(doc["model"].clone())?)
    }
}

const FOREST_FORMAT: &str = "lemda-forest-v1";
