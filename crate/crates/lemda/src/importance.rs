//! Feature-importance scoring over a trained forest.
//!
//! MDI sums each feature's weighted impurity decreases across all trees.
//! MDA permutes one validation column at a time and charges the feature the
//! mean rise in per-tree error rate. Both report a descending ordering with
//! index tie-break; MDA scores can go negative, MDI scores are normalized to
//! sum to one.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::forest::ForestModel;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ImportanceMethod {
    #[serde(rename = "MDI")]
    Mdi,
    #[serde(rename = "MDA")]
    Mda,
}

/// Per-feature importance scores plus the selection ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    pub feature_names: Vec<String>,
    /// Indexed like `feature_names`.
    pub scores: Vec<f64>,
    /// Feature indices sorted by descending score, ties toward the lower
    /// index.
    pub ordering: Vec<usize>,
    /// MDA config echo; `None` for MDI.
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
}

impl ImportanceReport {
    fn with_scores(
        method: ImportanceMethod,
        feature_names: Vec<String>,
        scores: Vec<f64>,
        repeats: Option<usize>,
        seed: Option<u64>,
    ) -> Self {
        let mut ordering: Vec<usize> = (0..scores.len()).collect();
        ordering.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ImportanceReport {
            method,
            feature_names,
            scores,
            ordering,
            repeats,
            seed,
        }
    }

    /// JSON view: method, per-feature name/score pairs, and the ordering as
    /// feature names.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "features": self
                .feature_names
                .iter()
                .zip(&self.scores)
                .map(|(name, score)| serde_json::json!({ "name": name, "score": score }))
                .collect::<Vec<_>>(),
            "ordering": self
                .ordering
                .iter()
                .map(|&i| self.feature_names[i].clone())
                .collect::<Vec<_>>(),
            "repeats": self.repeats,
            "seed": self.seed,
        })
    }
}

/// Mean decrease in impurity: per feature, the sum over its split nodes of
/// node-weight x decrease, averaged over trees and normalized to sum to 1.
pub fn mdi_scores(m: &ForestModel) -> ImportanceReport {
    let n_features = m.n_features();
    let mut totals = vec![0.0; n_features];
    for tree in &m.trees {
        for node in &tree.nodes {
            if let crate::forest::Node::Split {
                rule,
                decrease,
                weight,
                ..
            } = node
            {
                totals[rule.feature()] += weight * decrease;
            }
        }
    }
    for t in &mut totals {
        *t /= m.trees.len() as f64;
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        for t in &mut totals {
            *t /= sum;
        }
    }
    ImportanceReport::with_scores(
        ImportanceMethod::Mdi,
        m.features.iter().map(|f| f.name.clone()).collect(),
        totals,
        None,
        None,
    )
}

/// Mean decrease in accuracy (permutation importance).
///
/// For tree `j` and feature `f`, `sb_jf` is the tree's error rate on the
/// untouched validation set and `sa_jf` the mean error rate over
/// `repeats` independent within-column permutations of `f`; the feature's
/// score is the mean of `sa_jf - sb_jf` over trees. Each permutation draws
/// its RNG stream from `(seed, feature, tree, repeat)`, so results do not
/// depend on scheduling.
pub fn mda_scores(
    m: &ForestModel,
    validation: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if validation.n_rows() == 0 {
        return Err(Error::Argument("empty validation set".into()));
    }
    if repeats == 0 {
        return Err(Error::Argument("repeats must be at least 1".into()));
    }
    let view = m.feature_view(validation)?;
    let labels = validation.labels();
    let rows = validation.n_rows();
    let n_features = m.n_features();

    let per_tree: Vec<Vec<f64>> = m
        .trees
        .par_iter()
        .enumerate()
        .map(|(j, tree)| {
            let baseline_errors = (0..rows)
                .filter(|&r| tree.predict_row(&view, r) != labels[r])
                .count();
            let sb = baseline_errors as f64 / rows as f64;
            let used = tree.used_features();

            let mut deltas = vec![0.0; n_features];
            for f in 0..n_features {
                // A feature no split ever tests cannot change a prediction:
                // its score term is exactly zero, no permutation needed.
                if !used.contains(&f) {
                    continue;
                }
                let mut sa_sum = 0.0;
                for r in 0..repeats {
                    let mut perm: Vec<usize> = (0..rows).collect();
                    let mut stream =
                        rng::stream(seed, &[rng::MDA, f as u64, j as u64, r as u64]);
                    perm.shuffle(&mut stream);
                    let errors = (0..rows)
                        .filter(|&row| {
                            tree.predict_row_permuted(&view, row, f, perm[row]) != labels[row]
                        })
                        .count();
                    sa_sum += errors as f64 / rows as f64;
                }
                deltas[f] = sa_sum / repeats as f64 - sb;
            }
            deltas
        })
        .collect();

    let mut scores = vec![0.0; n_features];
    for deltas in &per_tree {
        for (s, d) in scores.iter_mut().zip(deltas) {
            *s += d;
        }
    }
    for s in &mut scores {
        *s /= m.trees.len() as f64;
    }

    Ok(ImportanceReport::with_scores(
        ImportanceMethod::Mda,
        m.features.iter().map(|f| f.name.clone()).collect(),
        scores,
        Some(repeats),
        Some(seed),
    ))
}

/// First `k` entries of the report's ordering; entry 0 is the most
/// informative feature.
pub fn select_top_k(r: &ImportanceReport, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > r.ordering.len() {
        return Err(Error::Argument(format!(
            "k = {k} outside 1..={}",
            r.ordering.len()
        )));
    }
    Ok(r.ordering[..k].to_vec())
}
