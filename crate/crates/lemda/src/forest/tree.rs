//! Greedy CART tree growth.
//!
//! Each node keeps its rows presorted per numeric feature; children inherit
//! order by stable partition, so no per-node sorting happens after the one
//! sort at the root. Split scores go through the same impurity functions as
//! [`best_split`](super::best_split), keeping both search paths bit-identical.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

use super::split::{impurity_decrease, ClassCounts, SplitCandidate, SplitRule, GAIN_EPS};
use super::FeatureView;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
    /// Features sampled per split; `None` considers every feature.
    pub split_features: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
            split_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: u8,
    },
    Split {
        #[serde(flatten)]
        rule: SplitRule,
        /// Impurity decrease achieved here, recorded for MDI.
        decrease: f64,
        /// Node samples as a fraction of the tree's root samples.
        weight: f64,
        left: usize,
        right: usize,
    },
}

/// One grown tree: nodes in a flat arena (root at 0), plus the rows the
/// bootstrap never drew.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub oob_rows: Vec<usize>,
}

impl TreeModel {
    pub fn predict_row(&self, view: &FeatureView, row: usize) -> u8 {
        self.predict_row_permuted(view, row, usize::MAX, row)
    }

    /// Predict `row` as if feature `permuted`'s column value came from
    /// `source_row`. Lets permutation importance re-route one feature
    /// without materializing a shuffled dataset.
    pub fn predict_row_permuted(
        &self,
        view: &FeatureView,
        row: usize,
        permuted: usize,
        source_row: usize,
    ) -> u8 {
        let mut index = 0;
        loop {
            match &self.nodes[index] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    rule, left, right, ..
                } => {
                    let lookup_row = if rule.feature() == permuted { source_row } else { row };
                    index = if rule.goes_left(view, lookup_row) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Column indices tested by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { rule, .. } => Some(rule.feature()),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub fn depth(&self) -> u32 {
        // Iterative: fully grown trees can be deeper than the stack.
        let mut depths = vec![0u32; self.nodes.len()];
        let mut max = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            let d = depths[i];
            if let Node::Split { left, right, .. } = node {
                depths[*left] = d + 1;
                depths[*right] = d + 1;
                max = max.max(d + 1);
            }
        }
        max
    }
}

/// Per-feature cell access used during growth: raw numeric values or codes.
enum GrowColumn<'a> {
    Numeric(&'a [f64]),
    Codes { codes: &'a [u32], n_codes: usize },
}

impl GrowColumn<'_> {
    #[inline]
    fn value(&self, row: u32) -> f64 {
        match self {
            GrowColumn::Numeric(v) => v[row as usize],
            GrowColumn::Codes { codes, .. } => codes[row as usize] as f64,
        }
    }
}

/// Shared working storage: one array per feature holding the root's rows,
/// presorted for numeric features. A node owns the half-open range
/// `[start, end)` of every array; partitioning reorders in place through
/// `scratch`, so growth allocates nothing per node.
struct Arena {
    arrays: Vec<Vec<u32>>,
    scratch: Vec<u32>,
}

struct Grower<'a> {
    columns: Vec<GrowColumn<'a>>,
    labels: &'a [u8],
    root_total: f64,
    nodes: Vec<Node>,
}

/// Grow a tree on the given rows by greedy impurity-decrease search,
/// stopping at purity, `min_samples_split`, or `max_depth`. Zero-gain
/// splits are still taken on impure nodes (the library defaults this
/// mirrors accept them; XOR-style nodes need them).
pub fn train_tree(
    d: &Dataset,
    rows: &[usize],
    cfg: &TreeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TreeModel> {
    if rows.is_empty() {
        return Err(Error::Argument("cannot grow a tree on zero rows".into()));
    }
    if !d.is_encoded() {
        return Err(Error::Argument(
            "dataset holds raw string columns; call encode_categories first".into(),
        ));
    }

    let feature_columns = d.feature_columns();
    if feature_columns.is_empty() {
        return Err(Error::Training("no feature columns to train on".into()));
    }
    let columns: Vec<GrowColumn> = feature_columns
        .iter()
        .map(|c| match c.numeric_slice() {
            Some(values) => GrowColumn::Numeric(values),
            None => {
                let codes = c.code_slice().expect("encoded categorical column");
                GrowColumn::Codes {
                    codes,
                    n_codes: c.code_table().map(|t| t.len()).unwrap_or(0),
                }
            }
        })
        .collect();

    // One sort per feature at the root; children inherit order.
    let mut arena = Arena {
        arrays: columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
                if let GrowColumn::Numeric(values) = col {
                    idx.sort_unstable_by(|&a, &b| {
                        values[a as usize].total_cmp(&values[b as usize])
                    });
                }
                idx
            })
            .collect(),
        scratch: vec![0; rows.len()],
    };

    let mut grower = Grower {
        columns,
        labels: d.labels(),
        root_total: rows.len() as f64,
        nodes: vec![Node::Leaf { class: 0 }],
    };
    let n_features = grower.columns.len();

    let mut pending: Vec<(usize, usize, usize, u32)> = vec![(0, 0, rows.len(), 0)];
    while let Some((slot, start, end, depth)) = pending.pop() {
        let counts = grower.count(&arena, start, end);
        let stop = counts.normal == 0
            || counts.attack == 0
            || end - start < cfg.min_samples_split
            || cfg.max_depth.is_some_and(|limit| depth >= limit);

        let candidate = if stop {
            None
        } else {
            let chosen: Vec<usize> = match cfg.split_features {
                Some(m) if m < n_features => {
                    let mut chosen = sample(rng, n_features, m).into_vec();
                    chosen.sort_unstable();
                    chosen
                }
                _ => (0..n_features).collect(),
            };
            grower.best_split(&arena, start, end, &counts, &chosen)
        };

        match candidate {
            None => {
                grower.nodes[slot] = Node::Leaf {
                    class: counts.majority(),
                };
            }
            Some(split) => {
                let mid = grower.partition(&mut arena, start, end, &split.rule);
                let left_slot = grower.nodes.len();
                grower.nodes.push(Node::Leaf { class: 0 });
                let right_slot = grower.nodes.len();
                grower.nodes.push(Node::Leaf { class: 0 });
                grower.nodes[slot] = Node::Split {
                    rule: split.rule,
                    decrease: split.decrease,
                    weight: (end - start) as f64 / grower.root_total,
                    left: left_slot,
                    right: right_slot,
                };
                pending.push((right_slot, mid, end, depth + 1));
                pending.push((left_slot, start, mid, depth + 1));
            }
        }
    }

    Ok(TreeModel {
        nodes: grower.nodes,
        oob_rows: Vec::new(),
    })
}

impl Grower<'_> {
    fn count(&self, arena: &Arena, start: usize, end: usize) -> ClassCounts {
        let attack = arena.arrays[0][start..end]
            .iter()
            .filter(|&&r| self.labels[r as usize] == 1)
            .count();
        ClassCounts::new(end - start - attack, attack)
    }

    /// Best candidate over the chosen features, with the fallback to the
    /// first zero-gain split when nothing has positive gain.
    fn best_split(
        &self,
        arena: &Arena,
        start: usize,
        end: usize,
        parent: &ClassCounts,
        chosen: &[usize],
    ) -> Option<SplitCandidate> {
        let mut best: Option<SplitCandidate> = None;
        let mut fallback: Option<SplitCandidate> = None;
        for &feature in chosen {
            match &self.columns[feature] {
                GrowColumn::Numeric(values) => self.numeric_sweep(
                    &arena.arrays[feature][start..end],
                    values,
                    feature,
                    parent,
                    &mut best,
                    &mut fallback,
                ),
                GrowColumn::Codes { codes, n_codes } => self.categorical_sweep(
                    &arena.arrays[feature][start..end],
                    codes,
                    *n_codes,
                    feature,
                    parent,
                    &mut best,
                    &mut fallback,
                ),
            }
        }
        best.or(fallback)
    }

    fn numeric_sweep(
        &self,
        sorted_rows: &[u32],
        values: &[f64],
        feature: usize,
        parent: &ClassCounts,
        best: &mut Option<SplitCandidate>,
        fallback: &mut Option<SplitCandidate>,
    ) {
        let mut left = ClassCounts::new(0, 0);
        for i in 0..sorted_rows.len() - 1 {
            let row = sorted_rows[i] as usize;
            if self.labels[row] == 1 {
                left.attack += 1;
            } else {
                left.normal += 1;
            }
            let value = values[row];
            let next = values[sorted_rows[i + 1] as usize];
            if value == next {
                continue;
            }
            let right = ClassCounts::new(parent.normal - left.normal, parent.attack - left.attack);
            let decrease =
                impurity_decrease(parent, &left, &right).expect("sweep counts partition parent");
            let candidate = || SplitCandidate {
                rule: SplitRule::Threshold {
                    feature,
                    threshold: 0.5 * (value + next),
                },
                left,
                right,
                decrease,
            };
            if decrease > GAIN_EPS && best.as_ref().map_or(true, |b| decrease > b.decrease) {
                *best = Some(candidate());
            } else if fallback.is_none() {
                *fallback = Some(candidate());
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn categorical_sweep(
        &self,
        rows: &[u32],
        codes: &[u32],
        n_codes: usize,
        feature: usize,
        parent: &ClassCounts,
        best: &mut Option<SplitCandidate>,
        fallback: &mut Option<SplitCandidate>,
    ) {
        let width = n_codes.max(
            rows.iter()
                .map(|&r| codes[r as usize] as usize + 1)
                .max()
                .unwrap_or(0),
        );
        let mut per_code = vec![ClassCounts::new(0, 0); width];
        for &r in rows {
            let slot = &mut per_code[codes[r as usize] as usize];
            if self.labels[r as usize] == 1 {
                slot.attack += 1;
            } else {
                slot.normal += 1;
            }
        }
        for (code, left) in per_code.iter().enumerate() {
            if left.total() == 0 || left.total() == parent.total() {
                continue;
            }
            let right = ClassCounts::new(parent.normal - left.normal, parent.attack - left.attack);
            let decrease =
                impurity_decrease(parent, left, &right).expect("code counts partition parent");
            let candidate = || SplitCandidate {
                rule: SplitRule::Category {
                    feature,
                    code: code as u32,
                },
                left: *left,
                right,
                decrease,
            };
            if decrease > GAIN_EPS && best.as_ref().map_or(true, |b| decrease > b.decrease) {
                *best = Some(candidate());
            } else if fallback.is_none() {
                *fallback = Some(candidate());
            }
        }
    }

    /// Stable in-place partition of every feature array's `[start, end)`
    /// range, preserving per-feature sort order. Returns the boundary.
    fn partition(&self, arena: &mut Arena, start: usize, end: usize, rule: &SplitRule) -> usize {
        let feature = rule.feature();
        let goes_left = |row: u32| -> bool {
            match *rule {
                SplitRule::Threshold { threshold, .. } => {
                    self.columns[feature].value(row) <= threshold
                }
                SplitRule::Category { code, .. } => match &self.columns[feature] {
                    GrowColumn::Codes { codes, .. } => codes[row as usize] == code,
                    GrowColumn::Numeric(values) => values[row as usize] as u32 == code,
                },
            }
        };
        let mut mid = start;
        for array in &mut arena.arrays {
            let range = &mut array[start..end];
            let mut left = 0;
            let mut right = 0;
            // Left-goers drop back into the range at `left <= i`, already
            // read positions; right-goers wait in scratch.
            for i in 0..range.len() {
                let row = range[i];
                if goes_left(row) {
                    range[left] = row;
                    left += 1;
                } else {
                    arena.scratch[right] = row;
                    right += 1;
                }
            }
            range[left..].copy_from_slice(&arena.scratch[..right]);
            mid = start + left;
        }
        mid
    }
}
