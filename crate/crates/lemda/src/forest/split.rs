//! Gini impurity and the exhaustive best-split search.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

use super::FeatureView;

/// Splits with gain at or below this are treated as no gain; the raw
/// difference of Gini terms leaves ~1e-17 of float dust on exact ties.
pub(crate) const GAIN_EPS: f64 = 1e-12;

/// Binary class population of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub normal: usize,
    pub attack: usize,
}

impl ClassCounts {
    pub fn new(normal: usize, attack: usize) -> Self {
        ClassCounts { normal, attack }
    }

    pub fn total(&self) -> usize {
        self.normal + self.attack
    }

    pub fn majority(&self) -> u8 {
        // Ties vote attack, matching forest prediction.
        u8::from(self.attack >= self.normal)
    }

    fn minus(&self, other: &ClassCounts) -> ClassCounts {
        ClassCounts {
            normal: self.normal - other.normal,
            attack: self.attack - other.attack,
        }
    }
}

/// Gini impurity of a two-class population: sum of p_i(1-p_i).
/// 0 when one class remains, 0.5 when the classes balance.
pub fn gini(c: &ClassCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Argument("gini of an empty population".into()));
    }
    let p_attack = c.attack as f64 / total as f64;
    let p_normal = c.normal as f64 / total as f64;
    Ok(p_attack * (1.0 - p_attack) + p_normal * (1.0 - p_normal))
}

/// Impurity decrease of a split: parent Gini minus the size-weighted Gini
/// of the two children.
pub fn impurity_decrease(
    parent: &ClassCounts,
    left: &ClassCounts,
    right: &ClassCounts,
) -> Result<f64> {
    if left.normal + right.normal != parent.normal || left.attack + right.attack != parent.attack {
        return Err(Error::Argument(
            "child class counts do not sum to the parent's".into(),
        ));
    }
    let total = parent.total() as f64;
    let p_left = left.total() as f64 / total;
    let p_right = right.total() as f64 / total;
    Ok(gini(parent)? - p_left * gini(left)? - p_right * gini(right)?)
}

/// Decision rule of an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum SplitRule {
    /// Numeric: rows with value <= threshold go left.
    Threshold { feature: usize, threshold: f64 },
    /// Categorical one-vs-rest: rows with this code go left.
    Category { feature: usize, code: u32 },
}

impl SplitRule {
    pub fn feature(&self) -> usize {
        match self {
            SplitRule::Threshold { feature, .. } | SplitRule::Category { feature, .. } => *feature,
        }
    }

    #[inline]
    pub(crate) fn goes_left(&self, view: &FeatureView, row: usize) -> bool {
        match *self {
            SplitRule::Threshold { feature, threshold } => view.value(feature, row) <= threshold,
            SplitRule::Category { feature, code } => view.code(feature, row) == code,
        }
    }
}

/// A candidate split with its class populations and impurity decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    pub left: ClassCounts,
    pub right: ClassCounts,
    pub decrease: f64,
}

impl SplitCandidate {
    pub fn p_left(&self) -> f64 {
        self.left.total() as f64 / (self.left.total() + self.right.total()) as f64
    }

    pub fn p_right(&self) -> f64 {
        self.right.total() as f64 / (self.left.total() + self.right.total()) as f64
    }
}

/// Exhaustive best split over `features` for the rows of `d` listed in
/// `rows`: numeric candidates at midpoints between consecutive distinct
/// sorted values, categorical candidates one-code-vs-rest. Returns `None`
/// when no candidate strictly decreases impurity. Ties prefer the lowest
/// feature index, then the lowest threshold or code.
pub fn best_split(d: &Dataset, rows: &[usize], features: &[usize]) -> Option<SplitCandidate> {
    let view = FeatureView::from_dataset(d);
    best_split_in_view(&view, d.labels(), rows, features)
}

pub(crate) fn best_split_in_view(
    view: &FeatureView,
    labels: &[u8],
    rows: &[usize],
    features: &[usize],
) -> Option<SplitCandidate> {
    if rows.is_empty() {
        return None;
    }
    let parent = count_rows(labels, rows);
    if parent.normal == 0 || parent.attack == 0 {
        return None;
    }

    let mut best: Option<SplitCandidate> = None;
    let mut consider = |candidate: SplitCandidate| {
        if candidate.decrease > GAIN_EPS
            && best
                .as_ref()
                .map_or(true, |b| candidate.decrease > b.decrease)
        {
            best = Some(candidate);
        }
    };

    for &feature in features {
        if view.column(feature).is_categorical() {
            categorical_candidates(view, labels, rows, feature, &parent, &mut consider);
        } else {
            numeric_candidates(view, labels, rows, feature, &parent, &mut consider);
        }
    }
    best
}

fn count_rows(labels: &[u8], rows: &[usize]) -> ClassCounts {
    let attack = rows.iter().filter(|&&r| labels[r] == 1).count();
    ClassCounts {
        normal: rows.len() - attack,
        attack,
    }
}


fn numeric_candidates(
    view: &FeatureView,
    labels: &[u8],
    rows: &[usize],
    feature: usize,
    parent: &ClassCounts,
    consider: &mut impl FnMut(SplitCandidate),
) {
    let mut pairs: Vec<(f64, u8)> = rows
        .iter()
        .map(|&r| (view.value(feature, r), labels[r]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut left = ClassCounts::new(0, 0);
    for i in 0..pairs.len() - 1 {
        let (value, label) = pairs[i];
        if label == 1 {
            left.attack += 1;
        } else {
            left.normal += 1;
        }
        let next = pairs[i + 1].0;
        if value == next {
            continue;
        }
        let right = parent.minus(&left);
        let decrease = impurity_decrease(parent, &left, &right)
            .expect("sweep counts partition the parent");
        consider(SplitCandidate {
            rule: SplitRule::Threshold {
                feature,
                threshold: 0.5 * (value + next),
            },
            left,
            right,
            decrease,
        });
    }
}

fn categorical_candidates(
    view: &FeatureView,
    labels: &[u8],
    rows: &[usize],
    feature: usize,
    parent: &ClassCounts,
    consider: &mut impl FnMut(SplitCandidate),
) {
    let n_codes = view
        .column(feature)
        .code_table()
        .map(|t| t.len())
        .unwrap_or(0)
        .max(rows.iter().map(|&r| view.code(feature, r) as usize + 1).max().unwrap_or(0));
    let mut per_code = vec![ClassCounts::new(0, 0); n_codes];
    for &r in rows {
        let slot = &mut per_code[view.code(feature, r) as usize];
        if labels[r] == 1 {
            slot.attack += 1;
        } else {
            slot.normal += 1;
        }
    }
    for (code, left) in per_code.iter().enumerate() {
        if left.total() == 0 || left.total() == parent.total() {
            continue;
        }
        let right = parent.minus(left);
        let decrease =
            impurity_decrease(parent, left, &right).expect("code counts partition the parent");
        consider(SplitCandidate {
            rule: SplitRule::Category {
                feature,
                code: code as u32,
            },
            left: *left,
            right,
            decrease,
        });
    }
}
