//! Weighted exponential decay feature synthesis.
//!
//! A fitted dictionary maps each distinct value `u` of the most informative
//! feature to `b^p * w_u`, where `w_u` is the value's attack fraction in the
//! training data (zero when no attack sample carries the value) and `p` is
//! its 1-based rank: attack-bearing values sorted by descending sample count
//! come first, zero-attack values follow and score zero regardless of rank.
//! Applying the dictionary rewrites the feature into the numeric `f_mn`
//! column; values never seen at fit time score zero.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnKind, ColumnValues, Dataset};
use crate::{Error, Result};

/// Distinct-value cap before a numeric feature falls back to
/// equal-frequency binning.
pub const NUMERIC_EXACT_LIMIT: usize = 256;
const NUMERIC_BINS: usize = 256;

/// How raw cell values are keyed into the dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WedfKeying {
    /// Keys are the original category strings.
    Categorical,
    /// Keys are exact numeric values (at most [`NUMERIC_EXACT_LIMIT`]
    /// distinct values at fit time).
    NumericExact,
    /// Keys are equal-frequency bin indices; `edges` are the inner
    /// boundaries, value v falls in bin = #edges strictly below v.
    NumericBinned { edges: Vec<f64> },
}

/// One dictionary key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "key", content = "value", rename_all = "snake_case")]
pub enum EntryKey {
    Cat(String),
    Num(f64),
    Bin(usize),
}

impl EntryKey {
    pub fn display(&self) -> String {
        match self {
            EntryKey::Cat(s) => s.clone(),
            EntryKey::Num(v) => format!("{v}"),
            EntryKey::Bin(i) => format!("bin{i}"),
        }
    }

    fn token(&self) -> KeyToken {
        match self {
            EntryKey::Cat(s) => KeyToken::Cat(s.clone()),
            EntryKey::Num(v) => KeyToken::Bits(normal_bits(*v)),
            EntryKey::Bin(i) => KeyToken::Bin(*i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum KeyToken {
    Cat(String),
    Bits(u64),
    Bin(usize),
}

fn normal_bits(v: f64) -> u64 {
    if v == 0.0 {
        0.0f64.to_bits()
    } else {
        v.to_bits()
    }
}

/// Per-value fit statistics and the resulting score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedfEntry {
    #[serde(flatten)]
    pub key: EntryKey,
    /// Training samples carrying the value (n_u).
    pub n: u64,
    /// Attack samples among them (z_u).
    pub z: u64,
    /// z/n for attack-bearing values, 0 otherwise (w_u).
    pub weight: f64,
    /// 1-based rank in the decay ordering.
    pub p: u32,
    /// b^p * w_u.
    pub score: f64,
}

/// Fitted value-to-score lookup for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedfDictionary {
    /// Source column name (f_m).
    pub feature: String,
    /// Decay factor in (0, 1).
    pub b: f64,
    pub keying: WedfKeying,
    /// Entries in rank order (p = 1, 2, ...).
    pub entries: Vec<WedfEntry>,
}

impl WedfDictionary {
    /// Name of the synthesized column.
    pub fn output_column(&self) -> String {
        format!("{}_wedf", self.feature)
    }

    /// Score of a single already-keyed value; unseen keys score zero.
    pub fn score_of(&self, key: &EntryKey) -> f64 {
        let token = key.token();
        self.entries
            .iter()
            .find(|e| e.key.token() == token)
            .map(|e| e.score)
            .unwrap_or(0.0)
    }

    fn key_of(&self, column: &Column, row: usize) -> Result<EntryKey> {
        match &self.keying {
            WedfKeying::Categorical => {
                let raw = column.decode(row).ok_or_else(|| {
                    Error::Argument(format!(
                        "dictionary for `{}` is categorical but the column is numeric",
                        self.feature
                    ))
                })?;
                Ok(EntryKey::Cat(raw.to_string()))
            }
            WedfKeying::NumericExact => Ok(EntryKey::Num(numeric_cell(column, row, &self.feature)?)),
            WedfKeying::NumericBinned { edges } => {
                let v = numeric_cell(column, row, &self.feature)?;
                Ok(EntryKey::Bin(edges.partition_point(|&e| e < v)))
            }
        }
    }
}

fn numeric_cell(column: &Column, row: usize, feature: &str) -> Result<f64> {
    column
        .numeric_slice()
        .map(|v| v[row])
        .ok_or_else(|| {
            Error::Argument(format!(
                "dictionary for `{feature}` is numeric but the column is categorical"
            ))
        })
}

/// Fit a dictionary on the training data's `feature` column.
pub fn build_wedf_dictionary(train: &Dataset, feature: &str, b: f64) -> Result<WedfDictionary> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Argument(format!(
            "decay factor b = {b} outside (0, 1)"
        )));
    }
    let column = train
        .column(feature)
        .ok_or_else(|| Error::Argument(format!("no column named `{feature}`")))?;

    let keying = match &column.values {
        ColumnValues::Strings(_) | ColumnValues::Codes { .. } => WedfKeying::Categorical,
        ColumnValues::Numeric(values) => {
            let mut distinct: Vec<u64> = values.iter().map(|&v| normal_bits(v)).collect();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() <= NUMERIC_EXACT_LIMIT {
                WedfKeying::NumericExact
            } else {
                WedfKeying::NumericBinned {
                    edges: equal_frequency_edges(values),
                }
            }
        }
    };

    let probe = WedfDictionary {
        feature: feature.to_string(),
        b,
        keying,
        entries: Vec::new(),
    };

    // Count n_u and z_u in first-appearance order.
    let mut order: Vec<EntryKey> = Vec::new();
    let mut stats: HashMap<KeyToken, (usize, u64, u64)> = HashMap::new();
    for row in 0..train.n_rows() {
        let key = probe.key_of(column, row)?;
        let token = key.token();
        let next_index = order.len();
        let slot = stats.entry(token).or_insert_with(|| {
            order.push(key);
            (next_index, 0, 0)
        });
        slot.1 += 1;
        slot.2 += u64::from(train.labels()[row] == 1);
    }

    struct Raw {
        key: EntryKey,
        appearance: usize,
        n: u64,
        z: u64,
        weight: f64,
    }
    let mut attack_bearing = Vec::new();
    let mut zero_attack = Vec::new();
    for key in order {
        let (appearance, n, z) = stats[&key.token()];
        let raw = Raw {
            key,
            appearance,
            n,
            z,
            weight: if z >= 1 { z as f64 / n as f64 } else { 0.0 },
        };
        if z >= 1 {
            attack_bearing.push(raw);
        } else {
            zero_attack.push(raw);
        }
    }

    // Rank: attack-bearing by descending n (ties by descending weight, then
    // first appearance), then zero-attack values whose score is zero anyway.
    attack_bearing.sort_by(|a, b| {
        b.n.cmp(&a.n)
            .then(b.weight.total_cmp(&a.weight))
            .then(a.appearance.cmp(&b.appearance))
    });
    zero_attack.sort_by(|a, b| b.n.cmp(&a.n).then(a.appearance.cmp(&b.appearance)));

    let entries = attack_bearing
        .into_iter()
        .chain(zero_attack)
        .enumerate()
        .map(|(i, raw)| {
            let p = (i + 1) as u32;
            WedfEntry {
                key: raw.key,
                n: raw.n,
                z: raw.z,
                weight: raw.weight,
                p,
                score: if raw.z == 0 { 0.0 } else { b.powi(p as i32) * raw.weight },
            }
        })
        .collect();

    Ok(WedfDictionary {
        feature: feature.to_string(),
        b,
        keying: probe.keying,
        entries,
    })
}

fn equal_frequency_edges(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..NUMERIC_BINS)
        .map(|i| sorted[i * n / NUMERIC_BINS])
        .collect();
    edges.dedup_by(|a, b| a == b);
    edges
}

/// Rewrite the dictionary's feature into its numeric `f_mn` scores. The new
/// column takes the feature's position; every other column, the row order,
/// and the labels are untouched.
pub fn apply_wedf(d: &Dataset, dict: &WedfDictionary) -> Result<Dataset> {
    let column = d
        .column(&dict.feature)
        .ok_or_else(|| Error::Argument(format!("no column named `{}`", dict.feature)))?;

    // One map build per apply, not per row.
    let lookup: HashMap<KeyToken, f64> = dict
        .entries
        .iter()
        .map(|e| (e.key.token(), e.score))
        .collect();
    let mut scores = Vec::with_capacity(d.n_rows());
    for row in 0..d.n_rows() {
        let key = dict.key_of(column, row)?;
        scores.push(lookup.get(&key.token()).copied().unwrap_or(0.0));
    }

    let columns = d
        .columns()
        .iter()
        .map(|c| {
            if c.name == dict.feature {
                Column {
                    name: dict.output_column(),
                    kind: ColumnKind::Numeric,
                    values: ColumnValues::Numeric(std::mem::take(&mut scores)),
                }
            } else {
                c.clone()
            }
        })
        .collect();
    Dataset::new(columns, d.label_name(), d.labels().to_vec())
}
