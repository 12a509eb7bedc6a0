//! Deterministic k-fold planning.
//!
//! Two modes: label-stratified shuffled folds (the default), and contiguous
//! row blocks for sequential transforms, since shuffling would destroy the
//! temporal order the SF feature reads.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldMode {
    Stratified,
    Blocks,
}

/// Assignment of every row to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub mode: FoldMode,
    assignments: Vec<u32>,
}

impl FoldPlan {
    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    /// Rows held out in `fold`.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rows trained on when `fold` is held out.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_args(rows: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Argument(format!("k must be at least 2, got {k}")));
    }
    if k > rows {
        return Err(Error::Argument(format!(
            "k = {k} exceeds the {rows} available rows"
        )));
    }
    Ok(())
}

/// Label-stratified fold plan, deterministic under `seed`.
///
/// Each class is shuffled independently and dealt into folds so that per-fold
/// class counts differ by at most one sample from an even share; the classes'
/// remainder folds are offset from each other so fold sizes also differ by at
/// most one.
pub fn split_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let rows = d.n_rows();
    check_args(rows, k)?;

    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in d.labels().iter().enumerate() {
        by_class[label as usize].push(i);
    }

    let mut assignments = vec![0u32; rows];
    // Attack remainders land on folds [0, a % k); normal remainders continue
    // from there so no fold collects two extras before another has one.
    let offsets = [by_class[1].len() % k, 0];

    for (class, indices) in by_class.iter_mut().enumerate() {
        let mut rng = rng::stream(seed, &[rng::FOLDS, class as u64]);
        indices.shuffle(&mut rng);
        let base = indices.len() / k;
        let extra = indices.len() % k;
        let offset = offsets[class] % k;
        let mut cursor = 0;
        for fold in 0..k {
            let bonus = ((fold + k - offset) % k < extra) as usize;
            for _ in 0..base + bonus {
                assignments[indices[cursor]] = fold as u32;
                cursor += 1;
            }
        }
    }

    Ok(FoldPlan {
        k,
        seed,
        mode: FoldMode::Stratified,
        assignments,
    })
}

/// Contiguous-block fold plan for temporally ordered data: fold `i` covers
/// rows `[i*rows/k, (i+1)*rows/k)`.
pub fn split_folds_blocks(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let rows = d.n_rows();
    check_args(rows, k)?;
    let mut assignments = vec![0u32; rows];
    for fold in 0..k {
        let start = fold * rows / k;
        let end = (fold + 1) * rows / k;
        for slot in &mut assignments[start..end] {
            *slot = fold as u32;
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        mode: FoldMode::Blocks,
        assignments,
    })
}
