//! Confusion-matrix metrics and the cross-validated benchmark harness.

mod experiment;

pub use experiment::{
    render_table, run_bench, run_experiment, Aggregate, BenchReport, EvalConfig, ExperimentReport,
    FoldReport, Method, ModelKind,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Outcome counts with attack as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Count predictions against ground truth; attack (1) is positive.
pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Argument(format!(
            "prediction length {} != truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Argument("empty prediction sequence".into()));
    }
    let mut c = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fp += 1,
            (0, 1) => c.fn_ += 1,
            _ => return Err(Error::Label(format!("label outside {{0,1}}: ({p},{t})"))),
        }
    }
    Ok(c)
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Correct predictions over all predictions.
    pub fn accuracy(&self) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::Argument("accuracy of an empty matrix".into()));
        }
        Ok((self.tn + self.tp) as f64 / self.total() as f64)
    }

    /// Harmonic mean of precision and recall: tp / (tp + (fp+fn)/2).
    /// Returns 0 when the denominator is zero (no positives anywhere);
    /// see [`ConfusionMatrix::f1_degenerate`].
    pub fn f1_score(&self) -> f64 {
        let denominator = self.tp as f64 + 0.5 * (self.fp + self.fn_) as f64;
        if denominator == 0.0 {
            0.0
        } else {
            self.tp as f64 / denominator
        }
    }

    /// True when `f1_score` hit its zero-denominator fallback.
    pub fn f1_degenerate(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    /// Weighted confusion metric rewarding true outcomes against heavily
    /// penalized false ones.
    pub fn safety_score(&self, w: &SafetyWeights) -> Result<f64> {
        let numerator = w.w_tn * self.tn as f64 + w.w_tp * self.tp as f64;
        let denominator =
            w.w_fp * self.fp as f64 + w.w_fn * self.fn_ as f64 + numerator;
        if denominator == 0.0 {
            return Err(Error::Argument(
                "safety score denominator is zero".into(),
            ));
        }
        Ok(numerator / denominator)
    }
}

/// Weights for the safety score. The defaults treat a missed attack and a
/// false alarm as equally damaging and four times worse than a caught
/// attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyWeights {
    pub w_tn: f64,
    pub w_tp: f64,
    pub w_fp: f64,
    pub w_fn: f64,
}

impl Default for SafetyWeights {
    fn default() -> Self {
        SafetyWeights {
            w_tn: 1.0 / 19.0,
            w_tp: 2.0 / 19.0,
            w_fp: 8.0 / 19.0,
            w_fn: 8.0 / 19.0,
        }
    }
}

impl SafetyWeights {
    pub fn uniform() -> Self {
        SafetyWeights {
            w_tn: 1.0,
            w_tp: 1.0,
            w_fp: 1.0,
            w_fn: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn confusion_counts_by_quadrant() {
        let c = confusion(&[1, 1, 0], &[1, 1, 0]).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (2, 1, 0, 0));

        let complement = confusion(&[0, 0, 1], &[1, 1, 0]).unwrap();
        assert_eq!((complement.tp, complement.tn), (0, 0));
        assert_eq!((complement.fp, complement.fn_), (1, 2));

        let mixed = confusion(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!((mixed.tp, mixed.fn_, mixed.fp, mixed.tn), (1, 1, 1, 1));
    }

    #[test]
    fn confusion_rejects_mismatched_lengths() {
        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn metrics_match_published_values() {
        // DT + full feature engineering on the medical-testbed dataset.
        let dt = ConfusionMatrix::new(173, 32, 43, 1384);
        assert!((dt.accuracy().unwrap() - 0.95404).abs() < 1e-5);
        assert!((dt.f1_score() - 0.82185).abs() < 1e-5);
        assert!((dt.safety_score(&SafetyWeights::default()).unwrap() - 0.74249).abs() < 1e-5);

        let rf = ConfusionMatrix::new(183, 22, 37, 1390);
        assert!((rf.accuracy().unwrap() - 0.96385).abs() < 1e-5);
        assert!((rf.f1_score() - 0.86118).abs() < 1e-5);
        assert!((rf.safety_score(&SafetyWeights::default()).unwrap() - 0.78815).abs() < 1e-5);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let c = ConfusionMatrix::new(10, 0, 0, 20);
        assert_eq!(c.accuracy().unwrap(), 1.0);
        assert_eq!(c.f1_score(), 1.0);
        assert_eq!(c.safety_score(&SafetyWeights::default()).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_f1_is_flagged_zero() {
        let c = ConfusionMatrix::new(0, 0, 0, 5);
        assert_eq!(c.f1_score(), 0.0);
        assert!(c.f1_degenerate());
        let normal = ConfusionMatrix::new(0, 1, 0, 5);
        assert!(!normal.f1_degenerate());
    }

    #[test]
    fn default_weights_treat_fn_and_fp_equally() {
        let w = SafetyWeights::default();
        assert_eq!(w.w_fp, w.w_fn);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn metrics_stay_in_unit_interval(tp in 0u64..2000, fn_ in 0u64..2000, fp in 0u64..2000, tn in 0u64..2000) {
            prop_assume!(tp + fn_ + fp + tn > 0);
            let c = ConfusionMatrix::new(tp, fn_, fp, tn);
            let acc = c.accuracy().unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            let f1 = c.f1_score();
            prop_assert!((0.0..=1.0).contains(&f1));
            let safety = c.safety_score(&SafetyWeights::default()).unwrap();
            prop_assert!((0.0..=1.0).contains(&safety));
        }

        #[test]
        fn uniform_safety_weights_reduce_to_accuracy(tp in 0u64..2000, fn_ in 0u64..2000, fp in 0u64..2000, tn in 0u64..2000) {
            prop_assume!(tp + fn_ + fp + tn > 0);
            let c = ConfusionMatrix::new(tp, fn_, fp, tn);
            let safety = c.safety_score(&SafetyWeights::uniform()).unwrap();
            prop_assert!((safety - c.accuracy().unwrap()).abs() < 1e-12);
        }
    }
}
