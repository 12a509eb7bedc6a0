//! Sequential sensitivity factor.
//!
//! A stateful scan over temporally ordered rows: any row whose source value
//! differs from the common (modal normal) value is suspicious and restarts
//! the decay, after which the emitted score falls by a factor of `b` per
//! row. The scan is inherently sequential and must never be parallelized
//! across rows.

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnKind, ColumnValues, Dataset};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfConfig {
    /// Source column name (f_m); must be categorical.
    pub feature: String,
    /// Decay factor in (0, 1).
    pub b: f64,
    /// The non-suspicious value: the modal value among training normal
    /// rows, fixed at fit time and reused verbatim at transform time.
    pub common_value: String,
    /// Emit b^0 = 1 on suspicious rows instead of the default b^1.
    pub peak_at_one: bool,
}

impl SfConfig {
    /// Derive the common value from the normal rows of `train`, breaking
    /// count ties by first appearance.
    pub fn fit(train: &Dataset, feature: &str, b: f64, peak_at_one: bool) -> Result<SfConfig> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::Argument(format!(
                "decay factor b = {b} outside (0, 1)"
            )));
        }
        let column = categorical_column(train, feature)?;
        let mut order: Vec<String> = Vec::new();
        let mut counts: std::collections::HashMap<String, usize> =
            std::collections::HashMap::new();
        for row in 0..train.n_rows() {
            if train.labels()[row] != 0 {
                continue;
            }
            let value = column.decode(row).expect("categorical column decodes");
            let slot = counts.entry(value.to_string()).or_insert_with(|| {
                order.push(value.to_string());
                0
            });
            *slot += 1;
        }
        // First appearance wins count ties.
        let mut common_value: Option<String> = None;
        let mut best = 0;
        for v in order {
            let c = counts[&v];
            if c > best {
                best = c;
                common_value = Some(v);
            }
        }
        let common_value = common_value
            .ok_or_else(|| Error::Config("no normal rows to derive the common value".into()))?;
        Ok(SfConfig {
            feature: feature.to_string(),
            b,
            common_value,
            peak_at_one,
        })
    }

    /// Name of the synthesized column.
    pub fn output_column(&self) -> String {
        format!("{}_sf", self.feature)
    }
}

fn categorical_column<'a>(d: &'a Dataset, feature: &str) -> Result<&'a Column> {
    let column = d
        .column(feature)
        .ok_or_else(|| Error::Argument(format!("no column named `{feature}`")))?;
    if matches!(column.values, ColumnValues::Numeric(_)) {
        return Err(Error::Config(format!(
            "SF needs a categorical source column, `{feature}` is numeric"
        )));
    }
    Ok(column)
}

/// Walk the rows in order and emit the decayed suspicion score.
///
/// State starts at (base = 0, d = 1); a suspicious row resets it to
/// (base = b, d = 1) — or d = 0 with `peak_at_one` — and every row emits
/// base^d before incrementing d. With base = 0 the emitted score is 0.
pub fn compute_sf_series(data: &Dataset, cfg: &SfConfig) -> Result<Vec<f64>> {
    let column = categorical_column(data, &cfg.feature)?;
    let mut base = 0.0f64;
    let mut exponent: u32 = 1;
    let mut series = Vec::with_capacity(data.n_rows());
    for row in 0..data.n_rows() {
        let value = column.decode(row).expect("categorical column decodes");
        if value != cfg.common_value {
            base = cfg.b;
            exponent = if cfg.peak_at_one { 0 } else { 1 };
        }
        let score = if base == 0.0 { 0.0 } else { base.powi(exponent as i32) };
        series.push(score);
        exponent = exponent.saturating_add(1);
    }
    Ok(series)
}

/// The `f_smn` column for appending to a transformed dataset.
pub fn sf_column(data: &Dataset, cfg: &SfConfig) -> Result<Column> {
    Ok(Column {
        name: cfg.output_column(),
        kind: ColumnKind::Numeric,
        values: ColumnValues::Numeric(compute_sf_series(data, cfg)?),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dataset::Dataset;

    fn series_of(values: Vec<&str>, cfg: &SfConfig) -> Vec<f64> {
        let rows = values.len();
        let d = Dataset::builder()
            .categorical("flgs", values)
            .labels("label", vec![0; rows])
            .build()
            .unwrap()
            .encode_categories();
        compute_sf_series(&d, cfg).unwrap()
    }

    fn cfg(b: f64) -> SfConfig {
        SfConfig {
            feature: "flgs".into(),
            b,
            common_value: "e".into(),
            peak_at_one: false,
        }
    }

    #[test]
    fn hand_trace_matches() {
        let series = series_of(vec!["e", "M", "e", "e"], &cfg(0.5));
        assert_eq!(series, vec![0.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn no_suspicious_rows_means_all_zeros() {
        let series = series_of(vec!["e"; 6], &cfg(0.5));
        assert_eq!(series, vec![0.0; 6]);
    }

    #[test]
    fn adjacent_suspicious_rows_both_peak() {
        let series = series_of(vec!["e", "M", "M", "e"], &cfg(0.5));
        assert_eq!(series, vec![0.0, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn peak_at_one_variant_starts_at_unity() {
        let mut c = cfg(0.5);
        c.peak_at_one = true;
        let series = series_of(vec!["e", "M", "e", "e"], &c);
        assert_eq!(series, vec![0.0, 1.0, 0.5, 0.25]);
    }

    #[test]
    fn fit_picks_modal_normal_value() {
        let d = Dataset::builder()
            .categorical("flgs", vec!["e", "e", "M", "e s", "M", "e"])
            .labels("label", vec![0, 0, 1, 0, 1, 0])
            .build()
            .unwrap()
            .encode_categories();
        let c = SfConfig::fit(&d, "flgs", 0.5, false).unwrap();
        assert_eq!(c.common_value, "e");
        // Attack rows never contribute to the mode: "M" appears twice but
        // only under attack labels.
        let series = compute_sf_series(&d, &c).unwrap();
        assert_eq!(series, vec![0.0, 0.0, 0.5, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn numeric_source_is_rejected() {
        let d = Dataset::builder()
            .numeric("x", vec![1.0, 2.0])
            .labels("label", vec![0, 1])
            .build()
            .unwrap();
        assert!(matches!(
            SfConfig::fit(&d, "x", 0.5, false),
            Err(Error::Config(_))
        ));
        assert!(compute_sf_series(&d, &cfg(0.5)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn series_values_are_decay_powers(
            pattern in prop::collection::vec(prop::bool::ANY, 1..80),
            b in 0.1f64..0.9,
        ) {
            let values: Vec<&str> = pattern.iter().map(|&s| if s { "M" } else { "e" }).collect();
            let series = series_of(values, &cfg(b));
            let mut since_suspicious: Option<u32> = None;
            for (row, (&suspicious, &score)) in pattern.iter().zip(&series).enumerate() {
                if suspicious {
                    since_suspicious = Some(1);
                }
                match since_suspicious {
                    None => prop_assert_eq!(score, 0.0, "row {}", row),
                    Some(d) => {
                        prop_assert_eq!(score, b.powi(d as i32), "row {}", row);
                        if suspicious {
                            prop_assert_eq!(score, b);
                        }
                    }
                }
                since_suspicious = since_suspicious.map(|d| d + 1);
            }
            // Each non-suspicious step after a suspicious row decays by b.
            for row in 1..series.len() {
                if !pattern[row] && series[row] > 0.0 {
                    prop_assert!((series[row] - series[row - 1] * b).abs() < 1e-15);
                }
            }
        }
    }
}
