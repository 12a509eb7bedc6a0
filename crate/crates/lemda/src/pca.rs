//! PCA baseline: per-feature z-scoring, covariance eigendecomposition via
//! cyclic Jacobi rotations, and explained-variance thresholding.
//!
//! Flow features mix units (bytes, rates, jitter), so covariance is always
//! taken on standardized data; zero-variance columns are dropped and
//! recorded on the model rather than poisoning the solver.

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnKind, ColumnValues, Dataset};
use crate::{Error, Result};

/// Default off-diagonal tolerance for the Jacobi sweep.
pub const JACOBI_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// `a` is row-major and must be symmetric within 1e-9. Returns eigenvalues
/// in descending order and, for each, its unit eigenvector.
pub fn jacobi_eigen(a: &[Vec<f64>], tol: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    if tol <= 0.0 {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Argument("matrix is not square".into()));
        }
        for j in 0..n {
            if (a[i][j] - a[j][i]).abs() > 1e-9 {
                return Err(Error::Argument(format!(
                    "matrix is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    if n == 0 {
        return Ok((vec![], vec![]));
    }

    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off_max = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[p][q].abs())
            .fold(0.0, f64::max);
        if off_max < tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                if m[p][q].abs() < tol {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi sweep did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| v.iter().map(|row| row[i]).collect())
        .collect();
    Ok((eigenvalues, eigenvectors))
}

/// Fitted PCA transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Feature names seen at fit time, used for schema checks.
    pub input_features: Vec<String>,
    /// Features actually decomposed (zero-variance columns removed).
    pub used_features: Vec<String>,
    /// Zero-variance columns dropped at fit time.
    pub dropped_features: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// `components[i]` is the unit eigenvector paired with `eigenvalues[i]`.
    pub components: Vec<Vec<f64>>,
    /// Components kept to reach `threshold` cumulative explained variance.
    pub n_components: usize,
    pub threshold: f64,
}

impl PcaModel {
    /// Eigenvalue shares of the total spectrum; non-negative, descending,
    /// summing to one.
    pub fn explained_variance_ratios(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues.iter().map(|&l| l / total).collect()
    }

    fn standardized_row(&self, columns: &[&Column], row: usize) -> Vec<f64> {
        columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.value(row) - self.means[i]) / self.scales[i])
            .collect()
    }

    /// Project onto the first `n_components` components; the label column is
    /// carried through.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let columns = self.check_schema(d)?;
        let mut outputs: Vec<Vec<f64>> = vec![Vec::with_capacity(d.n_rows()); self.n_components];
        for row in 0..d.n_rows() {
            let z = self.standardized_row(&columns, row);
            for (pc, out) in outputs.iter_mut().enumerate() {
                let projected: f64 = self.components[pc]
                    .iter()
                    .zip(&z)
                    .map(|(w, x)| w * x)
                    .sum();
                out.push(projected);
            }
        }
        let columns = outputs
            .into_iter()
            .enumerate()
            .map(|(i, values)| Column {
                name: format!("pc{}", i + 1),
                kind: ColumnKind::Numeric,
                values: ColumnValues::Numeric(values),
            })
            .collect();
        Dataset::new(columns, d.label_name(), d.labels().to_vec())
    }

    fn check_schema<'a>(&self, d: &'a Dataset) -> Result<Vec<&'a Column>> {
        let names: Vec<&str> = d.feature_columns().iter().map(|c| c.name.as_str()).collect();
        let expected: Vec<&str> = self.input_features.iter().map(String::as_str).collect();
        if names != expected {
            return Err(Error::Argument(format!(
                "feature columns {names:?} do not match the fitted schema {expected:?}"
            )));
        }
        // In used-feature order, skipping dropped columns.
        self.used_features
            .iter()
            .map(|name| {
                d.column(name)
                    .ok_or_else(|| Error::Argument(format!("missing column `{name}`")))
            })
            .collect()
    }
}

/// Smallest component count whose cumulative explained variance reaches
/// `threshold`.
pub(crate) fn select_components(ratios: &[f64], threshold: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        cumulative += r;
        if cumulative >= threshold - 1e-12 {
            return i + 1;
        }
    }
    ratios.len()
}

/// Standardize, eigendecompose the covariance matrix, and keep the smallest
/// component count reaching `threshold` cumulative explained variance.
pub fn fit_pca(d: &Dataset, threshold: f64) -> Result<PcaModel> {
    if d.n_rows() < 2 {
        return Err(Error::Argument(format!(
            "PCA needs at least 2 rows, got {}",
            d.n_rows()
        )));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Argument(format!(
            "threshold {threshold} outside (0, 1]"
        )));
    }
    if !d.is_encoded() {
        return Err(Error::Argument(
            "dataset holds raw string columns; call encode_categories first".into(),
        ));
    }
    let all = d.feature_columns();
    let rows = d.n_rows();

    let mut used = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut scales = Vec::new();
    for c in &all {
        let mean = (0..rows).map(|r| c.value(r)).sum::<f64>() / rows as f64;
        let var = (0..rows).map(|r| (c.value(r) - mean).powi(2)).sum::<f64>() / rows as f64;
        let std = var.sqrt();
        if std < 1e-12 {
            dropped.push(c.name.clone());
        } else {
            used.push(*c);
            means.push(mean);
            scales.push(std);
        }
    }
    if used.is_empty() {
        return Err(Error::Training(
            "every feature has zero variance; nothing to decompose".into(),
        ));
    }

    let k = used.len();
    let mut cov = vec![vec![0.0; k]; k];
    for row in 0..rows {
        let z: Vec<f64> = used
            .iter()
            .enumerate()
            .map(|(i, c)| (c.value(row) - means[i]) / scales[i])
            .collect();
        for i in 0..k {
            for j in i..k {
                cov[i][j] += z[i] * z[j];
            }
        }
    }
    let denom = (rows - 1) as f64;
    for i in 0..k {
        for j in i..k {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }

    let (mut eigenvalues, components) = jacobi_eigen(&cov, JACOBI_TOL)?;
    for l in &mut eigenvalues {
        *l = l.max(0.0);
    }

    let total: f64 = eigenvalues.iter().sum();
    let ratios: Vec<f64> = eigenvalues.iter().map(|&l| l / total).collect();
    let n_components = select_components(&ratios, threshold);

    Ok(PcaModel {
        input_features: all.iter().map(|c| c.name.clone()).collect(),
        used_features: used.iter().map(|c| c.name.clone()).collect(),
        dropped_features: dropped,
        means,
        scales,
        eigenvalues,
        components,
        n_components,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::rng;

    #[test]
    fn identity_has_unit_eigenvalues() {
        let a = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let (l, v) = jacobi_eigen(&a, 1e-12).unwrap();
        assert_eq!(l, vec![1.0, 1.0, 1.0]);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn two_by_two_matches_characteristic_roots() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (l, v) = jacobi_eigen(&a, 1e-12).unwrap();
        assert!((l[0] - 3.0).abs() < 1e-12);
        assert!((l[1] - 1.0).abs() < 1e-12);
        // Av = lv for both pairs.
        for (lambda, vector) in l.iter().zip(&v) {
            for i in 0..2 {
                let av: f64 = (0..2).map(|j| a[i][j] * vector[j]).sum();
                assert!((av - lambda * vector[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let a = vec![vec![1.0, 2.0], vec![0.0, 1.0]];
        assert!(matches!(jacobi_eigen(&a, 1e-10), Err(Error::Argument(_))));
    }

    pub(crate) fn random_symmetric(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, &[99]);
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x = r.gen_range(-3.0..3.0);
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        a
    }

    #[test]
    fn residuals_vanish_on_random_matrices() {
        for seed in 0..25 {
            let n = 2 + (seed as usize % 5);
            let a = random_symmetric(n, seed);
            let (l, v) = jacobi_eigen(&a, 1e-12).unwrap();
            for (lambda, vector) in l.iter().zip(&v) {
                for i in 0..n {
                    let av: f64 = (0..n).map(|j| a[i][j] * vector[j]).sum();
                    assert!(
                        (av - lambda * vector[i]).abs() < 1e-7,
                        "residual too large for seed {seed}"
                    );
                }
            }
            // Orthonormal columns.
            for x in 0..n {
                for y in 0..n {
                    let dot: f64 = (0..n).map(|i| v[x][i] * v[y][i]).sum();
                    let expect = if x == y { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-8);
                }
            }
        }
    }

    fn gaussian_pair(rows: usize) -> Dataset {
        let mut r = rng::stream(5, &[7]);
        let mut a = Vec::with_capacity(rows);
        let mut b = Vec::with_capacity(rows);
        for _ in 0..rows {
            // sum of uniforms is plenty gaussian for a ratio check
            a.push((0..12).map(|_| r.gen_range(-0.5..0.5)).sum::<f64>());
            b.push((0..12).map(|_| r.gen_range(-0.5..0.5)).sum::<f64>());
        }
        Dataset::builder()
            .numeric("a", a)
            .numeric("b", b)
            .labels("label", (0..rows).map(|i| (i % 2) as u8).collect())
            .build()
            .unwrap()
    }

    #[test]
    fn independent_features_split_variance_evenly() {
        let d = gaussian_pair(4000);
        let model = fit_pca(&d, 0.95).unwrap();
        let ratios = model.explained_variance_ratios();
        assert!((ratios[0] - 0.5).abs() < 0.05, "ratios {ratios:?}");
        assert!((ratios[1] - 0.5).abs() < 0.05);
        assert_eq!(model.n_components, 2);
    }

    #[test]
    fn component_selection_matches_hand_values() {
        // eigenvalues [2, 1] -> ratios [2/3, 1/3]
        assert_eq!(select_components(&[2.0 / 3.0, 1.0 / 3.0], 0.6), 1);
        assert_eq!(select_components(&[2.0 / 3.0, 1.0 / 3.0], 0.7), 2);
        assert_eq!(select_components(&[0.5, 0.3, 0.2], 1.0), 3);
    }

    #[test]
    fn duplicated_column_loses_a_component() {
        let mut r = rng::stream(8, &[3]);
        let x: Vec<f64> = (0..500).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..500).map(|_| r.gen_range(-1.0..1.0)).collect();
        let d = Dataset::builder()
            .numeric("x", x.clone())
            .numeric("y", y)
            .numeric("x_copy", x)
            .labels("label", (0..500).map(|i| (i % 2) as u8).collect())
            .build()
            .unwrap();
        let model = fit_pca(&d, 0.99).unwrap();
        assert!(model.eigenvalues[2] < 1e-9, "{:?}", model.eigenvalues);
        assert_eq!(model.n_components, 2);
    }

    #[test]
    fn zero_variance_columns_are_dropped() {
        let d = Dataset::builder()
            .numeric("live", vec![1.0, 2.0, 3.0, 4.0])
            .numeric("dead", vec![7.0; 4])
            .labels("label", vec![0, 1, 0, 1])
            .build()
            .unwrap();
        let model = fit_pca(&d, 0.95).unwrap();
        assert_eq!(model.dropped_features, vec!["dead".to_string()]);
        assert_eq!(model.used_features, vec!["live".to_string()]);
        let out = model.transform(&d).unwrap();
        assert_eq!(out.feature_names(), vec!["pc1"]);
    }

    #[test]
    fn full_projection_preserves_row_norms() {
        let d = gaussian_pair(300);
        let mut model = fit_pca(&d, 1.0).unwrap();
        model.n_components = 2;
        let out = model.transform(&d).unwrap();
        let cols = d.feature_columns();
        for row in 0..300 {
            let z: Vec<f64> = (0..2)
                .map(|i| (cols[i].value(row) - model.means[i]) / model.scales[i])
                .collect();
            let before: f64 = z.iter().map(|v| v * v).sum();
            let after: f64 = out
                .feature_columns()
                .iter()
                .map(|c| c.value(row).powi(2))
                .sum();
            assert!((before - after).abs() < 1e-8);
        }
    }

    #[test]
    fn transformed_training_data_is_centered() {
        let d = gaussian_pair(400);
        let model = fit_pca(&d, 0.95).unwrap();
        let out = model.transform(&d).unwrap();
        for c in out.feature_columns() {
            let mean: f64 = (0..400).map(|r| c.value(r)).sum::<f64>() / 400.0;
            assert!(mean.abs() < 1e-8);
        }
    }

    #[test]
    fn reconstruction_with_all_components_is_exact() {
        let d = gaussian_pair(120);
        let model = fit_pca(&d, 1.0).unwrap();
        let cols = d.feature_columns();
        for row in 0..120 {
            let z: Vec<f64> = (0..2)
                .map(|i| (cols[i].value(row) - model.means[i]) / model.scales[i])
                .collect();
            let projected: Vec<f64> = model
                .components
                .iter()
                .map(|comp| comp.iter().zip(&z).map(|(w, x)| w * x).sum())
                .collect();
            for i in 0..2 {
                let rebuilt: f64 = model
                    .components
                    .iter()
                    .zip(&projected)
                    .map(|(comp, p)| comp[i] * p)
                    .sum();
                assert!((rebuilt - z[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let d = gaussian_pair(50);
        let model = fit_pca(&d, 0.95).unwrap();
        let other = Dataset::builder()
            .numeric("a", vec![1.0])
            .labels("label", vec![0])
            .build()
            .unwrap();
        assert!(model.transform(&other).is_err());
    }

    #[test]
    fn tiny_inputs_are_rejected() {
        let d = Dataset::builder()
            .numeric("a", vec![1.0])
            .labels("label", vec![0])
            .build()
            .unwrap();
        assert!(fit_pca(&d, 0.95).is_err());
        let ok = gaussian_pair(10);
        assert!(fit_pca(&ok, 0.0).is_err());
        assert!(fit_pca(&ok, 1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ratios_descend_and_sum_to_one(seed in 0u64..1000, n in 2usize..7) {
            let a = random_symmetric(n, seed);
            // Shift the spectrum positive: A + cI keeps eigenvectors.
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[i][i] += 10.0;
            }
            let (l, _) = jacobi_eigen(&shifted, 1e-11).unwrap();
            let total: f64 = l.iter().sum();
            let ratios: Vec<f64> = l.iter().map(|x| x / total).collect();
            let sum: f64 = ratios.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
            for w in ratios.windows(2) {
                prop_assert!(w[0] >= w[1] - 1e-12);
            }
        }

        #[test]
        fn component_count_is_minimal(raw in prop::collection::vec(0.01f64..5.0, 1..10), t in 0.05f64..1.0) {
            let total: f64 = raw.iter().sum();
            let mut ratios: Vec<f64> = raw.iter().map(|x| x / total).collect();
            ratios.sort_by(|a, b| b.total_cmp(a));
            let n = select_components(&ratios, t);
            let reached: f64 = ratios[..n].iter().sum();
            prop_assert!(reached >= t - 1e-9);
            if n > 1 {
                let below: f64 = ratios[..n - 1].iter().sum();
                prop_assert!(below < t, "dropping last component still reaches {below} >= {t}");
            }
        }
    }
}
