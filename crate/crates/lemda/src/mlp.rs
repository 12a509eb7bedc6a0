//! Two-layer perceptron baseline: tanh hidden layer, sigmoid output,
//! binary cross-entropy loss, Adam updates, all hand-rolled so the
//! analytic gradients can be checked against central finite differences.
//!
//! Inputs are z-scored with training statistics stored on the model; raw
//! flow magnitudes would saturate tanh immediately.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::rng;
use crate::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// BCE log arguments are clamped to [EPS, 1 - EPS] so saturated sigmoids
/// cannot produce infinite loss.
const CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 20,
            epochs: 20,
            batch_size: 1000,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

/// Fitted two-layer perceptron; parameters are stored flat as
/// `[w1 (hidden x input), b1, w2, b2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub feature_names: Vec<String>,
    pub hidden: usize,
    input: usize,
    means: Vec<f64>,
    scales: Vec<f64>,
    params: Vec<f64>,
    adam: AdamState,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MlpModel {
    /// Freshly initialized network: weights uniform in
    /// +-sqrt(6 / (fan_in + fan_out)), biases zero, identity scaling.
    pub fn new_untrained(feature_names: Vec<String>, hidden: usize, seed: u64) -> MlpModel {
        let input = feature_names.len();
        let mut stream = rng::stream(seed, &[rng::MLP, 0]);
        let mut params = Vec::with_capacity(hidden * input + 2 * hidden + 1);
        let limit1 = (6.0 / (input + hidden) as f64).sqrt();
        for _ in 0..hidden * input {
            params.push(stream.gen_range(-limit1..limit1));
        }
        params.extend(std::iter::repeat(0.0).take(hidden));
        let limit2 = (6.0 / (hidden + 1) as f64).sqrt();
        for _ in 0..hidden {
            params.push(stream.gen_range(-limit2..limit2));
        }
        params.push(0.0);
        let n = params.len();
        MlpModel {
            feature_names,
            hidden,
            input,
            means: vec![0.0; input],
            scales: vec![1.0; input],
            params,
            adam: AdamState {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn w1(&self, j: usize, i: usize) -> f64 {
        self.params[j * self.input + i]
    }

    fn b1(&self, j: usize) -> f64 {
        self.params[self.hidden * self.input + j]
    }

    fn w2(&self, j: usize) -> f64 {
        self.params[self.hidden * self.input + self.hidden + j]
    }

    fn b2(&self) -> f64 {
        self.params[self.hidden * self.input + 2 * self.hidden]
    }

    fn standardize(&self, d: &Dataset) -> Result<Vec<Vec<f64>>> {
        let columns = d.feature_columns();
        let names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        let expected: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        if names != expected {
            return Err(Error::Argument(format!(
                "feature columns {names:?} do not match the fitted schema {expected:?}"
            )));
        }
        Ok((0..d.n_rows())
            .map(|row| {
                columns
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (c.value(row) - self.means[i]) / self.scales[i])
                    .collect()
            })
            .collect())
    }

    /// Forward pass on one standardized sample: (hidden activations, output
    /// probability).
    fn forward(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut h = Vec::with_capacity(self.hidden);
        for j in 0..self.hidden {
            let mut z = self.b1(j);
            for (i, &xi) in x.iter().enumerate() {
                z += self.w1(j, i) * xi;
            }
            h.push(z.tanh());
        }
        let mut z2 = self.b2();
        for (j, &hj) in h.iter().enumerate() {
            z2 += self.w2(j) * hj;
        }
        (h, sigmoid(z2))
    }

    /// Mean clamped BCE over standardized samples.
    fn batch_loss(&self, xs: &[Vec<f64>], ys: &[u8]) -> f64 {
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (_, p) = self.forward(x);
            let p = p.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
            loss -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
        }
        loss / xs.len() as f64
    }

    /// Analytic gradient of the mean BCE over standardized samples, flat in
    /// parameter order.
    fn batch_gradient(&self, xs: &[Vec<f64>], ys: &[u8]) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / xs.len() as f64;
        let w2_offset = self.hidden * self.input + self.hidden;
        for (x, &y) in xs.iter().zip(ys) {
            let (h, p) = self.forward(x);
            let dz2 = (p - y as f64) * scale;
            for j in 0..self.hidden {
                grad[w2_offset + j] += dz2 * h[j];
            }
            grad[self.hidden * self.input + 2 * self.hidden] += dz2;
            for j in 0..self.hidden {
                let dz1 = dz2 * self.w2(j) * (1.0 - h[j] * h[j]);
                for (i, &xi) in x.iter().enumerate() {
                    grad[j * self.input + i] += dz1 * xi;
                }
                grad[self.hidden * self.input + j] += dz1;
            }
        }
        grad
    }

    fn adam_step(&mut self, grad: &[f64], lr: f64) {
        self.adam.t += 1;
        let t = self.adam.t as i32;
        for (i, &g) in grad.iter().enumerate() {
            self.adam.m[i] = ADAM_BETA1 * self.adam.m[i] + (1.0 - ADAM_BETA1) * g;
            self.adam.v[i] = ADAM_BETA2 * self.adam.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.adam.m[i] / (1.0 - ADAM_BETA1.powi(t));
            let v_hat = self.adam.v[i] / (1.0 - ADAM_BETA2.powi(t));
            self.params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }

    /// Attack probability per row.
    pub fn predict_proba(&self, d: &Dataset) -> Result<Vec<f64>> {
        let xs = self.standardize(d)?;
        Ok(xs.iter().map(|x| self.forward(x).1).collect())
    }

    /// Label = 1 iff the sigmoid output reaches `threshold` (boundary
    /// inclusive: an exact 0.5 at the default threshold votes attack).
    pub fn predict(&self, d: &Dataset, threshold: f64) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(d)?
            .into_iter()
            .map(|p| u8::from(p >= threshold))
            .collect())
    }

    /// Compare analytic gradients against central finite differences over
    /// the given rows; returns the maximum relative error across all
    /// parameters.
    pub fn gradient_check(&self, d: &Dataset, rows: &[usize], eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Err(Error::Argument("eps must be positive".into()));
        }
        if rows.is_empty() {
            return Err(Error::Argument("gradient check needs at least one row".into()));
        }
        let batch = d.select_rows(rows);
        let xs = self.standardize(&batch)?;
        let ys = batch.labels().to_vec();

        let analytic = self.batch_gradient(&xs, &ys);
        let mut worst = 0.0f64;
        let mut probe = self.clone();
        for i in 0..probe.params.len() {
            let original = probe.params[i];
            probe.params[i] = original + eps;
            let up = probe.batch_loss(&xs, &ys);
            probe.params[i] = original - eps;
            let down = probe.batch_loss(&xs, &ys);
            probe.params[i] = original;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic[i] - numeric).abs()
                / analytic[i].abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
        Ok(worst)
    }

    /// Mean BCE of the model on a dataset, for monitoring.
    pub fn loss_on(&self, d: &Dataset) -> Result<f64> {
        let xs = self.standardize(d)?;
        Ok(self.batch_loss(&xs, d.labels()))
    }
}

/// Mini-batch Adam on BCE for `cfg.epochs` passes; deterministic under
/// `cfg.seed`.
pub fn train_mlp(d: &Dataset, cfg: &MlpConfig) -> Result<MlpModel> {
    train_mlp_steps(d, cfg, None)
}

/// Like [`train_mlp`] with an optional cap on optimizer steps, which the
/// gradient-check harness uses to probe a lightly trained model.
pub fn train_mlp_steps(d: &Dataset, cfg: &MlpConfig, max_steps: Option<usize>) -> Result<MlpModel> {
    if !d.is_encoded() {
        return Err(Error::Argument(
            "dataset holds raw string columns; call encode_categories first".into(),
        ));
    }
    let rows = d.n_rows();
    let attacks = d.attack_count();
    if attacks == 0 || attacks == rows {
        return Err(Error::Training(
            "training data contains a single class".into(),
        ));
    }
    if cfg.hidden == 0 || cfg.batch_size == 0 {
        return Err(Error::Argument("hidden size and batch size must be positive".into()));
    }

    let columns = d.feature_columns();
    let names = columns.iter().map(|c| c.name.clone()).collect();
    let mut model = MlpModel::new_untrained(names, cfg.hidden, cfg.seed);

    // Standardization statistics from the training data only.
    for (i, c) in columns.iter().enumerate() {
        let mean = (0..rows).map(|r| c.value(r)).sum::<f64>() / rows as f64;
        let var = (0..rows).map(|r| (c.value(r) - mean).powi(2)).sum::<f64>() / rows as f64;
        let std = var.sqrt();
        model.means[i] = mean;
        model.scales[i] = if std < 1e-12 { 1.0 } else { std };
    }

    let xs = model.standardize(d)?;
    let ys = d.labels();

    let mut steps = 0usize;
    'training: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..rows).collect();
        let mut shuffle_rng = rng::stream(cfg.seed, &[rng::MLP, 1, epoch as u64]);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut shuffle_rng);

        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            if max_steps.is_some_and(|cap| steps >= cap) {
                break 'training;
            }
            let bx: Vec<Vec<f64>> = batch.iter().map(|&r| xs[r].clone()).collect();
            let by: Vec<u8> = batch.iter().map(|&r| ys[r]).collect();
            let loss = model.batch_loss(&bx, &by);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss in epoch {epoch}, batch {batch_index}"
                )));
            }
            let grad = model.batch_gradient(&bx, &by);
            model.adam_step(&grad, cfg.learning_rate);
            steps += 1;
        }
    }
    Ok(model)
}
