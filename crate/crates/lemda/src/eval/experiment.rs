//! Cross-validated experiment runner.
//!
//! Per fold: fit the feature method on the training rows only, transform
//! both partitions, train the model, predict the held-out fold, and record
//! confusion counts, metrics, and wall-clock training/detection seconds.
//! Folds run in parallel; every randomized step derives its seed from
//! `(run seed, fold, method, model)`, so two runs with the same
//! configuration produce identical predictions while the timing fields
//! vary freely.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FoldMode, FoldPlan};
use crate::forest::{train_forest, ForestConfig};
use crate::importance::select_top_k;
use crate::mlp::{train_mlp, MlpConfig};
use crate::pca::{fit_pca, PcaModel};
use crate::pipeline::{mda_ranking, LemdaConfig, LemdaPipeline};
use crate::{rng, Error, Result};

use super::{confusion, SafetyWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Base,
    Pca,
    Mda,
    Lemda,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Base, Method::Pca, Method::Mda, Method::Lemda];

    pub fn parse(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Method::Base),
            "pca" => Ok(Method::Pca),
            "mda" => Ok(Method::Mda),
            "lemda" => Ok(Method::Lemda),
            other => Err(Error::Argument(format!(
                "unknown method `{other}` (expected base, pca, mda, or lemda)"
            ))),
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Method::Base => 0,
            Method::Pca => 1,
            Method::Mda => 2,
            Method::Lemda => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Base => "Base",
            Method::Pca => "PCA",
            Method::Mda => "MDA",
            Method::Lemda => "LEMDA",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Dt,
    Rf,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Dt, ModelKind::Rf, ModelKind::Mlp];

    pub fn parse(s: &str) -> Result<ModelKind> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Ok(ModelKind::Dt),
            "rf" => Ok(ModelKind::Rf),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Argument(format!(
                "unknown model `{other}` (expected dt, rf, or mlp)"
            ))),
        }
    }

    fn tag(&self) -> u64 {
        match self {
            ModelKind::Dt => 0,
            ModelKind::Rf => 1,
            ModelKind::Mlp => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelKind::Dt => "DT",
            ModelKind::Rf => "RF",
            ModelKind::Mlp => "MLP",
        };
        f.write_str(name)
    }
}

/// Full experiment configuration, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub dataset_id: String,
    pub seed: u64,
    /// Features kept by MDA/LEMDA selection.
    pub k_features: usize,
    /// WEDF/SF decay factor.
    pub b: f64,
    pub sf_enabled: bool,
    pub sf_peak_at_one: bool,
    pub pca_threshold: f64,
    pub mda_repeats: usize,
    pub importance_trees: usize,
    pub rf_trees: usize,
    pub mlp: MlpConfig,
    pub safety: SafetyWeights,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            dataset_id: "dataset".into(),
            seed: 42,
            k_features: 5,
            b: 0.5,
            sf_enabled: false,
            sf_peak_at_one: false,
            pca_threshold: 0.95,
            mda_repeats: 3,
            importance_trees: 100,
            rf_trees: 100,
            mlp: MlpConfig::default(),
            safety: SafetyWeights::default(),
        }
    }
}

impl EvalConfig {
    fn lemda(&self, seed: u64) -> LemdaConfig {
        LemdaConfig {
            k: self.k_features,
            b: self.b,
            sf_enabled: self.sf_enabled,
            sf_peak_at_one: self.sf_peak_at_one,
            seed,
            mda_repeats: self.mda_repeats,
            importance_trees: self.importance_trees,
        }
    }
}

/// One fold's outcome. Metric fractions are rounded to six decimals at
/// construction so reports serialize identically across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: f64,
    pub f1: f64,
    pub safety: f64,
    pub train_s: f64,
    pub detect_s: f64,
}

/// Arithmetic means over folds (same six-decimal rounding rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub safety: f64,
    pub train_s: f64,
    pub detect_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub method: Method,
    pub model: ModelKind,
    pub fold_mode: FoldMode,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
    pub config: EvalConfig,
}

/// A whole `bench` invocation: configuration echo plus one report per
/// (method, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: serde_json::Value,
    pub reports: Vec<ExperimentReport>,
}

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn mean6(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    round6(values.iter().sum::<f64>() / values.len() as f64)
}

enum FittedTransform {
    Identity,
    Pca(PcaModel),
    Select(Vec<String>),
    Lemda(LemdaPipeline),
}

impl FittedTransform {
    fn fit(method: Method, train: &Dataset, cfg: &EvalConfig, seed: u64) -> Result<Self> {
        match method {
            Method::Base => Ok(FittedTransform::Identity),
            Method::Pca => Ok(FittedTransform::Pca(fit_pca(train, cfg.pca_threshold)?)),
            Method::Mda => {
                let report =
                    mda_ranking(train, seed, cfg.mda_repeats, cfg.importance_trees)?;
                let top = select_top_k(&report, cfg.k_features)?;
                Ok(FittedTransform::Select(
                    top.iter().map(|&i| report.feature_names[i].clone()).collect(),
                ))
            }
            Method::Lemda => Ok(FittedTransform::Lemda(LemdaPipeline::fit(
                train,
                &cfg.lemda(seed),
            )?)),
        }
    }

    fn apply(&self, d: &Dataset) -> Result<Dataset> {
        match self {
            FittedTransform::Identity => Ok(d.clone()),
            FittedTransform::Pca(model) => model.transform(d),
            FittedTransform::Select(names) => d.select_features(names),
            FittedTransform::Lemda(pipeline) => pipeline.transform(d),
        }
    }
}

enum TrainedModel {
    Forest(crate::forest::ForestModel),
    Mlp(crate::mlp::MlpModel),
}

impl TrainedModel {
    fn fit(model: ModelKind, train: &Dataset, cfg: &EvalConfig, seed: u64) -> Result<Self> {
        match model {
            ModelKind::Dt => Ok(TrainedModel::Forest(train_forest(
                train,
                &ForestConfig::single_tree(),
                seed,
            )?)),
            ModelKind::Rf => Ok(TrainedModel::Forest(train_forest(
                train,
                &ForestConfig {
                    n_trees: cfg.rf_trees,
                    ..Default::default()
                },
                seed,
            )?)),
            ModelKind::Mlp => Ok(TrainedModel::Mlp(train_mlp(
                train,
                &MlpConfig {
                    seed,
                    ..cfg.mlp.clone()
                },
            )?)),
        }
    }

    fn predict(&self, d: &Dataset) -> Result<Vec<u8>> {
        match self {
            TrainedModel::Forest(f) => f.predict(d),
            TrainedModel::Mlp(m) => m.predict(d, 0.5),
        }
    }
}

/// Run one (method, model) over every fold of the plan.
pub fn run_experiment(
    d: &Dataset,
    method: Method,
    model: ModelKind,
    plan: &FoldPlan,
    cfg: &EvalConfig,
) -> Result<ExperimentReport> {
    if plan.n_rows() != d.n_rows() {
        return Err(Error::Argument(format!(
            "fold plan covers {} rows, dataset has {}",
            plan.n_rows(),
            d.n_rows()
        )));
    }

    let folds: Vec<FoldReport> = (0..plan.k)
        .into_par_iter()
        .map(|fold| run_fold(d, method, model, plan, cfg, fold).map_err(|e| e.in_fold(fold)))
        .collect::<Result<_>>()?;

    let aggregate = Aggregate {
        tp: mean6(folds.iter().map(|f| f.tp as f64)),
        tn: mean6(folds.iter().map(|f| f.tn as f64)),
        fp: mean6(folds.iter().map(|f| f.fp as f64)),
        fn_: mean6(folds.iter().map(|f| f.fn_ as f64)),
        accuracy: mean6(folds.iter().map(|f| f.accuracy)),
        f1: mean6(folds.iter().map(|f| f.f1)),
        safety: mean6(folds.iter().map(|f| f.safety)),
        train_s: mean6(folds.iter().map(|f| f.train_s)),
        detect_s: mean6(folds.iter().map(|f| f.detect_s)),
    };

    Ok(ExperimentReport {
        dataset: cfg.dataset_id.clone(),
        method,
        model,
        fold_mode: plan.mode,
        folds,
        aggregate,
        config: cfg.clone(),
    })
}

fn run_fold(
    d: &Dataset,
    method: Method,
    model: ModelKind,
    plan: &FoldPlan,
    cfg: &EvalConfig,
    fold: usize,
) -> Result<FoldReport> {
    // Fitting only ever receives this physical copy of the training rows;
    // test rows are unreachable by construction.
    let train = d.select_rows(&plan.train_rows(fold));
    let test = d.select_rows(&plan.test_rows(fold));
    let seed = rng::child_seed(
        cfg.seed,
        &[rng::EXPERIMENT, fold as u64, method.tag(), model.tag()],
    );

    let transform = FittedTransform::fit(method, &train, cfg, seed)?;
    let train_view = transform.apply(&train)?;
    let test_view = transform.apply(&test)?;

    let start = Instant::now();
    let trained = TrainedModel::fit(model, &train_view, cfg, rng::child_seed(seed, &[1]))?;
    let train_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let pred = trained.predict(&test_view)?;
    let detect_s = start.elapsed().as_secs_f64();

    let c = confusion(&pred, test.labels())?;
    Ok(FoldReport {
        fold,
        tp: c.tp,
        tn: c.tn,
        fp: c.fp,
        fn_: c.fn_,
        accuracy: round6(c.accuracy()?),
        f1: round6(c.f1_score()),
        safety: round6(c.safety_score(&cfg.safety)?),
        train_s: round6(train_s),
        detect_s: round6(detect_s),
    })
}

/// Run the full method x model matrix on one dataset and plan.
pub fn run_bench(
    d: &Dataset,
    methods: &[Method],
    models: &[ModelKind],
    plan: &FoldPlan,
    cfg: &EvalConfig,
) -> Result<Vec<ExperimentReport>> {
    let mut reports = Vec::with_capacity(methods.len() * models.len());
    for &model in models {
        for &method in methods {
            reports.push(run_experiment(d, method, model, plan, cfg)?);
        }
    }
    Ok(reports)
}

/// Plain-text table of aggregate results, one block per dataset.
pub fn render_table(reports: &[ExperimentReport]) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let mut datasets: Vec<&str> = reports.iter().map(|r| r.dataset.as_str()).collect();
    datasets.dedup();

    for dataset in datasets {
        let rows: Vec<&ExperimentReport> =
            reports.iter().filter(|r| r.dataset == dataset).collect();
        let mode = match rows[0].fold_mode {
            FoldMode::Stratified => "stratified",
            FoldMode::Blocks => "contiguous blocks",
        };
        writeln!(
            out,
            "{dataset} ({} folds, {mode}; fold means)",
            rows[0].folds.len()
        )
        .unwrap();
        writeln!(
            out,
            "{:<6} {:<7} {:>10} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9} {:>10} {:>11}",
            "Model", "Method", "TP", "FN", "FP", "TN", "Accuracy", "F1", "Safety", "Train(s)", "Detect(s)"
        )
        .unwrap();
        let mut last_model = None;
        for r in rows {
            let model = if last_model == Some(r.model) {
                String::new()
            } else {
                last_model = Some(r.model);
                r.model.to_string()
            };
            writeln!(
                out,
                "{:<6} {:<7} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>8.3}% {:>8.3}% {:>8.3}% {:>10.6} {:>11.6}",
                model,
                r.method.to_string(),
                r.aggregate.tp,
                r.aggregate.fn_,
                r.aggregate.fp,
                r.aggregate.tn,
                r.aggregate.accuracy * 100.0,
                r.aggregate.f1 * 100.0,
                r.aggregate.safety * 100.0,
                r.aggregate.train_s,
                r.aggregate.detect_s,
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}
