//! The end-to-end feature-engineering pipeline: MDA ranking picks the top-k
//! features, WEDF rewrites the most informative one into `f_mn`, and an
//! optional SF column `f_smn` is appended when the source feature is
//! categorical.
//!
//! Selection never sees held-out data: an inner 80/20 stratified split of
//! the training partition trains the importance forest on the larger part
//! and scores MDA on the smaller, while the WEDF dictionary and the SF
//! common value are fitted on the full training partition.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{split_folds, Dataset};
use crate::forest::{train_forest, ForestConfig};
use crate::importance::{mda_scores, select_top_k};
use crate::sf::{sf_column, SfConfig};
use crate::wedf::{apply_wedf, build_wedf_dictionary, WedfDictionary};
use crate::{rng, Error, Result};

const INNER_FOLDS: usize = 5;

/// MDA feature ranking without leaking evaluation data: the training
/// partition is split 80/20, the importance forest trains on the larger
/// part, and permutation scores are taken on the smaller.
pub fn mda_ranking(
    train: &Dataset,
    seed: u64,
    mda_repeats: usize,
    importance_trees: usize,
) -> Result<crate::importance::ImportanceReport> {
    if train.n_rows() < INNER_FOLDS * 2 {
        return Err(Error::Training(format!(
            "feature ranking needs at least {} rows, got {}",
            INNER_FOLDS * 2,
            train.n_rows()
        )));
    }
    let inner_seed = rng::child_seed(seed, &[rng::INNER_SPLIT]);
    let inner = split_folds(train, INNER_FOLDS, inner_seed)?;
    let importance_train = train.select_rows(&inner.train_rows(0));
    let validation = train.select_rows(&inner.test_rows(0));

    let forest_cfg = ForestConfig {
        n_trees: importance_trees,
        ..Default::default()
    };
    let forest = train_forest(
        &importance_train,
        &forest_cfg,
        rng::child_seed(seed, &[rng::TREE]),
    )?;
    mda_scores(
        &forest,
        &validation,
        mda_repeats,
        rng::child_seed(seed, &[rng::MDA]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemdaConfig {
    /// Features kept by MDA selection.
    pub k: usize,
    /// Decay factor shared by WEDF and SF.
    pub b: f64,
    pub sf_enabled: bool,
    pub sf_peak_at_one: bool,
    /// Seed for the importance forest, inner split, and permutations.
    pub seed: u64,
    /// Permutations averaged per (feature, tree).
    pub mda_repeats: usize,
    /// Trees in the importance forest.
    pub importance_trees: usize,
}

impl Default for LemdaConfig {
    fn default() -> Self {
        LemdaConfig {
            k: 5,
            b: 0.5,
            sf_enabled: false,
            sf_peak_at_one: false,
            seed: 42,
            mda_repeats: 3,
            importance_trees: 100,
        }
    }
}

/// A fitted, deployable transform: the selected feature list (entry 0 is
/// f_m), the WEDF dictionary that replaces it, and the optional SF add-on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemdaPipeline {
    pub selected: Vec<String>,
    pub dictionary: WedfDictionary,
    pub sf: Option<SfConfig>,
    /// MDA score per selected feature, for reporting.
    pub ranking: Vec<(String, f64)>,
    pub config: LemdaConfig,
}

impl LemdaPipeline {
    /// Rank features on `train`, fit the dictionary on f_m, and derive the
    /// SF configuration when enabled.
    pub fn fit(train: &Dataset, cfg: &LemdaConfig) -> Result<LemdaPipeline> {
        let attacks = train.attack_count();
        if attacks == 0 || attacks == train.n_rows() {
            return Err(Error::Training(
                "pipeline fitting needs both classes in the training data".into(),
            ));
        }
        let report = mda_ranking(train, cfg.seed, cfg.mda_repeats, cfg.importance_trees)?;
        let top = select_top_k(&report, cfg.k)?;

        let selected: Vec<String> = top
            .iter()
            .map(|&i| report.feature_names[i].clone())
            .collect();
        let ranking: Vec<(String, f64)> = top
            .iter()
            .map(|&i| (report.feature_names[i].clone(), report.scores[i]))
            .collect();
        let most_informative = selected[0].clone();

        let dictionary = build_wedf_dictionary(train, &most_informative, cfg.b)?;
        let sf = if cfg.sf_enabled {
            let column = train
                .column(&most_informative)
                .expect("selected feature exists");
            if !column.is_categorical() {
                return Err(Error::Config(format!(
                    "SF is enabled but the most informative feature `{most_informative}` is numeric"
                )));
            }
            Some(SfConfig::fit(
                train,
                &most_informative,
                cfg.b,
                cfg.sf_peak_at_one,
            )?)
        } else {
            None
        };

        Ok(LemdaPipeline {
            selected,
            dictionary,
            sf,
            ranking,
            config: cfg.clone(),
        })
    }

    /// The most informative feature (f_m).
    pub fn most_informative(&self) -> &str {
        &self.selected[0]
    }

    /// Feature names a transformed dataset will carry.
    pub fn output_features(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .selected
            .iter()
            .map(|name| {
                if name == self.most_informative() {
                    self.dictionary.output_column()
                } else {
                    name.clone()
                }
            })
            .collect();
        if let Some(sf) = &self.sf {
            names.push(sf.output_column());
        }
        names
    }

    /// Restrict to the selected features, swap f_m for its WEDF scores, and
    /// append the SF column when configured. Row order and labels are
    /// untouched; rows must arrive in temporal order when SF is active.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let restricted = d.select_features(&self.selected)?;
        let sf = match &self.sf {
            Some(cfg) => Some(sf_column(&restricted, cfg)?),
            None => None,
        };
        let mut out = apply_wedf(&restricted, &self.dictionary)?;
        if let Some(column) = sf {
            out = out.with_column(column)?;
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = serde_json::json!({
            "format": PIPELINE_FORMAT,
            "pipeline": self,
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LemdaPipeline> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: serde_json::Value = serde_json::from_str(&text)?;
        let format = doc.get("format").and_then(|f| f.as_str()).unwrap_or("");
        if format != PIPELINE_FORMAT {
            return Err(Error::Schema(format!(
                "unsupported pipeline format `{format}`, expected `{PIPELINE_FORMAT}`"
            )));
        }
        Ok(serde_json::from_value(doc["pipeline"].clone())?)
    }
}

const PIPELINE_FORMAT: &str = "lemda-pipeline-v1";
