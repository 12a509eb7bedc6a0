//! Feature engineering and evaluation toolkit for flow-based intrusion
//! detection.
//!
//! The crate implements the LEMDA feature-engineering method — permutation
//! importance (MDA) feature selection followed by WEDF feature synthesis and
//! an optional sequential sensitivity factor (SF) — next to the baselines it
//! is usually compared against (no reduction, MDI, MDA-only selection, PCA).
//! A from-scratch CART forest, a small MLP, and a k-fold benchmark harness
//! make the whole evaluation loop self-contained.
//!
//! Typical flow:
//!
//! ```
//! use lemda::pipeline::{LemdaConfig, LemdaPipeline};
//! use lemda::synth::SynthConfig;
//!
//! let data = lemda::synth::generate_dataset(&SynthConfig {
//!     rows: 400,
//!     ..SynthConfig::default()
//! })
//! .unwrap();
//! let pipeline = LemdaPipeline::fit(&data, &LemdaConfig::default()).unwrap();
//! let reduced = pipeline.transform(&data).unwrap();
//! assert_eq!(reduced.feature_names().len(), 5);
//! ```
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `lemda` binary for the file-based workflow (`synth`, `fit`,
//! `transform`, `bench`, `report`).

pub mod cli;
pub mod dataset;
mod error;
pub mod eval;
pub mod forest;
pub mod importance;
pub mod mlp;
pub mod pca;
pub mod pipeline;
pub(crate) mod rng;
pub mod sf;
pub mod synth;
pub mod wedf;

pub use error::{Error, Result};
