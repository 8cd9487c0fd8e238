//! Derivation and evaluation of three-stratum fall-risk assessment scales
//! from instrumented Timed Up and Go (ITUG) features.
//!
//! The pipeline: ingest a feature catalog and cohort CSV, enlarge the
//! faller group with Gaussian-perturbed synthetic records, select
//! discriminative features with an SVM-gated subsampling loop, derive
//! per-feature tertile thresholds from the training split, stratify
//! subjects into low/medium/high risk by mode vote, and evaluate scales
//! against faller outcomes with an exact contingency-table test.
//!
//! Every randomized stage is deterministic given the master seed (see
//! [`seeding`]), and all hypothesis tests are implemented natively in
//! [`stats`].

pub mod augment;
pub mod catalog;
pub mod dataset;
pub mod demo;
pub mod error;
pub mod evaluation;
pub mod manifest;
pub mod scale;
pub mod seeding;
pub mod selection;
pub mod stats;
pub mod svm;

pub use error::{Error, Result};
