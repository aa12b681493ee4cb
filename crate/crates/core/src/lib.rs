// SPDX-License-Identifier: MIT OR Apache-2.0

//! # modalprobe
//!
//! Tools for measuring how a language model's internal representations
//! respond to epistemic modality in its input.
//!
//! - [`pairgen`] turns claim sentences into certain/uncertain prompt pairs
//!   ("must" vs "might" offered as a masked multiple-choice question).
//! - [`tensorio`] stores final-token residual-stream activations of both
//!   prompt variants, per layer, in a plain binary format.
//! - [`msu`] computes the per-layer mean distance between the two variants'
//!   activations (MSU), with bootstrap intervals and depth-trend statistics.
//! - [`pca`] projects each layer onto its two leading principal components,
//!   scores class separability and flags cross-layer sign inversions.
//! - [`toymodel`] is a tiny seeded transformer for end-to-end runs without
//!   real checkpoints.

pub mod config;
pub mod matrix;
pub mod msu;
pub mod pairgen;
pub mod pca;
pub mod rng;
pub mod tensorio;
pub mod toymodel;

pub use config::{ConfigError, ProbeConfig};
pub use matrix::{Element, Matrix};
pub use msu::{
    average_msu, bootstrap_ci, msu_layer, msu_profile, trend_stats, BootstrapSettings, LayerMsu,
    MsuError, MsuProfile, TrendStats,
};
pub use pairgen::{
    build_pair, detect_modals, generate_corpus, mask_occurrence, GenerationConfig,
    GenerationStats, Lexicon, ModalOccurrence, PairgenError, PromptTemplate, SentencePair,
};
pub use pca::{
    analyze_layer, detect_inversion, fit_pca2, project, InversionReport, Pca2, PcaError,
    PcaLayerResult, PcaSummary,
};
pub use rng::ProbeRng;
pub use tensorio::{read_run, write_run, ActivationRun, Arm, RunManifest, RunReader, TensorIoError};
pub use toymodel::{tokenize, ToyConfig, ToyError, ToyModel};
