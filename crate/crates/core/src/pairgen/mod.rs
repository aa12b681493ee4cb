// SPDX-License-Identifier: MIT OR Apache-2.0

//! Contrastive certain/uncertain prompt pairs.
//!
//! A claim sentence is scanned for a certain-side modal from the
//! [`Lexicon`], the hit is replaced by `[MASK]`, and the masked sentence is
//! rendered twice through a [`PromptTemplate`] as a two-option
//! multiple-choice question. The two renderings differ only in the answer
//! letter appended at the very end: one selects the certain modal, the
//! other the uncertain one.

mod corpus;
mod detect;
mod lexicon;
mod template;

use thiserror::Error;

pub use corpus::{
    generate_corpus, generate_corpus_with, read_claims_jsonl, write_pairs_jsonl,
    AssignmentPolicy, GenerationConfig, GenerationStats, OccurrencePolicy,
};
pub use detect::{detect_modals, mask_occurrence, ModalOccurrence, MASK_TOKEN};
pub use lexicon::{apply_case, CasePolicy, Lexicon, ModalPair};
pub use template::{build_pair, Assignment, OptionLabel, PromptTemplate, SentencePair};

#[derive(Debug, Error)]
pub enum PairgenError {
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),
    #[error("occurrence does not match sentence: {0}")]
    InputMismatch(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("writing pair {index}: {source}")]
    Sink {
        index: usize,
        #[source]
        source: std::io::Error,
    },
}

impl PairgenError {
    /// True for errors caused by the content of the inputs rather than the
    /// environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Self::Io { .. } | Self::Sink { .. })
    }
}
