// SPDX-License-Identifier: MIT OR Apache-2.0

//! The single declarative config file (TOML).
//!
//! ```toml
//! [pairgen]
//! occurrence_policy = "first"        # or "all"
//! assignment_policy = "certain_is_a" # "certain_is_b", "shuffle"
//! seed = 0
//!
//! [pairgen.lexicon]
//! case_policy = "preserve_source_case"
//! pairs = [["must", "might"], ["should", "could"]]
//!
//! [pairgen.template]
//! preamble = "<|im_start|>user\n"
//! question_line = "\nChoose a replacement for the MASK.\n"
//! option_format = "A) {A} B) {B}"
//! postamble = "\n<|im_end|>\n"
//! answer_suffix_format = "<|im_start|>assistant\n{letter}"
//!
//! [msu]
//! n_resamples = 1000
//! seed = 7                           # required
//!
//! [toy]
//! seed = 0
//! n_layers = 4
//! d_model = 32
//! ```
//!
//! Every section is optional except `msu.seed` when an `[msu]` section is
//! present.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::msu::BootstrapSettings;
use crate::pairgen::{GenerationConfig, Lexicon, PromptTemplate};
use crate::toymodel::ToyConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairgenSection {
    pub lexicon: Lexicon,
    pub template: PromptTemplate,
    #[serde(flatten)]
    pub generation: GenerationConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub pairgen: PairgenSection,
    pub msu: Option<BootstrapSettings>,
    pub toy: ToyConfig,
}

impl ProbeConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.pairgen
            .template
            .validate()
            .map_err(|e| ConfigError::Parse {
                path: origin.to_string(),
                message: e.to_string(),
            })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairgen::{AssignmentPolicy, OccurrencePolicy};

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = ProbeConfig::from_toml("", "inline").unwrap();
        assert_eq!(cfg, ProbeConfig::default());
        assert!(cfg.msu.is_none());
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
[pairgen]
occurrence_policy = "all"
assignment_policy = "shuffle"
seed = 3

[pairgen.lexicon]
pairs = [["must", "might"], ["should", "could"]]

[msu]
seed = 7

[toy]
d_model = 16
n_heads = 2
"#;
        let cfg = ProbeConfig::from_toml(text, "inline").unwrap();
        assert_eq!(cfg.pairgen.generation.occurrence_policy, OccurrencePolicy::All);
        assert_eq!(cfg.pairgen.generation.assignment_policy, AssignmentPolicy::Shuffle);
        assert_eq!(cfg.pairgen.lexicon.pairs().len(), 2);
        assert_eq!(cfg.msu.unwrap().n_resamples, 1000);
        assert_eq!(cfg.toy.d_model, 16);
        assert_eq!(cfg.toy.n_layers, 4);
    }

    #[test]
    fn msu_seed_is_required() {
        assert!(ProbeConfig::from_toml("[msu]\nn_resamples = 10\n", "inline").is_err());
    }

    #[test]
    fn bad_lexicon_is_rejected() {
        let text = "[pairgen.lexicon]\npairs = [[\"must\", \"must\"]]\n";
        assert!(ProbeConfig::from_toml(text, "inline").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ProbeConfig {
            msu: Some(BootstrapSettings::with_seed(5)),
            ..Default::default()
        };
        assert_eq!(ProbeConfig::from_toml(&cfg.to_toml(), "inline").unwrap(), cfg);
    }
}
