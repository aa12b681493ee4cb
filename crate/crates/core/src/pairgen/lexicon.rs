// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::PairgenError;

/// One certain modal and the uncertain modal that replaces it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalPair {
    pub certain: String,
    pub uncertain: String,
}

impl ModalPair {
    pub fn new(certain: impl Into<String>, uncertain: impl Into<String>) -> Self {
        Self {
            certain: certain.into(),
            uncertain: uncertain.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CasePolicy {
    /// Options inherit the letter case of the masked source token.
    #[default]
    PreserveSourceCase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LexiconRepr {
    pairs: Vec<(String, String)>,
    #[serde(default)]
    case_policy: CasePolicy,
}

/// Paired certain/uncertain modal vocabulary.
///
/// Matching is case-insensitive; the stored strings are kept as given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LexiconRepr", into = "LexiconRepr")]
pub struct Lexicon {
    pairs: Vec<ModalPair>,
    case_policy: CasePolicy,
    #[serde(skip)]
    by_certain: HashMap<String, usize>,
}

impl Lexicon {
    pub fn new(pairs: Vec<ModalPair>, case_policy: CasePolicy) -> Result<Self, PairgenError> {
        if pairs.is_empty() {
            return Err(PairgenError::InvalidLexicon("no modal pairs".into()));
        }
        let mut certain = BTreeSet::new();
        let mut uncertain = BTreeSet::new();
        for p in &pairs {
            for modal in [&p.certain, &p.uncertain] {
                if modal.is_empty() || modal.chars().any(char::is_whitespace) {
                    return Err(PairgenError::InvalidLexicon(format!(
                        "modal {modal:?} is not a single token"
                    )));
                }
            }
            let c = p.certain.to_lowercase();
            let u = p.uncertain.to_lowercase();
            if c == u {
                return Err(PairgenError::InvalidLexicon(format!(
                    "pair ({}, {}) does not contrast",
                    p.certain, p.uncertain
                )));
            }
            if !certain.insert(c) {
                return Err(PairgenError::InvalidLexicon(format!(
                    "certain modal {:?} listed twice",
                    p.certain
                )));
            }
            uncertain.insert(u);
        }
        if let Some(both) = certain.intersection(&uncertain).next() {
            return Err(PairgenError::InvalidLexicon(format!(
                "{both:?} appears on both the certain and the uncertain side"
            )));
        }
        let by_certain = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.certain.to_lowercase(), i))
            .collect();
        Ok(Self {
            pairs,
            case_policy,
            by_certain,
        })
    }

    /// (must, might), (should, could), (will, may), (definitely, possibly).
    pub fn default_pairs() -> Self {
        let pairs = [
            ("must", "might"),
            ("should", "could"),
            ("will", "may"),
            ("definitely", "possibly"),
        ]
        .into_iter()
        .map(|(c, u)| ModalPair::new(c, u))
        .collect();
        Self::new(pairs, CasePolicy::PreserveSourceCase).expect("default lexicon is valid")
    }

    pub fn pairs(&self) -> &[ModalPair] {
        &self.pairs
    }

    pub fn case_policy(&self) -> CasePolicy {
        self.case_policy
    }

    /// Pair whose certain side equals `token` ignoring case.
    pub fn lookup(&self, token: &str) -> Option<&ModalPair> {
        self.by_certain
            .get(&token.to_lowercase())
            .map(|&i| &self.pairs[i])
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::default_pairs()
    }
}

impl TryFrom<LexiconRepr> for Lexicon {
    type Error = PairgenError;

    fn try_from(repr: LexiconRepr) -> Result<Self, Self::Error> {
        let pairs = repr
            .pairs
            .into_iter()
            .map(|(c, u)| ModalPair::new(c, u))
            .collect();
        Lexicon::new(pairs, repr.case_policy)
    }
}

impl From<Lexicon> for LexiconRepr {
    fn from(lex: Lexicon) -> Self {
        Self {
            pairs: lex
                .pairs
                .into_iter()
                .map(|p| (p.certain, p.uncertain))
                .collect(),
            case_policy: lex.case_policy,
        }
    }
}

/// Renders `word` in the letter case of `surface`: all-caps surfaces give
/// all-caps output, a capitalized surface gives a capitalized word, anything
/// else gives lowercase.
pub fn apply_case(surface: &str, word: &str) -> String {
    let letters: Vec<char> = surface.chars().filter(|c| c.is_alphabetic()).collect();
    let all_upper = letters.len() > 1 && letters.iter().all(|c| c.is_uppercase());
    if all_upper {
        return word.to_uppercase();
    }
    if surface.chars().next().is_some_and(char::is_uppercase) {
        return capitalize(word);
    }
    word.to_lowercase()
}

pub(crate) fn capitalize(word: &str) -> String {
    let lower = word.to_lowercase();
    let mut chars = lower.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
