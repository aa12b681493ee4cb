// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use super::detect::MASK_TOKEN;
use super::lexicon::capitalize;
use super::PairgenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionLabel {
    A,
    B,
}

impl OptionLabel {
    pub fn other(self) -> Self {
        match self {
            Self::A => Self::B,
            Self::B => Self::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
        }
    }
}

impl fmt::Display for OptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which option letter carries the certain modal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    CertainIsA,
    CertainIsB,
}

impl Assignment {
    pub fn certain_label(self) -> OptionLabel {
        match self {
            Self::CertainIsA => OptionLabel::A,
            Self::CertainIsB => OptionLabel::B,
        }
    }
}

/// Prompt layout, rendered as
/// `preamble + masked_text + question_line + options + postamble + answer_suffix`.
///
/// `option_format` must contain `{A}` and `{B}` once each; option words are
/// shown capitalized there. `answer_suffix_format` must end with the only
/// `{letter}` placeholder, so the two variants differ in their last
/// character alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub preamble: String,
    pub question_line: String,
    pub option_format: String,
    pub postamble: String,
    pub answer_suffix_format: String,
}

impl Default for PromptTemplate {
    /// ChatML user turn holding the question, closed by `<|im_end|>`, with the
    /// answer letter opening the assistant turn.
    fn default() -> Self {
        Self {
            preamble: "<|im_start|>user\n".into(),
            question_line: "\nChoose a replacement for the MASK.\n".into(),
            option_format: "A) {A} B) {B}".into(),
            postamble: "\n<|im_end|>\n".into(),
            answer_suffix_format: "<|im_start|>assistant\n{letter}".into(),
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), PairgenError> {
        for key in ["{A}", "{B}"] {
            if self.option_format.matches(key).count() != 1 {
                return Err(PairgenError::InvalidTemplate(format!(
                    "option_format must contain {key} exactly once"
                )));
            }
        }
        if self.answer_suffix_format.matches("{letter}").count() != 1
            || !self.answer_suffix_format.ends_with("{letter}")
        {
            return Err(PairgenError::InvalidTemplate(
                "answer_suffix_format must end with its only {letter}".into(),
            ));
        }
        Ok(())
    }

    /// Everything up to, but excluding, the answer letter.
    pub fn render_question(&self, masked_text: &str, option_a: &str, option_b: &str) -> String {
        let options = self
            .option_format
            .replace("{A}", &capitalize(option_a))
            .replace("{B}", &capitalize(option_b));
        let suffix_head = self
            .answer_suffix_format
            .strip_suffix("{letter}")
            .unwrap_or(&self.answer_suffix_format);
        let mut out = String::with_capacity(
            self.preamble.len() + masked_text.len() + self.question_line.len() + options.len() + 64,
        );
        out.push_str(&self.preamble);
        out.push_str(masked_text);
        out.push_str(&self.question_line);
        out.push_str(&options);
        out.push_str(&self.postamble);
        out.push_str(suffix_head);
        out
    }
}

/// One claim rendered as a certain/uncertain prompt pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub pair_id: String,
    pub source_claim: String,
    pub masked_text: String,
    pub option_certain: String,
    pub option_uncertain: String,
    pub certain_label: OptionLabel,
    pub prompt_certain: String,
    pub prompt_uncertain: String,
}

impl SentencePair {
    /// `masked_text` with the certain option filled back in.
    pub fn unmasked_certain(&self) -> String {
        self.masked_text.replacen(MASK_TOKEN, &self.option_certain, 1)
    }
}

/// Renders both prompt variants for a masked claim.
///
/// `modal_pair` is `(certain, uncertain)` and is stored as given in
/// `option_certain` / `option_uncertain`.
pub fn build_pair(
    pair_id: impl Into<String>,
    masked_text: &str,
    source_claim: &str,
    modal_pair: (&str, &str),
    assignment: Assignment,
    template: &PromptTemplate,
) -> Result<SentencePair, PairgenError> {
    let masks = masked_text.matches(MASK_TOKEN).count();
    if masks != 1 {
        return Err(PairgenError::MalformedInput(format!(
            "masked text must contain exactly one {MASK_TOKEN}, found {masks}"
        )));
    }
    template.validate()?;
    let (certain, uncertain) = modal_pair;
    let certain_label = assignment.certain_label();
    let (option_a, option_b) = match certain_label {
        OptionLabel::A => (certain, uncertain),
        OptionLabel::B => (uncertain, certain),
    };
    let question = template.render_question(masked_text, option_a, option_b);
    Ok(SentencePair {
        pair_id: pair_id.into(),
        source_claim: source_claim.to_string(),
        masked_text: masked_text.to_string(),
        option_certain: certain.to_string(),
        option_uncertain: uncertain.to_string(),
        certain_label,
        prompt_certain: format!("{question}{certain_label}"),
        prompt_uncertain: format!("{question}{}", certain_label.other()),
    })
}
