// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Lexicon, PairgenError};

pub const MASK_TOKEN: &str = "[MASK]";

/// A lexicon hit inside one sentence.
///
/// `surface` is the token with adjacent punctuation removed; the removed
/// punctuation is kept in `prefix`/`suffix` so masking can put it back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalOccurrence {
    pub sentence_index: usize,
    pub token_index: usize,
    pub surface: String,
    pub matched_certain_modal: String,
    pub prefix: String,
    pub suffix: String,
}

/// Byte span of a whitespace-delimited token.
#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    end: usize,
}

fn token_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push(Span { start: s, end: i });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(Span {
            start: s,
            end: text.len(),
        });
    }
    spans
}

/// Splits a token into (leading punctuation, core, trailing punctuation).
fn strip_punct(token: &str) -> (&str, &str, &str) {
    let is_word = |c: char| c.is_alphanumeric();
    let Some(first) = token.find(is_word) else {
        return (token, "", "");
    };
    let last = token
        .char_indices()
        .filter(|&(_, c)| is_word(c))
        .map(|(i, c)| i + c.len_utf8())
        .next_back()
        .unwrap_or(token.len());
    (&token[..first], &token[first..last], &token[last..])
}

/// Every token whose punctuation-stripped, lowercased form is a certain
/// modal of `lexicon`, left to right. `sentence_index` is left at 0.
pub fn detect_modals(sentence: &str, lexicon: &Lexicon) -> Vec<ModalOccurrence> {
    token_spans(sentence)
        .into_iter()
        .enumerate()
        .filter_map(|(token_index, span)| {
            let (prefix, core, suffix) = strip_punct(&sentence[span.start..span.end]);
            let pair = lexicon.lookup(core)?;
            Some(ModalOccurrence {
                sentence_index: 0,
                token_index,
                surface: core.to_string(),
                matched_certain_modal: pair.certain.clone(),
                prefix: prefix.to_string(),
                suffix: suffix.to_string(),
            })
        })
        .collect()
}

/// Replaces the occurrence's token core with [`MASK_TOKEN`], keeping its
/// punctuation and all whitespace of the sentence untouched.
pub fn mask_occurrence(sentence: &str, occurrence: &ModalOccurrence) -> Result<String, PairgenError> {
    let spans = token_spans(sentence);
    let span = spans.get(occurrence.token_index).ok_or_else(|| {
        PairgenError::InputMismatch(format!(
            "token index {} out of range for a {}-token sentence",
            occurrence.token_index,
            spans.len()
        ))
    })?;
    let token = &sentence[span.start..span.end];
    let (prefix, core, suffix) = strip_punct(token);
    if core != occurrence.surface || prefix != occurrence.prefix || suffix != occurrence.suffix {
        return Err(PairgenError::InputMismatch(format!(
            "token {} is {token:?}, expected {:?}",
            occurrence.token_index, occurrence.surface
        )));
    }
    if sentence.matches(MASK_TOKEN).next().is_some() {
        return Err(PairgenError::InputMismatch(format!(
            "sentence already contains {MASK_TOKEN}"
        )));
    }
    let core_start = span.start + prefix.len();
    let core_end = core_start + core.len();
    let mut out = String::with_capacity(sentence.len() + MASK_TOKEN.len());
    out.push_str(&sentence[..core_start]);
    out.push_str(MASK_TOKEN);
    out.push_str(&sentence[core_end..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairgen::{CasePolicy, ModalPair};

    fn lex(pairs: &[(&str, &str)]) -> Lexicon {
        Lexicon::new(
            pairs.iter().map(|&(c, u)| ModalPair::new(c, u)).collect(),
            CasePolicy::PreserveSourceCase,
        )
        .unwrap()
    }

    const CLAIM: &str =
        "Governments and technology companies must do more to protect online privacy and security.";

    #[test]
    fn finds_the_worked_example_modal() {
        let hits = detect_modals(CLAIM, &lex(&[("must", "might")]));
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].surface, "must");
        assert_eq!(hits[0].token_index, 4);
    }

    #[test]
    fn no_match_is_empty() {
        assert!(detect_modals("The sky is blue.", &Lexicon::default()).is_empty());
    }

    #[test]
    fn multiple_hits_in_order() {
        let l = lex(&[("must", "might"), ("should", "could")]);
        let hits = detect_modals("We must act and we should act.", &l);
        let idx: Vec<usize> = hits.iter().map(|h| h.token_index).collect();
        assert_eq!(idx, vec![1, 5]);
        assert_eq!(hits[1].matched_certain_modal, "should");
    }

    #[test]
    fn masks_worked_example() {
        let hits = detect_modals(CLAIM, &lex(&[("must", "might")]));
        let masked = mask_occurrence(CLAIM, &hits[0]).unwrap();
        assert_eq!(
            masked,
            "Governments and technology companies [MASK] do more to protect online privacy and security."
        );
    }

    #[test]
    fn masks_sentence_initial_and_punctuated_tokens() {
        let l = lex(&[("must", "might")]);
        let s = "Must we?";
        assert_eq!(mask_occurrence(s, &detect_modals(s, &l)[0]).unwrap(), "[MASK] we?");
        let s = "We must, however, go.";
        let hit = &detect_modals(s, &l)[0];
        assert_eq!(hit.suffix, ",");
        assert_eq!(mask_occurrence(s, hit).unwrap(), "We [MASK], however, go.");
        let s = "(MUST)  twice-spaced";
        assert_eq!(
            mask_occurrence(s, &detect_modals(s, &l)[0]).unwrap(),
            "([MASK])  twice-spaced"
        );
    }

    #[test]
    fn out_of_range_occurrence_is_rejected() {
        let l = lex(&[("must", "might")]);
        let mut hit = detect_modals("We must go.", &l).remove(0);
        hit.token_index = 9;
        assert!(matches!(
            mask_occurrence("We must go.", &hit),
            Err(PairgenError::InputMismatch(_))
        ));
        hit.token_index = 0;
        assert!(mask_occurrence("We must go.", &hit).is_err());
    }

    #[test]
    fn punctuation_only_tokens_never_match() {
        assert_eq!(strip_punct("--"), ("--", "", ""));
        assert_eq!(strip_punct("\"must.\""), ("\"", "must", ".\""));
        assert_eq!(strip_punct("don't"), ("", "don't", ""));
    }
}
