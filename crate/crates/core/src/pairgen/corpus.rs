// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    apply_case, build_pair, detect_modals, mask_occurrence, Assignment, CasePolicy, Lexicon,
    OptionLabel, PairgenError, PromptTemplate, SentencePair,
};
use crate::rng::ProbeRng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccurrencePolicy {
    /// One pair per sentence, from its first lexicon hit.
    #[default]
    First,
    /// One pair per lexicon hit.
    All,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    #[default]
    CertainIsA,
    CertainIsB,
    /// Letter drawn per pair from the seeded generator.
    Shuffle,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub occurrence_policy: OccurrencePolicy,
    pub assignment_policy: AssignmentPolicy,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub input_sentences: usize,
    pub matched_sentences: usize,
    pub emitted_pairs: usize,
    /// Emitted pairs per certain modal.
    pub modal_frequencies: BTreeMap<String, usize>,
    pub certain_label_a: usize,
    pub certain_label_b: usize,
    pub occurrence_policy: OccurrencePolicy,
    pub assignment_policy: AssignmentPolicy,
    /// Set when every pair puts the certain modal under the same letter, so
    /// letter identity and modality cannot be told apart downstream.
    pub letter_modality_confounded: bool,
}

/// Streams pairs into `emit` as they are produced.
///
/// Claims arrive as results so reader failures surface with their own line
/// number; the first error stops generation.
pub fn generate_corpus_with<I, F>(
    claims: I,
    lexicon: &Lexicon,
    template: &PromptTemplate,
    config: &GenerationConfig,
    mut emit: F,
) -> Result<GenerationStats, PairgenError>
where
    I: IntoIterator<Item = Result<String, PairgenError>>,
    F: FnMut(SentencePair) -> Result<(), PairgenError>,
{
    template.validate()?;
    let mut stats = GenerationStats {
        occurrence_policy: config.occurrence_policy,
        assignment_policy: config.assignment_policy,
        ..Default::default()
    };
    for (sentence_index, claim) in claims.into_iter().enumerate() {
        let claim = claim?;
        stats.input_sentences += 1;
        let mut hits = detect_modals(&claim, lexicon);
        if hits.is_empty() {
            continue;
        }
        stats.matched_sentences += 1;
        if config.occurrence_policy == OccurrencePolicy::First {
            hits.truncate(1);
        }
        let mut rng = ProbeRng::derived(config.seed, sentence_index as u64);
        for mut hit in hits {
            hit.sentence_index = sentence_index;
            let masked = mask_occurrence(&claim, &hit)?;
            let pair = lexicon
                .lookup(&hit.surface)
                .expect("detected modal is in the lexicon");
            let (certain, uncertain) = match lexicon.case_policy() {
                CasePolicy::PreserveSourceCase => (
                    apply_case(&hit.surface, &pair.certain),
                    apply_case(&hit.surface, &pair.uncertain),
                ),
            };
            let assignment = match config.assignment_policy {
                AssignmentPolicy::CertainIsA => Assignment::CertainIsA,
                AssignmentPolicy::CertainIsB => Assignment::CertainIsB,
                AssignmentPolicy::Shuffle if rng.coin() => Assignment::CertainIsB,
                AssignmentPolicy::Shuffle => Assignment::CertainIsA,
            };
            let pair_id = format!("s{:06}-t{:03}", sentence_index, hit.token_index);
            let built = build_pair(
                pair_id,
                &masked,
                &claim,
                (&certain, &uncertain),
                assignment,
                template,
            )?;
            *stats
                .modal_frequencies
                .entry(pair.certain.to_lowercase())
                .or_default() += 1;
            match built.certain_label {
                OptionLabel::A => stats.certain_label_a += 1,
                OptionLabel::B => stats.certain_label_b += 1,
            }
            stats.emitted_pairs += 1;
            emit(built)?;
        }
    }
    stats.letter_modality_confounded =
        stats.emitted_pairs > 0 && (stats.certain_label_a == 0 || stats.certain_label_b == 0);
    Ok(stats)
}

/// Collects every pair in input order.
pub fn generate_corpus<I>(
    claims: I,
    lexicon: &Lexicon,
    template: &PromptTemplate,
    config: &GenerationConfig,
) -> Result<(Vec<SentencePair>, GenerationStats), PairgenError>
where
    I: IntoIterator<Item = Result<String, PairgenError>>,
{
    let mut pairs = Vec::new();
    let stats = generate_corpus_with(claims, lexicon, template, config, |p| {
        pairs.push(p);
        Ok(())
    })?;
    Ok((pairs, stats))
}

#[derive(Deserialize)]
struct ClaimRecord {
    claim: String,
}

/// Reads `{"claim": ...}` lines. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn read_claims_jsonl<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<String, PairgenError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line_no = i + 1;
            match line {
                Err(source) => Some(Err(PairgenError::Io {
                    line: line_no,
                    source,
                })),
                Ok(text) if text.trim().is_empty() => None,
                Ok(text) => Some(
                    serde_json::from_str::<ClaimRecord>(&text)
                        .map(|r| r.claim)
                        .map_err(|e| PairgenError::MalformedRecord {
                            line: line_no,
                            message: e.to_string(),
                        }),
                ),
            }
        })
}

/// One JSON object per line, `\n` terminated.
pub fn write_pairs_jsonl<W: Write>(
    mut writer: W,
    pairs: &[SentencePair],
) -> Result<(), PairgenError> {
    for (index, pair) in pairs.iter().enumerate() {
        let line = serde_json::to_string(pair).expect("pairs serialize");
        writer
            .write_all(line.as_bytes())
            .and_then(|()| writer.write_all(b"\n"))
            .map_err(|source| PairgenError::Sink { index, source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(claims: &[&str]) -> Vec<Result<String, PairgenError>> {
        claims.iter().map(|c| Ok(c.to_string())).collect()
    }

    #[test]
    fn counts_matches() {
        let claims = ok(&[
            "We must act now.",
            "The sky is blue.",
            "Everyone must vote, and we should help.",
        ]);
        let (pairs, stats) = generate_corpus(
            claims,
            &Lexicon::default(),
            &PromptTemplate::default(),
            &GenerationConfig::default(),
        )
        .unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(stats.input_sentences, 3);
        assert_eq!(stats.matched_sentences, 2);
        assert_eq!(stats.modal_frequencies["must"], 2);
        assert!(stats.letter_modality_confounded);
    }

    #[test]
    fn all_policy_emits_every_hit() {
        let config = GenerationConfig {
            occurrence_policy: OccurrencePolicy::All,
            ..Default::default()
        };
        let claims = ok(&["Everyone must vote, and we should help."]);
        let (pairs, stats) =
            generate_corpus(claims, &Lexicon::default(), &PromptTemplate::default(), &config).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(stats.matched_sentences, 1);
        assert_ne!(pairs[0].pair_id, pairs[1].pair_id);
        assert_eq!(pairs[1].option_uncertain, "could");
    }

    #[test]
    fn empty_stream_gives_zero_stats() {
        let (pairs, stats) = generate_corpus(
            Vec::new(),
            &Lexicon::default(),
            &PromptTemplate::default(),
            &GenerationConfig::default(),
        )
        .unwrap();
        assert!(pairs.is_empty());
        assert_eq!(stats.input_sentences, 0);
        assert_eq!(stats.emitted_pairs, 0);
        assert!(!stats.letter_modality_confounded);
    }

    #[test]
    fn shuffle_uses_both_letters_deterministically() {
        let claims: Vec<String> = (0..40).map(|i| format!("Claim {i} must hold.")).collect();
        let config = GenerationConfig {
            assignment_policy: AssignmentPolicy::Shuffle,
            seed: 11,
            ..Default::default()
        };
        let run = || {
            generate_corpus(
                claims.iter().cloned().map(Ok),
                &Lexicon::default(),
                &PromptTemplate::default(),
                &config,
            )
            .unwrap()
        };
        let (a, stats) = run();
        let (b, _) = run();
        assert_eq!(a, b);
        assert!(stats.certain_label_a > 0 && stats.certain_label_b > 0);
        assert!(!stats.letter_modality_confounded);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let input = b"{\"claim\": \"We must go.\"}\n\n{\"text\": 1}\n";
        let items: Vec<_> = read_claims_jsonl(&input[..]).collect();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].as_ref().unwrap(), "We must go.");
        match &items[1] {
            Err(PairgenError::MalformedRecord { line, .. }) => assert_eq!(*line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = generate_corpus(
            items,
            &Lexicon::default(),
            &PromptTemplate::default(),
            &GenerationConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("line 3"));
    }

    #[test]
    fn case_of_source_is_kept() {
        let (pairs, _) = generate_corpus(
            ok(&["Must we really?"]),
            &Lexicon::default(),
            &PromptTemplate::default(),
            &GenerationConfig::default(),
        )
        .unwrap();
        assert_eq!(pairs[0].option_certain, "Must");
        assert_eq!(pairs[0].option_uncertain, "Might");
        assert_eq!(pairs[0].unmasked_certain(), "Must we really?");
    }
}
