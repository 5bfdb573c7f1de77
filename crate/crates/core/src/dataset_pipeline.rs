//! Corpus ingestion, pair-file IO, word error rate, and the translation
//! quality filters applied to generated and translated pair streams.
//!
//! A translated pair survives filtering iff (a) its spoken side kept
//! spoken form (no digits) and its written side kept every entity, (b) the
//! word error rate between the non-entity segments of its two renditions
//! is within threshold, and (c) every number-word run on the spoken side
//! resolves to a source entity value in the target lexicon.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{LocaleProfile, PairRecord};
use crate::itn_rules::SpokenParser;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u64,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid UTF-8 at byte offset {offset} in {path}")]
    InvalidUtf8 { path: String, offset: usize },
    #[error("malformed JSON line {line} in {path}: {message}")]
    BadRecord {
        path: String,
        line: usize,
        message: String,
    },
    #[error("empty reference in word error rate")]
    EmptyReference,
    #[error("misaligned streams at position {position}: source id {source_id}, translated id {translated_id}")]
    Misaligned {
        position: usize,
        source_id: u64,
        translated_id: u64,
    },
    #[error("streams have different lengths: source {source_len}, translated {translated_len}")]
    LengthMismatch {
        source_len: usize,
        translated_len: usize,
    },
}

/// Read a one-sentence-per-line UTF-8 corpus. Lines are trimmed, empty
/// lines dropped, and the original 1-based line numbers kept as ids.
pub fn ingest<P: AsRef<Path>>(path: P) -> Result<Vec<Sentence>, PipelineError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| PipelineError::InvalidUtf8 {
        path: path.display().to_string(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                None
            } else {
                Some(Sentence {
                    id: (i + 1) as u64,
                    text: trimmed.to_string(),
                })
            }
        })
        .collect())
}

/// Token-level minimum edit distance (substitutions, insertions,
/// deletions all cost one).
pub fn edit_distance<T: AsRef<str>>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let cost = usize::from(ta.as_ref() != tb.as_ref());
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Word error rate: edit distance over the reference length. May exceed 1
/// when the hypothesis is much longer than the reference.
pub fn wer<T: AsRef<str>>(reference: &[T], hypothesis: &[T]) -> Result<f64, PipelineError> {
    if reference.is_empty() {
        return Err(PipelineError::EmptyReference);
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

/// WER between an original sentence and its back-translation; callers
/// threshold the result.
pub fn back_translation_check(original: &str, back: &str) -> Result<f64, PipelineError> {
    let orig: Vec<&str> = original.split_whitespace().collect();
    let back: Vec<&str> = back.split_whitespace().collect();
    wer(&orig, &back)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    SpokenWrittenMismatch,
    HighWer,
    ConformityFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FilterReport {
    pub total: u64,
    pub kept: u64,
    pub rejected_by_reason: BTreeMap<RejectReason, u64>,
}

impl FilterReport {
    pub fn rejected(&self) -> u64 {
        self.rejected_by_reason.values().sum()
    }
}

fn contains_digit(s: &str) -> bool {
    s.bytes().any(|b| b.is_ascii_digit())
}

/// Count maximal digit-bearing runs in written text: "25 000,00" is one
/// run when the separators belong to the locale, "9 ... 10" is two.
pub(crate) fn written_entity_count(text: &str, profile: &LocaleProfile) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut i = 0;
    let joiner = |c: char| {
        profile.group_separators.contains(&c)
            || c == profile.decimal_separator
            || matches!(c, ':' | '/' | '-' | 'h' | '.')
    };
    while i < chars.len() {
        if chars[i].is_ascii_digit() {
            count += 1;
            let mut j = i + 1;
            while j < chars.len() {
                if chars[j].is_ascii_digit() {
                    j += 1;
                } else if joiner(chars[j]) && j + 1 < chars.len() && chars[j + 1].is_ascii_digit() {
                    j += 2;
                } else {
                    break;
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
    count
}

fn normalize_token(tok: &str) -> Option<String> {
    let trimmed = tok.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_lowercase())
    }
}

/// Non-entity tokens of a written sentence: tokens with digits dropped,
/// the rest case- and punctuation-normalized so the comparison scores
/// words, not tokenization.
fn mask_written(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|t| !contains_digit(t))
        .filter_map(normalize_token)
        .collect()
}

/// Non-entity tokens of a spoken sentence: number-word runs dropped via
/// the target lexicon. A single stranded token between two dropped runs
/// ("otto [o] uno") belongs to the entity region and is dropped too.
fn mask_spoken(tokens: &[String], parser: &SpokenParser) -> Vec<String> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut keep = vec![true; tokens.len()];
    for (start, end, _) in parser.number_runs(&lowered) {
        for flag in &mut keep[start..end] {
            *flag = false;
        }
    }
    for i in 1..tokens.len().saturating_sub(1) {
        if keep[i] && !keep[i - 1] && !keep[i + 1] {
            keep[i] = false;
        }
    }
    tokens
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .filter_map(|(t, _)| normalize_token(t))
        .collect()
}

fn source_entity_digits(record: &PairRecord) -> Vec<String> {
    record
        .pair
        .alignments
        .iter()
        .map(|a| crate::evaluator::canonical_digits(&a.span.value))
        .collect()
}

/// Apply the three quality criteria to aligned source/translated streams.
/// Criteria are checked in order (mismatch, WER, conformity) and each
/// rejection is attributed to the first criterion it fails.
pub fn filter_pairs(
    source: &[PairRecord],
    translated: &[PairRecord],
    target_locale: &Arc<LocaleProfile>,
    wer_threshold: f64,
) -> Result<(Vec<PairRecord>, FilterReport), PipelineError> {
    if source.len() != translated.len() {
        return Err(PipelineError::LengthMismatch {
            source_len: source.len(),
            translated_len: translated.len(),
        });
    }
    let parser = SpokenParser::new(Arc::clone(target_locale));
    let mut kept = Vec::new();
    let mut rejected: BTreeMap<RejectReason, u64> = BTreeMap::new();
    for (position, (src, tr)) in source.iter().zip(translated).enumerate() {
        if src.id != tr.id {
            return Err(PipelineError::Misaligned {
                position,
                source_id: src.id,
                translated_id: tr.id,
            });
        }
        let reason = judge_pair(src, tr, target_locale, &parser, wer_threshold);
        match reason {
            None => kept.push(tr.clone()),
            Some(r) => *rejected.entry(r).or_insert(0) += 1,
        }
    }
    let report = FilterReport {
        total: source.len() as u64,
        kept: kept.len() as u64,
        rejected_by_reason: rejected,
    };
    debug_assert_eq!(report.kept + report.rejected(), report.total);
    Ok((kept, report))
}

fn judge_pair(
    src: &PairRecord,
    tr: &PairRecord,
    target_locale: &LocaleProfile,
    parser: &SpokenParser,
    wer_threshold: f64,
) -> Option<RejectReason> {
    let source_digits = source_entity_digits(src);
    let source_count = if source_digits.is_empty() {
        written_entity_count(&src.pair.written, target_locale)
    } else {
        source_digits.len()
    };

    // (a) spoken/written mismatch
    let spoken_has_digits = tr.pair.spoken.iter().any(|t| contains_digit(t));
    let translated_count = written_entity_count(&tr.pair.written, target_locale);
    if spoken_has_digits || translated_count != source_count {
        return Some(RejectReason::SpokenWrittenMismatch);
    }

    // (b) WER over non-entity segments of the two translated renditions
    let written_masked = mask_written(&tr.pair.written);
    let spoken_masked = mask_spoken(&tr.pair.spoken, parser);
    let rate = if written_masked.is_empty() && spoken_masked.is_empty() {
        0.0
    } else if written_masked.is_empty() {
        spoken_masked.len() as f64
    } else {
        edit_distance(&written_masked, &spoken_masked) as f64 / written_masked.len() as f64
    };
    if rate > wer_threshold {
        return Some(RejectReason::HighWer);
    }

    // (c) conformity: every source entity value must be recoverable from
    // the target number words
    if !source_digits.is_empty() {
        let lowered: Vec<String> = tr.pair.spoken.iter().map(|t| t.to_lowercase()).collect();
        let mut runs: Vec<String> = parser
            .number_runs(&lowered)
            .into_iter()
            .map(|(_, _, d)| d)
            .collect();
        for digits in &source_digits {
            match runs.iter().position(|r| r == digits) {
                Some(idx) => {
                    runs.remove(idx);
                }
                None => return Some(RejectReason::ConformityFailure),
            }
        }
    }
    None
}

/// Read a JSON Lines pair file.
pub fn read_pair_file<P: AsRef<Path>>(path: P) -> Result<Vec<PairRecord>, PipelineError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| PipelineError::InvalidUtf8 {
        path: path.display().to_string(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord =
            serde_json::from_str(line).map_err(|e| PipelineError::BadRecord {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        out.push(record);
    }
    Ok(out)
}

/// Write pair records as JSON Lines (UTF-8, LF).
pub fn write_pair_file<P: AsRef<Path>>(
    path: P,
    records: &[PairRecord],
) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| PipelineError::Unwritable {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("pair records serialize");
        w.write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|source| PipelineError::Unwritable {
                path: path.display().to_string(),
                source,
            })?;
    }
    w.flush().map_err(|source| PipelineError::Unwritable {
        path: path.display().to_string(),
        source,
    })
}
