//! Shared value types: the entity-class taxonomy, canonical entity values,
//! located spans, spoken/written pairs and locale profiles.
//!
//! Everything here is immutable after construction and safe to share across
//! worker threads without synchronization.

mod locale;
mod value;

pub use locale::{
    builtin_locale, builtin_locale_names, load_locale, resolve_locale, ClockPreference,
    CurrencyRender, DateOrder, LocaleError, LocaleProfile, NumberLexicon, NumberWordEntry,
    NumberWordRole, OrdinalStyle, SmallCardinalPolicy, SymbolPosition, TimeStyle, UnitEntry,
    VerbalizationGrammar, WrittenPreference,
};
pub use value::{CanonicalValue, EntityClass, Meridiem, Quantity, ValueError};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A located ITN entity inside a written sentence. Offsets are character
/// offsets (not bytes); `surface` always equals the sentence slice
/// `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EntitySpan {
    pub class: EntityClass,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub value: CanonicalValue,
    /// Set when the surface was valid under more than one reading (e.g. a
    /// 03/04 date) and the locale field order decided it.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpanError {
    #[error("span [{start},{end}) out of bounds or empty for sentence of length {len}")]
    OutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("span surface {surface:?} does not match sentence slice {slice:?}")]
    SurfaceMismatch { surface: String, slice: String },
    #[error("spans overlap at character {0}")]
    Overlap(usize),
}

/// Slice a string by character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    let mut iter = text.char_indices();
    let byte_start = if start == 0 {
        0
    } else {
        iter.by_ref()
            .nth(start - 1)
            .map(|(i, c)| i + c.len_utf8())?
    };
    let remaining = end - start;
    let byte_end = if remaining == 0 {
        byte_start
    } else {
        let mut it = text[byte_start..].char_indices();
        match it.nth(remaining - 1) {
            Some((i, c)) => byte_start + i + c.len_utf8(),
            None => return None,
        }
    };
    Some(&text[byte_start..byte_end])
}

impl EntitySpan {
    /// Check the positional invariants against the owning sentence.
    pub fn validate_in(&self, sentence: &str) -> Result<(), SpanError> {
        let len = sentence.chars().count();
        if self.start >= self.end || self.end > len {
            return Err(SpanError::OutOfBounds {
                start: self.start,
                end: self.end,
                len,
            });
        }
        let slice = char_slice(sentence, self.start, self.end).unwrap_or_default();
        if slice != self.surface {
            return Err(SpanError::SurfaceMismatch {
                surface: self.surface.clone(),
                slice: slice.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Augmented,
    Translated,
    Human,
}

/// Links a spoken token range to the written entity span it verbalizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Alignment {
    pub spoken_start: usize,
    pub spoken_end: usize,
    pub span: EntitySpan,
}

/// An aligned spoken-form / written-form sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SpokenWrittenPair {
    pub spoken: Vec<String>,
    pub written: String,
    /// BCP-47 tag.
    pub language: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alignments: Vec<Alignment>,
    pub provenance: Provenance,
}

impl SpokenWrittenPair {
    pub fn validate(&self) -> Result<(), SpanError> {
        let mut claimed: Vec<(usize, usize)> = Vec::new();
        for alignment in &self.alignments {
            if alignment.spoken_start >= alignment.spoken_end
                || alignment.spoken_end > self.spoken.len()
            {
                return Err(SpanError::OutOfBounds {
                    start: alignment.spoken_start,
                    end: alignment.spoken_end,
                    len: self.spoken.len(),
                });
            }
            for (s, e) in &claimed {
                if alignment.spoken_start < *e && *s < alignment.spoken_end {
                    return Err(SpanError::Overlap(alignment.spoken_start));
                }
            }
            claimed.push((alignment.spoken_start, alignment.spoken_end));
            alignment.span.validate_in(&self.written)?;
        }
        Ok(())
    }
}

/// One JSON Lines record: a pair tagged with the id of the input sentence
/// it came from, so parallel workers can merge deterministically and
/// downstream streams can be aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: u64,
    #[serde(flatten)]
    pub pair: SpokenWrittenPair,
}

/// Knobs for the augmentation pipeline. With a fixed seed and identical
/// inputs all downstream output is byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AugmentationConfig {
    pub max_variants_per_entity: usize,
    pub max_pairs_per_sentence: usize,
    pub sampling_seed: u64,
    pub enabled_classes: BTreeSet<EntityClass>,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            max_variants_per_entity: 16,
            max_pairs_per_sentence: 8,
            sampling_seed: 0,
            enabled_classes: EntityClass::PRECEDENCE.iter().copied().collect(),
        }
    }
}

impl AugmentationConfig {
    pub fn unbounded() -> Self {
        AugmentationConfig {
            max_variants_per_entity: usize::MAX,
            max_pairs_per_sentence: usize::MAX,
            ..AugmentationConfig::default()
        }
    }
}
