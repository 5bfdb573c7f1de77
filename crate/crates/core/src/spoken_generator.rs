//! Expands verbalized entities into sets of spoken variants and rewrites
//! written sentences into spoken/written pairs.
//!
//! Number variants enumerate every contiguous grouping of the digit string
//! into chunks of one to three digits (applied recursively across the whole
//! string), verbalize each chunk, and apply two lexical alternations
//! globally per variant: "and" after hundreds words, and the zero word
//! ("zero" vs "oh"). Groupings whose reading would re-parse as a different
//! number (a bare tens word directly followed by a units word, or a
//! non-final "X hundred" chunk) are excluded, so every emitted variant
//! reads back to the source value.
//!
//! Sampling is uniform without replacement from the lexicographically
//! sorted full set, driven by ChaCha8: entity-level sampling seeds the RNG
//! with the configured sampling seed directly; per-sentence pair sampling
//! seeds it with `seed XOR (sentence_id * 0x9E3779B97F4A7C15)`. Draws are
//! `next_u64() % n` with re-draw on duplicates, and the chosen indices are
//! emitted in ascending order.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Alignment, AugmentationConfig, CanonicalValue, EntitySpan, LocaleProfile, Meridiem, PairRecord,
    Provenance, Quantity, SpokenWrittenPair,
};
use crate::segmenter::SegmentationResult;
use crate::verbalizer::{EnglishGrammar, VerbalizeError};

/// One spoken rendering of an entity, with the rule ids that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SpokenVariant {
    pub tokens: Vec<String>,
    pub derivation: Vec<String>,
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error(transparent)]
    Verbalize(#[from] VerbalizeError),
    #[error("empty pair stream")]
    EmptyStream,
}

/// Deduplicated variant set ordered lexicographically by tokens.
#[derive(Debug, Default, Clone)]
struct VariantSet {
    map: BTreeMap<Vec<String>, Vec<String>>,
}

impl VariantSet {
    fn insert(&mut self, tokens: Vec<String>, derivation: Vec<String>) {
        if tokens.is_empty() {
            return;
        }
        self.map.entry(tokens).or_insert(derivation);
    }

    fn into_sorted(self) -> Vec<SpokenVariant> {
        self.map
            .into_iter()
            .map(|(tokens, derivation)| SpokenVariant { tokens, derivation })
            .collect()
    }
}

const PAIR_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

fn sample_indices(total: u64, k: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut picked = BTreeSet::new();
    while picked.len() < k {
        let idx = rng.next_u64() % total;
        picked.insert(idx);
    }
    picked.into_iter().collect()
}

/// Variant generation over one locale grammar. Construct once and reuse;
/// all methods are pure.
pub struct VariantGenerator {
    grammar: EnglishGrammar,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ZeroStyle {
    Zero,
    Oh,
}

impl VariantGenerator {
    pub fn new(profile: &std::sync::Arc<LocaleProfile>) -> Result<Self, GeneratorError> {
        Ok(VariantGenerator {
            grammar: EnglishGrammar::new(profile)?,
        })
    }

    pub fn grammar(&self) -> &EnglishGrammar {
        &self.grammar
    }

    fn zero_word(&self, style: ZeroStyle) -> String {
        match style {
            ZeroStyle::Zero => self.grammar.lex.zero.clone(),
            ZeroStyle::Oh => self
                .grammar
                .lex
                .zero_alts
                .iter()
                .find(|w| w.as_str() == "oh")
                .or_else(|| self.grammar.lex.zero_alts.first())
                .cloned()
                .unwrap_or_else(|| self.grammar.lex.zero.clone()),
        }
    }

    /// Reading of one 1-3 digit chunk. Returns None when the chunk has no
    /// reading under the requested and-style (a no-op, since and only
    /// affects chunks with hundreds and a remainder).
    fn chunk_reading(&self, chunk: &str, zero: &str, with_and: bool) -> Vec<String> {
        let digits: Vec<u64> = chunk.bytes().map(|b| (b - b'0') as u64).collect();
        match digits.len() {
            1 => {
                if digits[0] == 0 {
                    vec![zero.to_string()]
                } else {
                    self.grammar.two_digit(digits[0])
                }
            }
            2 => {
                if digits[0] == 0 {
                    let mut out = vec![zero.to_string()];
                    if digits[1] == 0 {
                        out.push(zero.to_string());
                    } else {
                        out.extend(self.grammar.two_digit(digits[1]));
                    }
                    out
                } else {
                    self.grammar.two_digit(digits[0] * 10 + digits[1])
                }
            }
            3 => {
                if digits[0] == 0 {
                    let mut out = vec![zero.to_string()];
                    out.extend(self.chunk_reading(&chunk[1..], zero, with_and));
                    out
                } else {
                    let value = digits[0] * 100 + digits[1] * 10 + digits[2];
                    self.grammar.long_form(value, with_and)
                }
            }
            _ => unreachable!("chunks are 1-3 digits"),
        }
    }

    /// All compositions of `len` into parts of 1..=3.
    fn compositions(len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        fn rec(remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if remaining == 0 {
                out.push(current.clone());
                return;
            }
            for part in 1..=remaining.min(3) {
                current.push(part);
                rec(remaining - part, current, out);
                current.pop();
            }
        }
        rec(len, &mut current, &mut out);
        out
    }

    fn word_role(&self, word: &str) -> Option<crate::domain::NumberWordRole> {
        self.grammar
            .profile()
            .number_word_lexicon
            .get(word)
            .map(|e| e.role)
    }

    /// Grouped readings of an arbitrary digit string (leading zeros
    /// allowed). Applies the ambiguity exclusions.
    fn digit_string_variants(&self, digits: &str, set: &mut VariantSet) {
        use crate::domain::NumberWordRole::{Ten, Unit};
        let len = digits.len();
        if len == 0 {
            return;
        }
        let hundred_word = self.grammar.lex.hundred.clone().unwrap_or_default();
        for comp in Self::compositions(len) {
            let chunks: Vec<&str> = {
                let mut out = Vec::new();
                let mut pos = 0;
                for part in &comp {
                    out.push(&digits[pos..pos + part]);
                    pos += part;
                }
                out
            };
            // non-final "X hundred" chunks always merge with what follows
            if chunks[..chunks.len() - 1]
                .iter()
                .any(|c| c.len() == 3 && !c.starts_with('0') && c.ends_with("00"))
            {
                continue;
            }
            let has_hundreds = chunks
                .iter()
                .any(|c| c.len() == 3 && !c.starts_with('0') && !c.ends_with("00"));
            let and_styles: &[bool] = if has_hundreds {
                &[false, true]
            } else {
                &[false]
            };
            // zero words only appear in chunks with a leading zero
            let needs_zero = chunks.iter().any(|c| c.starts_with('0'));
            let zero_styles: &[ZeroStyle] = if needs_zero {
                &[ZeroStyle::Zero, ZeroStyle::Oh]
            } else {
                &[ZeroStyle::Zero]
            };
            for &with_and in and_styles {
                for &zstyle in zero_styles {
                    let zero = self.zero_word(zstyle);
                    let readings: Vec<Vec<String>> = chunks
                        .iter()
                        .map(|c| self.chunk_reading(c, &zero, with_and))
                        .collect();
                    // tens word directly followed by a units word merges
                    // ("eighty" + "one" reads as 81); exclude
                    let mut excluded = false;
                    for window in readings.windows(2) {
                        let last = window[0].last().unwrap();
                        let first = window[1].first().unwrap();
                        let last_is_ten = self.word_role(last) == Some(Ten);
                        let last_is_hundred = *last == hundred_word;
                        let first_is_unit = self.word_role(first) == Some(Unit);
                        if (last_is_ten && first_is_unit) || last_is_hundred {
                            excluded = true;
                            break;
                        }
                    }
                    if excluded {
                        continue;
                    }
                    let tokens: Vec<String> = readings.into_iter().flatten().collect();
                    let mut derivation = vec![format!(
                        "group:{}",
                        comp.iter()
                            .map(|p| p.to_string())
                            .collect::<Vec<_>>()
                            .join("-")
                    )];
                    if with_and {
                        derivation.push("and".into());
                    }
                    if needs_zero && zstyle == ZeroStyle::Oh {
                        derivation.push("oh".into());
                    }
                    set.insert(tokens, derivation);
                }
            }
        }
    }

    /// The full spoken variant set of a non-negative integer: long form,
    /// long form with "and", and every unambiguous digit grouping.
    pub fn number_variants(&self, n: u64) -> Vec<SpokenVariant> {
        let mut set = VariantSet::default();
        set.insert(self.grammar.long_form(n, false), vec!["long".into()]);
        set.insert(self.grammar.long_form(n, true), vec!["long-and".into()]);
        if n > 0 {
            self.digit_string_variants(&n.to_string(), &mut set);
        }
        set.into_sorted()
    }

    fn signed_number_variants(&self, n: i64, set: &mut VariantSet) {
        for v in self.number_variants(n.unsigned_abs()) {
            if n < 0 {
                let mut tokens = vec!["minus".to_string()];
                tokens.extend(v.tokens);
                let mut derivation = v.derivation;
                derivation.push("minus".into());
                set.insert(tokens, derivation);
            } else {
                set.insert(v.tokens, v.derivation);
            }
        }
    }

    fn minute_readings(&self, minute: u8) -> Vec<(Vec<String>, &'static str)> {
        match minute {
            0 => vec![(Vec::new(), "on-the-hour")],
            m if m < 10 => vec![
                (
                    vec![
                        self.zero_word(ZeroStyle::Oh),
                        self.grammar.two_digit(m as u64)[0].clone(),
                    ],
                    "minute-oh",
                ),
                (
                    vec![
                        self.zero_word(ZeroStyle::Zero),
                        self.grammar.two_digit(m as u64)[0].clone(),
                    ],
                    "minute-zero",
                ),
            ],
            m => vec![(self.grammar.two_digit(m as u64), "minute")],
        }
    }

    fn meridiem_alternates(meridiem: Option<Meridiem>) -> Vec<(Vec<&'static str>, &'static str)> {
        match meridiem {
            Some(Meridiem::Am) => vec![
                (vec!["a", "m"], "mer-spelled"),
                (vec!["in", "the", "morning"], "mer-expanded"),
                (vec!["morning"], "mer-bare"),
                (vec![], "mer-elided"),
            ],
            Some(Meridiem::Pm) => vec![
                (vec!["p", "m"], "mer-spelled"),
                (vec!["in", "the", "evening"], "mer-expanded"),
                (vec!["evening"], "mer-bare"),
                (vec![], "mer-elided"),
            ],
            Some(Meridiem::NoneExplicit) | None => vec![(vec![], "mer-none")],
        }
    }

    fn time_variants(
        &self,
        hour: u8,
        minute: u8,
        second: Option<u8>,
        meridiem: Option<Meridiem>,
        set: &mut VariantSet,
    ) {
        let hour_words = self.grammar.two_digit(hour as u64);
        let mers = Self::meridiem_alternates(meridiem);
        let minutes = self.minute_readings(minute);

        for (mer_tokens, mer_rule) in &mers {
            for (minute_tokens, minute_rule) in &minutes {
                // seconds are only spoken in the hours-minutes-seconds
                // style; a trailing bare number would read as minutes
                let mut tokens = hour_words.clone();
                tokens.extend(minute_tokens.clone());
                tokens.extend(mer_tokens.iter().map(|t| t.to_string()));
                set.insert(
                    tokens,
                    vec![
                        "time-basic".into(),
                        minute_rule.to_string(),
                        mer_rule.to_string(),
                    ],
                );

                if minute > 0 && second.is_none() {
                    let mut tokens = hour_words.clone();
                    tokens.push("past".into());
                    tokens.extend(minute_tokens.clone());
                    tokens.extend(mer_tokens.iter().map(|t| t.to_string()));
                    set.insert(tokens, vec!["time-past".into(), mer_rule.to_string()]);
                }
            }
            if minute == 15 && second.is_none() {
                let mut tokens = vec!["quarter".to_string(), "past".to_string()];
                tokens.extend(hour_words.clone());
                tokens.extend(mer_tokens.iter().map(|t| t.to_string()));
                set.insert(
                    tokens,
                    vec!["time-quarter-past".into(), mer_rule.to_string()],
                );

                let mut tokens = hour_words.clone();
                tokens.extend(["and".to_string(), "quarter".to_string()]);
                tokens.extend(mer_tokens.iter().map(|t| t.to_string()));
                set.insert(
                    tokens,
                    vec!["time-and-quarter".into(), mer_rule.to_string()],
                );
            }
            if minute == 30 && second.is_none() {
                let mut tokens = vec!["half".to_string(), "past".to_string()];
                tokens.extend(hour_words.clone());
                tokens.extend(mer_tokens.iter().map(|t| t.to_string()));
                set.insert(tokens, vec!["time-half-past".into(), mer_rule.to_string()]);
            }
        }
        if matches!(meridiem, Some(Meridiem::NoneExplicit) | None) {
            let mut tokens = self.grammar.long_form(hour as u64, false);
            tokens.push("hours".into());
            if minute > 0 {
                tokens.extend(self.grammar.long_form(minute as u64, false));
                tokens.push("minutes".into());
            }
            if let Some(s) = second {
                tokens.extend(self.grammar.long_form(s as u64, false));
                tokens.push("seconds".into());
            }
            set.insert(tokens, vec!["time-hours-style".into()]);
        }
    }

    fn money_variants(
        &self,
        major: i64,
        minor: Option<&str>,
        currency: &str,
        set: &mut VariantSet,
    ) -> Result<(), GeneratorError> {
        let forms = self.grammar.currency_forms(currency)?.clone();
        let mut major_reads: Vec<(Vec<String>, &'static str)> = self
            .number_variants(major.unsigned_abs())
            .into_iter()
            .map(|v| (v.tokens, "major"))
            .collect();
        if major == 1 {
            major_reads.push((vec!["a".to_string()], "article"));
        }
        let major_words: Vec<(&String, &'static str)> = if major.unsigned_abs() == 1 {
            vec![(&forms.major_singular, "major-singular")]
        } else {
            vec![
                (&forms.major_plural, "major-plural"),
                (&forms.major_singular, "major-singular"),
            ]
        };
        match minor {
            None => {
                for (mr, mr_rule) in &major_reads {
                    for (word, word_rule) in &major_words {
                        let mut tokens = mr.clone();
                        tokens.push((*word).clone());
                        set.insert(
                            tokens.clone(),
                            vec!["money".into(), mr_rule.to_string(), word_rule.to_string()],
                        );
                        if **word == forms.major_plural || major.unsigned_abs() == 1 {
                            let mut with_zero = tokens;
                            with_zero.push(self.zero_word(ZeroStyle::Zero));
                            with_zero.push(forms.minor_plural.clone());
                            set.insert(
                                with_zero,
                                vec!["money-zero-cents".into(), mr_rule.to_string()],
                            );
                        }
                    }
                }
            }
            Some(minor_digits) => {
                let minor_value: u64 = minor_digits.parse().unwrap_or(0);
                let minor_word = if minor_value == 1 {
                    &forms.minor_singular
                } else {
                    &forms.minor_plural
                };
                let mut minor_reads = VariantSet::default();
                self.digit_string_variants(minor_digits, &mut minor_reads);
                minor_reads.insert(
                    self.grammar.long_form(minor_value, false),
                    vec!["long".into()],
                );
                for (mr, mr_rule) in &major_reads {
                    for (word, _) in &major_words {
                        for joiner in [Some("and"), None] {
                            for minor_read in minor_reads.map.keys() {
                                let mut tokens = mr.clone();
                                tokens.push((*word).clone());
                                if let Some(j) = joiner {
                                    tokens.push(j.to_string());
                                }
                                tokens.extend(minor_read.clone());
                                tokens.push(minor_word.clone());
                                let mut derivation =
                                    vec!["money-minor".into(), mr_rule.to_string()];
                                if joiner.is_some() {
                                    derivation.push("and".into());
                                }
                                set.insert(tokens, derivation);
                            }
                        }
                    }
                    // decimal style: "one point two zero dollars"
                    if *mr_rule != "article" {
                        for zstyle in [ZeroStyle::Zero, ZeroStyle::Oh] {
                            let mut tokens = mr.clone();
                            tokens.push("point".into());
                            tokens.extend(
                                self.grammar
                                    .digit_by_digit(minor_digits, &self.zero_word(zstyle)),
                            );
                            tokens.push(forms.major_plural.clone());
                            set.insert(tokens, vec!["money-decimal".into(), mr_rule.to_string()]);
                        }
                    }
                }
            }
        }
        if major < 0 {
            let negated: Vec<(Vec<String>, Vec<String>)> = set
                .map
                .iter()
                .map(|(tokens, derivation)| {
                    let mut t = vec!["minus".to_string()];
                    t.extend(tokens.clone());
                    (t, derivation.clone())
                })
                .collect();
            set.map = negated.into_iter().collect();
        }
        Ok(())
    }

    fn date_variants(
        &self,
        day: Option<u8>,
        month: Option<u8>,
        year: Option<i32>,
        set: &mut VariantSet,
    ) -> Result<(), GeneratorError> {
        let month_word = match month {
            Some(m) => self
                .grammar
                .profile()
                .month_names
                .get((m as usize) - 1)
                .cloned(),
            None => None,
        };
        let mut year_reads: Vec<Vec<String>> = Vec::new();
        if let Some(y) = year {
            year_reads.push(self.grammar.year_words(y));
            if y > 0 {
                year_reads.push(self.grammar.long_form(y as u64, false));
            }
            year_reads.sort();
            year_reads.dedup();
        }
        let year_options: Vec<Option<&Vec<String>>> = if year_reads.is_empty() {
            vec![None]
        } else {
            year_reads.iter().map(Some).collect()
        };
        match (day, &month_word) {
            (Some(d), Some(mw)) => {
                let day_reads: Vec<(Vec<String>, &'static str)> = vec![
                    (self.grammar.long_form(d as u64, false), "day-cardinal"),
                    (
                        self.grammar
                            .ordinal_words(d as u64, false)
                            .ok_or(VerbalizeError::IncompleteLexicon)?,
                        "day-ordinal",
                    ),
                ];
                for (dr, dr_rule) in &day_reads {
                    for yr in &year_options {
                        let mut tokens = dr.clone();
                        tokens.push(mw.clone());
                        if let Some(y) = yr {
                            tokens.extend((*y).clone());
                        }
                        set.insert(tokens, vec!["date-dmy".into(), dr_rule.to_string()]);

                        let mut tokens = vec![mw.clone()];
                        tokens.extend(dr.clone());
                        if let Some(y) = yr {
                            tokens.extend((*y).clone());
                        }
                        set.insert(tokens, vec!["date-mdy".into(), dr_rule.to_string()]);
                    }
                }
                for yr in &year_options {
                    let mut tokens = self
                        .grammar
                        .ordinal_words(d as u64, false)
                        .ok_or(VerbalizeError::IncompleteLexicon)?;
                    tokens.push("of".into());
                    tokens.push(mw.clone());
                    if let Some(y) = yr {
                        tokens.extend((*y).clone());
                    }
                    set.insert(tokens, vec!["date-of".into()]);
                }
            }
            (None, Some(mw)) => {
                for yr in &year_options {
                    let mut tokens = vec![mw.clone()];
                    if let Some(y) = yr {
                        tokens.extend((*y).clone());
                    }
                    set.insert(tokens, vec!["date-month".into()]);
                }
            }
            (Some(d), None) => {
                for yr in &year_options {
                    let mut tokens = self.grammar.long_form(d as u64, false);
                    if let Some(y) = yr {
                        tokens.extend((*y).clone());
                    }
                    set.insert(tokens, vec!["date-day".into()]);
                }
            }
            (None, None) => {
                for y in year_options.iter().flatten() {
                    set.insert((*y).clone(), vec!["date-year".into()]);
                }
            }
        }
        Ok(())
    }

    /// Class-specific expansion composed with number variants. The full
    /// set, uncapped.
    fn full_entity_variants(&self, value: &CanonicalValue) -> Result<VariantSet, GeneratorError> {
        let mut set = VariantSet::default();
        match value {
            CanonicalValue::Cardinal { value: n } => self.signed_number_variants(*n, &mut set),
            CanonicalValue::Ordinal { value: n } => {
                if let Some(words) = self.grammar.ordinal_words(*n, false) {
                    set.insert(words, vec!["ordinal".into()]);
                }
                if let Some(words) = self.grammar.ordinal_words(*n, true) {
                    set.insert(words, vec!["ordinal-and".into()]);
                }
            }
            CanonicalValue::Decimal {
                integer_part,
                fraction_digits,
            } => {
                let mut int_reads = VariantSet::default();
                self.signed_number_variants(*integer_part, &mut int_reads);
                for (int_tokens, derivation) in int_reads.map {
                    for zstyle in [ZeroStyle::Zero, ZeroStyle::Oh] {
                        let mut tokens = int_tokens.clone();
                        tokens.push("point".into());
                        tokens.extend(
                            self.grammar
                                .digit_by_digit(fraction_digits, &self.zero_word(zstyle)),
                        );
                        let mut d = vec!["decimal".into()];
                        d.extend(derivation.clone());
                        set.insert(tokens, d);
                    }
                }
            }
            CanonicalValue::Fraction {
                numerator,
                denominator,
                whole,
            } => {
                let plural = numerator.unsigned_abs() != 1;
                let mut dens: Vec<Vec<String>> = vec![self
                    .grammar
                    .denominator_words(*denominator, plural)
                    .map_err(GeneratorError::Verbalize)?];
                if *denominator == 4 {
                    dens.push(vec![if plural { "quarters" } else { "quarter" }.to_string()]);
                }
                let mut num_reads = VariantSet::default();
                self.signed_number_variants(*numerator, &mut num_reads);
                for (num_tokens, derivation) in num_reads.map {
                    for den_tokens in &dens {
                        let mut tokens = Vec::new();
                        if let Some(w) = whole {
                            tokens.extend(self.grammar.long_form(w.unsigned_abs(), false));
                            tokens.push("and".into());
                        }
                        tokens.extend(num_tokens.clone());
                        tokens.extend(den_tokens.clone());
                        let mut d = vec!["fraction".into()];
                        d.extend(derivation.clone());
                        set.insert(tokens, d);
                    }
                }
            }
            CanonicalValue::Money {
                amount_major,
                amount_minor,
                currency,
            } => {
                self.money_variants(*amount_major, amount_minor.as_deref(), currency, &mut set)?;
            }
            CanonicalValue::Time {
                hour,
                minute,
                second,
                meridiem,
            } => {
                self.time_variants(*hour, *minute, *second, *meridiem, &mut set);
            }
            CanonicalValue::Date { day, month, year } => {
                self.date_variants(*day, *month, *year, &mut set)?;
            }
            CanonicalValue::Measure { magnitude, unit } => {
                let entry = self.grammar.unit_entry(unit)?.clone();
                let mut unit_forms: Vec<Vec<String>> = Vec::new();
                let singular_only =
                    matches!(magnitude, Quantity::Cardinal { value } if value.unsigned_abs() == 1);
                if !singular_only {
                    unit_forms.push(entry.plural.split_whitespace().map(String::from).collect());
                }
                unit_forms.push(
                    entry
                        .singular
                        .split_whitespace()
                        .map(String::from)
                        .collect(),
                );
                for alt in &entry.spoken_alts {
                    unit_forms.push(alt.split_whitespace().map(String::from).collect());
                }
                unit_forms.dedup();
                let mut mag_reads = VariantSet::default();
                match magnitude {
                    Quantity::Cardinal { value } => {
                        self.signed_number_variants(*value, &mut mag_reads)
                    }
                    Quantity::Decimal {
                        integer_part,
                        fraction_digits,
                    } => {
                        let mut int_reads = VariantSet::default();
                        self.signed_number_variants(*integer_part, &mut int_reads);
                        for (int_tokens, derivation) in int_reads.map {
                            for zstyle in [ZeroStyle::Zero, ZeroStyle::Oh] {
                                let mut tokens = int_tokens.clone();
                                tokens.push("point".into());
                                tokens.extend(
                                    self.grammar
                                        .digit_by_digit(fraction_digits, &self.zero_word(zstyle)),
                                );
                                mag_reads.insert(tokens, derivation.clone());
                            }
                        }
                    }
                }
                for (mag_tokens, derivation) in mag_reads.map {
                    for unit_tokens in &unit_forms {
                        let mut tokens = mag_tokens.clone();
                        tokens.extend(unit_tokens.clone());
                        let mut d = vec!["measure".into()];
                        d.extend(derivation.clone());
                        set.insert(tokens, d);
                    }
                }
            }
            CanonicalValue::Telephone { groups } => {
                for zstyle in [ZeroStyle::Zero, ZeroStyle::Oh] {
                    let zero = self.zero_word(zstyle);
                    let mut tokens = Vec::new();
                    for group in groups {
                        tokens.extend(self.grammar.digit_by_digit(group, &zero));
                    }
                    set.insert(tokens, vec!["telephone".into()]);
                }
            }
            CanonicalValue::DigitSequence { digits } => {
                for zstyle in [ZeroStyle::Zero, ZeroStyle::Oh] {
                    let zero = self.zero_word(zstyle);
                    set.insert(
                        self.grammar.digit_by_digit(digits, &zero),
                        vec!["digits".into()],
                    );
                }
            }
        }
        // the canonical verbal form is always a member
        let canonical = self.grammar.verbalize(value)?;
        set.insert(canonical.canonical_verbal, vec!["canonical".into()]);
        Ok(set)
    }

    /// Class-specific variant set, capped at the configured maximum via
    /// seeded uniform sampling. The canonical verbal form is always
    /// included; output is sorted lexicographically.
    pub fn entity_variants(
        &self,
        value: &CanonicalValue,
        config: &AugmentationConfig,
    ) -> Result<Vec<SpokenVariant>, GeneratorError> {
        let full = self.full_entity_variants(value)?.into_sorted();
        let n = config.max_variants_per_entity.max(1);
        if full.len() <= n {
            return Ok(full);
        }
        let canonical = self.grammar.verbalize(value)?.canonical_verbal;
        let canonical_idx = full.iter().position(|v| v.tokens == canonical);
        let mut rng = ChaCha8Rng::seed_from_u64(config.sampling_seed);
        let rest: Vec<usize> = (0..full.len())
            .filter(|i| Some(*i) != canonical_idx)
            .collect();
        let picked = sample_indices(
            rest.len() as u64,
            n - canonical_idx.map_or(0, |_| 1),
            &mut rng,
        );
        let mut keep: BTreeSet<usize> = picked.into_iter().map(|i| rest[i as usize]).collect();
        if let Some(ci) = canonical_idx {
            keep.insert(ci);
        }
        Ok(full
            .into_iter()
            .enumerate()
            .filter(|(i, _)| keep.contains(i))
            .map(|(_, v)| v)
            .collect())
    }
}

/// Free-function form of [`VariantGenerator::number_variants`].
pub fn number_variants(
    n: u64,
    profile: &std::sync::Arc<LocaleProfile>,
) -> Result<Vec<SpokenVariant>, GeneratorError> {
    Ok(VariantGenerator::new(profile)?.number_variants(n))
}

/// Free-function form of [`VariantGenerator::entity_variants`].
pub fn entity_variants(
    value: &CanonicalValue,
    profile: &std::sync::Arc<LocaleProfile>,
    config: &AugmentationConfig,
) -> Result<Vec<SpokenVariant>, GeneratorError> {
    VariantGenerator::new(profile)?.entity_variants(value, config)
}

fn enabled_spans<'a>(
    segmentation: &'a SegmentationResult,
    config: &AugmentationConfig,
) -> Vec<&'a EntitySpan> {
    segmentation
        .spans
        .iter()
        .filter(|s| config.enabled_classes.contains(&s.class))
        .collect()
}

/// Replace written entities with spoken variants, producing one
/// spoken/written pair per variant combination, capped per sentence.
///
/// `sentence_id` tags every output pair (and seeds the per-sentence
/// sampler), so parallel workers produce identical output in any order.
pub fn rewrite(
    segmentation: &SegmentationResult,
    generator: &VariantGenerator,
    config: &AugmentationConfig,
    sentence_id: u64,
) -> Result<Vec<PairRecord>, GeneratorError> {
    let sentence = &segmentation.sentence;
    let spans = enabled_spans(segmentation, config);
    if spans.is_empty() {
        return Ok(Vec::new());
    }
    let mut variant_lists: Vec<Vec<SpokenVariant>> = Vec::with_capacity(spans.len());
    for span in &spans {
        let variants = generator.entity_variants(&span.value, config)?;
        if variants.is_empty() {
            return Ok(Vec::new());
        }
        variant_lists.push(variants);
    }
    let total: u64 = variant_lists.iter().map(|v| v.len() as u64).product();
    let cap = config.max_pairs_per_sentence.max(1) as u64;
    let chosen: Vec<u64> = if total <= cap {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.sampling_seed ^ sentence_id.wrapping_mul(PAIR_SEED_MIX),
        );
        sample_indices(total, cap as usize, &mut rng)
    };

    // character-offset split points of the sentence around each span
    let chars: Vec<char> = sentence.chars().collect();
    let slice = |a: usize, b: usize| -> String { chars[a..b].iter().collect() };

    let mut out = Vec::with_capacity(chosen.len());
    for index in chosen {
        // mixed-radix decode, last entity varies fastest
        let mut digits = vec![0usize; variant_lists.len()];
        let mut rem = index;
        for (i, list) in variant_lists.iter().enumerate().rev() {
            digits[i] = (rem % list.len() as u64) as usize;
            rem /= list.len() as u64;
        }
        let mut spoken: Vec<String> = Vec::new();
        let mut alignments = Vec::new();
        let mut cursor = 0usize;
        for (i, span) in spans.iter().enumerate() {
            for tok in slice(cursor, span.start).split_whitespace() {
                spoken.push(tok.to_string());
            }
            let variant = &variant_lists[i][digits[i]];
            let tok_start = spoken.len();
            spoken.extend(variant.tokens.iter().cloned());
            alignments.push(Alignment {
                spoken_start: tok_start,
                spoken_end: spoken.len(),
                span: (*span).clone(),
            });
            cursor = span.end;
        }
        for tok in slice(cursor, chars.len()).split_whitespace() {
            spoken.push(tok.to_string());
        }
        out.push(PairRecord {
            id: sentence_id,
            pair: SpokenWrittenPair {
                spoken,
                written: sentence.clone(),
                language: generator.grammar().profile().language.clone(),
                alignments,
                provenance: Provenance::Augmented,
            },
        });
    }
    Ok(out)
}

/// Mean number of distinct spoken variants per distinct written entity
/// surface. Conventional TN contributes exactly one variant per surface,
/// so this is directly comparable as a diversity multiplier.
pub fn diversity_factor<'a, I>(pairs: I) -> Result<f64, GeneratorError>
where
    I: IntoIterator<Item = &'a PairRecord>,
{
    let mut by_surface: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for record in pairs {
        for alignment in &record.pair.alignments {
            let spoken = record.pair.spoken[alignment.spoken_start..alignment.spoken_end].to_vec();
            by_surface
                .entry(alignment.span.surface.clone())
                .or_default()
                .insert(spoken);
        }
    }
    if by_surface.is_empty() {
        return Err(GeneratorError::EmptyStream);
    }
    let total: usize = by_surface.values().map(|s| s.len()).sum();
    Ok(total as f64 / by_surface.len() as f64)
}
