//! Maps written entity spans to canonical values and canonical verbal
//! forms: the anchor each variant set grows from.
//!
//! English carries the full verbalization grammar; other locales return an
//! unsupported-locale error (non-English pairs come from translation, not
//! per-language verbalizers).

use std::sync::Arc;

use thiserror::Error;

use crate::domain::{
    CanonicalValue, EntitySpan, LocaleProfile, Meridiem, NumberLexicon, NumberWordRole, Quantity,
    VerbalizationGrammar,
};
use crate::segmenter::{PatternError, Segmenter};

/// A canonical value with its single closest verbalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct VerbalizedEntity {
    pub value: CanonicalValue,
    pub canonical_verbal: Vec<String>,
}

#[derive(Debug, Error)]
pub enum VerbalizeError {
    #[error("locale {0:?} has no verbalization grammar")]
    UnsupportedLocale(String),
    #[error("locale lexicon is missing words required by the grammar")]
    IncompleteLexicon,
    #[error("unit {0:?} is not in the locale unit lexicon")]
    UnknownUnit(String),
    #[error("currency {0:?} is not in the locale currency-render table")]
    UnknownCurrency(String),
    #[error("month {0} out of range")]
    BadMonth(u8),
    #[error("value fails its invariants: {0}")]
    InvalidValue(#[from] crate::domain::ValueError),
}

/// Map a span back to its canonical value, re-deriving it from the surface.
/// Errors if the surface no longer fully matches its class pattern, which
/// signals pattern-table drift.
pub fn canonicalize(
    span: &EntitySpan,
    segmenter: &Segmenter,
) -> Result<CanonicalValue, PatternError> {
    segmenter.canonicalize_span(span)
}

/// Produce the canonical verbal form of a value.
pub fn verbalize(
    value: &CanonicalValue,
    profile: &LocaleProfile,
) -> Result<VerbalizedEntity, VerbalizeError> {
    let grammar = EnglishGrammar::new(&Arc::new(profile.clone()))?;
    grammar.verbalize(value)
}

/// English number-word grammar over a locale lexicon. Pure and reentrant.
pub struct EnglishGrammar {
    profile: Arc<LocaleProfile>,
    pub(crate) lex: NumberLexicon,
}

impl EnglishGrammar {
    pub fn new(profile: &Arc<LocaleProfile>) -> Result<Self, VerbalizeError> {
        if profile.verbalization != VerbalizationGrammar::English {
            return Err(VerbalizeError::UnsupportedLocale(profile.language.clone()));
        }
        let lex =
            NumberLexicon::from_profile(profile).map_err(|_| VerbalizeError::IncompleteLexicon)?;
        if !lex.is_complete() {
            return Err(VerbalizeError::IncompleteLexicon);
        }
        Ok(EnglishGrammar {
            profile: Arc::clone(profile),
            lex,
        })
    }

    pub fn profile(&self) -> &Arc<LocaleProfile> {
        &self.profile
    }

    fn unit_word(&self, v: u64) -> String {
        self.lex.units[v as usize]
            .clone()
            .expect("lexicon checked complete")
    }

    /// Natural reading of 0..=99: "seven", "twelve", "forty five".
    pub fn two_digit(&self, v: u64) -> Vec<String> {
        debug_assert!(v < 100);
        if v == 0 {
            return vec![self.lex.zero.clone()];
        }
        if v < 10 {
            return vec![self.unit_word(v)];
        }
        if let Some(word) = self.lex.teens[(v - 10) as usize].clone() {
            return vec![word];
        }
        let mut out = vec![self.lex.tens[(v / 10) as usize].clone().expect("complete")];
        if !v.is_multiple_of(10) {
            out.push(self.unit_word(v % 10));
        }
        out
    }

    fn chunk_words(&self, c: u64, with_and: bool) -> Vec<String> {
        debug_assert!((1..1000).contains(&c));
        let mut out = Vec::new();
        let hundreds = c / 100;
        let rest = c % 100;
        if hundreds > 0 {
            out.push(self.unit_word(hundreds));
            out.push(self.lex.hundred.clone().expect("complete"));
            if rest > 0 {
                if with_and {
                    out.push("and".to_string());
                }
                out.extend(self.two_digit(rest));
            }
        } else {
            out.extend(self.two_digit(rest));
        }
        out
    }

    /// Full long form: "one hundred twenty three", "twelve thousand five".
    /// `with_and` inserts "and" after each hundreds word with a remainder.
    pub fn long_form(&self, n: u64, with_and: bool) -> Vec<String> {
        if n == 0 {
            return vec![self.lex.zero.clone()];
        }
        let mut out = Vec::new();
        let mut remaining = n;
        let mut parts: Vec<(u64, Option<u32>)> = Vec::new();
        let mut magnitudes: Vec<u32> = self
            .lex
            .magnitudes
            .iter()
            .map(|(p, _)| *p)
            .filter(|p| *p % 3 == 0)
            .collect();
        magnitudes.sort_unstable_by(|a, b| b.cmp(a));
        for power in magnitudes {
            let factor = 10u64.pow(power);
            if remaining >= factor {
                parts.push((remaining / factor, Some(power)));
                remaining %= factor;
            }
        }
        if remaining > 0 {
            parts.push((remaining, None));
        }
        for (chunk, power) in parts {
            out.extend(self.chunk_words(chunk, with_and));
            if let Some(p) = power {
                out.push(self.lex.magnitude_word(p).expect("complete").to_string());
            }
        }
        out
    }

    fn ordinalize_last(&self, mut words: Vec<String>) -> Option<Vec<String>> {
        let last = words.pop()?;
        let entry = self.profile.number_word_lexicon.get(&last);
        let replacement = if let Some(entry) = entry {
            match entry.role {
                NumberWordRole::Unit => self.lex.ordinal_units[entry.value as usize].clone()?,
                NumberWordRole::Teen => {
                    self.lex.ordinal_teens[(entry.value - 10) as usize].clone()?
                }
                NumberWordRole::Ten => {
                    self.lex.ordinal_tens[(entry.value / 10) as usize].clone()?
                }
                NumberWordRole::Hundred => self.lex.ordinal_hundred.clone()?,
                _ => return None,
            }
        } else {
            let power = self.profile.magnitude_lexicon.get(&last)?;
            self.lex.ordinal_magnitudes.get(power).cloned()?
        };
        words.push(replacement);
        Some(words)
    }

    /// Ordinal long form: "sixtieth", "one hundred twenty third".
    pub fn ordinal_words(&self, n: u64, with_and: bool) -> Option<Vec<String>> {
        if n == 0 {
            return None;
        }
        self.ordinalize_last(self.long_form(n, with_and))
    }

    /// Read digits one by one; `spell_zero` is the zero word to use.
    pub fn digit_by_digit(&self, digits: &str, spell_zero: &str) -> Vec<String> {
        digits
            .chars()
            .map(|c| {
                let d = c.to_digit(10).unwrap_or(0) as u64;
                if d == 0 {
                    spell_zero.to_string()
                } else {
                    self.unit_word(d)
                }
            })
            .collect()
    }

    /// Canonical spoken year: pairwise for most four-digit years
    /// ("twenty twenty two"), long form on even thousands and for
    /// years 2001-2009 style values.
    pub fn year_words(&self, year: i32) -> Vec<String> {
        if year <= 0 {
            return self.long_form(year.unsigned_abs() as u64, false);
        }
        let y = year as u64;
        if (1000..=9999).contains(&y) {
            let hi = y / 100;
            let lo = y % 100;
            if y.is_multiple_of(1000) {
                return self.long_form(y, false);
            }
            if lo == 0 {
                let mut out = self.two_digit(hi);
                out.push(self.lex.hundred.clone().expect("complete"));
                return out;
            }
            if lo < 10 {
                return self.long_form(y, false);
            }
            let mut out = self.two_digit(hi);
            out.extend(self.two_digit(lo));
            return out;
        }
        self.long_form(y, false)
    }

    fn month_name(&self, month: u8) -> Result<String, VerbalizeError> {
        self.profile
            .month_names
            .get((month as usize).wrapping_sub(1))
            .cloned()
            .ok_or(VerbalizeError::BadMonth(month))
    }

    pub(crate) fn currency_forms(
        &self,
        iso: &str,
    ) -> Result<&crate::domain::CurrencyRender, VerbalizeError> {
        self.profile
            .currency_render
            .get(iso)
            .ok_or_else(|| VerbalizeError::UnknownCurrency(iso.to_string()))
    }

    pub(crate) fn unit_entry(&self, id: &str) -> Result<&crate::domain::UnitEntry, VerbalizeError> {
        self.profile
            .unit_lexicon
            .get(id)
            .ok_or_else(|| VerbalizeError::UnknownUnit(id.to_string()))
    }

    fn signed_long_form(&self, n: i64, with_and: bool) -> Vec<String> {
        let mut out = Vec::new();
        if n < 0 {
            out.push("minus".to_string());
        }
        out.extend(self.long_form(n.unsigned_abs(), with_and));
        out
    }

    /// The single canonical verbal form of a value.
    pub fn verbalize(&self, value: &CanonicalValue) -> Result<VerbalizedEntity, VerbalizeError> {
        value.validate()?;
        let tokens = match value {
            CanonicalValue::Cardinal { value: n } => self.signed_long_form(*n, false),
            CanonicalValue::Ordinal { value: n } => self
                .ordinal_words(*n, false)
                .ok_or(VerbalizeError::IncompleteLexicon)?,
            CanonicalValue::Decimal {
                integer_part,
                fraction_digits,
            } => {
                let mut out = self.signed_long_form(*integer_part, false);
                out.push("point".to_string());
                out.extend(self.digit_by_digit(fraction_digits, &self.lex.zero));
                out
            }
            CanonicalValue::Fraction {
                numerator,
                denominator,
                whole,
            } => {
                let mut out = Vec::new();
                if let Some(w) = whole {
                    out.extend(self.signed_long_form(*w, false));
                    out.push("and".to_string());
                }
                out.extend(self.signed_long_form(*numerator, false));
                out.extend(self.denominator_words(*denominator, numerator.unsigned_abs() != 1)?);
                out
            }
            CanonicalValue::Money {
                amount_major,
                amount_minor,
                currency,
            } => {
                let forms = self.currency_forms(currency)?.clone();
                let mut out = self.signed_long_form(*amount_major, false);
                out.push(if amount_major.unsigned_abs() == 1 {
                    forms.major_singular.clone()
                } else {
                    forms.major_plural.clone()
                });
                if let Some(minor) = amount_minor {
                    let minor_value: u64 = minor.parse().unwrap_or(0);
                    out.push("and".to_string());
                    out.extend(self.long_form(minor_value, false));
                    out.push(if minor_value == 1 {
                        forms.minor_singular.clone()
                    } else {
                        forms.minor_plural.clone()
                    });
                }
                out
            }
            CanonicalValue::Time {
                hour,
                minute,
                second,
                meridiem,
            } => {
                let mut out = Vec::new();
                match meridiem {
                    Some(Meridiem::Am) | Some(Meridiem::Pm) => {
                        out.extend(self.two_digit(*hour as u64));
                        if *minute > 0 || second.is_some() {
                            if *minute < 10 {
                                out.push("oh".to_string());
                                if *minute > 0 {
                                    out.push(self.unit_word(*minute as u64));
                                }
                            } else {
                                out.extend(self.two_digit(*minute as u64));
                            }
                        }
                        if let Some(s) = second {
                            out.extend(self.two_digit(*s as u64));
                        }
                        out.extend(
                            match meridiem {
                                Some(Meridiem::Am) => ["a", "m"],
                                _ => ["p", "m"],
                            }
                            .map(String::from),
                        );
                    }
                    Some(Meridiem::NoneExplicit) | None => {
                        out.extend(self.long_form(*hour as u64, false));
                        out.push("hours".to_string());
                        if *minute > 0 {
                            out.extend(self.long_form(*minute as u64, false));
                            out.push("minutes".to_string());
                        }
                        if let Some(s) = second {
                            out.extend(self.long_form(*s as u64, false));
                            out.push("seconds".to_string());
                        }
                    }
                }
                out
            }
            CanonicalValue::Date { day, month, year } => {
                let mut out = Vec::new();
                let day_words = day.map(|d| self.long_form(d as u64, false));
                let month_word = match month {
                    Some(m) => Some(self.month_name(*m)?),
                    None => None,
                };
                match self.profile.verbal_date_order {
                    crate::domain::DateOrder::DayMonthYear => {
                        if let Some(w) = day_words {
                            out.extend(w);
                        }
                        if let Some(m) = month_word {
                            out.push(m);
                        }
                    }
                    crate::domain::DateOrder::MonthDayYear => {
                        if let Some(m) = month_word {
                            out.push(m);
                        }
                        if let Some(w) = day_words {
                            out.extend(w);
                        }
                    }
                }
                if let Some(y) = year {
                    out.extend(self.year_words(*y));
                }
                out
            }
            CanonicalValue::Measure { magnitude, unit } => {
                let entry = self.unit_entry(unit)?.clone();
                let (mut out, singular) = match magnitude {
                    Quantity::Cardinal { value } => (
                        self.signed_long_form(*value, false),
                        value.unsigned_abs() == 1,
                    ),
                    Quantity::Decimal {
                        integer_part,
                        fraction_digits,
                    } => {
                        let mut words = self.signed_long_form(*integer_part, false);
                        words.push("point".to_string());
                        words.extend(self.digit_by_digit(fraction_digits, &self.lex.zero));
                        (words, false)
                    }
                };
                let form = if singular {
                    &entry.singular
                } else {
                    &entry.plural
                };
                out.extend(form.split_whitespace().map(String::from));
                out
            }
            CanonicalValue::Telephone { groups } => {
                let mut out = Vec::new();
                for group in groups {
                    out.extend(self.digit_by_digit(group, &self.lex.zero));
                }
                out
            }
            CanonicalValue::DigitSequence { digits } => self.digit_by_digit(digits, &self.lex.zero),
        };
        debug_assert!(
            tokens
                .iter()
                .all(|t| !t.bytes().any(|b| b.is_ascii_digit())),
            "canonical verbal form contains digits: {tokens:?}"
        );
        Ok(VerbalizedEntity {
            value: value.clone(),
            canonical_verbal: tokens,
        })
    }

    /// Spoken denominator: "half"/"halves", "quarter(s)" style alternates
    /// live in the variant generator; this is the canonical ordinal form.
    pub(crate) fn denominator_words(
        &self,
        den: u64,
        plural: bool,
    ) -> Result<Vec<String>, VerbalizeError> {
        if den == 2 {
            return Ok(vec![if plural { "halves" } else { "half" }.to_string()]);
        }
        let mut words = self
            .ordinal_words(den, false)
            .ok_or(VerbalizeError::IncompleteLexicon)?;
        if plural {
            if let Some(last) = words.last_mut() {
                last.push('s');
            }
        }
        Ok(words)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::builtin_locale;

    fn grammar() -> EnglishGrammar {
        EnglishGrammar::new(&Arc::new(builtin_locale("en").unwrap())).unwrap()
    }

    fn joined(tokens: &[String]) -> String {
        tokens.join(" ")
    }

    #[test]
    fn long_forms() {
        let g = grammar();
        assert_eq!(joined(&g.long_form(0, false)), "zero");
        assert_eq!(joined(&g.long_form(123, false)), "one hundred twenty three");
        assert_eq!(
            joined(&g.long_form(123, true)),
            "one hundred and twenty three"
        );
        assert_eq!(
            joined(&g.long_form(2023, false)),
            "two thousand twenty three"
        );
        assert_eq!(
            joined(&g.long_form(1_234_567, false)),
            "one million two hundred thirty four thousand five hundred sixty seven"
        );
    }

    #[test]
    fn ordinals() {
        let g = grammar();
        assert_eq!(joined(&g.ordinal_words(60, false).unwrap()), "sixtieth");
        assert_eq!(joined(&g.ordinal_words(63, false).unwrap()), "sixty third");
        assert_eq!(
            joined(&g.ordinal_words(100, false).unwrap()),
            "one hundredth"
        );
        assert_eq!(
            joined(&g.ordinal_words(123, false).unwrap()),
            "one hundred twenty third"
        );
        assert_eq!(
            joined(&g.ordinal_words(2000, false).unwrap()),
            "two thousandth"
        );
    }

    #[test]
    fn verbalize_paper_examples() {
        let g = grammar();
        let time = CanonicalValue::Time {
            hour: 12,
            minute: 45,
            second: None,
            meridiem: Some(Meridiem::NoneExplicit),
        };
        assert_eq!(
            joined(&g.verbalize(&time).unwrap().canonical_verbal),
            "twelve hours forty five minutes"
        );
        let date = CanonicalValue::Date {
            day: Some(31),
            month: Some(12),
            year: Some(2022),
        };
        assert_eq!(
            joined(&g.verbalize(&date).unwrap().canonical_verbal),
            "thirty one December twenty twenty two"
        );
        let measure = CanonicalValue::Measure {
            magnitude: Quantity::Decimal {
                integer_part: 207,
                fraction_digits: "6".into(),
            },
            unit: "kilometer-per-second".into(),
        };
        assert_eq!(
            joined(&g.verbalize(&measure).unwrap().canonical_verbal),
            "two hundred seven point six kilometers per second"
        );
        let zero = CanonicalValue::Cardinal { value: 0 };
        assert_eq!(
            joined(&g.verbalize(&zero).unwrap().canonical_verbal),
            "zero"
        );
    }

    #[test]
    fn verbalize_money_matches_conventional_tn() {
        let g = grammar();
        let money = CanonicalValue::Money {
            amount_major: 1,
            amount_minor: Some("20".into()),
            currency: "USD".into(),
        };
        assert_eq!(
            joined(&g.verbalize(&money).unwrap().canonical_verbal),
            "one dollar and twenty cents"
        );
        let plain = CanonicalValue::Money {
            amount_major: 123,
            amount_minor: None,
            currency: "USD".into(),
        };
        assert_eq!(
            joined(&g.verbalize(&plain).unwrap().canonical_verbal),
            "one hundred twenty three dollars"
        );
    }

    #[test]
    fn no_digits_in_canonical_forms() {
        let g = grammar();
        for v in [
            CanonicalValue::Cardinal { value: 905_001 },
            CanonicalValue::Telephone {
                groups: vec!["415".into(), "555".into(), "0123".into()],
            },
            CanonicalValue::Decimal {
                integer_part: 3,
                fraction_digits: "05".into(),
            },
        ] {
            let verbal = g.verbalize(&v).unwrap().canonical_verbal;
            assert!(!verbal.is_empty());
            assert!(verbal
                .iter()
                .all(|t| !t.bytes().any(|b| b.is_ascii_digit())));
        }
    }

    #[test]
    fn canonicalize_flags_pattern_drift() {
        use crate::segmenter::Segmenter;
        let profile = Arc::new(builtin_locale("en").unwrap());
        let seg = Segmenter::new(Arc::clone(&profile)).unwrap();
        let mut span = seg.segment("Arrive before 6:15 am.").spans[0].clone();
        assert_eq!(canonicalize(&span, &seg).unwrap(), span.value);
        // a surface that no longer fully matches its class pattern
        span.surface = "6:15 approximately".into();
        assert!(canonicalize(&span, &seg).is_err());
    }

    #[test]
    fn unsupported_locale_errors() {
        let fr = Arc::new(builtin_locale("fr").unwrap());
        match EnglishGrammar::new(&fr) {
            Err(VerbalizeError::UnsupportedLocale(lang)) => assert!(lang.starts_with("fr")),
            other => panic!("expected unsupported locale, got {:?}", other.is_ok()),
        }
    }
}
