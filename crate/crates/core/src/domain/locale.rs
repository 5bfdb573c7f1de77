//! Locale profiles: per-language separators, clock conventions, number-word
//! lexicons and formatting rules, loaded from JSON data files.
//!
//! Profiles for en, fr, de, es and it ship embedded in the library; any
//! other language can be supplied as a file with the same schema.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockPreference {
    #[serde(rename = "prefers-12h")]
    Prefers12h,
    #[serde(rename = "prefers-24h")]
    Prefers24h,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrittenPreference {
    Words,
    Digits,
}

/// Whether small cardinals (1..=threshold) are written out as words or as
/// digits in this locale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SmallCardinalPolicy {
    pub preference: WrittenPreference,
    #[serde(default = "default_threshold")]
    pub threshold: u64,
}

fn default_threshold() -> u64 {
    9
}

/// Structural role of a number word. `Teen` is any single word denoting a
/// two-digit value (en "twelve", fr "dix-huit"); `Ten` words compose with a
/// following unit (en "twenty" + "three").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumberWordRole {
    Zero,
    Unit,
    Teen,
    Ten,
    Hundred,
    OrdinalUnit,
    OrdinalTeen,
    OrdinalTen,
    OrdinalHundred,
    OrdinalMagnitude,
    Connective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberWordEntry {
    pub value: u64,
    pub role: NumberWordRole,
    /// Parse-only alternates ("oh" for zero) that are never the canonical
    /// rendering of their value.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub variant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DateOrder {
    MonthDayYear,
    DayMonthYear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeStyle {
    /// "13:30"
    Colon,
    /// "13h30", hour-only "18h"
    HSeparator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "style",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case"
)]
pub enum OrdinalStyle {
    /// 1st/2nd/3rd/4th with the teen exception.
    English,
    /// A fixed suffix ("60ème", "13.") with per-value exceptions ("1er").
    Suffix {
        suffix: String,
        #[serde(default)]
        exceptions: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct UnitEntry {
    /// Written surface forms; the first one is used when rendering.
    pub written: Vec<String>,
    pub singular: String,
    pub plural: String,
    /// Extra spoken forms accepted and generated ("kilo", "kilos").
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spoken_alts: Vec<String>,
    /// Whether the written form takes a space before the unit ("31 degrees"
    /// vs "123g").
    #[serde(default)]
    pub space_before: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolPosition {
    Prefix,
    Suffix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CurrencyRender {
    pub symbol: String,
    pub symbol_position: SymbolPosition,
    pub major_singular: String,
    pub major_plural: String,
    pub minor_singular: String,
    pub minor_plural: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum VerbalizationGrammar {
    English,
    #[default]
    None,
}

/// Per-language formatting and equivalence rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LocaleProfile {
    pub language: String,
    pub decimal_separator: char,
    /// Accepted group separators; the first one is used when rendering.
    pub group_separators: Vec<char>,
    pub group_size: usize,
    pub clock: ClockPreference,
    pub small_cardinal_written_preference: SmallCardinalPolicy,
    /// word -> power of ten ("mille" -> 3).
    pub magnitude_lexicon: BTreeMap<String, u32>,
    pub number_word_lexicon: BTreeMap<String, NumberWordEntry>,
    /// spoken word form -> ISO 4217 code.
    pub currency_lexicon: BTreeMap<String, String>,
    pub minor_unit_digits: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub minor_unit_overrides: BTreeMap<String, usize>,
    pub month_names: Vec<String>,
    pub date_written_order: DateOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_dash_order: Option<DateOrder>,
    /// Field order of verbal dates ("thirty one December ..."), which may
    /// differ from the written order.
    pub verbal_date_order: DateOrder,
    pub date_separator: char,
    pub time_written_style: TimeStyle,
    pub ordinal_style: OrdinalStyle,
    #[serde(default)]
    pub verbalization: VerbalizationGrammar,
    /// canonical unit id -> entry.
    pub unit_lexicon: BTreeMap<String, UnitEntry>,
    /// ISO 4217 code -> rendering forms.
    pub currency_render: BTreeMap<String, CurrencyRender>,
}

#[derive(Debug, Error)]
pub enum LocaleError {
    #[error("cannot read locale file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("locale parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("locale validation failed: {0}")]
    Invalid(String),
    #[error("no built-in locale named {0:?}")]
    UnknownBuiltin(String),
}

impl LocaleProfile {
    /// Primary language subtag, lowercased ("en-US" -> "en").
    pub fn primary_language(&self) -> String {
        self.language
            .split(['-', '_'])
            .next()
            .unwrap_or(&self.language)
            .to_ascii_lowercase()
    }

    pub fn minor_unit_digits_for(&self, currency: &str) -> usize {
        self.minor_unit_overrides
            .get(currency)
            .copied()
            .unwrap_or(self.minor_unit_digits)
    }

    /// Check the profile invariants, naming the violated one on failure.
    pub fn validate(&self) -> Result<(), LocaleError> {
        if self.language.is_empty() {
            return Err(LocaleError::Invalid("language tag is empty".into()));
        }
        if self.group_separators.is_empty() {
            return Err(LocaleError::Invalid("group-separators is empty".into()));
        }
        if self.group_separators.contains(&self.decimal_separator) {
            return Err(LocaleError::Invalid(
                "decimal-separator must not be a member of group-separators".into(),
            ));
        }
        if self.group_size == 0 {
            return Err(LocaleError::Invalid("group-size must be positive".into()));
        }
        if self.number_word_lexicon.is_empty() {
            return Err(LocaleError::Invalid("number-word-lexicon is empty".into()));
        }
        if self.magnitude_lexicon.is_empty() {
            return Err(LocaleError::Invalid("magnitude-lexicon is empty".into()));
        }
        if self.currency_lexicon.is_empty() {
            return Err(LocaleError::Invalid("currency-lexicon is empty".into()));
        }
        if self.month_names.len() != 12 {
            return Err(LocaleError::Invalid(format!(
                "month-names must list exactly 12 months, got {}",
                self.month_names.len()
            )));
        }
        // One canonical (non-variant) word per (role, value): the inverse
        // mapping used for generation must be unambiguous.
        let mut seen: BTreeMap<(NumberWordRole, u64), &str> = BTreeMap::new();
        for (word, entry) in &self.number_word_lexicon {
            if entry.variant {
                continue;
            }
            if let Some(prev) = seen.insert((entry.role, entry.value), word) {
                return Err(LocaleError::Invalid(format!(
                    "number-word-lexicon is ambiguous: {prev:?} and {word:?} both map to ({:?}, {})",
                    entry.role, entry.value
                )));
            }
        }
        for (word, entry) in &self.number_word_lexicon {
            let ok = match entry.role {
                NumberWordRole::Zero => entry.value == 0,
                NumberWordRole::Unit | NumberWordRole::OrdinalUnit => {
                    (1..=9).contains(&entry.value)
                }
                NumberWordRole::Teen | NumberWordRole::OrdinalTeen => {
                    (10..=99).contains(&entry.value)
                }
                NumberWordRole::Ten | NumberWordRole::OrdinalTen => {
                    (20..=90).contains(&entry.value) && entry.value % 10 == 0
                }
                NumberWordRole::Hundred | NumberWordRole::OrdinalHundred => entry.value == 100,
                NumberWordRole::OrdinalMagnitude => {
                    entry.value >= 1000 && entry.value.is_power_of_ten()
                }
                NumberWordRole::Connective => true,
            };
            if !ok {
                return Err(LocaleError::Invalid(format!(
                    "number word {word:?} has value {} inconsistent with role {:?}",
                    entry.value, entry.role
                )));
            }
        }
        for (id, unit) in &self.unit_lexicon {
            if unit.written.is_empty() {
                return Err(LocaleError::Invalid(format!(
                    "unit {id:?} has no written surface"
                )));
            }
        }
        for (code, render) in &self.currency_render {
            if code.len() != 3 {
                return Err(LocaleError::Invalid(format!(
                    "currency-render key {code:?} is not an ISO 4217 code"
                )));
            }
            if render.symbol.is_empty() {
                return Err(LocaleError::Invalid(format!(
                    "currency {code:?} has an empty symbol"
                )));
            }
        }
        for iso in self.currency_lexicon.values() {
            if !self.currency_render.contains_key(iso) {
                return Err(LocaleError::Invalid(format!(
                    "currency-lexicon maps to {iso:?} which has no currency-render entry"
                )));
            }
        }
        Ok(())
    }
}

trait PowerOfTen {
    fn is_power_of_ten(&self) -> bool;
}

impl PowerOfTen for u64 {
    fn is_power_of_ten(&self) -> bool {
        let mut v = *self;
        while v >= 10 && v.is_multiple_of(10) {
            v /= 10;
        }
        v == 1
    }
}

fn parse_profile(text: &str, origin: &str) -> Result<LocaleProfile, LocaleError> {
    let profile: LocaleProfile = serde_json::from_str(text).map_err(|e| LocaleError::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{origin}: {e}"),
    })?;
    profile.validate()?;
    Ok(profile)
}

/// Load and validate a locale profile from a JSON file.
pub fn load_locale<P: AsRef<Path>>(path: P) -> Result<LocaleProfile, LocaleError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LocaleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profile(&text, &path.display().to_string())
}

const BUILTIN_LOCALES: &[(&str, &str)] = &[
    ("en", include_str!("../../data/locales/en.json")),
    ("fr", include_str!("../../data/locales/fr.json")),
    ("de", include_str!("../../data/locales/de.json")),
    ("es", include_str!("../../data/locales/es.json")),
    ("it", include_str!("../../data/locales/it.json")),
];

/// Load one of the bundled locale profiles by primary language subtag.
pub fn builtin_locale(name: &str) -> Result<LocaleProfile, LocaleError> {
    let key = name.to_ascii_lowercase();
    let key = key.split(['-', '_']).next().unwrap_or(&key);
    for (lang, text) in BUILTIN_LOCALES {
        if *lang == key {
            return parse_profile(text, &format!("builtin:{lang}"));
        }
    }
    Err(LocaleError::UnknownBuiltin(name.to_string()))
}

pub fn builtin_locale_names() -> Vec<&'static str> {
    BUILTIN_LOCALES.iter().map(|(n, _)| *n).collect()
}

/// Load a locale given either a built-in name ("en", "fr") or a file path.
pub fn resolve_locale(spec: &str) -> Result<Arc<LocaleProfile>, LocaleError> {
    let looks_like_path = spec.contains('/') || spec.contains('\\') || spec.ends_with(".json");
    if !looks_like_path {
        if let Ok(profile) = builtin_locale(spec) {
            return Ok(Arc::new(profile));
        }
    }
    load_locale(spec).map(Arc::new)
}

/// Inverted number-word tables for a locale, used when generating words
/// from values. Indexing: `units[v]` for 1..=9, `teens[v - 10]` for
/// 10..=19, `tens[v / 10]` for 20..=90.
#[derive(Debug, Clone)]
pub struct NumberLexicon {
    pub zero: String,
    pub zero_alts: Vec<String>,
    pub units: Vec<Option<String>>,
    pub teens: Vec<Option<String>>,
    pub tens: Vec<Option<String>>,
    pub hundred: Option<String>,
    pub ordinal_units: Vec<Option<String>>,
    pub ordinal_teens: Vec<Option<String>>,
    pub ordinal_tens: Vec<Option<String>>,
    pub ordinal_hundred: Option<String>,
    /// (power of ten, word), sorted by descending power.
    pub magnitudes: Vec<(u32, String)>,
    /// power of ten -> ordinal word ("thousandth").
    pub ordinal_magnitudes: BTreeMap<u32, String>,
}

impl NumberLexicon {
    pub fn from_profile(profile: &LocaleProfile) -> Result<Self, LocaleError> {
        let mut lex = NumberLexicon {
            zero: String::new(),
            zero_alts: Vec::new(),
            units: vec![None; 10],
            teens: vec![None; 90],
            tens: vec![None; 10],
            hundred: None,
            ordinal_units: vec![None; 10],
            ordinal_teens: vec![None; 90],
            ordinal_tens: vec![None; 10],
            ordinal_hundred: None,
            magnitudes: Vec::new(),
            ordinal_magnitudes: BTreeMap::new(),
        };
        for (word, entry) in &profile.number_word_lexicon {
            let v = entry.value as usize;
            match (entry.role, entry.variant) {
                (NumberWordRole::Zero, false) => lex.zero = word.clone(),
                (NumberWordRole::Zero, true) => lex.zero_alts.push(word.clone()),
                (NumberWordRole::Unit, false) => lex.units[v] = Some(word.clone()),
                (NumberWordRole::Teen, false) => lex.teens[v - 10] = Some(word.clone()),
                (NumberWordRole::Ten, false) => lex.tens[v / 10] = Some(word.clone()),
                (NumberWordRole::Hundred, false) => lex.hundred = Some(word.clone()),
                (NumberWordRole::OrdinalUnit, false) => lex.ordinal_units[v] = Some(word.clone()),
                (NumberWordRole::OrdinalTeen, false) => {
                    lex.ordinal_teens[v - 10] = Some(word.clone())
                }
                (NumberWordRole::OrdinalTen, false) => {
                    lex.ordinal_tens[v / 10] = Some(word.clone())
                }
                (NumberWordRole::OrdinalHundred, false) => lex.ordinal_hundred = Some(word.clone()),
                (NumberWordRole::OrdinalMagnitude, false) => {
                    let power = (entry.value as f64).log10().round() as u32;
                    lex.ordinal_magnitudes.insert(power, word.clone());
                }
                _ => {}
            }
        }
        for (word, power) in &profile.magnitude_lexicon {
            lex.magnitudes.push((*power, word.clone()));
        }
        lex.magnitudes
            .sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        // Keep one canonical word per power for generation; parsing still
        // accepts every magnitude word via the profile map.
        lex.magnitudes.dedup_by_key(|(p, _)| *p);
        if lex.zero.is_empty() {
            return Err(LocaleError::Invalid(
                "number-word-lexicon has no zero word".into(),
            ));
        }
        Ok(lex)
    }

    /// True when the tables cover the full 0..=99 range plus hundreds and a
    /// thousands magnitude, i.e. the grammar can verbalize any number.
    pub fn is_complete(&self) -> bool {
        (1..=9).all(|v| self.units[v].is_some())
            && (10..=19).all(|v| self.teens[v - 10].is_some())
            && (2..=9).all(|t| self.tens[t].is_some())
            && self.hundred.is_some()
            && self.magnitudes.iter().any(|(p, _)| *p == 3)
    }

    pub fn magnitude_word(&self, power: u32) -> Option<&str> {
        self.magnitudes
            .iter()
            .find(|(p, _)| *p == power)
            .map(|(_, w)| w.as_str())
    }
}
