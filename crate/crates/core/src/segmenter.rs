//! Entity detection in written text: the pick and categorize-and-segment
//! stages.
//!
//! Detectors are declarative pattern tables, one JSON file per
//! (class, locale), compiled at load time. Classes claim characters in a
//! fixed precedence order — time and date first, then measures, currency,
//! fractions, decimals, ordinals, phone numbers, digit sequences and
//! finally cardinals. Characters claimed by an earlier class are
//! unavailable to later ones; ties within one class go to the
//! leftmost-longest match.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    CanonicalValue, EntityClass, EntitySpan, LocaleProfile, Meridiem, OrdinalStyle, Quantity,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SegmentationResult {
    pub sentence: String,
    /// Sorted by start offset, non-overlapping.
    pub spans: Vec<EntitySpan>,
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("cannot read pattern table {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("pattern table parse error in {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("pattern {name:?} failed to compile: {message}")]
    BadRegex { name: String, message: String },
    #[error("no built-in pattern tables for language {0:?}")]
    UnknownLanguage(String),
    #[error("span surface {surface:?} no longer matches any {class} pattern")]
    MalformedSpan { class: EntityClass, surface: String },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct PatternGuard {
    #[serde(default)]
    next_not_digit: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawPattern {
    name: String,
    regex: String,
    #[serde(default)]
    bindings: BTreeMap<String, String>,
    #[serde(default)]
    guard: PatternGuard,
    #[serde(default)]
    flag_ambiguous_order: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct RawTable {
    class: EntityClass,
    patterns: Vec<RawPattern>,
}

#[derive(Debug)]
struct CompiledPattern {
    regex: Regex,
    bindings: BTreeMap<String, String>,
    next_not_digit: bool,
    flag_ambiguous_order: bool,
}

#[derive(Debug)]
struct ClassTable {
    class: EntityClass,
    patterns: Vec<CompiledPattern>,
}

/// Compiled pattern tables for one locale, immutable and shareable.
#[derive(Debug)]
pub struct PatternSet {
    tables: Vec<ClassTable>,
}

macro_rules! builtin_lang {
    ($lang:literal) => {{
        const SOURCES: &[&str] = &[
            include_str!(concat!("../data/patterns/", $lang, "/time.json")),
            include_str!(concat!("../data/patterns/", $lang, "/date.json")),
            include_str!(concat!("../data/patterns/", $lang, "/measure.json")),
            include_str!(concat!("../data/patterns/", $lang, "/money.json")),
            include_str!(concat!("../data/patterns/", $lang, "/fraction.json")),
            include_str!(concat!("../data/patterns/", $lang, "/decimal.json")),
            include_str!(concat!("../data/patterns/", $lang, "/ordinal.json")),
            include_str!(concat!("../data/patterns/", $lang, "/telephone.json")),
            include_str!(concat!("../data/patterns/", $lang, "/digit_sequence.json")),
            include_str!(concat!("../data/patterns/", $lang, "/cardinal.json")),
        ];
        ($lang, SOURCES)
    }};
}

const BUILTIN_PATTERNS: &[(&str, &[&str])] = &[
    builtin_lang!("en"),
    builtin_lang!("fr"),
    builtin_lang!("de"),
    builtin_lang!("es"),
    builtin_lang!("it"),
];

fn alternation<I: IntoIterator<Item = String>>(items: I) -> String {
    let mut forms: Vec<String> = items.into_iter().collect();
    forms.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
    forms.dedup();
    let parts: Vec<String> = forms
        .iter()
        .map(|f| {
            let escaped = regex::escape(f);
            if f.chars().last().is_some_and(|c| c.is_alphanumeric()) {
                format!("{escaped}\\b")
            } else {
                escaped
            }
        })
        .collect();
    format!("(?:{})", parts.join("|"))
}

fn expand_placeholders(regex: &str, profile: &LocaleProfile) -> String {
    let mut out = regex.to_string();
    if out.contains("{{month}}") {
        let months = alternation(profile.month_names.iter().cloned());
        out = out.replace(
            "{{month}}",
            &format!("(?i:{})", &months[3..months.len() - 1]),
        );
    }
    if out.contains("{{unit}}") {
        let surfaces = profile
            .unit_lexicon
            .values()
            .flat_map(|u| u.written.iter().cloned());
        out = out.replace("{{unit}}", &alternation(surfaces));
    }
    if out.contains("{{currency_symbols}}") {
        let symbols = profile.currency_render.values().map(|c| c.symbol.clone());
        out = out.replace("{{currency_symbols}}", &alternation(symbols));
    }
    out
}

impl PatternSet {
    fn from_raw(raws: Vec<RawTable>, profile: &LocaleProfile) -> Result<Self, PatternError> {
        let mut by_class: BTreeMap<EntityClass, ClassTable> = BTreeMap::new();
        for raw in raws {
            let mut patterns = Vec::new();
            for p in raw.patterns {
                let expanded = expand_placeholders(&p.regex, profile);
                let regex = Regex::new(&expanded).map_err(|e| PatternError::BadRegex {
                    name: p.name.clone(),
                    message: e.to_string(),
                })?;
                patterns.push(CompiledPattern {
                    regex,
                    bindings: p.bindings,
                    next_not_digit: p.guard.next_not_digit,
                    flag_ambiguous_order: p.flag_ambiguous_order,
                });
            }
            by_class
                .entry(raw.class)
                .or_insert_with(|| ClassTable {
                    class: raw.class,
                    patterns: Vec::new(),
                })
                .patterns
                .extend(patterns);
        }
        let mut tables = Vec::new();
        for class in EntityClass::PRECEDENCE {
            if let Some(table) = by_class.remove(&class) {
                tables.push(table);
            }
        }
        Ok(PatternSet { tables })
    }

    /// Built-in tables for the profile's primary language.
    pub fn builtin(profile: &LocaleProfile) -> Result<Self, PatternError> {
        let lang = profile.primary_language();
        let sources = BUILTIN_PATTERNS
            .iter()
            .find(|(l, _)| *l == lang)
            .map(|(_, s)| *s)
            .ok_or_else(|| PatternError::UnknownLanguage(lang.clone()))?;
        let mut raws = Vec::new();
        for text in sources {
            let raw: RawTable = serde_json::from_str(text).map_err(|e| PatternError::Parse {
                origin: format!("builtin:{lang}"),
                message: e.to_string(),
            })?;
            raws.push(raw);
        }
        Self::from_raw(raws, profile)
    }

    /// Load tables from a directory of `<class>.json` files.
    pub fn from_dir<P: AsRef<Path>>(dir: P, profile: &LocaleProfile) -> Result<Self, PatternError> {
        let dir = dir.as_ref();
        let mut raws = Vec::new();
        let entries = std::fs::read_dir(dir).map_err(|source| PatternError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|source| PatternError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let raw: RawTable = serde_json::from_str(&text).map_err(|e| PatternError::Parse {
                origin: path.display().to_string(),
                message: e.to_string(),
            })?;
            raws.push(raw);
        }
        Self::from_raw(raws, profile)
    }
}

/// Reentrant entity detector over compiled patterns. Safe to call from many
/// workers.
#[derive(Debug)]
pub struct Segmenter {
    profile: Arc<LocaleProfile>,
    patterns: PatternSet,
    enabled: BTreeSet<EntityClass>,
    unit_surface_to_id: BTreeMap<String, String>,
    currency_symbol_to_iso: BTreeMap<String, String>,
}

struct Candidate<'t> {
    start: usize,
    end: usize,
    /// byte offsets into the sentence
    byte_start: usize,
    byte_end: usize,
    fields: BTreeMap<&'static str, &'t str>,
    ambiguous_order: bool,
}

const FIELD_NAMES: &[&str] = &[
    "value",
    "suffix",
    "integer",
    "fraction",
    "whole",
    "numerator",
    "denominator",
    "currency",
    "major",
    "minor",
    "hour",
    "minute",
    "second",
    "meridiem",
    "day",
    "month",
    "year",
    "magnitude",
    "unit",
];

fn field_name(name: &str) -> Option<&'static str> {
    FIELD_NAMES.iter().find(|f| **f == name).copied()
}

impl Segmenter {
    pub fn new(profile: Arc<LocaleProfile>) -> Result<Self, PatternError> {
        let patterns = PatternSet::builtin(&profile)?;
        Ok(Self::with_patterns(profile, patterns))
    }

    pub fn with_patterns(profile: Arc<LocaleProfile>, patterns: PatternSet) -> Self {
        let mut unit_surface_to_id = BTreeMap::new();
        for (id, unit) in &profile.unit_lexicon {
            for surface in &unit.written {
                unit_surface_to_id.insert(surface.clone(), id.clone());
            }
        }
        let mut currency_symbol_to_iso = BTreeMap::new();
        for (iso, render) in &profile.currency_render {
            currency_symbol_to_iso.insert(render.symbol.clone(), iso.clone());
        }
        Segmenter {
            profile,
            patterns,
            enabled: EntityClass::PRECEDENCE.iter().copied().collect(),
            unit_surface_to_id,
            currency_symbol_to_iso,
        }
    }

    pub fn with_enabled(mut self, classes: BTreeSet<EntityClass>) -> Self {
        self.enabled = classes;
        self
    }

    pub fn profile(&self) -> &Arc<LocaleProfile> {
        &self.profile
    }

    /// True iff segmentation would yield at least one span.
    pub fn pick(&self, sentence: &str) -> bool {
        !self.segment(sentence).spans.is_empty()
    }

    /// Extract entity spans in precedence order. Total and deterministic:
    /// pathological inputs yield empty span lists.
    pub fn segment(&self, sentence: &str) -> SegmentationResult {
        let char_count = sentence.chars().count();
        // byte offset -> char offset, for translating regex matches
        let mut byte_to_char: BTreeMap<usize, usize> = BTreeMap::new();
        for (ci, (bi, _)) in sentence.char_indices().enumerate() {
            byte_to_char.insert(bi, ci);
        }
        byte_to_char.insert(sentence.len(), char_count);

        let mut claimed = vec![false; char_count];
        let mut spans: Vec<EntitySpan> = Vec::new();

        for table in &self.patterns.tables {
            if !self.enabled.contains(&table.class) {
                continue;
            }
            let mut candidates: Vec<Candidate> = Vec::new();
            for (pattern_idx, pattern) in table.patterns.iter().enumerate() {
                for caps in pattern.regex.captures_iter(sentence) {
                    let whole = caps.get(0).unwrap();
                    if whole.start() == whole.end() {
                        continue;
                    }
                    if pattern.next_not_digit {
                        let next = sentence[whole.end()..].chars().next();
                        if next.is_some_and(|c| c.is_ascii_digit()) {
                            continue;
                        }
                    }
                    let mut fields: BTreeMap<&'static str, &str> = BTreeMap::new();
                    for (group, field) in &pattern.bindings {
                        if let (Some(m), Some(name)) = (caps.name(group), field_name(field)) {
                            fields.insert(name, m.as_str());
                        }
                    }
                    candidates.push(Candidate {
                        start: byte_to_char[&whole.start()],
                        end: byte_to_char[&whole.end()],
                        byte_start: whole.start(),
                        byte_end: whole.end(),
                        fields,
                        ambiguous_order: pattern.flag_ambiguous_order,
                    });
                    // pattern_idx participates in the sort below through
                    // stable ordering of this candidates vec
                    let _ = pattern_idx;
                }
            }
            candidates.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
            for cand in candidates {
                if claimed[cand.start..cand.end].iter().any(|c| *c) {
                    continue;
                }
                let surface = &sentence[cand.byte_start..cand.byte_end];
                let Some((value, ambiguous)) =
                    self.build_value(table.class, surface, &cand.fields, cand.ambiguous_order)
                else {
                    continue;
                };
                claimed[cand.start..cand.end]
                    .iter_mut()
                    .for_each(|c| *c = true);
                spans.push(EntitySpan {
                    class: table.class,
                    start: cand.start,
                    end: cand.end,
                    surface: surface.to_string(),
                    value,
                    ambiguous,
                });
            }
        }
        spans.sort_by_key(|s| s.start);
        SegmentationResult {
            sentence: sentence.to_string(),
            spans,
        }
    }

    /// Re-derive the canonical value of a previously produced span,
    /// requiring its surface to still fully match one of its class
    /// patterns. A failure signals pattern-table drift.
    pub fn canonicalize_span(&self, span: &EntitySpan) -> Result<CanonicalValue, PatternError> {
        let table = self
            .patterns
            .tables
            .iter()
            .find(|t| t.class == span.class)
            .ok_or(PatternError::MalformedSpan {
                class: span.class,
                surface: span.surface.clone(),
            })?;
        for pattern in &table.patterns {
            if let Some(caps) = pattern.regex.captures(&span.surface) {
                let whole = caps.get(0).unwrap();
                if whole.start() != 0 || whole.end() != span.surface.len() {
                    continue;
                }
                let mut fields: BTreeMap<&'static str, &str> = BTreeMap::new();
                for (group, field) in &pattern.bindings {
                    if let (Some(m), Some(name)) = (caps.name(group), field_name(field)) {
                        fields.insert(name, m.as_str());
                    }
                }
                if let Some((value, _)) = self.build_value(
                    span.class,
                    &span.surface,
                    &fields,
                    pattern.flag_ambiguous_order,
                ) {
                    return Ok(value);
                }
            }
        }
        Err(PatternError::MalformedSpan {
            class: span.class,
            surface: span.surface.clone(),
        })
    }

    fn strip_separators(&self, digits: &str) -> String {
        digits
            .chars()
            .filter(|c| !self.profile.group_separators.contains(c))
            .collect()
    }

    /// Parse a written numeric surface into (integer part, fraction digits),
    /// honoring locale group and decimal separators.
    fn parse_numeric(&self, surface: &str) -> Option<(i64, Option<String>)> {
        let (int_part, frac_part) = match surface.split_once(self.profile.decimal_separator) {
            Some((i, f)) => (i, Some(f)),
            None => (surface, None),
        };
        let int_digits = self.strip_separators(int_part);
        if int_digits.is_empty() || !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if int_digits.len() > 15 {
            return None;
        }
        let value: i64 = int_digits.parse().ok()?;
        if let Some(f) = &frac_part {
            if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
        }
        Some((value, frac_part.map(|f| f.to_string())))
    }

    fn suffix_power(suffix: &str) -> Option<u32> {
        match suffix.trim().to_ascii_lowercase().as_str() {
            "k" => Some(3),
            "m" => Some(6),
            "b" => Some(9),
            _ => None,
        }
    }

    /// Scale a (integer, fraction) pair by 10^power, e.g. "1.5" K -> 1500.
    fn scale(value: i64, fraction: Option<&str>, power: u32) -> Option<(i64, Option<String>)> {
        let frac = fraction.unwrap_or("");
        let mut digits = frac.to_string();
        let mut v = value.checked_mul(10i64.checked_pow(power)?)?;
        let shift = (power as usize).min(digits.len());
        let (head, tail) = digits.split_at(shift);
        let head_value: i64 = if head.is_empty() {
            0
        } else {
            head.parse().ok()?
        };
        v = v.checked_add(head_value.checked_mul(10i64.checked_pow(power - shift as u32)?)?)?;
        digits = tail.to_string();
        if digits.is_empty() {
            Some((v, None))
        } else {
            Some((v, Some(digits)))
        }
    }

    fn month_number(&self, raw: &str) -> Option<u8> {
        if raw.bytes().all(|b| b.is_ascii_digit()) {
            return raw.parse().ok();
        }
        let lowered = raw.to_lowercase();
        self.profile
            .month_names
            .iter()
            .position(|m| m.to_lowercase() == lowered)
            .map(|i| (i + 1) as u8)
    }

    fn build_value(
        &self,
        class: EntityClass,
        surface: &str,
        fields: &BTreeMap<&'static str, &str>,
        flag_ambiguous_order: bool,
    ) -> Option<(CanonicalValue, bool)> {
        let value = match class {
            EntityClass::Cardinal => {
                let raw = fields.get("value").copied().unwrap_or(surface);
                let digits_only =
                    self.strip_separators(raw.split(self.profile.decimal_separator).next()?);
                if digits_only.len() > 1 && digits_only.starts_with('0') {
                    return None;
                }
                let (mut v, frac) = self.parse_numeric(raw)?;
                if let Some(suffix) = fields.get("suffix") {
                    let power = Self::suffix_power(suffix)?;
                    let (scaled, rest) = Self::scale(v, frac.as_deref(), power)?;
                    if rest.is_some_and(|r| r.bytes().any(|b| b != b'0')) {
                        return None;
                    }
                    v = scaled;
                } else if frac.is_some() {
                    return None;
                }
                CanonicalValue::Cardinal { value: v }
            }
            EntityClass::Ordinal => {
                let raw = fields.get("value")?;
                let v: u64 = raw.parse().ok()?;
                if v == 0 || raw.len() > 15 || (raw.len() > 1 && raw.starts_with('0')) {
                    return None;
                }
                if let OrdinalStyle::English = self.profile.ordinal_style {
                    let suffix = fields.get("suffix")?.to_ascii_lowercase();
                    if suffix != english_ordinal_suffix(v) {
                        return None;
                    }
                }
                CanonicalValue::Ordinal { value: v }
            }
            EntityClass::Decimal => {
                let int: i64 = self.strip_separators(fields.get("integer")?).parse().ok()?;
                let frac = fields.get("fraction")?.to_string();
                CanonicalValue::Decimal {
                    integer_part: int,
                    fraction_digits: frac,
                }
            }
            EntityClass::Fraction => {
                let numerator: i64 = fields.get("numerator")?.parse().ok()?;
                let denominator: u64 = fields.get("denominator")?.parse().ok()?;
                if denominator == 0 {
                    return None;
                }
                let whole = match fields.get("whole") {
                    Some(w) => Some(w.parse().ok()?),
                    None => None,
                };
                CanonicalValue::Fraction {
                    numerator,
                    denominator,
                    whole,
                }
            }
            EntityClass::Money => {
                let iso = self
                    .currency_symbol_to_iso
                    .get(*fields.get("currency")?)?
                    .clone();
                let (mut major, _) = self.parse_numeric(fields.get("major")?)?;
                if let Some(suffix) = fields.get("suffix") {
                    let power = Self::suffix_power(suffix)?;
                    major = major.checked_mul(10i64.checked_pow(power)?)?;
                }
                let minor = fields.get("minor").map(|m| m.to_string());
                if let Some(m) = &minor {
                    if m.len() != self.profile.minor_unit_digits_for(&iso) {
                        return None;
                    }
                }
                CanonicalValue::Money {
                    amount_major: major,
                    amount_minor: minor,
                    currency: iso,
                }
            }
            EntityClass::Time => {
                let hour: u8 = fields.get("hour")?.parse().ok()?;
                let minute: u8 = match fields.get("minute") {
                    Some(m) => m.parse().ok()?,
                    None => 0,
                };
                let second = match fields.get("second") {
                    Some(s) => Some(s.parse().ok()?),
                    None => None,
                };
                let meridiem = match fields.get("meridiem") {
                    Some(m) => {
                        let normalized: String = m
                            .chars()
                            .filter(|c| c.is_ascii_alphabetic())
                            .collect::<String>()
                            .to_ascii_lowercase();
                        match normalized.chars().next() {
                            Some('a') => Some(Meridiem::Am),
                            Some('p') => Some(Meridiem::Pm),
                            _ => return None,
                        }
                    }
                    None => Some(Meridiem::NoneExplicit),
                };
                CanonicalValue::Time {
                    hour,
                    minute,
                    second,
                    meridiem,
                }
            }
            EntityClass::Date => {
                let day: Option<u8> = match fields.get("day") {
                    Some(d) => Some(d.parse().ok()?),
                    None => None,
                };
                let month = match fields.get("month") {
                    Some(m) => Some(self.month_number(m)?),
                    None => None,
                };
                let year: Option<i32> = match fields.get("year") {
                    Some(y) => {
                        let v: i32 = y.parse().ok()?;
                        Some(if y.len() == 2 {
                            if v <= 49 {
                                2000 + v
                            } else {
                                1900 + v
                            }
                        } else {
                            v
                        })
                    }
                    None => None,
                };
                CanonicalValue::Date { day, month, year }
            }
            EntityClass::Measure => {
                let unit = self.unit_surface_to_id.get(*fields.get("unit")?)?.clone();
                let (mut v, mut frac) = self.parse_numeric(fields.get("magnitude")?)?;
                if let Some(suffix) = fields.get("suffix") {
                    let power = Self::suffix_power(suffix)?;
                    let (scaled, rest) = Self::scale(v, frac.as_deref(), power)?;
                    v = scaled;
                    frac = rest;
                }
                let magnitude = match frac {
                    Some(f) => Quantity::Decimal {
                        integer_part: v,
                        fraction_digits: f,
                    },
                    None => Quantity::Cardinal { value: v },
                };
                CanonicalValue::Measure { magnitude, unit }
            }
            EntityClass::Telephone => {
                let mut groups = Vec::new();
                let mut current = String::new();
                for c in surface.chars() {
                    if c.is_ascii_digit() {
                        current.push(c);
                    } else if !current.is_empty() {
                        groups.push(std::mem::take(&mut current));
                    }
                }
                if !current.is_empty() {
                    groups.push(current);
                }
                if groups.is_empty() {
                    return None;
                }
                CanonicalValue::Telephone { groups }
            }
            EntityClass::DigitSequence => {
                if !surface.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                CanonicalValue::DigitSequence {
                    digits: surface.to_string(),
                }
            }
        };
        if value.validate().is_err() {
            return None;
        }
        let ambiguous = if flag_ambiguous_order {
            match &value {
                CanonicalValue::Date {
                    day: Some(d),
                    month: Some(m),
                    ..
                } => *d <= 12 && *m <= 12 && d != m,
                _ => false,
            }
        } else {
            false
        };
        Some((value, ambiguous))
    }
}

pub(crate) fn english_ordinal_suffix(v: u64) -> &'static str {
    match (v % 100, v % 10) {
        (11..=13, _) => "th",
        (_, 1) => "st",
        (_, 2) => "nd",
        (_, 3) => "rd",
        _ => "th",
    }
}

/// Render the locale's written ordinal suffix for a value.
pub(crate) fn ordinal_suffix_for(style: &OrdinalStyle, v: u64) -> String {
    match style {
        OrdinalStyle::English => english_ordinal_suffix(v).to_string(),
        OrdinalStyle::Suffix { suffix, exceptions } => exceptions
            .get(&v.to_string())
            .cloned()
            .unwrap_or_else(|| suffix.clone()),
    }
}
