//! Rule-based inverse text normalization: parse spoken-form entities back
//! to canonical values and render locale-correct written forms.
//!
//! Parsing is greedy leftmost-longest over the inverse of the variant
//! grammar. Class disambiguation is keyword-local only: a meridiem makes a
//! time, a currency word makes money, a unit word a measure. Bare numeric
//! pair readings ("twenty twenty") default to Cardinal. Digit-by-digit
//! readings longer than five digits become telephone numbers (7, 10 or 11
//! digits) or digit sequences; shorter ones stay cardinals so every number
//! variant round-trips to its source value.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{
    CanonicalValue, ClockPreference, DateOrder, LocaleProfile, Meridiem, NumberLexicon,
    NumberWordRole, Quantity, SymbolPosition, TimeStyle, VerbalizationGrammar, WrittenPreference,
};
use crate::segmenter::ordinal_suffix_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    Exact,
    Ambiguous,
}

/// An entity recognized in a spoken token stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ParsedEntity {
    /// Token range `[start, end)` into the input.
    pub start: usize,
    pub end: usize,
    pub value: CanonicalValue,
    pub confidence: Confidence,
}

type EntityCandidate = (CanonicalValue, usize, Confidence);

struct Group {
    value: u64,
    width: usize,
    next: usize,
    structured: bool,
}

struct Phrase {
    digits: String,
    next: usize,
    groups: usize,
    all_single: bool,
}

/// Spoken-entity parser over one locale's lexicons. Construct once, reuse
/// freely across threads.
pub struct SpokenParser {
    profile: Arc<LocaleProfile>,
    lex: NumberLexicon,
    months: BTreeMap<String, u8>,
    units: Vec<(Vec<String>, String)>,
    currency_major: BTreeMap<String, String>,
    allow_conn_in_tens: bool,
}

impl SpokenParser {
    pub fn new(profile: Arc<LocaleProfile>) -> Self {
        let lex = NumberLexicon::from_profile(&profile).unwrap_or_else(|_| NumberLexicon {
            zero: "zero".into(),
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
        });
        let months = profile
            .month_names
            .iter()
            .enumerate()
            .map(|(i, m)| (m.to_lowercase(), (i + 1) as u8))
            .collect();
        let mut units: Vec<(Vec<String>, String)> = Vec::new();
        for (id, entry) in &profile.unit_lexicon {
            let mut forms = vec![entry.singular.clone(), entry.plural.clone()];
            forms.extend(entry.spoken_alts.iter().cloned());
            for form in forms {
                let tokens: Vec<String> =
                    form.split_whitespace().map(|t| t.to_lowercase()).collect();
                if !tokens.is_empty() {
                    units.push((tokens, id.clone()));
                }
            }
        }
        units.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        units.dedup();
        let currency_major = profile
            .currency_lexicon
            .iter()
            .map(|(w, iso)| (w.to_lowercase(), iso.clone()))
            .collect();
        let allow_conn_in_tens = profile.verbalization != VerbalizationGrammar::English;
        SpokenParser {
            profile,
            lex,
            months,
            units,
            currency_major,
            allow_conn_in_tens,
        }
    }

    pub fn profile(&self) -> &Arc<LocaleProfile> {
        &self.profile
    }

    fn entry(&self, tok: &str) -> Option<&crate::domain::NumberWordEntry> {
        self.profile.number_word_lexicon.get(tok)
    }

    fn role(&self, tok: &str) -> Option<NumberWordRole> {
        self.entry(tok).map(|e| e.role)
    }

    fn magnitude(&self, tok: &str) -> Option<u32> {
        self.profile.magnitude_lexicon.get(tok).copied()
    }

    fn is_connective(&self, tok: &str) -> bool {
        self.role(tok) == Some(NumberWordRole::Connective)
    }

    /// 1..=99 from a teen word, a unit word, or a tens word with optional
    /// unit (and, outside English, a connective-joined tail: fr
    /// "soixante et onze").
    fn tens_part(&self, toks: &[String], i: usize) -> Option<(u64, usize)> {
        let entry = self.entry(toks.get(i)?)?;
        match entry.role {
            NumberWordRole::Teen => Some((entry.value, i + 1)),
            NumberWordRole::Unit => Some((entry.value, i + 1)),
            NumberWordRole::Ten => {
                if let Some(next) = toks.get(i + 1) {
                    if let Some(e) = self.entry(next) {
                        if e.role == NumberWordRole::Unit {
                            return Some((entry.value + e.value, i + 2));
                        }
                    }
                    if self.allow_conn_in_tens && self.is_connective(next) {
                        if let Some(e) = toks.get(i + 2).and_then(|t| self.entry(t)) {
                            if matches!(e.role, NumberWordRole::Unit | NumberWordRole::Teen) {
                                return Some((entry.value + e.value, i + 3));
                            }
                        }
                    }
                }
                Some((entry.value, i + 1))
            }
            _ => None,
        }
    }

    /// 1..=9999 hundreds form: tens-part ["hundred" ["and"] [tens-part]].
    fn small(&self, toks: &[String], i: usize) -> Option<(u64, usize, bool)> {
        let (a, j) = self.tens_part(toks, i)?;
        if toks.get(j).and_then(|t| self.role(t)) == Some(NumberWordRole::Hundred) {
            let mut value = a * 100;
            let mut j = j + 1;
            let after_and = if toks.get(j).is_some_and(|t| self.is_connective(t)) {
                j + 1
            } else {
                j
            };
            if let Some((b, j2)) = self.tens_part(toks, after_and) {
                value += b;
                j = j2;
            }
            return Some((value, j, true));
        }
        Some((a, j, false))
    }

    /// Full magnitude expression: "two million five thousand six".
    fn magnitude_expr(&self, toks: &[String], i: usize) -> Option<(u64, usize, bool)> {
        let (first, mut j, mut structured) = self.small(toks, i)?;
        let mut total: u64 = 0;
        let mut current = first;
        let mut last_power = u32::MAX;
        while let Some(p) = toks.get(j).and_then(|t| self.magnitude(t)) {
            if p >= last_power {
                break;
            }
            total = total.checked_add(current.checked_mul(10u64.checked_pow(p)?)?)?;
            last_power = p;
            structured = true;
            j += 1;
            match self.small(toks, j) {
                Some((next, j2, s)) => {
                    // stop before a small that belongs to a following
                    // non-descending magnitude
                    if let Some(p2) = toks.get(j2).and_then(|t| self.magnitude(t)) {
                        if p2 >= last_power {
                            break;
                        }
                    }
                    current = next;
                    j = j2;
                    structured |= s;
                }
                None => {
                    current = 0;
                }
            }
        }
        total.checked_add(current).map(|v| (v, j, structured))
    }

    fn group(&self, toks: &[String], i: usize) -> Option<Group> {
        let tok = toks.get(i)?;
        if self.role(tok) == Some(NumberWordRole::Zero) {
            return Some(Group {
                value: 0,
                width: 1,
                next: i + 1,
                structured: false,
            });
        }
        let (value, next, structured) = self.magnitude_expr(toks, i)?;
        let width = if structured {
            value.to_string().len()
        } else if value >= 10 {
            2
        } else {
            1
        };
        Some(Group {
            value,
            width,
            next,
            structured,
        })
    }

    /// Concatenate consecutive number groups into a digit string:
    /// "one twenty three" -> "123", "eight oh one" -> "801".
    fn phrase(&self, toks: &[String], i: usize) -> Option<Phrase> {
        let mut digits = String::new();
        let mut j = i;
        let mut groups = 0;
        let mut all_single = true;
        while let Some(g) = self.group(toks, j) {
            if digits.len() + g.width > 32 {
                break;
            }
            digits.push_str(&format!("{:0width$}", g.value, width = g.width));
            all_single &= g.width == 1 && !g.structured;
            groups += 1;
            j = g.next;
        }
        if groups == 0 {
            None
        } else {
            Some(Phrase {
                digits,
                next: j,
                groups,
                all_single,
            })
        }
    }

    fn ordinal_counterpart(&self, tok: &str) -> Option<String> {
        let entry = self.entry(tok)?;
        let v = entry.value as usize;
        match entry.role {
            NumberWordRole::OrdinalUnit => self.lex.units[v].clone(),
            NumberWordRole::OrdinalTeen => self.lex.teens[v - 10].clone(),
            NumberWordRole::OrdinalTen => self.lex.tens[v / 10].clone(),
            NumberWordRole::OrdinalHundred => self.lex.hundred.clone(),
            NumberWordRole::OrdinalMagnitude => {
                let power = (entry.value as f64).log10().round() as u32;
                self.lex
                    .magnitudes
                    .iter()
                    .find(|(p, _)| *p == power)
                    .map(|(_, w)| w.clone())
            }
            _ => None,
        }
    }

    /// Ordinal expression: a number long form whose final word is an
    /// ordinal form ("sixty third", "one hundredth"). Longest match.
    fn ordinal_expr(&self, toks: &[String], i: usize) -> Option<(u64, usize)> {
        let mut best: Option<(u64, usize)> = None;
        let limit = (i + 8).min(toks.len());
        for j in i..limit {
            let tok = &toks[j];
            if let Some(counterpart) = self.ordinal_counterpart(tok) {
                let mut candidate: Vec<String> = toks[i..j].to_vec();
                candidate.push(counterpart);
                if let Some((value, next, _)) = self.magnitude_expr(&candidate, 0) {
                    if next == candidate.len() && value > 0 {
                        best = Some((value, j + 1));
                    }
                }
            } else if self.entry(tok).is_none() && self.magnitude(tok).is_none() {
                break;
            }
        }
        best
    }

    fn meridiem_at(&self, toks: &[String], i: usize) -> Option<(Meridiem, usize)> {
        match toks.get(i).map(|s| s.as_str()) {
            Some("a") if toks.get(i + 1).map(|s| s.as_str()) == Some("m") => {
                Some((Meridiem::Am, i + 2))
            }
            Some("p") if toks.get(i + 1).map(|s| s.as_str()) == Some("m") => {
                Some((Meridiem::Pm, i + 2))
            }
            Some("am") | Some("a.m") => Some((Meridiem::Am, i + 1)),
            Some("pm") | Some("p.m") => Some((Meridiem::Pm, i + 1)),
            Some("in") => match (
                toks.get(i + 1).map(|s| s.as_str()),
                toks.get(i + 2).map(|s| s.as_str()),
            ) {
                (Some("the"), Some("morning")) => Some((Meridiem::Am, i + 3)),
                (Some("the"), Some("evening")) | (Some("the"), Some("afternoon")) => {
                    Some((Meridiem::Pm, i + 3))
                }
                _ => None,
            },
            Some("morning") => Some((Meridiem::Am, i + 1)),
            Some("evening") | Some("afternoon") => Some((Meridiem::Pm, i + 1)),
            _ => None,
        }
    }

    /// An hour word: an unstructured 0..=23 reading.
    fn hour_at(&self, toks: &[String], i: usize) -> Option<(u8, usize)> {
        if self.role(toks.get(i)?) == Some(NumberWordRole::Zero) {
            return Some((0, i + 1));
        }
        let (v, j) = self.tens_part(toks, i)?;
        if v <= 23 {
            Some((v as u8, j))
        } else {
            None
        }
    }

    /// A minute reading: zero-led pair ("oh five") or a 10..=59 tens part.
    fn minute_at(&self, toks: &[String], i: usize) -> Option<(u8, usize)> {
        if self.role(toks.get(i)?) == Some(NumberWordRole::Zero) {
            let e = self.entry(toks.get(i + 1)?)?;
            return match e.role {
                NumberWordRole::Unit => Some((e.value as u8, i + 2)),
                NumberWordRole::Zero => Some((0, i + 2)),
                _ => None,
            };
        }
        let (v, j) = self.tens_part(toks, i)?;
        if (10..=59).contains(&v) {
            Some((v as u8, j))
        } else {
            None
        }
    }

    fn build_time(
        hour: u8,
        minute: u8,
        second: Option<u8>,
        meridiem: Option<Meridiem>,
        end: usize,
    ) -> Option<(CanonicalValue, usize, Confidence)> {
        let value = CanonicalValue::Time {
            hour,
            minute,
            second,
            meridiem,
        };
        value.validate().ok()?;
        let confidence = if meridiem.is_some() {
            Confidence::Exact
        } else {
            Confidence::Ambiguous
        };
        Some((value, end, confidence))
    }

    fn time_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let mut best: Option<(CanonicalValue, usize, Confidence)> = None;
        let mut push = |cand: Option<(CanonicalValue, usize, Confidence)>| {
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.1 > b.1) {
                    best = Some(c);
                }
            }
        };

        let tok = toks.get(i)?.as_str();
        // "quarter past six", "half past six"
        if (tok == "quarter" || tok == "half")
            && toks.get(i + 1).map(|s| s.as_str()) == Some("past")
        {
            if let Some((h, j)) = self.hour_at(toks, i + 2) {
                let minute = if tok == "quarter" { 15 } else { 30 };
                match self.meridiem_at(toks, j) {
                    Some((mer, j2)) => push(Self::build_time(h, minute, None, Some(mer), j2)),
                    None => push(Self::build_time(h, minute, None, None, j)),
                }
            }
        }
        if let Some((h, j)) = self.hour_at(toks, i) {
            // "six and quarter a m"
            if toks.get(j).map(|s| s.as_str()) == Some("and")
                && toks.get(j + 1).map(|s| s.as_str()) == Some("quarter")
            {
                match self.meridiem_at(toks, j + 2) {
                    Some((mer, j2)) => push(Self::build_time(h, 15, None, Some(mer), j2)),
                    None => push(Self::build_time(h, 15, None, None, j + 2)),
                }
            }
            // "six past fifteen a m" (hour past minutes, as generated)
            if toks.get(j).map(|s| s.as_str()) == Some("past") {
                if let Some((m, j2)) = self.minute_at(toks, j + 1) {
                    match self.meridiem_at(toks, j2) {
                        Some((mer, j3)) => push(Self::build_time(h, m, None, Some(mer), j3)),
                        None => push(Self::build_time(h, m, None, None, j2)),
                    }
                }
            }
            // "six fifteen a m", "six oh five p m", "six fifteen thirty p m",
            // "six p m" — a meridiem is required, bare readings stay numbers
            if let Some((m, j2)) = self.minute_at(toks, j) {
                if let Some((s, j3)) = self.tens_part(toks, j2) {
                    if s <= 59 {
                        if let Some((mer, j4)) = self.meridiem_at(toks, j3) {
                            push(Self::build_time(h, m, Some(s as u8), Some(mer), j4));
                        }
                    }
                }
                if let Some((mer, j3)) = self.meridiem_at(toks, j2) {
                    push(Self::build_time(h, m, None, Some(mer), j3));
                }
            }
            if let Some((mer, j2)) = self.meridiem_at(toks, j) {
                push(Self::build_time(h, 0, None, Some(mer), j2));
            }
        }
        // "twelve hours forty five minutes [thirty seconds]"
        let hours_style_head = if self.role(toks.get(i)?) == Some(NumberWordRole::Zero) {
            Some((0u64, i + 1, false))
        } else {
            self.small(toks, i)
        };
        if let Some((h, j, _)) = hours_style_head {
            if h <= 23 && toks.get(j).map(|s| s.as_str()) == Some("hours") {
                let mut j = j + 1;
                let mut minute = 0u8;
                let mut second = None;
                if let Some((m, j2, _)) = self.small(toks, j) {
                    if m <= 59 && toks.get(j2).map(|s| s.as_str()) == Some("minutes") {
                        minute = m as u8;
                        j = j2 + 1;
                    }
                }
                if let Some((s, j2, _)) = self.small(toks, j) {
                    if s <= 59 && toks.get(j2).map(|s| s.as_str()) == Some("seconds") {
                        second = Some(s as u8);
                        j = j2 + 1;
                    }
                }
                push(Self::build_time(h as u8, minute, second, Some(Meridiem::NoneExplicit), j));
            }
        }
        best
    }

    /// Possible day readings at a position, longest first. A greedy tens
    /// part may steal the first word of a following year ("twenty one
    /// thousand nine hundred fourteen"), so the bare first word is also
    /// offered as a shorter candidate.
    fn day_candidates(&self, toks: &[String], i: usize) -> Vec<(u8, usize)> {
        let mut out: Vec<(u8, usize)> = Vec::new();
        if let Some((v, j)) = self.ordinal_expr(toks, i) {
            if (1..=31).contains(&v) {
                out.push((v as u8, j));
            }
        }
        if let Some((v, j)) = self.tens_part(toks, i) {
            if (1..=31).contains(&v) {
                out.push((v as u8, j));
            }
            if j > i + 1 {
                if let Some(e) = toks.get(i).and_then(|t| self.entry(t)) {
                    if (1..=31).contains(&e.value) {
                        out.push((e.value as u8, i + 1));
                    }
                }
            }
        }
        out.dedup();
        out
    }

    fn year_at(&self, toks: &[String], i: usize) -> Option<(i32, usize)> {
        // structured: "two thousand twenty two", "nineteen hundred"
        if let Some((v, j, structured)) = self.magnitude_expr(toks, i) {
            if structured && (1000..=9999).contains(&v) {
                return Some((v as i32, j));
            }
        }
        // pair: "twenty twenty two", "nineteen eighty four"
        let g1 = self.group(toks, i)?;
        if g1.structured || g1.width != 2 || g1.value < 10 {
            return None;
        }
        let g2 = self.group(toks, g1.next)?;
        if g2.structured || g2.width != 2 {
            return None;
        }
        Some(((g1.value * 100 + g2.value) as i32, g2.next))
    }

    fn month_at(&self, toks: &[String], i: usize) -> Option<(u8, usize)> {
        self.months.get(toks.get(i)?).map(|m| (*m, i + 1))
    }

    fn date_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let mut best: Option<(CanonicalValue, usize, Confidence)> = None;
        let mut push = |day: Option<u8>, month: Option<u8>, year: Option<i32>, end: usize| {
            let value = CanonicalValue::Date { day, month, year };
            if value.validate().is_ok() && best.as_ref().is_none_or(|b| end > b.1) {
                best = Some((value, end, Confidence::Exact));
            }
        };
        // day-first: "thirty one December 2022", "thirty first of December"
        for (d, j) in self.day_candidates(toks, i) {
            let j_month = if toks.get(j).map(|s| s.as_str()) == Some("of") {
                j + 1
            } else {
                j
            };
            if let Some((m, j2)) = self.month_at(toks, j_month) {
                match self.year_at(toks, j2) {
                    Some((y, j3)) => push(Some(d), Some(m), Some(y), j3),
                    None => push(Some(d), Some(m), None, j2),
                }
            }
        }
        // month-first: "December thirty one 2022", "December 2022"
        if let Some((m, j)) = self.month_at(toks, i) {
            for (d, j2) in self.day_candidates(toks, j) {
                match self.year_at(toks, j2) {
                    Some((y, j3)) => push(Some(d), Some(m), Some(y), j3),
                    None => push(Some(d), Some(m), None, j2),
                }
            }
            if let Some((y, j2)) = self.year_at(toks, j) {
                push(None, Some(m), Some(y), j2);
            }
        }
        best
    }

    fn minor_word_for(&self, iso: &str, tok: &str) -> bool {
        self.profile.currency_render.get(iso).is_some_and(|r| {
            r.minor_singular.to_lowercase() == tok || r.minor_plural.to_lowercase() == tok
        })
    }

    fn money_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let mut idx = i;
        let negative = toks.get(idx).map(|s| s.as_str()) == Some("minus");
        if negative {
            idx += 1;
        }
        // article form: "a dollar twenty cents"
        let (major_digits, mut j) = if toks.get(idx).map(|s| s.as_str()) == Some("a")
            && toks
                .get(idx + 1)
                .is_some_and(|t| self.currency_major.contains_key(t))
        {
            ("1".to_string(), idx + 1)
        } else {
            let phrase = self.phrase(toks, idx)?;
            (phrase.digits, phrase.next)
        };
        if major_digits.len() > 15 {
            return None;
        }
        // decimal style: "one point two zero dollars"
        if toks.get(j).map(|s| s.as_str()) == Some("point") {
            let mut frac = String::new();
            let mut k = j + 1;
            while let Some(e) = toks.get(k).and_then(|t| self.entry(t)) {
                match e.role {
                    NumberWordRole::Zero => frac.push('0'),
                    NumberWordRole::Unit => frac.push_str(&e.value.to_string()),
                    _ => break,
                }
                k += 1;
            }
            if frac.is_empty() {
                return None;
            }
            let iso = self.currency_major.get(toks.get(k)?)?.clone();
            let width = self.profile.minor_unit_digits_for(&iso);
            if frac.len() > width {
                return None;
            }
            let mut minor = frac;
            while minor.len() < width {
                minor.push('0');
            }
            let mut major: i64 = major_digits.parse().ok()?;
            if negative {
                major = -major;
            }
            let value = CanonicalValue::Money {
                amount_major: major,
                amount_minor: Some(minor),
                currency: iso,
            };
            value.validate().ok()?;
            return Some((value, k + 1, Confidence::Exact));
        }
        let iso = self.currency_major.get(toks.get(j)?)?.clone();
        j += 1;
        let mut major: i64 = major_digits.parse().ok()?;
        if negative {
            major = -major;
        }
        // optional minor: "[and] twenty cents", "zero cents"
        let mut minor: Option<String> = None;
        let mut end = j;
        let after_and = if toks.get(j).map(|s| s.as_str()) == Some("and") {
            j + 1
        } else {
            j
        };
        if let Some(phrase) = self.phrase(toks, after_and) {
            let width = self.profile.minor_unit_digits_for(&iso);
            if phrase.digits.len() <= width {
                if let Some(tok) = toks.get(phrase.next) {
                    if self.minor_word_for(&iso, tok) {
                        let v: u64 = phrase.digits.parse().ok()?;
                        if v > 0 {
                            minor = Some(format!("{v:0width$}"));
                        }
                        end = phrase.next + 1;
                    }
                }
            }
        }
        let value = CanonicalValue::Money {
            amount_major: major,
            amount_minor: minor,
            currency: iso,
        };
        value.validate().ok()?;
        Some((value, end, Confidence::Exact))
    }

    fn match_unit(&self, toks: &[String], i: usize) -> Option<(&str, usize)> {
        for (form, id) in &self.units {
            if toks.len() >= i + form.len() && toks[i..i + form.len()] == form[..] {
                return Some((id, i + form.len()));
            }
        }
        None
    }

    fn measure_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let mut idx = i;
        let negative = toks.get(idx).map(|s| s.as_str()) == Some("minus");
        if negative {
            idx += 1;
        }
        let phrase = self.phrase(toks, idx)?;
        if phrase.digits.len() > 15 {
            return None;
        }
        let mut int: i64 = phrase.digits.parse().ok()?;
        if negative {
            int = -int;
        }
        let mut j = phrase.next;
        let mut fraction: Option<String> = None;
        if toks.get(j).map(|s| s.as_str()) == Some("point") {
            let mut frac = String::new();
            let mut k = j + 1;
            while let Some(e) = toks.get(k).and_then(|t| self.entry(t)) {
                match e.role {
                    NumberWordRole::Zero => frac.push('0'),
                    NumberWordRole::Unit => frac.push_str(&e.value.to_string()),
                    _ => break,
                }
                k += 1;
            }
            if !frac.is_empty() {
                fraction = Some(frac);
                j = k;
            }
        }
        let (unit, end) = self.match_unit(toks, j)?;
        let magnitude = match fraction {
            Some(f) => Quantity::Decimal {
                integer_part: int,
                fraction_digits: f,
            },
            None => Quantity::Cardinal { value: int },
        };
        Some((
            CanonicalValue::Measure {
                magnitude,
                unit: unit.to_string(),
            },
            end,
            Confidence::Exact,
        ))
    }

    fn denominator_at(
        &self,
        toks: &[String],
        i: usize,
        plural_required: bool,
    ) -> Option<(u64, usize)> {
        let tok = toks.get(i)?.as_str();
        match (tok, plural_required) {
            ("half", false) | ("halves", true) => return Some((2, i + 1)),
            ("quarter", false) | ("quarters", true) => return Some((4, i + 1)),
            _ => {}
        }
        // ordinal long form with plural -s on the last word
        let mut candidate: Vec<String> = Vec::new();
        let limit = (i + 8).min(toks.len());
        let mut found: Option<(u64, usize)> = None;
        for (j, tok) in toks.iter().enumerate().take(limit).skip(i) {
            let stripped = tok.strip_suffix('s');
            let is_last_ordinal = if plural_required {
                stripped.is_some_and(|s| self.ordinal_counterpart(s).is_some())
            } else {
                self.ordinal_counterpart(tok).is_some()
            };
            if is_last_ordinal {
                let core = if plural_required {
                    stripped.unwrap()
                } else {
                    tok.as_str()
                };
                let mut cand = candidate.clone();
                cand.push(self.ordinal_counterpart(core).unwrap());
                if let Some((value, next, _)) = self.magnitude_expr(&cand, 0) {
                    if next == cand.len() && value > 1 {
                        found = Some((value, j + 1));
                    }
                }
            }
            if self.entry(tok).is_none() && self.magnitude(tok).is_none() {
                break;
            }
            candidate.push(tok.clone());
        }
        found
    }

    fn fraction_at(
        &self,
        toks: &[String],
        i: usize,
    ) -> Option<(CanonicalValue, usize, Confidence)> {
        let build =
            |whole: Option<i64>, start: usize| -> Option<(CanonicalValue, usize, Confidence)> {
                let phrase = self.phrase(toks, start)?;
                if phrase.digits.len() > 15 {
                    return None;
                }
                let numerator: i64 = phrase.digits.parse().ok()?;
                let plural = numerator != 1;
                let (den, end) = self.denominator_at(toks, phrase.next, plural)?;
                let value = CanonicalValue::Fraction {
                    numerator,
                    denominator: den,
                    whole,
                };
                value.validate().ok()?;
                Some((value, end, Confidence::Exact))
            };
        if let Some(result) = build(None, i) {
            return Some(result);
        }
        // whole part: "two and one half"
        let phrase = self.phrase(toks, i)?;
        if toks.get(phrase.next).map(|s| s.as_str()) != Some("and") {
            return None;
        }
        let whole: i64 = phrase.digits.parse().ok()?;
        build(Some(whole), phrase.next + 1)
    }

    fn ordinal_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let (value, end) = self.ordinal_expr(toks, i)?;
        Some((CanonicalValue::Ordinal { value }, end, Confidence::Exact))
    }

    fn decimal_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let mut idx = i;
        let negative = toks.get(idx).map(|s| s.as_str()) == Some("minus");
        if negative {
            idx += 1;
        }
        let phrase = self.phrase(toks, idx)?;
        if phrase.digits.len() > 15 || toks.get(phrase.next).map(|s| s.as_str()) != Some("point") {
            return None;
        }
        let mut frac = String::new();
        let mut k = phrase.next + 1;
        while let Some(e) = toks.get(k).and_then(|t| self.entry(t)) {
            match e.role {
                NumberWordRole::Zero => frac.push('0'),
                NumberWordRole::Unit => frac.push_str(&e.value.to_string()),
                _ => break,
            }
            k += 1;
        }
        if frac.is_empty() {
            return None;
        }
        let mut int: i64 = phrase.digits.parse().ok()?;
        if negative {
            int = -int;
        }
        Some((
            CanonicalValue::Decimal {
                integer_part: int,
                fraction_digits: frac,
            },
            k,
            Confidence::Exact,
        ))
    }

    fn number_at(&self, toks: &[String], i: usize) -> Option<(CanonicalValue, usize, Confidence)> {
        let mut idx = i;
        let negative = toks.get(idx).map(|s| s.as_str()) == Some("minus");
        if negative {
            idx += 1;
        }
        let phrase = self.phrase(toks, idx)?;
        let digits = phrase.digits;
        let leading_zero = digits.len() > 1 && digits.starts_with('0');
        if leading_zero {
            if negative {
                return None;
            }
            return Some((
                CanonicalValue::DigitSequence { digits },
                phrase.next,
                Confidence::Exact,
            ));
        }
        if phrase.all_single && digits.len() >= 6 {
            if negative {
                return None;
            }
            let value = if matches!(digits.len(), 7 | 10 | 11) {
                CanonicalValue::Telephone {
                    groups: vec![digits],
                }
            } else {
                CanonicalValue::DigitSequence { digits }
            };
            return Some((value, phrase.next, Confidence::Exact));
        }
        if digits.len() > 15 {
            return None;
        }
        let mut value: i64 = digits.parse().ok()?;
        if negative {
            value = -value;
        }
        let confidence = if phrase.groups >= 2 && !phrase.all_single {
            Confidence::Ambiguous
        } else {
            Confidence::Exact
        };
        Some((CanonicalValue::Cardinal { value }, phrase.next, confidence))
    }

    /// Greedy leftmost-longest entity scan over lowercased tokens.
    /// Unparseable regions are left as plain text.
    pub fn parse(&self, tokens: &[String]) -> Vec<ParsedEntity> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut best: Option<EntityCandidate> = None;
            let candidates = [
                self.time_at(tokens, i),
                self.date_at(tokens, i),
                self.money_at(tokens, i),
                self.measure_at(tokens, i),
                self.fraction_at(tokens, i),
                self.ordinal_at(tokens, i),
                self.decimal_at(tokens, i),
                self.number_at(tokens, i),
            ];
            for cand in candidates.into_iter().flatten() {
                if best.as_ref().is_none_or(|b| cand.1 > b.1) {
                    best = Some(cand);
                }
            }
            match best {
                Some((value, end, confidence)) => {
                    out.push(ParsedEntity {
                        start: i,
                        end,
                        value,
                        confidence,
                    });
                    i = end;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Number-word runs and their concatenated digit strings, for
    /// conformity checks: "otto o uno" (it) yields runs "8" and "1".
    pub fn number_runs(&self, tokens: &[String]) -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.phrase(tokens, i) {
                Some(phrase) if !phrase.digits.is_empty() => {
                    out.push((i, phrase.next, phrase.digits));
                    i = phrase.next;
                }
                _ => i += 1,
            }
        }
        out
    }
}

/// Free-function form of [`SpokenParser::parse`].
pub fn parse_spoken(tokens: &[String], profile: &Arc<LocaleProfile>) -> Vec<ParsedEntity> {
    SpokenParser::new(Arc::clone(profile)).parse(tokens)
}

fn group_digits(digits: &str, profile: &LocaleProfile) -> String {
    if digits.len() <= profile.group_size {
        return digits.to_string();
    }
    let sep = profile.group_separators[0];
    let mut out = String::new();
    let chars: Vec<char> = digits.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        if i > 0 && (chars.len() - i).is_multiple_of(profile.group_size) {
            out.push(sep);
        }
        out.push(*c);
    }
    out
}

fn to_24h(hour: u8, meridiem: Option<Meridiem>) -> u8 {
    match meridiem {
        Some(Meridiem::Am) => {
            if hour == 12 {
                0
            } else {
                hour
            }
        }
        Some(Meridiem::Pm) => {
            if hour == 12 {
                12
            } else {
                hour + 12
            }
        }
        Some(Meridiem::NoneExplicit) | None => hour,
    }
}

fn render_cardinal_words(n: i64, profile: &LocaleProfile) -> Option<String> {
    let grammar = crate::verbalizer::EnglishGrammar::new(&Arc::new(profile.clone())).ok()?;
    if n < 0 {
        return None;
    }
    Some(grammar.long_form(n as u64, false).join(" "))
}

/// Render a canonical value in locale-correct written form: separators,
/// clock convention and small-cardinal policy applied.
pub fn render_written(value: &CanonicalValue, profile: &LocaleProfile) -> String {
    match value {
        CanonicalValue::Cardinal { value: n } => {
            let policy = &profile.small_cardinal_written_preference;
            if policy.preference == WrittenPreference::Words
                && *n >= 1
                && (*n as u64) <= policy.threshold
            {
                if let Some(words) = render_cardinal_words(*n, profile) {
                    return words;
                }
            }
            let sign = if *n < 0 { "-" } else { "" };
            format!(
                "{sign}{}",
                group_digits(&n.unsigned_abs().to_string(), profile)
            )
        }
        CanonicalValue::Ordinal { value: n } => {
            format!("{n}{}", ordinal_suffix_for(&profile.ordinal_style, *n))
        }
        CanonicalValue::Decimal {
            integer_part,
            fraction_digits,
        } => {
            let sign = if *integer_part < 0 { "-" } else { "" };
            format!(
                "{sign}{}{}{}",
                group_digits(&integer_part.unsigned_abs().to_string(), profile),
                profile.decimal_separator,
                fraction_digits
            )
        }
        CanonicalValue::Fraction {
            numerator,
            denominator,
            whole,
        } => match whole {
            Some(w) => format!("{w} {numerator}/{denominator}"),
            None => format!("{numerator}/{denominator}"),
        },
        CanonicalValue::Money {
            amount_major,
            amount_minor,
            currency,
        } => {
            let sign = if *amount_major < 0 { "-" } else { "" };
            let mut amount = format!(
                "{sign}{}",
                group_digits(&amount_major.unsigned_abs().to_string(), profile)
            );
            if let Some(minor) = amount_minor {
                amount.push(profile.decimal_separator);
                amount.push_str(minor);
            }
            match profile.currency_render.get(currency) {
                Some(render) => match render.symbol_position {
                    SymbolPosition::Prefix => format!("{}{amount}", render.symbol),
                    SymbolPosition::Suffix => format!("{amount} {}", render.symbol),
                },
                None => format!("{amount} {currency}"),
            }
        }
        CanonicalValue::Time {
            hour,
            minute,
            second,
            meridiem,
        } => {
            let prefers_24 = profile.clock == ClockPreference::Prefers24h
                || matches!(meridiem, Some(Meridiem::NoneExplicit) | None);
            if prefers_24 {
                let h = to_24h(*hour, *meridiem);
                match second {
                    Some(s) => format!("{h}:{minute:02}:{s:02}"),
                    None => match profile.time_written_style {
                        TimeStyle::HSeparator if *minute == 0 => format!("{h}h"),
                        TimeStyle::HSeparator => format!("{h}h{minute:02}"),
                        TimeStyle::Colon => format!("{h}:{minute:02}"),
                    },
                }
            } else {
                let suffix = match meridiem {
                    Some(Meridiem::Am) => " AM",
                    _ => " PM",
                };
                match (minute, second) {
                    (0, None) => format!("{hour}{suffix}"),
                    (m, None) => format!("{hour}:{m:02}{suffix}"),
                    (m, Some(s)) => format!("{hour}:{m:02}:{s:02}{suffix}"),
                }
            }
        }
        CanonicalValue::Date { day, month, year } => {
            let sep = profile.date_separator;
            match (day, month, year) {
                (Some(d), Some(m), Some(y)) => match profile.date_written_order {
                    DateOrder::MonthDayYear => format!("{m}{sep}{d}{sep}{y}"),
                    DateOrder::DayMonthYear => format!("{d}{sep}{m}{sep}{y}"),
                },
                (Some(d), Some(m), None) => {
                    let name = month_name(profile, *m);
                    match profile.date_written_order {
                        DateOrder::MonthDayYear => format!("{name} {d}"),
                        DateOrder::DayMonthYear => format!("{d} {name}"),
                    }
                }
                (None, Some(m), Some(y)) => format!("{} {y}", month_name(profile, *m)),
                (Some(d), None, Some(y)) => format!("{d}{sep}{y}"),
                (Some(d), None, None) => format!("{d}"),
                (None, Some(m), None) => month_name(profile, *m),
                (None, None, Some(y)) => format!("{y}"),
                (None, None, None) => String::new(),
            }
        }
        CanonicalValue::Measure { magnitude, unit } => {
            let (amount, is_one) = match magnitude {
                Quantity::Cardinal { value } => {
                    let sign = if *value < 0 { "-" } else { "" };
                    (
                        format!(
                            "{sign}{}",
                            group_digits(&value.unsigned_abs().to_string(), profile)
                        ),
                        value.unsigned_abs() == 1,
                    )
                }
                Quantity::Decimal {
                    integer_part,
                    fraction_digits,
                } => {
                    let sign = if *integer_part < 0 { "-" } else { "" };
                    (
                        format!(
                            "{sign}{}{}{}",
                            group_digits(&integer_part.unsigned_abs().to_string(), profile),
                            profile.decimal_separator,
                            fraction_digits
                        ),
                        false,
                    )
                }
            };
            match profile.unit_lexicon.get(unit) {
                Some(entry) => {
                    let surface = if is_one && entry.written.len() > 1 {
                        &entry.written[1]
                    } else {
                        &entry.written[0]
                    };
                    if entry.space_before {
                        format!("{amount} {surface}")
                    } else {
                        format!("{amount}{surface}")
                    }
                }
                None => format!("{amount} {unit}"),
            }
        }
        CanonicalValue::Telephone { groups } => groups.join("-"),
        CanonicalValue::DigitSequence { digits } => digits.clone(),
    }
}

fn month_name(profile: &LocaleProfile, m: u8) -> String {
    profile
        .month_names
        .get((m as usize).wrapping_sub(1))
        .cloned()
        .unwrap_or_else(|| m.to_string())
}

fn trim_token(tok: &str) -> (&str, &str, &str) {
    let start = tok
        .char_indices()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, _)| i)
        .unwrap_or(tok.len());
    let end = tok
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(start);
    (&tok[..start], &tok[start..end], &tok[end..])
}

/// Inverse-normalize one spoken-form sentence. Characters outside replaced
/// entity ranges are preserved verbatim.
pub fn itn_with(parser: &SpokenParser, sentence: &str) -> String {
    let original: Vec<&str> = sentence.split_whitespace().collect();
    let normalized: Vec<String> = original
        .iter()
        .map(|t| trim_token(t).1.to_lowercase())
        .collect();
    let entities = parser.parse(&normalized);
    let profile = parser.profile();

    let mut rendered: Vec<String> = Vec::with_capacity(original.len());
    let mut cursor = 0usize;
    for entity in &entities {
        for tok in &original[cursor..entity.start] {
            rendered.push(tok.to_string());
        }
        let (lead, _, _) = trim_token(original[entity.start]);
        let (_, _, trail) = trim_token(original[entity.end - 1]);
        let mut text = render_written(&entity.value, profile);
        // ratio contexts keep digits even under a words-preference policy:
        // "nine out of ten" -> "9 out of 10"
        if let CanonicalValue::Cardinal { value: n } = &entity.value {
            let policy = &profile.small_cardinal_written_preference;
            if policy.preference == WrittenPreference::Words
                && *n >= 0
                && (*n as u64) <= policy.threshold
            {
                let after = normalized.get(entity.end).map(|s| s.as_str());
                let after2 = normalized.get(entity.end + 1).map(|s| s.as_str());
                let before = entity
                    .start
                    .checked_sub(1)
                    .and_then(|i| normalized.get(i))
                    .map(|s| s.as_str());
                let before2 = entity
                    .start
                    .checked_sub(2)
                    .and_then(|i| normalized.get(i))
                    .map(|s| s.as_str());
                if (after == Some("out") && after2 == Some("of"))
                    || (before2 == Some("out") && before == Some("of"))
                {
                    text = n.to_string();
                }
            }
        }
        rendered.push(format!("{lead}{text}{trail}"));
        cursor = entity.end;
    }
    for tok in &original[cursor..] {
        rendered.push(tok.to_string());
    }
    rendered.join(" ")
}

/// One-shot form of [`itn_with`].
pub fn itn(sentence: &str, profile: &Arc<LocaleProfile>) -> String {
    itn_with(&SpokenParser::new(Arc::clone(profile)), sentence)
}
