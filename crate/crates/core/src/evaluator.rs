//! Locale-aware normalized-accuracy evaluation: entity extraction and
//! digit comparison, Case A (native references) and Case B (translated
//! spoken inputs scored against English references), entity translation
//! accuracy and non-ITN accuracy.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset_pipeline::Sentence;
use crate::domain::{
    CanonicalValue, EntityClass, LocaleProfile, Meridiem, NumberWordRole, Quantity,
    WrittenPreference,
};
use crate::segmenter::{PatternError, Segmenter};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Auxiliary {
    /// 24-hour clock form "HH:MM[:SS]" for time entities.
    Clock24(String),
    /// Digits before a magnitude word was folded in.
    MagnitudeExpanded(String),
}

/// A digit-bearing entity reduced to its canonical digit string:
/// separators stripped, decimal point as ".", magnitude words folded in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NormalizedEntity {
    pub class: EntityClass,
    pub digits: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<Auxiliary>,
    /// The entity was written out as a word ("two", "neuf") rather than
    /// in digits.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub word_form: bool,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("misaligned streams at position {position}: ids {left} vs {right}")]
    Misaligned {
        position: usize,
        left: u64,
        right: u64,
    },
    #[error("streams have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ClassTally {
    pub correct: u64,
    pub total: u64,
}

/// Per-class and overall normalized accuracy, plus the optional secondary
/// measures. Serializes deterministically with sorted keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalReport {
    pub per_class: BTreeMap<EntityClass, ClassTally>,
    pub overall_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_itn_accuracy: Option<f64>,
    pub skipped_already_written: u64,
    pub unmatched_predictions: u64,
}

impl EvalReport {
    fn from_tallies(
        per_class: BTreeMap<EntityClass, ClassTally>,
        skipped: u64,
        unmatched: u64,
    ) -> Self {
        let correct: u64 = per_class.values().map(|t| t.correct).sum();
        let total: u64 = per_class.values().map(|t| t.total).sum();
        let overall = if total == 0 {
            1.0
        } else {
            correct as f64 / total as f64
        };
        EvalReport {
            per_class,
            overall_accuracy: overall,
            translation_accuracy: None,
            non_itn_accuracy: None,
            skipped_already_written: skipped,
            unmatched_predictions: unmatched,
        }
    }

    /// Rows of "class<TAB>size<TAB>accuracy", one per class plus overall.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\tsize\taccuracy\n");
        let mut correct = 0u64;
        let mut total = 0u64;
        for (class, tally) in &self.per_class {
            let acc = if tally.total == 0 {
                1.0
            } else {
                tally.correct as f64 / tally.total as f64
            };
            out.push_str(&format!(
                "{}\t{}\t{:.2}%\n",
                class,
                tally.total,
                acc * 100.0
            ));
            correct += tally.correct;
            total += tally.total;
        }
        let overall = if total == 0 {
            1.0
        } else {
            correct as f64 / total as f64
        };
        out.push_str(&format!("overall\t{total}\t{:.2}%\n", overall * 100.0));
        out
    }
}

/// Canonical digit string of a value: the form compared by normalized
/// accuracy. Time concatenates hour and zero-padded minutes; dates
/// concatenate day, month, year in that fixed order on both sides.
pub fn canonical_digits(value: &CanonicalValue) -> String {
    match value {
        CanonicalValue::Cardinal { value } => value.unsigned_abs().to_string(),
        CanonicalValue::Ordinal { value } => value.to_string(),
        CanonicalValue::Decimal {
            integer_part,
            fraction_digits,
        } => {
            format!("{}.{}", integer_part.unsigned_abs(), fraction_digits)
        }
        CanonicalValue::Fraction {
            numerator,
            denominator,
            whole,
        } => {
            let mut out = String::new();
            if let Some(w) = whole {
                out.push_str(&w.unsigned_abs().to_string());
            }
            out.push_str(&numerator.unsigned_abs().to_string());
            out.push_str(&denominator.to_string());
            out
        }
        CanonicalValue::Money {
            amount_major,
            amount_minor,
            ..
        } => match amount_minor {
            Some(minor) => format!("{}.{minor}", amount_major.unsigned_abs()),
            None => amount_major.unsigned_abs().to_string(),
        },
        CanonicalValue::Time {
            hour,
            minute,
            second,
            ..
        } => {
            let mut out = format!("{hour}{minute:02}");
            if let Some(s) = second {
                out.push_str(&format!("{s:02}"));
            }
            out
        }
        CanonicalValue::Date { day, month, year } => {
            let mut out = String::new();
            if let Some(d) = day {
                out.push_str(&d.to_string());
            }
            if let Some(m) = month {
                out.push_str(&m.to_string());
            }
            if let Some(y) = year {
                out.push_str(&y.to_string());
            }
            out
        }
        CanonicalValue::Measure { magnitude, .. } => match magnitude {
            Quantity::Cardinal { value } => value.unsigned_abs().to_string(),
            Quantity::Decimal {
                integer_part,
                fraction_digits,
            } => {
                format!("{}.{}", integer_part.unsigned_abs(), fraction_digits)
            }
        },
        CanonicalValue::Telephone { groups } => groups.concat(),
        CanonicalValue::DigitSequence { digits } => digits.clone(),
    }
}

fn clock24_of(value: &CanonicalValue) -> Option<Auxiliary> {
    if let CanonicalValue::Time {
        hour,
        minute,
        second,
        meridiem,
    } = value
    {
        let h = match meridiem {
            Some(Meridiem::Am) => {
                if *hour == 12 {
                    0
                } else {
                    *hour
                }
            }
            Some(Meridiem::Pm) => {
                if *hour == 12 {
                    12
                } else {
                    hour + 12
                }
            }
            Some(Meridiem::NoneExplicit) | None => *hour,
        };
        let mut out = format!("{h:02}:{minute:02}");
        if let Some(s) = second {
            out.push_str(&format!(":{s:02}"));
        }
        return Some(Auxiliary::Clock24(out));
    }
    None
}

/// Extracts normalized entities from written text for one locale.
pub struct EntityExtractor {
    profile: Arc<LocaleProfile>,
    segmenter: Segmenter,
}

impl EntityExtractor {
    pub fn new(profile: Arc<LocaleProfile>) -> Result<Self, EvalError> {
        let segmenter = Segmenter::new(Arc::clone(&profile))?;
        Ok(EntityExtractor { profile, segmenter })
    }

    pub fn with_segmenter(profile: Arc<LocaleProfile>, segmenter: Segmenter) -> Self {
        EntityExtractor { profile, segmenter }
    }

    pub fn profile(&self) -> &Arc<LocaleProfile> {
        &self.profile
    }

    /// Entities with their character spans (used for masking).
    pub fn extract_with_spans(&self, written: &str) -> Vec<(NormalizedEntity, usize, usize)> {
        let chars: Vec<char> = written.chars().collect();
        let segmentation = self.segmenter.segment(written);
        let mut out: Vec<(NormalizedEntity, usize, usize)> = Vec::new();
        let mut claimed = vec![false; chars.len()];
        for span in &segmentation.spans {
            let mut digits = canonical_digits(&span.value);
            let mut auxiliary = clock24_of(&span.value);
            let mut end = span.end;
            // fold a magnitude word that immediately follows digits:
            // "24 mille" -> 24000, "1.5 million" -> 1500000
            if matches!(span.class, EntityClass::Cardinal | EntityClass::Decimal) {
                if let Some((word_end, power)) = self.magnitude_after(&chars, span.end) {
                    let original = digits.clone();
                    if let Some(expanded) = shift_decimal(&digits, power) {
                        digits = expanded;
                        auxiliary = Some(Auxiliary::MagnitudeExpanded(original));
                        end = word_end;
                    }
                }
            }
            claimed[span.start..end.min(chars.len())]
                .iter_mut()
                .for_each(|c| *c = true);
            out.push((
                NormalizedEntity {
                    class: span.class,
                    digits,
                    auxiliary,
                    word_form: false,
                },
                span.start,
                end,
            ));
        }
        // standalone small-cardinal words ("two children", "neuf")
        let mut token_start = None;
        for i in 0..=chars.len() {
            let is_boundary = i == chars.len() || chars[i].is_whitespace();
            match (token_start, is_boundary) {
                (None, false) => token_start = Some(i),
                (Some(start), true) => {
                    token_start = None;
                    if claimed[start..i].iter().any(|c| *c) {
                        continue;
                    }
                    let token: String = chars[start..i].iter().collect();
                    let trimmed = token.trim_matches(|c: char| !c.is_alphanumeric());
                    if trimmed.is_empty() {
                        continue;
                    }
                    let lowered = trimmed.to_lowercase();
                    if let Some(entry) = self.profile.number_word_lexicon.get(&lowered) {
                        if entry.role == NumberWordRole::Unit && (1..=9).contains(&entry.value) {
                            out.push((
                                NormalizedEntity {
                                    class: EntityClass::Cardinal,
                                    digits: entry.value.to_string(),
                                    auxiliary: None,
                                    word_form: true,
                                },
                                start,
                                i,
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
        out.sort_by_key(|(_, start, _)| *start);
        out
    }

    /// Every digit-bearing entity reduced to canonical digits, in
    /// document order.
    pub fn extract(&self, written: &str) -> Vec<NormalizedEntity> {
        self.extract_with_spans(written)
            .into_iter()
            .map(|(e, _, _)| e)
            .collect()
    }

    fn magnitude_after(&self, chars: &[char], from: usize) -> Option<(usize, u32)> {
        let mut i = from;
        let mut seen_space = false;
        while i < chars.len() && chars[i].is_whitespace() {
            seen_space = true;
            i += 1;
        }
        if !seen_space || i >= chars.len() {
            return None;
        }
        let start = i;
        while i < chars.len() && chars[i].is_alphabetic() {
            i += 1;
        }
        if i == start {
            return None;
        }
        let word: String = chars[start..i].iter().collect::<String>().to_lowercase();
        self.profile.magnitude_lexicon.get(&word).map(|p| (i, *p))
    }

    /// Mask entity spans out of the text and return the remaining tokens.
    pub fn mask_entities(&self, written: &str) -> Vec<String> {
        let spans = self.extract_with_spans(written);
        let chars: Vec<char> = written.chars().collect();
        let mut keep = vec![true; chars.len()];
        for (_, start, end) in &spans {
            for flag in &mut keep[*start..(*end).min(chars.len())] {
                *flag = false;
            }
        }
        let masked: String = chars
            .iter()
            .zip(keep)
            .map(|(c, k)| if k { *c } else { ' ' })
            .collect();
        masked.split_whitespace().map(String::from).collect()
    }
}

/// Multiply a canonical digit string by 10^power: "24" -> "24000",
/// "1.5" (power 6) -> "1500000".
fn shift_decimal(digits: &str, power: u32) -> Option<String> {
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (digits.to_string(), String::new()),
    };
    if int_part.len() + power as usize > 32 {
        return None;
    }
    let mut int = int_part;
    let mut frac = frac_part;
    for _ in 0..power {
        if frac.is_empty() {
            int.push('0');
        } else {
            int.push(frac.remove(0));
        }
    }
    // drop a leading zero surplus ("0" * shift)
    while int.len() > 1 && int.starts_with('0') {
        int.remove(0);
    }
    if frac.is_empty() {
        Some(int)
    } else {
        Some(format!("{int}.{frac}"))
    }
}

/// Locale-aware equivalence of two normalized entities, applying in
/// order: 12/24-hour clock mapping, magnitude expansion (done at
/// extraction), small-cardinal word/digit identification, and separator
/// normalization (also done at extraction).
pub fn entities_equivalent(
    source: &NormalizedEntity,
    target: &NormalizedEntity,
    target_profile: &LocaleProfile,
) -> bool {
    let values_equal = match (&source.auxiliary, &target.auxiliary) {
        (Some(Auxiliary::Clock24(a)), Some(Auxiliary::Clock24(b)))
            if source.class == EntityClass::Time && target.class == EntityClass::Time =>
        {
            a == b
        }
        _ => source.digits == target.digits,
    };
    if !values_equal {
        return false;
    }
    if target.word_form {
        // a word where the locale wants digits is an error ("neuf" for 9
        // in French); a word under a words preference is fine
        let policy = &target_profile.small_cardinal_written_preference;
        let value: u64 = target.digits.parse().unwrap_or(u64::MAX);
        policy.preference == WrittenPreference::Words && value <= policy.threshold
    } else {
        true
    }
}

fn check_alignment<A, B>(
    left: &[A],
    right: &[B],
    id_left: impl Fn(&A) -> u64,
    id_right: impl Fn(&B) -> u64,
) -> Result<(), EvalError> {
    if left.len() != right.len() {
        return Err(EvalError::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    for (position, (l, r)) in left.iter().zip(right).enumerate() {
        if id_left(l) != id_right(r) {
            return Err(EvalError::Misaligned {
                position,
                left: id_left(l),
                right: id_right(r),
            });
        }
    }
    Ok(())
}

/// Ordered matching within each class: the k-th reference entity of a
/// class is scored against the k-th predicted entity of the same class.
/// Unmatched references count as incorrect; unmatched predictions are
/// reported but do not affect accuracy.
fn score_entities(
    refs: &[NormalizedEntity],
    preds: &[NormalizedEntity],
    target_profile: &LocaleProfile,
    per_class: &mut BTreeMap<EntityClass, ClassTally>,
    unmatched_predictions: &mut u64,
) {
    let mut by_class_refs: BTreeMap<EntityClass, Vec<&NormalizedEntity>> = BTreeMap::new();
    let mut by_class_preds: BTreeMap<EntityClass, Vec<&NormalizedEntity>> = BTreeMap::new();
    for e in refs {
        by_class_refs.entry(e.class).or_default().push(e);
    }
    for e in preds {
        by_class_preds.entry(e.class).or_default().push(e);
    }
    for (class, ref_list) in &by_class_refs {
        let empty = Vec::new();
        let pred_list = by_class_preds.get(class).unwrap_or(&empty);
        let tally = per_class.entry(*class).or_default();
        for (k, reference) in ref_list.iter().enumerate() {
            tally.total += 1;
            if let Some(prediction) = pred_list.get(k) {
                if entities_equivalent(reference, prediction, target_profile) {
                    tally.correct += 1;
                }
            }
        }
        if pred_list.len() > ref_list.len() {
            *unmatched_predictions += (pred_list.len() - ref_list.len()) as u64;
        }
    }
    for (class, pred_list) in &by_class_preds {
        if !by_class_refs.contains_key(class) {
            *unmatched_predictions += pred_list.len() as u64;
        }
    }
}

/// Case A: target-language references are available; predictions and
/// references are compared within the same locale.
pub fn evaluate_case_a(
    predictions: &[crate::domain::PairRecord],
    references: &[crate::domain::PairRecord],
    extractor: &EntityExtractor,
) -> Result<EvalReport, EvalError> {
    check_alignment(predictions, references, |p| p.id, |r| r.id)?;
    let mut per_class = BTreeMap::new();
    let mut unmatched = 0u64;
    for (pred, reference) in predictions.iter().zip(references) {
        let refs = extractor.extract(&reference.pair.written);
        let preds = extractor.extract(&pred.pair.written);
        score_entities(
            &refs,
            &preds,
            extractor.profile(),
            &mut per_class,
            &mut unmatched,
        );
    }
    Ok(EvalReport::from_tallies(per_class, 0, unmatched))
}

/// Case B: no target references exist. Spoken English references were
/// machine-translated into the target language ITN input; items whose
/// translated spoken side already contains digits are discarded, and the
/// rest are scored against the English reference entities under the
/// locale equivalence rules.
pub fn evaluate_case_b(
    english_references: &[crate::domain::PairRecord],
    target_spoken: &[Sentence],
    target_predictions: &[Sentence],
    source_extractor: &EntityExtractor,
    target_extractor: &EntityExtractor,
) -> Result<EvalReport, EvalError> {
    check_alignment(english_references, target_spoken, |p| p.id, |s| s.id)?;
    check_alignment(english_references, target_predictions, |p| p.id, |s| s.id)?;
    let mut per_class = BTreeMap::new();
    let mut unmatched = 0u64;
    let mut skipped = 0u64;
    for ((reference, spoken), prediction) in english_references
        .iter()
        .zip(target_spoken)
        .zip(target_predictions)
    {
        if spoken.text.bytes().any(|b| b.is_ascii_digit()) {
            skipped += 1;
            continue;
        }
        let refs = source_extractor.extract(&reference.pair.written);
        let preds = target_extractor.extract(&prediction.text);
        score_entities(
            &refs,
            &preds,
            target_extractor.profile(),
            &mut per_class,
            &mut unmatched,
        );
    }
    Ok(EvalReport::from_tallies(per_class, skipped, unmatched))
}

/// Fraction of source entities whose form survived translation: spoken
/// stays spoken (no digits appear in the translated spoken side) and
/// written stays written (the digit entities survive on the written side).
pub fn translation_accuracy(
    source: &[crate::domain::PairRecord],
    translated: &[crate::domain::PairRecord],
    target_extractor: &EntityExtractor,
) -> Result<f64, EvalError> {
    check_alignment(source, translated, |p| p.id, |r| r.id)?;
    let profile = target_extractor.profile();
    let mut total = 0u64;
    let mut correct = 0u64;
    for (src, tr) in source.iter().zip(translated) {
        let n = if src.pair.alignments.is_empty() {
            crate::dataset_pipeline::written_entity_count(&src.pair.written, profile) as u64
        } else {
            src.pair.alignments.len() as u64
        };
        if n == 0 {
            continue;
        }
        let spoken_joined = tr.pair.spoken.join(" ");
        let spoken_flips =
            crate::dataset_pipeline::written_entity_count(&spoken_joined, profile) as u64;
        let written_count =
            crate::dataset_pipeline::written_entity_count(&tr.pair.written, profile) as u64;
        let written_flips = n.saturating_sub(written_count);
        let flips = (spoken_flips + written_flips).min(n);
        total += n;
        correct += n - flips;
    }
    Ok(if total == 0 {
        1.0
    } else {
        correct as f64 / total as f64
    })
}

/// Fraction of sentences whose text outside entity spans matches the
/// reference exactly (token level).
pub fn non_itn_accuracy(
    predictions: &[crate::domain::PairRecord],
    references: &[crate::domain::PairRecord],
    extractor: &EntityExtractor,
) -> Result<f64, EvalError> {
    check_alignment(predictions, references, |p| p.id, |r| r.id)?;
    if predictions.is_empty() {
        return Ok(1.0);
    }
    let mut correct = 0u64;
    for (pred, reference) in predictions.iter().zip(references) {
        let p = extractor.mask_entities(&pred.pair.written);
        let r = extractor.mask_entities(&reference.pair.written);
        if p == r {
            correct += 1;
        }
    }
    Ok(correct as f64 / predictions.len() as f64)
}

/// Convenience: extract normalized entities with a throwaway extractor.
pub fn extract_normalized_entities(
    written: &str,
    profile: &Arc<LocaleProfile>,
) -> Result<Vec<NormalizedEntity>, EvalError> {
    Ok(EntityExtractor::new(Arc::clone(profile))?.extract(written))
}
