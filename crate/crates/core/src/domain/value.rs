//! Entity classes and canonical semantic values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The closed set of ITN entity classes handled by this toolkit.
///
/// `DigitSequence` covers verbatim digit readings (IDs, zip codes, digit
/// strings with leading zeros) that are neither cardinals nor telephone
/// numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityClass {
    Cardinal,
    Ordinal,
    Decimal,
    Fraction,
    Money,
    Time,
    Date,
    Measure,
    Telephone,
    DigitSequence,
}

impl EntityClass {
    /// All classes, in segmentation precedence order: time and date first,
    /// then measures and currency, then fractions, decimals, ordinals,
    /// phone numbers and cardinals. Digit sequences close the list: they
    /// only claim runs every cardinal pattern refused (leading zeros,
    /// overlong runs).
    pub const PRECEDENCE: [EntityClass; 10] = [
        EntityClass::Time,
        EntityClass::Date,
        EntityClass::Measure,
        EntityClass::Money,
        EntityClass::Fraction,
        EntityClass::Decimal,
        EntityClass::Ordinal,
        EntityClass::Telephone,
        EntityClass::Cardinal,
        EntityClass::DigitSequence,
    ];

    /// Stable lowercase name, matching the interchange discriminator.
    pub fn name(&self) -> &'static str {
        match self {
            EntityClass::Cardinal => "cardinal",
            EntityClass::Ordinal => "ordinal",
            EntityClass::Decimal => "decimal",
            EntityClass::Fraction => "fraction",
            EntityClass::Money => "money",
            EntityClass::Time => "time",
            EntityClass::Date => "date",
            EntityClass::Measure => "measure",
            EntityClass::Telephone => "telephone",
            EntityClass::DigitSequence => "digit-sequence",
        }
    }
}

impl std::fmt::Display for EntityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EntityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityClass::PRECEDENCE
            .iter()
            .find(|c| c.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown entity class {s:?}"))
    }
}

/// Clock half-day marker. `NoneExplicit` means the source explicitly used a
/// 24-hour statement ("13:30", "twelve hours forty five minutes"); an
/// absent meridiem (`Option::None` on the value) means the speech simply
/// did not carry one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Meridiem {
    Am,
    Pm,
    NoneExplicit,
}

/// A numeric magnitude for measures: either a whole number or a decimal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case"
)]
pub enum Quantity {
    Cardinal {
        value: i64,
    },
    Decimal {
        integer_part: i64,
        fraction_digits: String,
    },
}

/// Semantic value of an ITN entity, independent of surface form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(
    tag = "class",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case"
)]
pub enum CanonicalValue {
    Cardinal {
        value: i64,
    },
    Ordinal {
        value: u64,
    },
    Decimal {
        integer_part: i64,
        fraction_digits: String,
    },
    Fraction {
        numerator: i64,
        denominator: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        whole: Option<i64>,
    },
    Money {
        amount_major: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amount_minor: Option<String>,
        currency: String,
    },
    Time {
        hour: u8,
        minute: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        second: Option<u8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        meridiem: Option<Meridiem>,
    },
    Date {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        day: Option<u8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        month: Option<u8>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        year: Option<i32>,
    },
    Measure {
        magnitude: Quantity,
        unit: String,
    },
    Telephone {
        groups: Vec<String>,
    },
    DigitSequence {
        digits: String,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValueError {
    #[error("ordinal value must be positive")]
    OrdinalNotPositive,
    #[error("fraction denominator must be positive")]
    ZeroDenominator,
    #[error("fraction digits must be a non-empty digit string, got {0:?}")]
    BadFractionDigits(String),
    #[error("money minor part must be a digit string of the minor-unit width, got {0:?}")]
    BadMinorPart(String),
    #[error("hour {hour} out of range for meridiem {meridiem:?}")]
    HourOutOfRange {
        hour: u8,
        meridiem: Option<Meridiem>,
    },
    #[error("minute {0} out of range")]
    MinuteOutOfRange(u8),
    #[error("second {0} out of range")]
    SecondOutOfRange(u8),
    #[error("date must have at least one populated field")]
    EmptyDate,
    #[error("day {0} out of range")]
    DayOutOfRange(u8),
    #[error("month {0} out of range")]
    MonthOutOfRange(u8),
    #[error("telephone groups must be non-empty digit strings")]
    BadTelephoneGroups,
    #[error("digit sequence must be a non-empty digit string, got {0:?}")]
    BadDigitSequence(String),
    #[error("currency code must be a three-letter ISO 4217 code, got {0:?}")]
    BadCurrency(String),
}

fn is_digit_string(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

impl CanonicalValue {
    pub fn class(&self) -> EntityClass {
        match self {
            CanonicalValue::Cardinal { .. } => EntityClass::Cardinal,
            CanonicalValue::Ordinal { .. } => EntityClass::Ordinal,
            CanonicalValue::Decimal { .. } => EntityClass::Decimal,
            CanonicalValue::Fraction { .. } => EntityClass::Fraction,
            CanonicalValue::Money { .. } => EntityClass::Money,
            CanonicalValue::Time { .. } => EntityClass::Time,
            CanonicalValue::Date { .. } => EntityClass::Date,
            CanonicalValue::Measure { .. } => EntityClass::Measure,
            CanonicalValue::Telephone { .. } => EntityClass::Telephone,
            CanonicalValue::DigitSequence { .. } => EntityClass::DigitSequence,
        }
    }

    /// Check the per-class invariants.
    ///
    /// Time with an am/pm meridiem keeps hours in 1..=12; explicit or
    /// unstated 24-hour times allow 0..=23. Dates need at least one field.
    pub fn validate(&self) -> Result<(), ValueError> {
        match self {
            CanonicalValue::Cardinal { .. } => Ok(()),
            CanonicalValue::Ordinal { value } => {
                if *value == 0 {
                    Err(ValueError::OrdinalNotPositive)
                } else {
                    Ok(())
                }
            }
            CanonicalValue::Decimal {
                fraction_digits, ..
            } => {
                if is_digit_string(fraction_digits) {
                    Ok(())
                } else {
                    Err(ValueError::BadFractionDigits(fraction_digits.clone()))
                }
            }
            CanonicalValue::Fraction { denominator, .. } => {
                if *denominator == 0 {
                    Err(ValueError::ZeroDenominator)
                } else {
                    Ok(())
                }
            }
            CanonicalValue::Money {
                amount_minor,
                currency,
                ..
            } => {
                if let Some(minor) = amount_minor {
                    if !is_digit_string(minor) {
                        return Err(ValueError::BadMinorPart(minor.clone()));
                    }
                }
                if currency.len() != 3 || !currency.bytes().all(|b| b.is_ascii_uppercase()) {
                    return Err(ValueError::BadCurrency(currency.clone()));
                }
                Ok(())
            }
            CanonicalValue::Time {
                hour,
                minute,
                second,
                meridiem,
            } => {
                match meridiem {
                    Some(Meridiem::Am) | Some(Meridiem::Pm) => {
                        if !(1..=12).contains(hour) {
                            return Err(ValueError::HourOutOfRange {
                                hour: *hour,
                                meridiem: *meridiem,
                            });
                        }
                    }
                    Some(Meridiem::NoneExplicit) | None => {
                        if *hour > 23 {
                            return Err(ValueError::HourOutOfRange {
                                hour: *hour,
                                meridiem: *meridiem,
                            });
                        }
                    }
                }
                if *minute > 59 {
                    return Err(ValueError::MinuteOutOfRange(*minute));
                }
                if let Some(s) = second {
                    if *s > 59 {
                        return Err(ValueError::SecondOutOfRange(*s));
                    }
                }
                Ok(())
            }
            CanonicalValue::Date { day, month, year } => {
                if day.is_none() && month.is_none() && year.is_none() {
                    return Err(ValueError::EmptyDate);
                }
                if let Some(d) = day {
                    if !(1..=31).contains(d) {
                        return Err(ValueError::DayOutOfRange(*d));
                    }
                }
                if let Some(m) = month {
                    if !(1..=12).contains(m) {
                        return Err(ValueError::MonthOutOfRange(*m));
                    }
                }
                Ok(())
            }
            CanonicalValue::Measure { magnitude, .. } => match magnitude {
                Quantity::Cardinal { .. } => Ok(()),
                Quantity::Decimal {
                    fraction_digits, ..
                } => {
                    if is_digit_string(fraction_digits) {
                        Ok(())
                    } else {
                        Err(ValueError::BadFractionDigits(fraction_digits.clone()))
                    }
                }
            },
            CanonicalValue::Telephone { groups } => {
                if groups.is_empty() || !groups.iter().all(|g| is_digit_string(g)) {
                    Err(ValueError::BadTelephoneGroups)
                } else {
                    Ok(())
                }
            }
            CanonicalValue::DigitSequence { digits } => {
                if is_digit_string(digits) {
                    Ok(())
                } else {
                    Err(ValueError::BadDigitSequence(digits.clone()))
                }
            }
        }
    }
}
