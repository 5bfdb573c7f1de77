#![allow(dead_code)] // each test target uses a different subset

//! Shared helpers for the integration suites: a seeded canonical-value
//! generator covering all ten entity classes, and sentence templates free
//! of number words.

use itn_core::domain::{CanonicalValue, EntityClass, Meridiem, Quantity};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct ValueGen {
    rng: ChaCha8Rng,
}

const UNITS: &[&str] = &[
    "gram",
    "kilogram",
    "kilometer",
    "kilometer-per-second",
    "degree",
    "percent",
];
const CURRENCIES: &[&str] = &["USD", "EUR", "GBP"];

impl ValueGen {
    pub fn new(seed: u64) -> Self {
        ValueGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn pick(&mut self, n: u64) -> u64 {
        self.rng.next_u64() % n
    }

    fn digits(&mut self, len: usize, leading_zero: bool) -> String {
        let mut out = String::new();
        for i in 0..len {
            let d = if i == 0 && leading_zero {
                0
            } else if i == 0 {
                1 + self.pick(9)
            } else {
                self.pick(10)
            };
            out.push(char::from(b'0' + d as u8));
        }
        out
    }

    /// A value of the given class from the round-trippable domain:
    /// renderable, segmentable and parseable back.
    pub fn value(&mut self, class: EntityClass) -> CanonicalValue {
        match class {
            EntityClass::Cardinal => CanonicalValue::Cardinal {
                value: (10 + self.pick(99_990)) as i64,
            },
            EntityClass::Ordinal => CanonicalValue::Ordinal {
                value: 1 + self.pick(999),
            },
            EntityClass::Decimal => {
                let frac_len = 1 + self.pick(3) as usize;
                let leading = self.pick(3) == 0;
                CanonicalValue::Decimal {
                    integer_part: self.pick(1000) as i64,
                    fraction_digits: self.digits(frac_len, leading),
                }
            }
            EntityClass::Fraction => {
                let numerator = (1 + self.pick(12)) as i64;
                let denominator = 2 + self.pick(11);
                let whole = if self.pick(2) == 0 {
                    Some((1 + self.pick(9)) as i64)
                } else {
                    None
                };
                CanonicalValue::Fraction {
                    numerator,
                    denominator,
                    whole,
                }
            }
            EntityClass::Money => {
                let minor = if self.pick(2) == 0 {
                    None
                } else {
                    let v = 1 + self.pick(99);
                    Some(format!("{v:02}"))
                };
                CanonicalValue::Money {
                    amount_major: self.pick(10_000) as i64,
                    amount_minor: minor,
                    currency: CURRENCIES[self.pick(CURRENCIES.len() as u64) as usize].to_string(),
                }
            }
            EntityClass::Time => {
                if self.pick(2) == 0 {
                    let meridiem = if self.pick(2) == 0 {
                        Meridiem::Am
                    } else {
                        Meridiem::Pm
                    };
                    CanonicalValue::Time {
                        hour: (1 + self.pick(12)) as u8,
                        minute: self.pick(60) as u8,
                        second: None,
                        meridiem: Some(meridiem),
                    }
                } else {
                    let minute = (1 + self.pick(59)) as u8;
                    let second = if self.pick(4) == 0 {
                        Some(self.pick(60) as u8)
                    } else {
                        None
                    };
                    CanonicalValue::Time {
                        hour: self.pick(24) as u8,
                        minute,
                        second,
                        meridiem: Some(Meridiem::NoneExplicit),
                    }
                }
            }
            EntityClass::Date => {
                let day = (1 + self.pick(28)) as u8;
                let month = (1 + self.pick(12)) as u8;
                let year = 1910 + self.pick(190) as i32;
                match self.pick(3) {
                    0 => CanonicalValue::Date {
                        day: Some(day),
                        month: Some(month),
                        year: Some(year),
                    },
                    1 => CanonicalValue::Date {
                        day: Some(day),
                        month: Some(month),
                        year: None,
                    },
                    _ => CanonicalValue::Date {
                        day: None,
                        month: Some(month),
                        year: Some(year),
                    },
                }
            }
            EntityClass::Measure => {
                let unit = UNITS[self.pick(UNITS.len() as u64) as usize].to_string();
                let magnitude = if self.pick(3) == 0 {
                    let frac_len = 1 + self.pick(2) as usize;
                    Quantity::Decimal {
                        integer_part: self.pick(1000) as i64,
                        fraction_digits: self.digits(frac_len, false),
                    }
                } else {
                    Quantity::Cardinal {
                        value: (1 + self.pick(9_999)) as i64,
                    }
                };
                CanonicalValue::Measure { magnitude, unit }
            }
            EntityClass::Telephone => {
                let mut groups = Vec::new();
                let shape: &[usize] = if self.pick(2) == 0 {
                    &[3, 4]
                } else {
                    &[3, 3, 4]
                };
                for (i, len) in shape.iter().enumerate() {
                    let leading = i > 0 && self.pick(4) == 0;
                    groups.push(self.digits(*len, leading));
                }
                CanonicalValue::Telephone { groups }
            }
            EntityClass::DigitSequence => {
                let len = 3 + self.pick(6) as usize;
                CanonicalValue::DigitSequence {
                    digits: self.digits(len, true),
                }
            }
        }
    }
}

/// Carrier sentences with no number words, units, currencies or month
/// names of their own.
pub const TEMPLATES: &[&str] = &[
    "The record shows {} in the logs.",
    "Confirmed {} by the desk clerk.",
    "We expect {} according to the memo.",
    "Filed under {} with everything else.",
    "Please verify {} before closing.",
];

pub fn fill_template(index: usize, rendered: &str) -> String {
    TEMPLATES[index % TEMPLATES.len()].replace("{}", rendered)
}
