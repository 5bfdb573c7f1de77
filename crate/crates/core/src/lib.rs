//! Spoken/written text pair tooling for inverse text normalization (ITN):
//!
//! - an augmentation pipeline that picks sentences with numerical
//!   entities, segments and verbalizes them, and rewrites each written
//!   sentence into many diverse spoken variants;
//! - a rule-based ITN baseline that parses spoken entities back to
//!   canonical values and renders locale-correct written forms;
//! - quality filters for machine-translated pair files;
//! - a locale-aware normalized-accuracy evaluator (Case A with native
//!   references, Case B against English references);
//! - a line-delimited JSON subprocess bridge for plugging in external
//!   ITN or translation models.
//!
//! Locale profiles and entity pattern tables are JSON data files; en, fr,
//! de, es and it ship embedded, and new languages can be added without
//! rebuilding.

pub mod dataset_pipeline;
pub mod domain;
pub mod evaluator;
pub mod itn_rules;
pub mod model_bridge;
pub mod segmenter;
pub mod spoken_generator;
pub mod verbalizer;

pub use domain::{
    builtin_locale, load_locale, resolve_locale, AugmentationConfig, CanonicalValue, EntityClass,
    EntitySpan, LocaleProfile, PairRecord, SpokenWrittenPair,
};
