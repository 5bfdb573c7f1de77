//! Acceptance suite. Each test checks one release criterion at its stated
//! tolerance and prints one pass/fail line (visible with
//! `cargo test --test acceptance -- --nocapture`).

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use itn_core::dataset_pipeline::{filter_pairs, read_pair_file, wer, RejectReason, Sentence};
use itn_core::domain::{
    builtin_locale, AugmentationConfig, CanonicalValue, EntityClass, Meridiem, PairRecord,
};
use itn_core::evaluator::{entities_equivalent, evaluate_case_b, EntityExtractor, EvalReport};
use itn_core::itn_rules::{itn_with, SpokenParser};
use itn_core::model_bridge::{run_batch, BridgeSpec, ItemOutcome};
use itn_core::segmenter::Segmenter;
use itn_core::spoken_generator::{diversity_factor, rewrite, VariantGenerator};
use itn_core::verbalizer::EnglishGrammar;

use common::{fill_template, ValueGen};

fn report<F: FnOnce() + std::panic::UnwindSafe>(number: u32, name: &str, check: F) {
    let result = std::panic::catch_unwind(check);
    let status = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("acceptance criterion {number:02} ({name}): {status}");
    if let Err(cause) = result {
        std::panic::resume_unwind(cause);
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn en() -> Arc<itn_core::domain::LocaleProfile> {
    Arc::new(builtin_locale("en").unwrap())
}

fn variant_strings(generator: &VariantGenerator, value: &CanonicalValue) -> Vec<String> {
    generator
        .entity_variants(value, &AugmentationConfig::unbounded())
        .unwrap()
        .into_iter()
        .map(|v| v.tokens.join(" "))
        .collect()
}

fn golden_rows() -> Vec<(CanonicalValue, Vec<&'static str>)> {
    vec![
        (
            CanonicalValue::Time {
                hour: 6,
                minute: 15,
                second: None,
                meridiem: Some(Meridiem::Am),
            },
            vec![
                "six fifteen a m",
                "six fifteen in the morning",
                "six fifteen",
                "six past fifteen a m",
                "quarter past six a m",
                "quarter past six morning",
                "six and quarter a m",
            ],
        ),
        (
            CanonicalValue::Money {
                amount_major: 1,
                amount_minor: Some("20".into()),
                currency: "USD".into(),
            },
            vec![
                "one dollar and twenty cents",
                "one dollar twenty cents",
                "one dollar two zero cents",
                "one point two zero dollars",
                "a dollar twenty cents",
            ],
        ),
        (
            CanonicalValue::Cardinal { value: 123 },
            vec![
                "one hundred twenty three",
                "one twenty three",
                "one hundred and twenty three",
                "one two three",
            ],
        ),
        (
            CanonicalValue::Money {
                amount_major: 123,
                amount_minor: None,
                currency: "USD".into(),
            },
            vec![
                "one hundred twenty three dollars",
                "one hundred twenty three dollar",
                "one twenty three dollars",
                "one twenty three dollar",
                "one hundred and twenty three dollars",
                "one twenty three dollars zero cents",
            ],
        ),
        (
            CanonicalValue::Measure {
                magnitude: itn_core::domain::Quantity::Cardinal { value: 123 },
                unit: "gram".into(),
            },
            vec![
                "one hundred twenty three grams",
                "one hundred twenty three gram",
                "one twenty three grams",
                "one twenty three gram",
                "one hundred and twenty three grams",
                "one hundred and twenty three gram",
                "one two three grams",
            ],
        ),
    ]
}

#[test]
fn criterion_01_golden_variant_sets() {
    report(1, "golden variant sets cover the published rows", || {
        let started = Instant::now();
        let generator = VariantGenerator::new(&en()).unwrap();
        for (value, expected) in golden_rows() {
            let got = variant_strings(&generator, &value);
            for want in expected {
                assert!(
                    got.iter().any(|g| g == want),
                    "missing variant {want:?} for {value:?}; got {got:#?}"
                );
            }
        }
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, limit 1s");
    });
}

#[test]
fn criterion_02_number_round_trip_exhaustive() {
    report(2, "0..=99,999 variants all parse back", || {
        let started = Instant::now();
        let profile = en();
        let generator = VariantGenerator::new(&profile).unwrap();
        let parser = SpokenParser::new(Arc::clone(&profile));
        let mut variants_checked = 0u64;
        for n in 0..=99_999u64 {
            for variant in generator.number_variants(n) {
                let entities = parser.parse(&variant.tokens);
                assert_eq!(
                    entities.len(),
                    1,
                    "n={n}, variant {:?} parsed as {entities:?}",
                    variant.tokens.join(" ")
                );
                let entity = &entities[0];
                assert_eq!(
                    (entity.start, entity.end),
                    (0, variant.tokens.len()),
                    "n={n}, variant {:?} partially parsed",
                    variant.tokens.join(" ")
                );
                assert_eq!(
                    entity.value,
                    CanonicalValue::Cardinal { value: n as i64 },
                    "n={n}, variant {:?}",
                    variant.tokens.join(" ")
                );
                variants_checked += 1;
            }
        }
        let elapsed = started.elapsed();
        println!("  checked {variants_checked} variants in {elapsed:?}");
        assert!(elapsed.as_secs() < 300, "took {elapsed:?}, limit 5min");
    });
}

/// All reference entities must find an equivalent prediction, matched
/// k-th-of-class to k-th-of-class.
fn entities_recovered(
    extractor: &EntityExtractor,
    reference_written: &str,
    predicted_written: &str,
) -> bool {
    let refs = extractor.extract(reference_written);
    let preds = extractor.extract(predicted_written);
    let mut preds_by_class: BTreeMap<EntityClass, Vec<_>> = BTreeMap::new();
    for p in &preds {
        preds_by_class.entry(p.class).or_default().push(p);
    }
    let mut seen: BTreeMap<EntityClass, usize> = BTreeMap::new();
    refs.iter().all(|r| {
        let k = seen.entry(r.class).or_insert(0);
        let candidate = preds_by_class
            .get(&r.class)
            .and_then(|list| list.get(*k))
            .copied();
        *k += 1;
        match candidate {
            Some(p) => entities_equivalent(r, p, extractor.profile()),
            // the permissive cross-class fallback: digits must agree with
            // the k-th entity of any class at the same position
            None => preds
                .get(
                    refs.iter()
                        .position(|x| std::ptr::eq(x, r))
                        .unwrap_or(usize::MAX),
                )
                .is_some_and(|p| entities_equivalent(r, p, extractor.profile())),
        }
    })
}

#[test]
fn criterion_03_generator_itn_round_trip() {
    report(
        3,
        "generator to ITN round trip on a 1,000-sentence corpus",
        || {
            let profile = en();
            let segmenter = Segmenter::new(Arc::clone(&profile)).unwrap();
            let generator = VariantGenerator::new(&profile).unwrap();
            let parser = SpokenParser::new(Arc::clone(&profile));
            let extractor = EntityExtractor::new(Arc::clone(&profile)).unwrap();
            let grammar = EnglishGrammar::new(&profile).unwrap();
            let mut gen = ValueGen::new(0x1715_0001);
            let config = AugmentationConfig::unbounded();

            let mut canonical_total = 0u64;
            let mut canonical_ok = 0u64;
            let mut all_total = 0u64;
            let mut all_ok = 0u64;
            let mut sentences = 0u64;

            for i in 0..1000usize {
                let class = EntityClass::PRECEDENCE[i % EntityClass::PRECEDENCE.len()];
                let value = gen.value(class);
                let written =
                    fill_template(i, &itn_core::itn_rules::render_written(&value, &profile));
                let segmentation = segmenter.segment(&written);
                assert!(
                    !segmentation.spans.is_empty(),
                    "sentence {i} not picked: {written:?} ({value:?})"
                );
                sentences += 1;
                let pairs = rewrite(&segmentation, &generator, &config, i as u64).unwrap();
                assert!(!pairs.is_empty(), "no pairs for {written:?}");
                for pair in &pairs {
                    let spoken = pair.pair.spoken.join(" ");
                    let predicted = itn_with(&parser, &spoken);
                    let ok = entities_recovered(&extractor, &written, &predicted);
                    all_total += 1;
                    all_ok += u64::from(ok);
                    let is_canonical = pair.pair.alignments.len() == 1 && {
                        let alignment = &pair.pair.alignments[0];
                        let canonical = grammar
                            .verbalize(&alignment.span.value)
                            .map(|v| v.canonical_verbal)
                            .unwrap_or_default();
                        pair.pair.spoken[alignment.spoken_start..alignment.spoken_end]
                            == canonical[..]
                    };
                    if is_canonical {
                        canonical_total += 1;
                        canonical_ok += u64::from(ok);
                    }
                }
            }
            assert_eq!(sentences, 1000);
            let canonical_rate = canonical_ok as f64 / canonical_total as f64;
            let all_rate = all_ok as f64 / all_total as f64;
            println!(
            "  canonical: {canonical_ok}/{canonical_total} = {:.2}%  all: {all_ok}/{all_total} = {:.2}%",
            canonical_rate * 100.0,
            all_rate * 100.0
        );
            assert!(
                canonical_rate >= 0.95,
                "canonical rate {canonical_rate} below 0.95"
            );
            assert!(all_rate >= 0.85, "all-variant rate {all_rate} below 0.85");
        },
    );
}

#[test]
fn criterion_04_evaluation_special_cases() {
    report(
        4,
        "clock, magnitude, small-cardinal and separator equivalences",
        || {
            let en = EntityExtractor::new(Arc::new(builtin_locale("en").unwrap())).unwrap();
            let fr = EntityExtractor::new(Arc::new(builtin_locale("fr").unwrap())).unwrap();
            let de = EntityExtractor::new(Arc::new(builtin_locale("de").unwrap())).unwrap();

            let one = |ex: &EntityExtractor, text: &str| {
                let entities = ex.extract(text);
                assert_eq!(entities.len(), 1, "{text:?} -> {entities:?}");
                entities.into_iter().next().unwrap()
            };

            // 12/24 hour conversion
            assert!(entities_equivalent(
                &one(&en, "1:30 p.m."),
                &one(&fr, "13h30"),
                fr.profile()
            ));
            // accommodating zeros via alternate magnitudes
            assert!(entities_equivalent(
                &one(&en, "24,000"),
                &one(&fr, "24 mille"),
                fr.profile()
            ));
            // small cardinal word/digit identification
            assert!(entities_equivalent(
                &one(&en, "two children"),
                &one(&fr, "2 enfants"),
                fr.profile()
            ));
            // separators
            let en_amount = one(&en, "25,000.00");
            let fr_amount = one(&fr, "25 000,00");
            let de_amount = one(&de, "25.000,00");
            assert!(entities_equivalent(&en_amount, &fr_amount, fr.profile()));
            assert!(entities_equivalent(&en_amount, &de_amount, de.profile()));
            assert!(entities_equivalent(&fr_amount, &de_amount, de.profile()));
            // a spoken word where a written digit is required is an error
            assert!(!entities_equivalent(
                &one(&en, "9"),
                &one(&fr, "neuf"),
                fr.profile()
            ));
        },
    );
}

#[test]
fn criterion_05_case_b_scoring_fixture() {
    report(
        5,
        "Case B fixture reproduces the hand-computed report",
        || {
            let english = read_pair_file(fixture("case_b_english_refs.jsonl")).unwrap();
            let spoken =
                itn_core::dataset_pipeline::ingest(fixture("case_b_target_spoken.txt")).unwrap();
            let preds =
                itn_core::dataset_pipeline::ingest(fixture("case_b_target_predictions.txt"))
                    .unwrap();
            assert_eq!(english.len(), 20);
            let source = EntityExtractor::new(Arc::new(builtin_locale("en").unwrap())).unwrap();
            let target = EntityExtractor::new(Arc::new(builtin_locale("fr").unwrap())).unwrap();
            let report = evaluate_case_b(&english, &spoken, &preds, &source, &target).unwrap();

            let expected: EvalReport = serde_json::from_str(
                &std::fs::read_to_string(fixture("case_b_expected.json")).unwrap(),
            )
            .unwrap();
            assert_eq!(
                report,
                expected,
                "got {}",
                serde_json::to_string_pretty(&report).unwrap()
            );
            // spot-check the hand tally: 15 of 21 entities, two discarded items
            assert_eq!(report.overall_accuracy, 15.0 / 21.0);
            assert_eq!(report.skipped_already_written, 2);
        },
    );
}

#[test]
fn criterion_06_filter_criteria_fixture() {
    report(6, "filter fixture rejects one pair per criterion", || {
        let source = read_pair_file(fixture("filter_source.jsonl")).unwrap();
        let translated = read_pair_file(fixture("filter_translated.jsonl")).unwrap();
        let it = Arc::new(builtin_locale("it").unwrap());
        let (kept, report) = filter_pairs(&source, &translated, &it, 0.0).unwrap();

        assert_eq!(report.total, 5);
        assert_eq!(report.kept, 2);
        assert_eq!(
            report.rejected_by_reason[&RejectReason::SpokenWrittenMismatch],
            1
        );
        assert_eq!(report.rejected_by_reason[&RejectReason::HighWer], 1);
        assert_eq!(
            report.rejected_by_reason[&RejectReason::ConformityFailure],
            1
        );
        assert_eq!(report.kept + report.rejected(), report.total);
        let kept_ids: Vec<u64> = kept.iter().map(|p| p.id).collect();
        assert_eq!(kept_ids, vec![4, 5]);
    });
}

#[test]
fn criterion_07_diversity_factor() {
    report(
        7,
        "diversity factor at least 5 on the golden set (paper reports 22x)",
        || {
            let profile = en();
            let segmenter = Segmenter::new(Arc::clone(&profile)).unwrap();
            let generator = VariantGenerator::new(&profile).unwrap();
            let config = AugmentationConfig::unbounded();
            let sentences = [
                "Arrive before 6:15 am.",
                "The fee is $1.20 today.",
                "There were 123 entries.",
                "Pay $123 at the desk.",
                "It weighs 123g in total.",
            ];
            let mut pairs: Vec<PairRecord> = Vec::new();
            for (i, sentence) in sentences.iter().enumerate() {
                let segmentation = segmenter.segment(sentence);
                pairs.extend(rewrite(&segmentation, &generator, &config, i as u64).unwrap());
            }
            let factor = diversity_factor(&pairs).unwrap();
            println!("  diversity factor over the golden set: {factor:.2}");
            assert!(factor >= 5.0, "diversity factor {factor} below 5");
        },
    );
}

/// Independent oracle: top-down exhaustive exploration of edit scripts
/// with memoization, distinct from the two-row iterative implementation.
fn oracle_edit_distance(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == a.len() {
            b.len() - j
        } else if j == b.len() {
            a.len() - i
        } else {
            let substitute = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
            let delete = go(a, b, i + 1, j, memo) + 1;
            let insert = go(a, b, i, j + 1, memo) + 1;
            substitute.min(delete).min(insert)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, 0, 0, &mut memo)
}

#[test]
fn criterion_08_wer_oracle_equivalence() {
    report(8, "WER agrees with the edit-script enumerator", || {
        let started = Instant::now();
        // all sequences of length 0..=6 over a 3-symbol alphabet
        let mut sequences: Vec<Vec<u8>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
        for _ in 0..6 {
            let mut next = Vec::new();
            for seq in &frontier {
                for symbol in *b"abc" {
                    let mut s = seq.clone();
                    s.push(symbol);
                    next.push(s);
                }
            }
            sequences.extend(next.iter().cloned());
            frontier = next;
        }
        assert_eq!(sequences.len(), 1093);
        let as_tokens: Vec<Vec<String>> = sequences
            .iter()
            .map(|s| s.iter().map(|b| (*b as char).to_string()).collect())
            .collect();
        let mut checked = 0u64;
        for (ri, reference) in sequences.iter().enumerate() {
            if reference.is_empty() {
                continue;
            }
            for (hi, hypothesis) in sequences.iter().enumerate() {
                let expected =
                    oracle_edit_distance(reference, hypothesis) as f64 / reference.len() as f64;
                let got = wer(&as_tokens[ri], &as_tokens[hi]).unwrap();
                assert!(
                    (got - expected).abs() < 1e-12,
                    "ref {reference:?} hyp {hypothesis:?}: {got} vs {expected}"
                );
                checked += 1;
            }
        }
        let elapsed = started.elapsed();
        println!("  checked {checked} pairs in {elapsed:?}");
        assert!(elapsed.as_secs() < 60, "took {elapsed:?}, limit 1min");
    });
}

#[test]
fn criterion_10_bridge_robustness() {
    report(10, "bridge echo and fault-injection behavior", || {
        // identity model over 10,000 lines: cat speaks the protocol
        let items: Vec<(u64, String)> = (1..=10_000u64)
            .map(|i| (i, format!("sentence {i} for the echo model")))
            .collect();
        let spec = BridgeSpec {
            command: vec!["cat".into()],
            timeout_ms: 30_000,
            max_batch: 64,
            restart_on_crash: false,
        };
        let results = run_batch(&items, &spec).unwrap();
        assert_eq!(results.len(), 10_000);
        for ((id, text), (rid, outcome)) in items.iter().zip(&results) {
            assert_eq!(id, rid);
            assert_eq!(outcome, &ItemOutcome::Text(text.clone()), "id {id}");
        }

        // fault stub drops every 7th request; those ids fail, the rest
        // come back intact
        let stub = fixture("bridge/drop_every_7th.py");
        let items: Vec<(u64, String)> = (1..=100u64).map(|i| (i, format!("text {i}"))).collect();
        let spec = BridgeSpec {
            command: vec!["python3".into(), stub.display().to_string()],
            timeout_ms: 800,
            max_batch: 25,
            restart_on_crash: false,
        };
        let results = run_batch(&items, &spec).unwrap();
        assert_eq!(results.len(), 100);
        for (i, (id, outcome)) in results.iter().enumerate() {
            let position = i as u64 + 1;
            assert_eq!(*id, position);
            if position.is_multiple_of(7) {
                assert!(outcome.is_failed(), "id {id} should have been dropped");
            } else {
                assert_eq!(outcome, &ItemOutcome::Text(format!("text {id}")), "id {id}");
            }
        }
    });
}

// Criterion 9 (byte-identical cmd_augment reruns) exercises the binary and
// lives in the CLI crate's acceptance suite.

#[test]
fn sentence_ids_align_fixture_streams() {
    // guard for the fixtures themselves: ids are 1..=N and line-aligned
    let english = read_pair_file(fixture("case_b_english_refs.jsonl")).unwrap();
    for (i, record) in english.iter().enumerate() {
        assert_eq!(record.id, i as u64 + 1);
    }
    let spoken: Vec<Sentence> =
        itn_core::dataset_pipeline::ingest(fixture("case_b_target_spoken.txt")).unwrap();
    assert_eq!(spoken.len(), english.len());
}
