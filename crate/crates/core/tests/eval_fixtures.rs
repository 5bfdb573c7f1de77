//! Evaluator fixtures with hand-tallied expectations: the Case A scoring
//! fixture, translation accuracy counts, non-ITN accuracy, and the
//! order/monotonicity properties of the reports.

use std::sync::Arc;

use itn_core::dataset_pipeline::{ingest, read_pair_file, Sentence};
use itn_core::domain::{builtin_locale, EntityClass, PairRecord, Provenance, SpokenWrittenPair};
use itn_core::evaluator::{
    evaluate_case_a, evaluate_case_b, non_itn_accuracy, translation_accuracy, EntityExtractor,
};

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn en_extractor() -> EntityExtractor {
    EntityExtractor::new(Arc::new(builtin_locale("en").unwrap())).unwrap()
}

fn pair(id: u64, spoken: &str, written: &str) -> PairRecord {
    PairRecord {
        id,
        pair: SpokenWrittenPair {
            spoken: spoken.split_whitespace().map(String::from).collect(),
            written: written.to_string(),
            language: "en-US".into(),
            alignments: Vec::new(),
            provenance: Provenance::Translated,
        },
    }
}

#[test]
fn case_a_hand_scored_fixture() {
    // hand tally: ten entities, the time in item 1 and the second measure
    // in item 2 are wrong -> 8/10
    let extractor = en_extractor();
    let references = read_pair_file(fixture("case_a_references.jsonl")).unwrap();
    let predictions = read_pair_file(fixture("case_a_predictions.jsonl")).unwrap();
    let report = evaluate_case_a(&predictions, &references, &extractor).unwrap();
    assert_eq!(report.overall_accuracy, 0.8, "{report:?}");
    let total: u64 = report.per_class.values().map(|t| t.total).sum();
    assert_eq!(total, 10);
    assert_eq!(report.per_class[&EntityClass::Time], tally(1, 2));
    assert_eq!(report.per_class[&EntityClass::Measure], tally(1, 2));
    assert_eq!(report.per_class[&EntityClass::Money], tally(1, 1));
    assert_eq!(report.per_class[&EntityClass::Date], tally(1, 1));
    assert_eq!(report.per_class[&EntityClass::Telephone], tally(1, 1));
    assert_eq!(report.per_class[&EntityClass::Fraction], tally(1, 1));
    assert_eq!(report.per_class[&EntityClass::Cardinal], tally(1, 1));
    assert_eq!(report.per_class[&EntityClass::Ordinal], tally(1, 1));

    // identical files score 1.0
    let perfect = evaluate_case_a(&references, &references, &extractor).unwrap();
    assert_eq!(perfect.overall_accuracy, 1.0);
}

fn tally(correct: u64, total: u64) -> itn_core::evaluator::ClassTally {
    itn_core::evaluator::ClassTally { correct, total }
}

#[test]
fn corrupting_a_prediction_never_increases_accuracy() {
    let extractor = en_extractor();
    let references = read_pair_file(fixture("case_a_references.jsonl")).unwrap();
    let mut predictions = references.clone();
    let mut last = evaluate_case_a(&predictions, &references, &extractor)
        .unwrap()
        .overall_accuracy;
    assert_eq!(last, 1.0);
    // corrupt one correct line at a time
    let corruptions = [
        (0usize, "Pay $9.99 at 6:15 am."),
        (2, "Due 12/30/2022 by 10:30 pm."),
        (4, "Order 29,000 units by the 22nd."),
    ];
    for (index, text) in corruptions {
        predictions[index].pair.written = text.to_string();
        let accuracy = evaluate_case_a(&predictions, &references, &extractor)
            .unwrap()
            .overall_accuracy;
        assert!(accuracy <= last, "accuracy rose from {last} to {accuracy}");
        last = accuracy;
    }
    assert!(last < 0.7);
}

#[test]
fn translation_accuracy_hand_counts() {
    let target = EntityExtractor::new(Arc::new(builtin_locale("it").unwrap())).unwrap();

    // one of four entities flips spoken -> written: 0.75
    let source = vec![pair(1, "s", "the 4 totals are 12 and 9 and 33")];
    let translated = vec![pair(
        1,
        "i 4 totali sono dodici e nove e trentatre", // one digit leaked
        "i 4 totali sono 12 e 9 e 33",
    )];
    let accuracy = translation_accuracy(&source, &translated, &target).unwrap();
    assert_eq!(accuracy, 0.75);

    // mixed fixture, hand-tallied:
    //   id 1: 2 entities, clean                      -> 2/2
    //   id 2: 3 entities, one digit in spoken        -> 2/3
    //   id 3: 2 entities, written kept only one      -> 1/2
    // total 5 correct of 7
    let source = vec![
        pair(1, "s", "pay 12 then 15"),
        pair(2, "s", "rooms 7 and 8 and 9"),
        pair(3, "s", "buy 24 then 36"),
    ];
    let translated = vec![
        pair(1, "paga dodici poi quindici", "paga 12 poi 15"),
        pair(2, "stanze sette e 8 e nove", "stanze 7 e 8 e 9"),
        pair(
            3,
            "compra ventiquattro poi trentasei",
            "compra 24 poi trentasei",
        ),
    ];
    let accuracy = translation_accuracy(&source, &translated, &target).unwrap();
    assert_eq!(accuracy, 5.0 / 7.0);
}

#[test]
fn non_itn_accuracy_hand_counts() {
    let extractor = en_extractor();
    // identical outside entities -> 1.0 even when entity values differ
    let refs: Vec<PairRecord> = (1..=4)
        .map(|i| pair(i, "", &format!("chapter note {i}0 closes here")))
        .collect();
    let mut preds = refs.clone();
    preds[2].pair.written = "chapter note 999 closes here".into();
    assert_eq!(non_itn_accuracy(&preds, &refs, &extractor).unwrap(), 1.0);

    // 1 of 50 sentences with a mutated non-entity word -> 0.98
    let refs: Vec<PairRecord> = (1..=50)
        .map(|i| pair(i, "", &format!("item {i} was counted today")))
        .collect();
    let mut preds = refs.clone();
    preds[7].pair.written = preds[7].pair.written.replace("today", "tonight");
    assert_eq!(non_itn_accuracy(&preds, &refs, &extractor).unwrap(), 0.98);

    // seeded-noise fixture: exactly 5 of 20 sentences mutated outside
    // their entity -> 15/20
    let refs: Vec<PairRecord> = (1..=20)
        .map(|i| pair(i, "", &format!("row {i} holds value {}", i * 3)))
        .collect();
    let mut preds = refs.clone();
    for i in [2usize, 5, 9, 13, 17] {
        preds[i].pair.written = preds[i].pair.written.replace("holds", "kept");
    }
    assert_eq!(
        non_itn_accuracy(&preds, &refs, &extractor).unwrap(),
        15.0 / 20.0
    );
}

#[test]
fn case_b_is_invariant_under_stream_permutation() {
    let english = read_pair_file(fixture("case_b_english_refs.jsonl")).unwrap();
    let spoken: Vec<Sentence> = ingest(fixture("case_b_target_spoken.txt")).unwrap();
    let preds: Vec<Sentence> = ingest(fixture("case_b_target_predictions.txt")).unwrap();
    let source = en_extractor();
    let target = EntityExtractor::new(Arc::new(builtin_locale("fr").unwrap())).unwrap();
    let base = evaluate_case_b(&english, &spoken, &preds, &source, &target).unwrap();

    // permute all three streams consistently; id alignment is preserved
    let order: Vec<usize> = (0..english.len()).rev().collect();
    let english_p: Vec<_> = order.iter().map(|&i| english[i].clone()).collect();
    let spoken_p: Vec<_> = order.iter().map(|&i| spoken[i].clone()).collect();
    let preds_p: Vec<_> = order.iter().map(|&i| preds[i].clone()).collect();
    let permuted = evaluate_case_b(&english_p, &spoken_p, &preds_p, &source, &target).unwrap();
    assert_eq!(base, permuted);
}

#[test]
fn filter_is_monotone_in_threshold_on_the_fixture() {
    use itn_core::dataset_pipeline::filter_pairs;
    let source = read_pair_file(fixture("filter_source.jsonl")).unwrap();
    let translated = read_pair_file(fixture("filter_translated.jsonl")).unwrap();
    let it = Arc::new(builtin_locale("it").unwrap());
    let mut previous: Option<Vec<u64>> = None;
    for threshold in [0.0, 0.2, 1.0, 10.0] {
        let (kept, report) = filter_pairs(&source, &translated, &it, threshold).unwrap();
        assert_eq!(report.kept + report.rejected(), report.total);
        let ids: Vec<u64> = kept.iter().map(|p| p.id).collect();
        if let Some(prev) = &previous {
            assert!(
                prev.iter().all(|id| ids.contains(id)),
                "{prev:?} not within {ids:?}"
            );
        }
        previous = Some(ids);
    }
}

#[test]
fn misaligned_case_a_streams_error() {
    let extractor = en_extractor();
    let refs = vec![pair(1, "", "pay 12"), pair(2, "", "pay 13")];
    let preds = vec![pair(1, "", "pay 12"), pair(9, "", "pay 13")];
    let err = evaluate_case_a(&preds, &refs, &extractor).unwrap_err();
    assert!(err.to_string().contains('9'), "{err}");
}

#[test]
fn extracted_digit_strings_are_canonical() {
    // digits always match ^[0-9]+(\.[0-9]+)?$ with separators stripped
    let en = en_extractor();
    let fr = EntityExtractor::new(Arc::new(builtin_locale("fr").unwrap())).unwrap();
    let is_canonical = |d: &str| {
        let mut parts = d.split('.');
        let int = parts.next().unwrap_or("");
        let frac = parts.next();
        parts.next().is_none()
            && !int.is_empty()
            && int.bytes().all(|b| b.is_ascii_digit())
            && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
    };
    for record in read_pair_file(fixture("case_a_references.jsonl")).unwrap() {
        for entity in en.extract(&record.pair.written) {
            assert!(is_canonical(&entity.digits), "{:?}", entity.digits);
        }
    }
    for line in ingest(fixture("case_b_target_predictions.txt")).unwrap() {
        for entity in fr.extract(&line.text) {
            assert!(is_canonical(&entity.digits), "{:?}", entity.digits);
        }
    }
}

#[test]
fn per_class_tsv_mirrors_report() {
    let extractor = en_extractor();
    let references = read_pair_file(fixture("case_a_references.jsonl")).unwrap();
    let predictions = read_pair_file(fixture("case_a_predictions.jsonl")).unwrap();
    let report = evaluate_case_a(&predictions, &references, &extractor).unwrap();
    let tsv = report.to_tsv();
    assert!(tsv.starts_with("class\tsize\taccuracy\n"));
    assert!(tsv.contains("time\t2\t50.00%"));
    assert!(tsv.trim_end().ends_with("overall\t10\t80.00%"));
}
