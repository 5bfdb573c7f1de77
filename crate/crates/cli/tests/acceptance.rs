//! CLI acceptance: determinism of `augment` under identical seeds and
//! inputs (criterion 9), plus the per-command behaviors exposed through
//! the binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_itn")
}

fn sha256(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    format!("{:x}", hasher.finalize())
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(output: &std::process::Output) {
    assert!(
        output.status.success(),
        "exit {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

const CORPUS: &str = "Arrive before 6:15 am.\n\
The fee is $1.20 today.\n\
Rooms 801 and 123 are open.\n\
Due 12/31/2022 by 10:30 pm.\n\
It weighs 123g plus 45 kg.\n\
Call 555-0123 about the 3/4 share.\n\
Order 24,000 units by the 21st.\n\
ID 00912 was filed.\n\
no entities in this line\n";

#[test]
fn criterion_09_augment_is_deterministic() {
    let result = std::panic::catch_unwind(|| {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.txt");
        std::fs::write(&corpus, CORPUS).unwrap();

        let mut digests = Vec::new();
        for (run_idx, jobs) in ["1", "1", "4"].iter().enumerate() {
            let pairs = dir.path().join(format!("pairs{run_idx}.jsonl"));
            let stats = dir.path().join(format!("stats{run_idx}.json"));
            let output = run(&[
                "augment",
                "--input",
                corpus.to_str().unwrap(),
                "--output",
                pairs.to_str().unwrap(),
                "--stats",
                stats.to_str().unwrap(),
                "--seed",
                "42",
                "--jobs",
                jobs,
            ]);
            assert_success(&output);
            digests.push((sha256(&pairs), sha256(&stats)));
        }
        assert_eq!(digests[0], digests[1], "same seed, same bytes");
        assert_eq!(
            digests[0], digests[2],
            "worker count must not change output"
        );

        // a different seed actually changes the sampled output
        let pairs = dir.path().join("pairs_seed7.jsonl");
        let output = run(&[
            "augment",
            "--input",
            corpus.to_str().unwrap(),
            "--output",
            pairs.to_str().unwrap(),
            "--seed",
            "7",
        ]);
        assert_success(&output);
        assert_ne!(digests[0].0, sha256(&pairs));
    });
    let status = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("acceptance criterion 09 (augment reruns are byte-identical): {status}");
    if let Err(cause) = result {
        std::panic::resume_unwind(cause);
    }
}

#[test]
fn augment_empty_corpus_produces_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.txt");
    std::fs::write(&corpus, "").unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let stats = dir.path().join("stats.json");
    let output = run(&[
        "augment",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        pairs.to_str().unwrap(),
        "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_success(&output);
    assert_eq!(std::fs::read_to_string(&pairs).unwrap(), "");
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(stats["sentences"], 0);
    assert_eq!(stats["pairs"], 0);
}

#[test]
fn augment_tsv_mode_emits_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, "Room 801 is open.\n").unwrap();
    let pairs = dir.path().join("pairs.tsv");
    let output = run(&[
        "augment",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        pairs.to_str().unwrap(),
        "--tsv",
    ]);
    assert_success(&output);
    let text = std::fs::read_to_string(&pairs).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let columns: Vec<&str> = line.split('\t').collect();
        assert_eq!(columns.len(), 2, "{line:?}");
        assert_eq!(columns[1], "Room 801 is open.");
    }
}

#[test]
fn itn_command_matches_published_examples() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("spoken.txt");
    std::fs::write(
        &input,
        "i found out that nine out of ten statistics are wrong.\nhello world\n",
    )
    .unwrap();
    let output_path = dir.path().join("written.txt");
    let output = run(&[
        "itn",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output_path.to_str().unwrap(),
    ]);
    assert_success(&output);
    assert_eq!(
        std::fs::read_to_string(&output_path).unwrap(),
        "i found out that 9 out of 10 statistics are wrong.\nhello world\n"
    );
}

#[test]
fn itn_preserves_line_count_and_order_on_large_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("spoken.txt");
    let mut text = String::new();
    for i in 0..10_000 {
        text.push_str(&format!("line tag{i} says twenty one\n"));
    }
    std::fs::write(&input, &text).unwrap();
    let output_path = dir.path().join("written.txt");
    let output = run(&[
        "itn",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output_path.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert_success(&output);
    let written = std::fs::read_to_string(&output_path).unwrap();
    let lines: Vec<&str> = written.lines().collect();
    assert_eq!(lines.len(), 10_000);
    for (i, line) in lines.iter().enumerate() {
        assert_eq!(*line, format!("line tag{i} says 21"));
    }

    // empty in, empty out
    std::fs::write(&input, "").unwrap();
    let output = run(&[
        "itn",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output_path.to_str().unwrap(),
    ]);
    assert_success(&output);
    assert_eq!(std::fs::read_to_string(&output_path).unwrap(), "");
}

#[test]
fn filter_command_writes_report_and_kept_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let kept = dir.path().join("kept.jsonl");
    let report = dir.path().join("report.json");
    let output = run(&[
        "filter",
        "--source",
        fixture("filter_source.jsonl").to_str().unwrap(),
        "--translated",
        fixture("filter_translated.jsonl").to_str().unwrap(),
        "--output",
        kept.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--locale",
        "it",
        "--wer-threshold",
        "0.0",
    ]);
    assert_success(&output);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["total"], 5);
    assert_eq!(report["kept"], 2);
    assert_eq!(report["rejected-by-reason"]["conformity-failure"], 1);
    assert_eq!(std::fs::read_to_string(&kept).unwrap().lines().count(), 2);
}

#[test]
fn evaluate_case_b_cli_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let tsv_path = dir.path().join("per_class.tsv");
    let output = run(&[
        "evaluate",
        "--case",
        "b",
        "--english-reference",
        fixture("case_b_english_refs.jsonl").to_str().unwrap(),
        "--target-spoken",
        fixture("case_b_target_spoken.txt").to_str().unwrap(),
        "--target-predictions",
        fixture("case_b_target_predictions.txt").to_str().unwrap(),
        "--locale",
        "fr",
        "--report",
        report_path.to_str().unwrap(),
        "--per-class-tsv",
        tsv_path.to_str().unwrap(),
    ]);
    assert_success(&output);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["skipped-already-written"], 2);
    assert!((report["overall-accuracy"].as_f64().unwrap() - 15.0 / 21.0).abs() < 1e-12);
    let tsv = std::fs::read_to_string(&tsv_path).unwrap();
    assert!(tsv.starts_with("class\tsize\taccuracy\n"));
}

#[test]
fn bridge_run_echo_and_failed_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bridge.json");
    std::fs::write(
        &spec,
        r#"{"command": ["cat"], "timeout-ms": 10000, "max-batch": 16}"#,
    )
    .unwrap();
    let input = dir.path().join("input.txt");
    std::fs::write(&input, "first line\nsecond line\n").unwrap();
    let out = dir.path().join("out.jsonl");
    let output = run(&[
        "bridge-run",
        "--bridge",
        spec.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_success(&output);
    let lines: Vec<String> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("first line"));
    let failed = std::fs::read_to_string(dir.path().join("out.jsonl.failed.jsonl")).unwrap();
    assert_eq!(failed, "");

    // spawn failure is a fatal, nonzero exit
    std::fs::write(
        &spec,
        r#"{"command": ["/nonexistent/model"], "timeout-ms": 1000, "max-batch": 1}"#,
    )
    .unwrap();
    let output = run(&[
        "bridge-run",
        "--bridge",
        spec.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
}

#[test]
fn stats_command_reports_diversity() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, "Arrive before 6:15 am.\n").unwrap();
    let pairs = dir.path().join("pairs.jsonl");
    let output = run(&[
        "augment",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        pairs.to_str().unwrap(),
        "--max-variants",
        "64",
        "--max-pairs",
        "64",
    ]);
    assert_success(&output);
    let report = dir.path().join("stats.json");
    let output = run(&[
        "stats",
        "--pairs",
        pairs.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_success(&output);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(stats["diversity-factor"].as_f64().unwrap() >= 7.0);
    assert_eq!(
        stats["entities-by-class"]["time"].as_u64().unwrap() as usize,
        std::fs::read_to_string(&pairs).unwrap().lines().count()
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    std::fs::write(&corpus, "Rooms 801 and 123 are open.\n").unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"seed": 42, "max-pairs-per-sentence": 3}"#).unwrap();

    let from_config = dir.path().join("a.jsonl");
    let output = run(&[
        "augment",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        from_config.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_success(&output);
    assert_eq!(
        std::fs::read_to_string(&from_config)
            .unwrap()
            .lines()
            .count(),
        3
    );

    // the flag overrides the manifest value
    let overridden = dir.path().join("b.jsonl");
    let output = run(&[
        "augment",
        "--input",
        corpus.to_str().unwrap(),
        "--output",
        overridden.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--max-pairs",
        "5",
    ]);
    assert_success(&output);
    assert_eq!(
        std::fs::read_to_string(&overridden)
            .unwrap()
            .lines()
            .count(),
        5
    );
}

#[test]
fn evaluate_case_a_with_non_itn() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let output = run(&[
        "evaluate",
        "--case",
        "a",
        "--predictions",
        fixture("case_a_predictions.jsonl").to_str().unwrap(),
        "--references",
        fixture("case_a_references.jsonl").to_str().unwrap(),
        "--locale",
        "en",
        "--with-non-itn",
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_success(&output);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["overall-accuracy"], 0.8);
    // only entity values differ between the fixtures, so the text outside
    // entity spans matches everywhere
    assert_eq!(report["non-itn-accuracy"], 1.0);
}

#[test]
fn filter_misalignment_exits_nonzero_and_names_the_id() {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("source.jsonl");
    let translated = dir.path().join("translated.jsonl");
    let line = |id: u64| {
        format!(
            "{{\"id\":{id},\"spoken\":[\"uno\"],\"written\":\"1\",\"language\":\"it-IT\",\"provenance\":\"translated\"}}\n"
        )
    };
    std::fs::write(&source, format!("{}{}", line(1), line(2))).unwrap();
    std::fs::write(&translated, format!("{}{}", line(1), line(77))).unwrap();
    let output = run(&[
        "filter",
        "--source",
        source.to_str().unwrap(),
        "--translated",
        translated.to_str().unwrap(),
        "--output",
        dir.path().join("kept.jsonl").to_str().unwrap(),
        "--locale",
        "it",
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("77"), "{stderr}");
}

#[test]
fn unknown_locale_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "six\n").unwrap();
    let output = run(&[
        "itn",
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("out.txt").to_str().unwrap(),
        "--locale",
        "zz",
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("zz"), "{stderr}");
}
