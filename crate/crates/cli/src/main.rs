//! Command-line entry point wiring the augmentation pipeline, the
//! rule-based ITN baseline, the pair filters, the evaluator and the model
//! bridge. Every run is reproducible from its flags, config file and
//! inputs; `--jobs` never changes output bytes.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use itn_core::dataset_pipeline::{filter_pairs, ingest, read_pair_file, write_pair_file};
use itn_core::domain::{resolve_locale, AugmentationConfig, EntityClass, LocaleProfile};
use itn_core::evaluator::{
    evaluate_case_a, evaluate_case_b, non_itn_accuracy, translation_accuracy, EntityExtractor,
};
use itn_core::itn_rules::{itn_with, SpokenParser};
use itn_core::model_bridge::{run_batch, BridgeSpec, ItemOutcome};
use itn_core::segmenter::Segmenter;
use itn_core::spoken_generator::{diversity_factor, rewrite, VariantGenerator};

#[derive(Parser)]
#[command(
    name = "itn",
    version,
    about = "Spoken/written pair augmentation, rule-based inverse text normalization, and ITN evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate diverse spoken/written pairs from a written corpus
    Augment(AugmentArgs),
    /// Inverse-normalize spoken-form text, line by line
    Itn(ItnArgs),
    /// Apply translation quality filters to aligned pair files
    Filter(FilterArgs),
    /// Score ITN predictions with locale-aware normalized accuracy
    Evaluate(EvaluateArgs),
    /// Run an external model over a line file via the bridge protocol
    BridgeRun(BridgeRunArgs),
    /// Report diversity and per-class statistics of a pair file
    Stats(StatsArgs),
}

/// Values shared by subcommands, overridable from a JSON manifest via
/// `--config`; explicit flags win over file values.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    locale: Option<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    max_variants_per_entity: Option<usize>,
    max_pairs_per_sentence: Option<usize>,
    wer_threshold: Option<f64>,
    classes: Option<Vec<EntityClass>>,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Built-in locale name (en, fr, de, es, it) or path to a locale JSON
    #[arg(long)]
    locale: Option<String>,
    /// Seed for all sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output is identical for any value
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON config manifest; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn file(&self) -> Result<FileConfig> {
        match &self.config {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("invalid config {}", path.display()))
            }
        }
    }

    fn locale(&self, file: &FileConfig) -> Result<Arc<LocaleProfile>> {
        let spec = self
            .locale
            .clone()
            .or_else(|| file.locale.clone())
            .unwrap_or_else(|| "en".to_string());
        Ok(resolve_locale(&spec)?)
    }

    fn seed(&self, file: &FileConfig) -> u64 {
        self.seed.or(file.seed).unwrap_or(0)
    }

    fn install_pool(&self, file: &FileConfig) -> Result<()> {
        if let Some(jobs) = self.jobs.or(file.jobs) {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .context("thread pool")?;
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Written corpus, one sentence per line
    #[arg(long)]
    input: PathBuf,
    /// Output pair file (JSON Lines, or TSV with --tsv)
    #[arg(long)]
    output: PathBuf,
    /// Where to write run statistics as JSON
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Emit two-column TSV (spoken TAB written) instead of JSON Lines
    #[arg(long)]
    tsv: bool,
    #[arg(long)]
    max_variants: Option<usize>,
    #[arg(long)]
    max_pairs: Option<usize>,
    /// Comma-separated entity classes to augment (default: all)
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<EntityClass>>,
}

#[derive(Args, Debug)]
struct ItnArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spoken-form input, one sentence per line
    #[arg(long)]
    input: PathBuf,
    /// Written-form output, line for line
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Source (English) pair file
    #[arg(long)]
    source: PathBuf,
    /// Translated pair file aligned by id
    #[arg(long)]
    translated: PathBuf,
    /// Kept pairs output (JSON Lines)
    #[arg(long)]
    output: PathBuf,
    /// FilterReport JSON output
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    wer_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalCase {
    A,
    B,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// a: native target-language references; b: English references with
    /// translated spoken inputs
    #[arg(long, value_enum)]
    case: EvalCase,
    /// Predictions pair file (case a)
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// References pair file (case a)
    #[arg(long)]
    references: Option<PathBuf>,
    /// English reference pair file (case b)
    #[arg(long)]
    english_reference: Option<PathBuf>,
    /// Translated spoken sentences, one per line (case b)
    #[arg(long)]
    target_spoken: Option<PathBuf>,
    /// Target-language ITN output, one per line (case b)
    #[arg(long)]
    target_predictions: Option<PathBuf>,
    /// Also score non-ITN accuracy (case a)
    #[arg(long)]
    with_non_itn: bool,
    /// Source pair file for translation accuracy
    #[arg(long)]
    translation_source: Option<PathBuf>,
    /// Translated pair file for translation accuracy
    #[arg(long)]
    translation_output: Option<PathBuf>,
    /// EvalReport JSON output (default: stdout)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-class table in class/size/accuracy layout
    #[arg(long)]
    per_class_tsv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BridgeRunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bridge spec JSON
    #[arg(long)]
    bridge: PathBuf,
    /// Input text, one item per line (line number becomes the id)
    #[arg(long)]
    input: PathBuf,
    /// Successful outputs as JSON Lines {"id", "text"}
    #[arg(long)]
    output: PathBuf,
    /// Failed ids sidecar as JSON Lines {"id", "error"}; defaults to
    /// <output>.failed.jsonl
    #[arg(long)]
    failed: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Pair file to analyze
    #[arg(long)]
    pairs: PathBuf,
    /// JSON output (default: stdout)
    #[arg(long)]
    report: Option<PathBuf>,
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{content}");
            std::io::stdout().flush().context("stdout")
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct AugmentStats {
    sentences: usize,
    picked: usize,
    pairs: usize,
    entities_by_class: std::collections::BTreeMap<EntityClass, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diversity_factor: Option<f64>,
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let file = args.common.file()?;
    args.common.install_pool(&file)?;
    let profile = args.common.locale(&file)?;
    let mut config = AugmentationConfig {
        max_variants_per_entity: args
            .max_variants
            .or(file.max_variants_per_entity)
            .unwrap_or(16),
        max_pairs_per_sentence: args.max_pairs.or(file.max_pairs_per_sentence).unwrap_or(8),
        sampling_seed: args.common.seed(&file),
        ..AugmentationConfig::default()
    };
    if let Some(classes) = args.classes.clone().or_else(|| file.classes.clone()) {
        config.enabled_classes = classes.into_iter().collect::<BTreeSet<_>>();
    }
    let segmenter =
        Segmenter::new(Arc::clone(&profile))?.with_enabled(config.enabled_classes.clone());
    let generator = VariantGenerator::new(&profile)?;
    let sentences = ingest(&args.input)?;

    let results: Vec<_> = sentences
        .par_iter()
        .map(|sentence| {
            let segmentation = segmenter.segment(&sentence.text);
            rewrite(&segmentation, &generator, &config, sentence.id)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let records: Vec<_> = results.into_iter().flatten().collect();
    if args.tsv {
        let mut out = String::new();
        for record in &records {
            out.push_str(&record.pair.spoken.join(" "));
            out.push('\t');
            out.push_str(&record.pair.written);
            out.push('\n');
        }
        std::fs::write(&args.output, out)
            .with_context(|| format!("cannot write {}", args.output.display()))?;
    } else {
        write_pair_file(&args.output, &records)?;
    }

    let mut entities_by_class = std::collections::BTreeMap::new();
    let mut picked = std::collections::BTreeSet::new();
    for record in &records {
        picked.insert(record.id);
        for alignment in &record.pair.alignments {
            *entities_by_class
                .entry(alignment.span.class)
                .or_insert(0u64) += 1;
        }
    }
    let stats = AugmentStats {
        sentences: sentences.len(),
        picked: picked.len(),
        pairs: records.len(),
        entities_by_class,
        diversity_factor: diversity_factor(&records).ok(),
    };
    if let Some(path) = &args.stats {
        write_output(
            Some(path),
            &format!("{}\n", serde_json::to_string_pretty(&stats)?),
        )?;
    }
    eprintln!(
        "augmented {} of {} sentences into {} pairs",
        stats.picked, stats.sentences, stats.pairs
    );
    Ok(())
}

fn cmd_itn(args: ItnArgs) -> Result<()> {
    let file = args.common.file()?;
    args.common.install_pool(&file)?;
    let profile = args.common.locale(&file)?;
    let parser = SpokenParser::new(Arc::clone(&profile));
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let lines: Vec<&str> = text.lines().collect();
    let written: Vec<String> = lines
        .par_iter()
        .map(|line| itn_with(&parser, line))
        .collect();
    let mut out = String::with_capacity(text.len());
    for line in &written {
        out.push_str(line);
        out.push('\n');
    }
    if !text.ends_with('\n') && out.ends_with('\n') {
        out.pop();
    }
    std::fs::write(&args.output, out)
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    Ok(())
}

fn cmd_filter(args: FilterArgs) -> Result<()> {
    let file = args.common.file()?;
    let profile = args.common.locale(&file)?;
    let threshold = args.wer_threshold.or(file.wer_threshold).unwrap_or(0.0);
    let source = read_pair_file(&args.source)?;
    let translated = read_pair_file(&args.translated)?;
    let (kept, report) = filter_pairs(&source, &translated, &profile, threshold)?;
    write_pair_file(&args.output, &kept)?;
    let report_json = format!("{}\n", serde_json::to_string_pretty(&report)?);
    write_output(args.report.as_deref(), &report_json)?;
    eprintln!("kept {} of {} pairs", report.kept, report.total);
    Ok(())
}

fn require<T>(value: Option<T>, flag: &str, case: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("--{flag} is required for case {case}"),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let file = args.common.file()?;
    let profile = args.common.locale(&file)?;
    let extractor = EntityExtractor::new(Arc::clone(&profile))?;
    let mut report = match args.case {
        EvalCase::A => {
            let predictions =
                read_pair_file(require(args.predictions.as_ref(), "predictions", "a")?)?;
            let references = read_pair_file(require(args.references.as_ref(), "references", "a")?)?;
            let mut report = evaluate_case_a(&predictions, &references, &extractor)?;
            if args.with_non_itn {
                report.non_itn_accuracy =
                    Some(non_itn_accuracy(&predictions, &references, &extractor)?);
            }
            report
        }
        EvalCase::B => {
            let english = read_pair_file(require(
                args.english_reference.as_ref(),
                "english-reference",
                "b",
            )?)?;
            let spoken = ingest(require(args.target_spoken.as_ref(), "target-spoken", "b")?)?;
            let predictions = ingest(require(
                args.target_predictions.as_ref(),
                "target-predictions",
                "b",
            )?)?;
            let source_extractor = EntityExtractor::new(resolve_locale("en")?)?;
            evaluate_case_b(
                &english,
                &spoken,
                &predictions,
                &source_extractor,
                &extractor,
            )?
        }
    };
    if let (Some(src), Some(out)) = (&args.translation_source, &args.translation_output) {
        let source = read_pair_file(src)?;
        let translated = read_pair_file(out)?;
        report.translation_accuracy = Some(translation_accuracy(&source, &translated, &extractor)?);
    }
    let report_json = format!("{}\n", serde_json::to_string_pretty(&report)?);
    write_output(args.report.as_deref(), &report_json)?;
    if let Some(path) = &args.per_class_tsv {
        write_output(Some(path), &report.to_tsv())?;
    }
    Ok(())
}

fn cmd_bridge_run(args: BridgeRunArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.bridge)
        .with_context(|| format!("cannot read {}", args.bridge.display()))?;
    let spec: BridgeSpec = serde_json::from_str(&text)
        .with_context(|| format!("invalid bridge spec {}", args.bridge.display()))?;
    let sentences = ingest(&args.input)?;
    let items: Vec<(u64, String)> = sentences.into_iter().map(|s| (s.id, s.text)).collect();
    let results = run_batch(&items, &spec)?;

    let mut ok_lines = String::new();
    let mut failed_lines = String::new();
    let mut failed_count = 0usize;
    for (id, outcome) in &results {
        match outcome {
            ItemOutcome::Text(text) => {
                ok_lines.push_str(&serde_json::to_string(
                    &serde_json::json!({"id": id, "text": text}),
                )?);
                ok_lines.push('\n');
            }
            ItemOutcome::Failed(error) => {
                failed_count += 1;
                failed_lines.push_str(&serde_json::to_string(
                    &serde_json::json!({"id": id, "error": error}),
                )?);
                failed_lines.push('\n');
            }
        }
    }
    std::fs::write(&args.output, ok_lines)
        .with_context(|| format!("cannot write {}", args.output.display()))?;
    let failed_path = args.failed.clone().unwrap_or_else(|| {
        let mut p = args.output.as_os_str().to_owned();
        p.push(".failed.jsonl");
        PathBuf::from(p)
    });
    std::fs::write(&failed_path, failed_lines)
        .with_context(|| format!("cannot write {}", failed_path.display()))?;
    eprintln!("{} items, {} failed", results.len(), failed_count);
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct PairStats {
    pairs: usize,
    distinct_sentences: usize,
    entities_by_class: std::collections::BTreeMap<EntityClass, u64>,
    diversity_factor: f64,
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let records = read_pair_file(&args.pairs)?;
    let mut entities_by_class = std::collections::BTreeMap::new();
    let mut sentences = std::collections::BTreeSet::new();
    for record in &records {
        sentences.insert(record.id);
        for alignment in &record.pair.alignments {
            *entities_by_class
                .entry(alignment.span.class)
                .or_insert(0u64) += 1;
        }
    }
    let stats = PairStats {
        pairs: records.len(),
        distinct_sentences: sentences.len(),
        entities_by_class,
        diversity_factor: diversity_factor(&records)?,
    };
    write_output(
        args.report.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&stats)?),
    )
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Augment(args) => cmd_augment(args),
        Command::Itn(args) => cmd_itn(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::BridgeRun(args) => cmd_bridge_run(args),
        Command::Stats(args) => cmd_stats(args),
    }
}
