//! `lexsub` command-line driver.
//!
//! Exit codes: 0 on success, 1 for bad inputs (files, flags, data), 2 for
//! internal errors.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lexsub::datasets::{self, DatasetManifest, WsiFlavor};
use lexsub::estimators::{Estimator, DEFAULT_WINDOW};
use lexsub::injection::{
    apply_pattern, zipf_rank_prior, BCombConfig, InjectionSettings, Pattern, Profile, Similarity, Task, Visibility,
    ZipfPriorConfig,
};
use lexsub::interchange::{self, DistributionIndex, EmbeddingTable, TopKRecord, Vocabulary, WordPrior};
use lexsub::metrics::{EvalMode, EvalReport};
use lexsub::par::Execution;
use lexsub::pipeline::{Injection, Pipeline, PipelineConfig};
use lexsub::postproc::{Lemmatizer, PostprocessOptions};
use lexsub::relations::{profile_gold, profile_predictions, RelationProfile, WordnetGraph};
use lexsub::wsi::{self, WsiInstance};

#[derive(Parser)]
#[command(name = "lexsub", version, about = "Lexical substitution with target-word injection")]
struct Cli {
    /// Run batch steps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw corpora into dataset JSONL.
    Dataset(DatasetArgs),
    /// Write the model inputs an external backend has to score.
    Transform(TransformArgs),
    /// Rank substitutes for every example.
    Rank(RankArgs),
    /// Score rankings against gold substitutes.
    Eval(EvalArgs),
    /// Induce senses from substitutes and score the clustering.
    Wsi(WsiArgs),
    /// Profile WordNet relations between targets and substitutes.
    Relations(RelationsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceFormat {
    Semeval2007,
    Coinco,
    Wsi,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long, value_enum)]
    format: SourceFormat,
    /// Corpus XML; repeat to merge several files (ids get a `stem.` prefix).
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Gold or key file, one per --input (not used for CoInCo).
    #[arg(long = "gold")]
    golds: Vec<PathBuf>,
    /// WSI key flavor.
    #[arg(long, default_value = "semeval2010")]
    flavor: String,
    /// Keep multi-word gold substitutes and examples left without gold.
    #[arg(long)]
    keep_multiword: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// none, masked, and, duplicate; repeat for several variants.
    #[arg(long = "pattern", default_value = "none")]
    patterns: Vec<String>,
    /// Token placed between the two copies of a duplicated input.
    #[arg(long)]
    separator: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Backend profile: bert, roberta, xlnet, elmo, c2v, stub, ooc, npic
    /// [default: the config file's profile, else bert].
    #[arg(long)]
    profile: Option<String>,
    /// none, embs, pattern-and, duplicate.
    #[arg(long, default_value = "embs")]
    injection: String,
    /// LSD1 distributions of the (left-context) model.
    #[arg(long)]
    distributions: Option<PathBuf>,
    /// LSD1 distributions of a right-context model, combined with the left ones.
    #[arg(long)]
    distributions_right: Option<PathBuf>,
    /// Vocabulary file shared by the interchange files.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Word embeddings (LSE1 or text).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Context embeddings for the nPIC baseline.
    #[arg(long)]
    context_embeddings: Option<PathBuf>,
    /// `word<TAB>probability` file, or `zipf` for a rank-based prior.
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// dot or cosine.
    #[arg(long)]
    similarity: Option<String>,
    /// original or masked.
    #[arg(long)]
    visibility: Option<String>,
    /// Context window of the stub and nPIC estimators.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// key=value or JSON file with injection settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// WordNet database directory for the lemmatizer.
    #[arg(long)]
    wordnet: Option<PathBuf>,
    #[arg(long)]
    no_lemmatization: bool,
    #[arg(long)]
    no_target_exclusion: bool,
    /// Leave out failing examples instead of stopping.
    #[arg(long)]
    skip_errors: bool,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    topk: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// candidates or all-vocab; repeat for both.
    #[arg(long = "mode", default_value = "candidates")]
    modes: Vec<String>,
    /// Name shown in the report; defaults to profile+injection.
    #[arg(long)]
    name: Option<String>,
    /// Output stem; writes <out>.tsv, <out>.json and <out>.instances.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WsiArgs {
    /// WSI instances JSONL from `lexsub dataset --format wsi`.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "semeval2010")]
    flavor: String,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RelationsArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    wordnet: Option<PathBuf>,
    /// Ranked JSONL from `lexsub rank`; repeat for several models.
    #[arg(long = "predictions")]
    predictions: Vec<PathBuf>,
    /// Substitutes per example taken from each prediction file.
    #[arg(long, default_value_t = 10)]
    topk: usize,
    /// Output stem; writes <out>.tsv and <out>.json.
    #[arg(long)]
    out: PathBuf,
}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    lexsub::Error::InvalidArgument(msg.into()).into()
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn exec(cli_sequential: bool) -> Execution {
    if cli_sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

// ---------------------------------------------------------------- dataset

fn cmd_dataset(args: &DatasetArgs) -> Result<()> {
    let needs_gold = !matches!(args.format, SourceFormat::Coinco);
    if needs_gold && args.golds.len() != args.inputs.len() {
        return Err(input_error(format!(
            "{} --input files but {} --gold files",
            args.inputs.len(),
            args.golds.len()
        )));
    }
    let prefix = |m: DatasetManifest, path: &Path| {
        if args.inputs.len() > 1 {
            m.with_id_prefix(&format!("{}.", file_stem(path)))
        } else {
            m
        }
    };
    if let SourceFormat::Wsi = args.format {
        let flavor: WsiFlavor = args.flavor.parse()?;
        let mut all: Vec<WsiInstance> = Vec::new();
        for (input, gold) in args.inputs.iter().zip(&args.golds) {
            let mut part = datasets::parse_wsi_dataset(input, gold, flavor)?;
            if args.inputs.len() > 1 {
                for inst in &mut part {
                    inst.id = format!("{}.{}", file_stem(input), inst.id);
                    inst.example.id = inst.id.clone();
                }
            }
            all.extend(part);
        }
        interchange::write_jsonl(&args.out, &all)?;
        log::info!("wrote {} WSI instances to {}", all.len(), args.out.display());
        return Ok(());
    }
    let mut parts = Vec::new();
    for (i, input) in args.inputs.iter().enumerate() {
        let m = match args.format {
            SourceFormat::Semeval2007 => datasets::parse_semeval2007(input, &args.golds[i])?,
            SourceFormat::Coinco => datasets::parse_coinco(input)?,
            SourceFormat::Wsi => unreachable!(),
        };
        parts.push(prefix(m, input));
    }
    let mut manifest = DatasetManifest::merge(file_stem(&args.out), parts)?;
    if !args.keep_multiword {
        let dropped = manifest.filter_gold();
        log::info!("dropped {dropped} examples without single-word gold");
    }
    manifest.write_jsonl(&args.out)?;
    log::info!(
        "wrote {} examples over {} target words to {}",
        manifest.examples.len(),
        manifest.target_lemmas().len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- transform

fn cmd_transform(args: &TransformArgs) -> Result<()> {
    let manifest = DatasetManifest::read_jsonl(&args.dataset)?;
    let patterns: Vec<Pattern> = args.patterns.iter().map(|p| p.parse()).collect::<lexsub::Result<_>>()?;
    let mut out = Vec::with_capacity(manifest.examples.len() * patterns.len());
    for ex in &manifest.examples {
        for &p in &patterns {
            out.push(apply_pattern(ex, p, args.separator.as_deref()));
        }
    }
    interchange::write_jsonl(&args.out, &out)?;
    Ok(())
}

// ---------------------------------------------------------------- model setup

struct Model {
    pipeline: Pipeline,
    label: String,
}

fn load_lemmatizer(dir: Option<&Path>) -> Result<Lemmatizer> {
    match dir {
        Some(d) => Ok(Lemmatizer::load(d)?),
        None => {
            let d = lexsub::default_wordnet_dir();
            if d.is_dir() {
                Ok(Lemmatizer::load(&d)?)
            } else {
                log::warn!("no WordNet directory at {}; substitutes are only lowercased", d.display());
                Ok(Lemmatizer::identity())
            }
        }
    }
}

fn build_model(args: &ModelArgs, task: Task) -> Result<Model> {
    let settings = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            InjectionSettings::parse(&text)?
        }
        None => InjectionSettings::default(),
    };
    let profile: Profile = match &args.profile {
        Some(p) => p.parse()?,
        None => settings.profile.unwrap_or(Profile::Bert),
    };
    let mut defaults = settings.resolve(profile, task);
    if let Some(t) = args.temperature {
        defaults.fusion.temperature = t;
    }
    if let Some(b) = args.beta {
        defaults.fusion.beta = b;
    }
    if let Some(s) = &args.similarity {
        defaults.fusion.similarity = s.parse::<Similarity>()?;
    }
    if let Some(v) = &args.visibility {
        defaults.fusion.target_visibility = v.parse::<Visibility>()?;
    }
    if let Some(g) = args.gamma {
        defaults.bcomb = Some(BCombConfig { gamma: g });
    }
    let injection: Injection = args.injection.parse()?;

    let vocab = match &args.vocab {
        Some(p) => Some(Arc::new(Vocabulary::read(p)?)),
        None => None,
    };
    let embeddings = match &args.embeddings {
        Some(p) => Some(Arc::new(EmbeddingTable::read_auto(p, vocab.clone())?)),
        None => None,
    };
    let need_vocab = || {
        vocab
            .clone()
            .ok_or_else(|| input_error("--vocab is required with --distributions"))
    };
    let need_emb = |what: &str| {
        embeddings
            .clone()
            .ok_or_else(|| input_error(format!("--embeddings is required for {what}")))
    };

    let estimator = match profile {
        Profile::Stub => Estimator::Stub {
            emb: need_emb("the stub estimator")?,
            window: args.window,
        },
        Profile::Ooc => Estimator::Ooc {
            emb: need_emb("the OOC baseline")?,
        },
        Profile::Npic => {
            let words = need_emb("the nPIC baseline")?;
            let path = args
                .context_embeddings
                .as_ref()
                .ok_or_else(|| input_error("--context-embeddings is required for the nPIC baseline"))?;
            let contexts = Arc::new(EmbeddingTable::read_auto(path, vocab.clone())?);
            Estimator::Npic {
                words,
                contexts,
                window: args.window,
            }
        }
        _ => {
            let path = args
                .distributions
                .as_ref()
                .ok_or_else(|| input_error(format!("--distributions is required for the {profile} profile")))?;
            Estimator::File(DistributionIndex::open(path, need_vocab()?)?)
        }
    };
    let right = match &args.distributions_right {
        Some(path) => Some(Estimator::File(DistributionIndex::open(path, need_vocab()?)?)),
        None => None,
    };
    let prior_spec = args.prior.clone().or(settings.prior.clone());
    let mut prior = match prior_spec.as_deref() {
        None => WordPrior::flat(),
        Some("zipf") => zipf_rank_prior(estimator.vocab(), &ZipfPriorConfig::default())?,
        Some(path) => WordPrior::read(path)?,
    };
    if let Some(floor) = settings.prior_floor {
        prior = prior.with_floor(floor)?;
    }
    if prior_spec.is_none() && (defaults.fusion.beta > 0.0 || defaults.bcomb.is_some_and(|b| b.gamma > 0.0)) {
        log::warn!("no --prior given; the prior penalty has no effect");
    }
    let lemmatizer = if args.no_lemmatization && args.no_target_exclusion {
        Lemmatizer::identity()
    } else {
        load_lemmatizer(args.wordnet.as_deref())?
    };
    let pipeline = Pipeline {
        estimator,
        right,
        target_embeddings: embeddings,
        prior,
        lemmatizer: Arc::new(lemmatizer),
        config: PipelineConfig {
            injection,
            fusion: defaults.fusion,
            bcomb: defaults.bcomb,
            postproc: PostprocessOptions {
                lemmatize: !args.no_lemmatization,
                exclude_target: !args.no_target_exclusion,
            },
        },
    };
    pipeline.validate()?;
    let label = match injection {
        Injection::None => profile.name().to_string(),
        Injection::Embs => format!("{profile}+embs"),
        Injection::PatternAnd => format!("{profile}+and"),
        Injection::Duplicate => format!("{profile}+duplicate"),
    };
    Ok(Model { pipeline, label })
}

// ---------------------------------------------------------------- rank / eval

fn cmd_rank(args: &RankArgs, exec: Execution) -> Result<()> {
    let manifest = DatasetManifest::read_jsonl(&args.dataset)?;
    let model = build_model(&args.model, Task::Lexsub)?;
    let results = model.pipeline.rank_all(&manifest.examples, args.topk, exec);
    let mut records = Vec::with_capacity(results.len());
    for (ex, r) in manifest.examples.iter().zip(results) {
        match r {
            Ok(ranked) => records.push(ranked.to_record(&ex.id)),
            Err(e) if args.model.skip_errors => log::warn!("skipping: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    interchange::write_jsonl(&args.out, &records)?;
    log::info!("ranked {} of {} examples", records.len(), manifest.examples.len());
    Ok(())
}

fn cmd_eval(args: &EvalArgs, exec: Execution) -> Result<()> {
    let manifest = DatasetManifest::read_jsonl(&args.dataset)?;
    let model = build_model(&args.model, Task::Lexsub)?;
    let name = args.name.clone().unwrap_or(model.label.clone());
    let mut reports = Vec::new();
    let mut instances = Vec::new();
    for mode in &args.modes {
        let mode: EvalMode = mode.parse()?;
        let (report, scores) = model.pipeline.evaluate(&manifest, &name, mode, args.model.skip_errors, exec)?;
        reports.push(report);
        instances.extend(scores);
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    EvalReport::write(&reports, &args.out)?;
    interchange::write_jsonl(with_ext(&args.out, "instances.jsonl"), &instances)?;
    print!("{}", EvalReport::to_tsv(&reports));
    Ok(())
}

// ---------------------------------------------------------------- WSI

fn cmd_wsi(args: &WsiArgs, exec: Execution) -> Result<()> {
    let instances: Vec<WsiInstance> = interchange::read_jsonl(&args.dataset)?;
    for inst in &instances {
        inst.example.validate()?;
    }
    let flavor: WsiFlavor = args.flavor.parse()?;
    let k_range = match (args.k_min, args.k_max) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(2), hi.unwrap_or(8))),
    };
    let model = build_model(&args.model, Task::Wsi)?;
    let docs = model.pipeline.wsi_documents(&instances, exec)?;
    let clusterings = wsi::cluster_all(&instances, &docs, k_range, exec)?;
    let report = wsi::evaluate(&instances, &clusterings, flavor)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    wsi::write_assignments(args.out.join("assignments.tsv"), &clusterings)?;
    let tsv = wsi_report_tsv(&model.label, &report);
    write_text(&args.out.join("report.tsv"), &tsv)?;
    write_json(&args.out.join("report.json"), &report)?;
    print!("{tsv}");
    Ok(())
}

fn wsi_report_tsv(model: &str, r: &wsi::WsiReport) -> String {
    let (a, b) = match r.flavor {
        WsiFlavor::SemEval2010 => ("V-measure", "paired-F"),
        WsiFlavor::SemEval2013 => ("NMI", "B-cubed-F"),
    };
    let (x, y) = wsi::headline_pair(r.flavor, &r.mean);
    let mut out = format!("model\tlemmas\t{a}\t{b}\tAVG\n");
    out += &format!(
        "{model}\t{}\t{:.2}\t{:.2}\t{:.2}\n",
        r.lemmas.len(),
        100.0 * x,
        100.0 * y,
        100.0 * r.avg
    );
    out
}

// ---------------------------------------------------------------- relations

fn cmd_relations(args: &RelationsArgs) -> Result<()> {
    let manifest = DatasetManifest::read_jsonl(&args.dataset)?;
    let dir = args.wordnet.clone().unwrap_or_else(lexsub::default_wordnet_dir);
    let graph = WordnetGraph::load(&dir)?;
    let mut profiles = vec![profile_gold(&graph, &manifest)];
    for path in &args.predictions {
        let records: Vec<TopKRecord> = interchange::read_jsonl(path)?;
        let by_id: HashMap<String, Vec<String>> = records
            .iter()
            .map(|r| (r.id.clone(), r.ranked().words().map(str::to_string).collect()))
            .collect();
        profiles.push(profile_predictions(&graph, &manifest, &file_stem(path), &by_id, args.topk)?);
    }
    let tsv = RelationProfile::to_tsv(&profiles);
    write_text(&with_ext(&args.out, "tsv"), &tsv)?;
    write_json(&with_ext(&args.out, "json"), &profiles)?;
    print!("{tsv}");
    Ok(())
}

// ---------------------------------------------------------------- main

/// Library, I/O and JSON errors all come from the inputs; anything else is
/// a bug.
fn exit_code(err: &anyhow::Error) -> u8 {
    let from_input = err.chain().any(|cause| {
        cause.is::<lexsub::Error>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>()
    });
    if from_input {
        1
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    let exec = exec(cli.sequential);
    match &cli.command {
        Command::Dataset(a) => cmd_dataset(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Rank(a) => cmd_rank(a, exec),
        Command::Eval(a) => cmd_eval(a, exec),
        Command::Wsi(a) => cmd_wsi(a, exec),
        Command::Relations(a) => {
            if a.topk == 0 {
                return Err(input_error("--topk must be at least 1"));
            }
            cmd_relations(a)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(2),
    }
}
