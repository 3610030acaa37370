//! `uslt`: command-line front end for building resources, simplifying
//! legal sentences, scoring outputs, tuning ranking weights and running
//! chunked benchmarks.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 resource load failure,
//! 3 provider failure.

use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use uslt_core::benchmark::{self, run_benchmark, ChunkPlan, Identity, Pipeline, Simplifier};
use uslt_core::candidates::{FixtureProvider, MaskedLmProvider};
use uslt_core::config::{KeyValues, ResourcePaths, Settings};
use uslt_core::cwi::build_complex_lexicon;
use uslt_core::embeddings::Embeddings;
use uslt_core::frequency::{build_zipf_table, ingest_corpus, read_corpus_dir, ZipfTable};
use uslt_core::metrics::{DcForm, FamiliarWordList, ReadabilityReport};
use uslt_core::optimize::{optimize_weights, SearchDomain};
use uslt_core::pipeline::{simplify_batch, weight_objective, Resources};
use uslt_core::ranking::RankingWeights;
use uslt_core::stats::mean;
use uslt_core::text::split_sentences;
use uslt_core::Error;

const PROVIDER_ENV: &str = "USLT_PROVIDER_URL";

#[derive(Parser)]
#[command(
    name = "uslt",
    version,
    about = "Unsupervised simplification of legal text"
)]
struct Cli {
    /// Key-value configuration file; relative paths resolve against its directory.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override any configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count word frequencies of a plain-text corpus.
    BuildFreq(BuildFreq),
    /// Build the complex-word lexicon from two Zipf tables and a phrase list.
    BuildLexicon(BuildLexicon),
    /// Simplify sentences, one per input line.
    Simplify(SimplifyArgs),
    /// Score outputs against their originals (FKGL, DC, SD).
    Eval(EvalArgs),
    /// Search ranking weights that minimize the harmonic-mean objective.
    OptimizeWeights(OptimizeArgs),
    /// Chunked benchmark with optional significance tests against another system.
    Benchmark(BenchmarkArgs),
    /// Split running text into one sentence per line.
    Segment(SegmentArgs),
}

#[derive(Args)]
struct BuildFreq {
    /// Directory of UTF-8 text files.
    #[arg(long)]
    input: PathBuf,
    /// Frequency table (`word<TAB>count`).
    #[arg(long)]
    output: PathBuf,
    /// Treat every line as a separate document.
    #[arg(long)]
    per_line: bool,
    /// Also write the Zipf table of the corpus.
    #[arg(long, value_name = "FILE")]
    zipf: Option<PathBuf>,
    /// Label stored in the Zipf table header.
    #[arg(long, default_value = "corpus")]
    label: String,
}

#[derive(Args)]
struct BuildLexicon {
    #[arg(long, value_name = "FILE")]
    general: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    legal: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    phrases: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ProviderArgs {
    /// Inference sidecar base URL.
    #[arg(long, value_name = "URL")]
    provider_url: Option<String>,
    /// Directory of recorded fixtures used instead of the sidecar.
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    /// Ranking weights file (`w_b=3.00` ...).
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// Disable sentence splitting.
    #[arg(long)]
    no_split: bool,
    /// Disable lexical simplification.
    #[arg(long)]
    no_ls: bool,
    /// Drop ranking features, comma separated (b, c, lm, f, l).
    #[arg(long, value_name = "LIST")]
    ablate: Option<String>,
}

#[derive(Args)]
struct SimplifyArgs {
    /// Sentence-per-line input; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write one JSON record per sentence instead of plain text.
    #[arg(long)]
    batch: bool,
    #[command(flatten)]
    pipeline: ProviderArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Original texts, one unit per line.
    #[arg(long)]
    original: PathBuf,
    /// System outputs aligned with `--original`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    familiar: Option<PathBuf>,
    /// JSON report; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Use the literal ratio form of the difficult-word term.
    #[arg(long)]
    dc_ratio_form: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Validation sentences, one per line.
    #[arg(long)]
    validation: PathBuf,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Best weights, written as a weights file.
    #[arg(long)]
    out: PathBuf,
    /// One JSON object per evaluation.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    pipeline: ProviderArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Sentences, one per line.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    chunks: usize,
    #[arg(long, default_value_t = 50)]
    chunk_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score the unchanged input instead of the pipeline.
    #[arg(long)]
    identity: bool,
    /// Another system's outputs, aligned with the dataset, as NAME=FILE.
    #[arg(long, value_name = "NAME=FILE")]
    compare: Option<String>,
    /// JSON report; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    pipeline: ProviderArgs,
}

#[derive(Args)]
struct SegmentArgs {
    /// Standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Provider(_) => 3,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::EmptyTable
            | Error::NoEmbeddings(_)
            | Error::Json(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("uslt: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut kv = match &cli.config {
        Some(path) => KeyValues::load(path).map_err(|e| match e {
            Error::Parse { .. } => Failure::usage(e.to_string()),
            other => other.into(),
        })?,
        None => KeyValues::new(),
    };
    if let Ok(url) = std::env::var(PROVIDER_ENV) {
        if !url.is_empty() {
            kv.set("provider_url", url)?;
        }
    }
    for pair in &cli.overrides {
        kv.set_pair(pair)?;
    }
    match cli.command {
        Command::BuildFreq(a) => build_freq(a),
        Command::BuildLexicon(a) => build_lexicon(a, kv),
        Command::Simplify(a) => simplify(a, kv),
        Command::Eval(a) => eval(a, kv),
        Command::OptimizeWeights(a) => optimize(a, kv),
        Command::Benchmark(a) => bench(a, kv),
        Command::Segment(a) => segment(a),
    }
}

fn set_path(kv: &mut KeyValues, key: &str, path: &Option<PathBuf>) -> Outcome {
    if let Some(p) = path {
        kv.set(key, p.to_string_lossy())?;
    }
    Ok(())
}

fn apply_pipeline_flags(kv: &mut KeyValues, a: &ProviderArgs) -> Outcome {
    if let Some(url) = &a.provider_url {
        kv.set("provider_url", url.as_str())?;
    }
    set_path(kv, "fixture_dir", &a.fixtures)?;
    set_path(kv, "weights", &a.weights)?;
    if a.no_split {
        kv.set("split_enabled", "false")?;
    }
    if a.no_ls {
        kv.set("ls_enabled", "false")?;
    }
    if let Some(list) = &a.ablate {
        kv.set("ablate", list.as_str())?;
    }
    Ok(())
}

struct Loaded {
    settings: Settings,
    resources: Resources,
    provider: Box<dyn MaskedLmProvider>,
}

fn load_pipeline(kv: &KeyValues) -> Outcome<Loaded> {
    let settings = Settings::from_key_values(kv)?;
    settings.pipeline.validate()?;
    let resources = Resources::load(&settings.paths, &settings.cwi)?;
    let provider: Box<dyn MaskedLmProvider> = match &settings.provider {
        Some(spec) => spec.open()?,
        None if settings.pipeline.ls_enabled => {
            return Err(Failure::usage(format!(
                "no provider: set provider_url, fixture_dir or {PROVIDER_ENV}"
            )))
        }
        None => Box::new(FixtureProvider::new()),
    };
    Ok(Loaded {
        settings,
        resources,
        provider,
    })
}

fn read_lines(input: &Option<PathBuf>) -> Outcome<Vec<String>> {
    match input {
        Some(path) => Ok(benchmark::read_dataset(path)?),
        None => {
            let stdin = std::io::stdin();
            let mut lines = Vec::new();
            for line in stdin.lock().lines() {
                let line = line.map_err(|e| Failure::usage(format!("standard input: {e}")))?;
                let line = line.trim();
                if !line.is_empty() {
                    lines.push(line.to_string());
                }
            }
            Ok(lines)
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(
            |e| Failure::usage(format!("cannot create {}: {e}", p.display())),
        )?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_err(e: std::io::Error) -> Failure {
    Failure::usage(format!("write failed: {e}"))
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>) -> Outcome {
    let json = serde_json::to_string_pretty(value).map_err(Error::from)?;
    let mut out = open_output(path)?;
    writeln!(out, "{json}").map_err(write_err)?;
    out.flush().map_err(write_err)
}

fn build_freq(a: BuildFreq) -> Outcome {
    let docs = read_corpus_dir(&a.input, a.per_line)?;
    let table = ingest_corpus(&docs);
    if table.is_empty() {
        return Err(Error::EmptyTable.into());
    }
    table.write_tsv(&a.output)?;
    if let Some(path) = &a.zipf {
        build_zipf_table(&table, &a.label)?.write_tsv(path)?;
    }
    log::info!("{} types, {} tokens", table.len(), table.total_tokens());
    Ok(())
}

fn build_lexicon(a: BuildLexicon, mut kv: KeyValues) -> Outcome {
    set_path(&mut kv, "general_zipf", &a.general)?;
    set_path(&mut kv, "legal_zipf", &a.legal)?;
    set_path(&mut kv, "phrases", &a.phrases)?;
    let settings = Settings::from_key_values(&kv)?;
    let general = ZipfTable::read_tsv(ResourcePaths::require(
        &settings.paths.general_zipf,
        "general_zipf",
    )?)?;
    let legal = ZipfTable::read_tsv(ResourcePaths::require(
        &settings.paths.legal_zipf,
        "legal_zipf",
    )?)?;
    let lexicon = build_complex_lexicon(
        &general,
        &legal,
        settings.paths.phrases.as_deref(),
        &settings.cwi,
    )?;
    lexicon.write_tsv(&a.out)?;
    log::info!("{} lexicon entries", lexicon.len());
    Ok(())
}

fn simplify(a: SimplifyArgs, mut kv: KeyValues) -> Outcome {
    apply_pipeline_flags(&mut kv, &a.pipeline)?;
    let loaded = load_pipeline(&kv)?;
    let sentences = read_lines(&a.input)?;
    let results = simplify_batch(
        &sentences,
        &loaded.settings.pipeline,
        &loaded.resources,
        &loaded.provider,
    );
    let mut out = open_output(&a.output)?;
    let mut first_error = None;
    for result in results {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                log::error!("{e}");
                let record = *e.partial;
                first_error.get_or_insert(e.source);
                record
            }
        };
        let line = if a.batch {
            serde_json::to_string(&record).map_err(Error::from)?
        } else if record.final_sentences.is_empty() {
            record.original.clone()
        } else {
            record.output()
        };
        writeln!(out, "{line}").map_err(write_err)?;
    }
    out.flush().map_err(write_err)?;
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct EvalMeans {
    fkgl: f64,
    dc: f64,
    sd: f64,
}

#[derive(Serialize)]
struct EvalReport {
    pairs: Vec<ReadabilityReport>,
    mean: EvalMeans,
}

fn eval(a: EvalArgs, mut kv: KeyValues) -> Outcome {
    set_path(&mut kv, "embeddings", &a.embeddings)?;
    set_path(&mut kv, "familiar", &a.familiar)?;
    if a.dc_ratio_form {
        kv.set("dc_form", "ratio")?;
    }
    let settings = Settings::from_key_values(&kv)?;
    let emb = Embeddings::load(ResourcePaths::require(
        &settings.paths.embeddings,
        "embeddings",
    )?)?;
    let familiar = FamiliarWordList::load(ResourcePaths::require(
        &settings.paths.familiar,
        "familiar",
    )?)?;
    let originals = benchmark::read_dataset(&a.original)?;
    let outputs = benchmark::read_dataset(&a.output)?;
    if originals.len() != outputs.len() {
        return Err(Failure::usage(format!(
            "{} original lines but {} output lines",
            originals.len(),
            outputs.len()
        )));
    }
    if originals.is_empty() {
        return Err(Error::EmptyText.into());
    }
    let form: DcForm = settings.pipeline.dc_form;
    let pairs = originals
        .iter()
        .zip(&outputs)
        .enumerate()
        .map(|(i, (o, t))| {
            ReadabilityReport::evaluate(o, t, &emb, &familiar, form)
                .map_err(|e| Failure::usage(format!("line {}: {e}", i + 1)))
        })
        .collect::<Outcome<Vec<_>>>()?;
    let column = |f: fn(&ReadabilityReport) -> f64| mean(&pairs.iter().map(f).collect::<Vec<_>>());
    let report = EvalReport {
        mean: EvalMeans {
            fkgl: column(|r| r.fkgl),
            dc: column(|r| r.dc),
            sd: column(|r| r.sd),
        },
        pairs,
    };
    write_json(&report, &a.report)
}

fn optimize(a: OptimizeArgs, mut kv: KeyValues) -> Outcome {
    apply_pipeline_flags(&mut kv, &a.pipeline)?;
    let loaded = load_pipeline(&kv)?;
    let validation = benchmark::read_dataset(&a.validation)?;
    let config = &loaded.settings.pipeline;
    // fail fast on an unreachable provider or unusable validation set
    weight_objective(
        config.weights,
        &validation,
        config,
        &loaded.resources,
        &loaded.provider,
    )?;
    let objective = |w: &[f64]| {
        let weights = RankingWeights::from_array([w[0], w[1], w[2], w[3], w[4]]);
        weight_objective(
            weights,
            &validation,
            config,
            &loaded.resources,
            &loaded.provider,
        )
    };
    let trace = optimize_weights(objective, &SearchDomain::default(), a.budget, a.seed)?;
    if let Some(path) = &a.trace {
        trace.write_jsonl(path)?;
    }
    let best = trace.best();
    if !best.value.is_finite() {
        return Err(Failure::usage("every evaluation failed"));
    }
    let p = &best.point;
    let weights = RankingWeights::from_array([p[0], p[1], p[2], p[3], p[4]]);
    std::fs::write(&a.out, weights.to_config_string())
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", a.out.display())))?;
    log::info!(
        "best objective {} at iteration {}",
        best.value,
        best.iteration
    );
    Ok(())
}

fn bench(a: BenchmarkArgs, mut kv: KeyValues) -> Outcome {
    apply_pipeline_flags(&mut kv, &a.pipeline)?;
    if a.identity {
        kv.set("ls_enabled", "false")?;
    }
    let loaded = load_pipeline(&kv)?;
    let dataset = benchmark::read_dataset(&a.dataset)?;
    let comparison = match &a.compare {
        Some(spec) => {
            let (name, file) = spec.split_once('=').ok_or_else(|| {
                Failure::usage(format!("--compare expects NAME=FILE, got {spec:?}"))
            })?;
            Some((name.to_string(), benchmark::read_dataset(Path::new(file))?))
        }
        None => None,
    };
    let pipeline = Pipeline {
        config: &loaded.settings.pipeline,
        resources: &loaded.resources,
        provider: &loaded.provider,
    };
    let system: &dyn Simplifier = if a.identity { &Identity } else { &pipeline };
    let plan = ChunkPlan {
        chunks: a.chunks,
        chunk_size: a.chunk_size,
        seed: a.seed,
    };
    let report = run_benchmark(
        &dataset,
        system,
        &loaded.resources,
        loaded.settings.pipeline.dc_form,
        plan,
        comparison.as_ref().map(|(n, o)| (n.as_str(), o.as_slice())),
    )?;
    write_json(&report, &a.report)
}

fn segment(a: SegmentArgs) -> Outcome {
    let text = match &a.input {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::usage(format!("standard input: {e}")))?;
            s
        }
    };
    let mut out = open_output(&a.output)?;
    for paragraph in text.split("\n\n") {
        let joined = paragraph.split_whitespace().collect::<Vec<_>>().join(" ");
        for sentence in split_sentences(&joined) {
            writeln!(out, "{sentence}").map_err(write_err)?;
        }
    }
    out.flush().map_err(write_err)
}
