mod convert;
mod manifest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use hetrec_core::baselines::{most_popular, ubknn_recommend, InteractionView};
use hetrec_core::eval::{
    dataset_stats, optimize_weights, prepare_split, run_experiment, Dataset, ExperimentConfig, ExperimentRun,
    SampleSpec,
};
use hetrec_core::io::{read_weights, to_json_pretty, undirected_weights_document, weights_document, write_records};
use hetrec_core::{
    build_graph, Error, ErrorClass, FilterRule, GraphRecommender, RankedList, RecommendMode, RecommendationRequest,
    SolverConfig, WeightVector,
};

use manifest::{sha256_bytes, RunManifest};

#[derive(Parser)]
#[command(name = "hetrec", version, about = "Recommendation over heterogeneous interaction graphs")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dataset statistics per interaction type.
    Stats(StatsArgs),
    /// Learn edge weights with the genetic algorithm.
    Optimize(OptimizeArgs),
    /// Compare the configured models on the test split.
    Evaluate(EvaluateArgs),
    /// Produce ranked recommendations for one or more users.
    Recommend(RecommendArgs),
    /// Turn a raw export into the canonical interaction log.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Direct,
    Neighbors,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    /// Graph variants differ only in the weight file passed.
    #[value(aliases = ["graph-uniform", "graph-weighted", "graph-undirected", "graph-userstudy"])]
    Graph,
    Popular,
    Ubknn,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    /// Experiment config; its dataset, schema and split are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    dataset: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    schema: Option<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    #[serde(skip)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of GA runs (seeds 0..N); their best genomes are averaged.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: Option<u64>,
    /// One weight per interaction, shared by both directions.
    #[arg(long)]
    undirected: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Only evaluate the named models (repeatable).
    #[arg(long)]
    model: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    neighbors: Option<u64>,
    /// Evaluate on random subsamples of the training records.
    #[arg(long)]
    sample_fraction: Option<f64>,
    /// Number of subsamples (seeds 0..N).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    sample_seeds: u64,
    #[arg(long)]
    #[serde(skip)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct RecommendArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Edge weight file; uniform weights when absent.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, required_unless_present = "users_file", conflicts_with = "users_file")]
    user: Option<String>,
    /// One user id per line.
    #[arg(long)]
    users_file: Option<PathBuf>,
    #[arg(long)]
    target_tag: String,
    #[arg(long, value_enum, default_value_t = ModelArg::Graph)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Direct)]
    mode: ModeArg,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    neighbors: u64,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Drop items the user already interacted with.
    #[arg(long)]
    exclude_interacted: bool,
    /// Serve the popularity list to users missing from the graph.
    #[arg(long)]
    fallback_popular: bool,
    /// Write recommendations.csv and a manifest here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ConvertArgs {
    /// Column mapping document.
    #[arg(long)]
    mapping: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Check every converted record against this schema.
    #[arg(long)]
    schema: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err.class() {
                ErrorClass::Config => 1,
                ErrorClass::Data => 2,
                ErrorClass::Runtime => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    3
}

fn run(command: Command) -> Result<()> {
    configure_threads()?;
    match command {
        Command::Stats(args) => stats(&args),
        Command::Optimize(args) => optimize(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Recommend(args) => recommend(&args),
        Command::Convert(args) => convert_cmd(&args),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HETREC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HETREC_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring thread pool")?;
    Ok(())
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok((cfg, bytes))
}

/// Config bytes followed by the command-line overrides, so the manifest hash
/// changes whenever either does.
fn config_fingerprint<T: Serialize>(config: &[u8], args: &T) -> Result<Vec<u8>> {
    let mut out = config.to_vec();
    out.extend(serde_json::to_vec(args)?);
    Ok(out)
}

fn stats(args: &StatsArgs) -> Result<()> {
    let (cfg, fingerprint) = match &args.config {
        Some(path) => {
            let (cfg, bytes) = load_config(path)?;
            (Some(cfg), config_fingerprint(&bytes, args)?)
        }
        None => (None, serde_json::to_vec(args)?),
    };
    let (dataset, schema) = match &cfg {
        Some(c) => (c.dataset.clone(), c.schema.clone()),
        None => (args.dataset.clone().unwrap(), args.schema.clone().unwrap()),
    };
    let mut manifest = RunManifest::new("stats", &fingerprint);
    let data = manifest.timed("load", || Dataset::load(&dataset, &schema))?;

    let mut sections = BTreeMap::new();
    sections.insert("all", dataset_stats(&data.records, &data.registry)?);
    let mut notes = String::new();
    if let Some(cfg) = &cfg {
        let split = manifest.timed("split", || prepare_split(cfg, &data))?;
        sections.insert("train", dataset_stats(&split.train, &data.registry)?);
        let _ = writeln!(
            notes,
            "validation cases {}  test cases {}",
            split.validation.len(),
            split.test.len()
        );
    }

    let rendered = if args.json {
        to_json_pretty(&sections)?
    } else {
        let mut out = String::new();
        for (name, s) in &sections {
            let _ = writeln!(out, "== {name} ==\n{}", s.table());
        }
        out + &notes
    };
    print!("{rendered}");

    if let Some(dir) = &args.out_dir {
        manifest.input("dataset", &dataset)?;
        manifest.input("schema", &schema)?;
        manifest.emit(dir, "stats.json", to_json_pretty(&sections)?.as_bytes())?;
        manifest.write(dir)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    best_fitness: f64,
    generations: usize,
    stopped_by: String,
    genes: Vec<f64>,
}

#[derive(Serialize)]
struct OptimizeSummary {
    labels: Vec<String>,
    averaged: Vec<f64>,
    validation_cases: usize,
    best_fitness: Spread,
    runs: Vec<SeedSummary>,
}

fn optimize(args: &OptimizeArgs) -> Result<()> {
    let (mut cfg, bytes) = load_config(&args.config)?;
    if let Some(n) = args.seeds {
        cfg.seeds = (0..n).collect();
    }
    if args.undirected {
        cfg.undirected = true;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    cfg.validate()?;

    let mut manifest = RunManifest::new("optimize", &config_fingerprint(&bytes, args)?);
    manifest.seeds = cfg.seeds.clone();
    manifest.input("dataset", &cfg.dataset)?;
    manifest.input("schema", &cfg.schema)?;
    let data = manifest.timed("load", || Dataset::load(&cfg.dataset, &cfg.schema))?;
    let split = manifest.timed("split", || prepare_split(&cfg, &data))?;
    log::info!(
        "optimizing {} seeds on {} validation cases",
        cfg.seeds.len(),
        split.validation.len()
    );
    let run = manifest.timed("evolve", || optimize_weights(&cfg, &data, &split))?;

    let doc = if cfg.undirected {
        undirected_weights_document(&run.weights)
    } else {
        weights_document(&run.weights)
    };
    let dir = &args.out_dir;
    manifest.emit(dir, "weights.json", to_json_pretty(&doc)?.as_bytes())?;
    if run.runs.len() == 1 {
        manifest.emit(dir, "history.csv", hetrec_core::eval::history_csv(&run.runs[0]).as_bytes())?;
    } else {
        for r in &run.runs {
            let name = format!("seed-{}/history.csv", r.seed);
            manifest.emit(dir, &name, hetrec_core::eval::history_csv(r).as_bytes())?;
        }
    }
    let summary = OptimizeSummary {
        labels: run.labels.clone(),
        averaged: run.averaged.clone(),
        validation_cases: run.validation_cases,
        best_fitness: spread(&run.runs.iter().map(|r| r.best_fitness).collect::<Vec<_>>()),
        runs: run
            .runs
            .iter()
            .map(|r| SeedSummary {
                seed: r.seed,
                best_fitness: r.best_fitness,
                generations: r.history.len(),
                stopped_by: format!("{:?}", r.stopped_by),
                genes: r.best.0.clone(),
            })
            .collect(),
    };
    manifest.emit(dir, "optimization.json", to_json_pretty(&summary)?.as_bytes())?;
    manifest.write(dir)?;

    for r in &summary.runs {
        println!("seed {:>3}  best fitness {:.4}  generations {}", r.seed, r.best_fitness, r.generations);
    }
    if summary.runs.len() > 1 {
        println!("best fitness mean {:.4}  std {:.4}", summary.best_fitness.mean, summary.best_fitness.std);
    }
    println!("weights written to {}", dir.join("weights.json").display());
    Ok(())
}

fn print_run(run: &ExperimentRun, cutoffs: &[usize]) {
    let mut header = format!("{:<20} {:>6} {:>6}", "model", "users", "cold");
    for k in cutoffs {
        let _ = write!(header, " {:>8} {:>8}", format!("MRR@{k}"), format!("HR@{k}"));
    }
    println!("{header}");
    for m in &run.models {
        let mut line = format!("{:<20} {:>6} {:>6}", m.model, m.evaluated, m.fallbacks);
        for &k in cutoffs {
            let _ = write!(line, " {:>8.4} {:>8.4}", m.mrr(k).unwrap_or(f64::NAN), m.hr(k).unwrap_or(f64::NAN));
        }
        println!("{line}");
    }
}

#[derive(Serialize, Default)]
struct Spread {
    mean: f64,
    std: f64,
}

fn spread(values: &[f64]) -> Spread {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Spread { mean, std }
}

#[derive(Serialize)]
struct CutoffSpread {
    mrr: Spread,
    hr: Spread,
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let (mut cfg, bytes) = load_config(&args.config)?;
    if !args.model.is_empty() {
        for name in &args.model {
            if !cfg.models.iter().any(|m| m.name() == name) {
                return Err(Error::Config(format!("no model named `{name}` in the config")).into());
            }
        }
        cfg.models.retain(|m| args.model.iter().any(|n| n == m.name()));
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    match (args.mode, args.neighbors) {
        (Some(ModeArg::Direct), _) => cfg.mode = RecommendMode::Direct,
        (Some(ModeArg::Neighbors), n) => {
            let count = n.map(|n| n as usize).or(match cfg.mode {
                RecommendMode::Neighbors { count } => Some(count),
                RecommendMode::Direct => None,
            });
            let Some(count) = count else {
                return Err(Error::Config("--mode neighbors needs --neighbors".into()).into());
            };
            cfg.mode = RecommendMode::Neighbors { count };
        }
        (None, Some(n)) => cfg.mode = RecommendMode::Neighbors { count: n as usize },
        (None, None) => {}
    }
    let samples: Vec<Option<SampleSpec>> = match args.sample_fraction {
        Some(fraction) => (0..args.sample_seeds).map(|seed| Some(SampleSpec { fraction, seed })).collect(),
        None if args.sample_seeds > 1 => bail!(Error::Config("--sample-seeds needs --sample-fraction".into())),
        None => vec![cfg.sample],
    };
    for s in samples.iter().flatten() {
        cfg.sample = Some(*s);
        cfg.validate()?;
    }

    let mut manifest = RunManifest::new("evaluate", &config_fingerprint(&bytes, args)?);
    manifest.input("dataset", &cfg.dataset)?;
    manifest.input("schema", &cfg.schema)?;
    manifest.seeds = samples.iter().flatten().map(|s| s.seed).collect();
    let dir = &args.out_dir;

    let mut runs = Vec::new();
    for sample in &samples {
        cfg.sample = *sample;
        let run = manifest.timed("evaluate", || run_experiment(&cfg))?;
        let prefix = match (args.sample_fraction, sample) {
            (Some(_), Some(s)) => format!("sample-{}/", s.seed),
            _ => String::new(),
        };
        manifest.emit(dir, &format!("{prefix}report.json"), run.report_json()?.as_bytes())?;
        manifest.emit(dir, &format!("{prefix}per_user.csv"), run.per_user_csv().as_bytes())?;
        if let Some(s) = sample.filter(|_| args.sample_fraction.is_some()) {
            println!("sample seed {} (fraction {})", s.seed, s.fraction);
        }
        print_run(&run, &cfg.cutoffs);
        runs.push(run);
    }

    if args.sample_fraction.is_some() {
        let mut summary: BTreeMap<String, BTreeMap<usize, CutoffSpread>> = BTreeMap::new();
        for (i, model) in runs[0].models.iter().enumerate() {
            let per_k = summary.entry(model.model.clone()).or_default();
            for &k in &cfg.cutoffs {
                let mrr: Vec<f64> = runs.iter().map(|r| r.models[i].mrr(k).unwrap_or(0.0)).collect();
                let hr: Vec<f64> = runs.iter().map(|r| r.models[i].hr(k).unwrap_or(0.0)).collect();
                per_k.insert(k, CutoffSpread { mrr: spread(&mrr), hr: spread(&hr) });
            }
        }
        manifest.emit(dir, "summary.json", to_json_pretty(&summary)?.as_bytes())?;
        println!("mean/std over {} samples:", runs.len());
        for (model, per_k) in &summary {
            let mut line = format!("{model:<20}");
            for (k, s) in per_k {
                let _ = write!(line, " MRR@{k} {:.4}±{:.4}", s.mrr.mean, s.mrr.std);
            }
            println!("{line}");
        }
    }
    manifest.write(dir)
}

fn read_users(args: &RecommendArgs) -> Result<Vec<String>> {
    if let Some(u) = &args.user {
        return Ok(vec![u.clone()]);
    }
    let path = args.users_file.as_ref().expect("clap requires one of user/users-file");
    let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let users: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if users.is_empty() {
        bail!(Error::Data(format!("{}: no user ids", path.display())));
    }
    Ok(users)
}

fn recommend(args: &RecommendArgs) -> Result<()> {
    let mut manifest = RunManifest::new("recommend", &serde_json::to_vec(args)?);
    let data = manifest.timed("load", || Dataset::load(&args.dataset, &args.schema))?;
    let registry = &data.registry;
    if !registry.tags().any(|t| t.as_str() == args.target_tag) {
        bail!(Error::Config(format!("target tag `{}` is not declared in the schema", args.target_tag)));
    }
    let users = read_users(args)?;
    let filters = if args.exclude_interacted {
        vec![FilterRule::ExcludeInteracted {
            interactions: Default::default(),
        }]
    } else {
        Vec::new()
    };
    let template = RecommendationRequest {
        user: String::new(),
        user_tag: registry.user_tag().as_str().to_string(),
        target_tag: args.target_tag.clone(),
        k: args.k as usize,
        mode: match args.mode {
            ModeArg::Direct => RecommendMode::Direct,
            ModeArg::Neighbors => RecommendMode::Neighbors {
                count: args.neighbors as usize,
            },
        },
        filters,
    };
    template.validate()?;
    let view = InteractionView::from_records(&data.records, registry)?;

    let lists: Vec<RankedList> = match args.model {
        ModelArg::Popular => users.iter().map(|u| most_popular(&view, &template.for_user(u))).collect(),
        ModelArg::Ubknn => users
            .iter()
            .map(|u| ubknn_recommend(&view, &template.for_user(u), args.neighbors as usize))
            .collect(),
        ModelArg::Graph => {
            let weights = match &args.weights {
                Some(path) => read_weights(path, registry)?,
                None => WeightVector::uniform(registry, 1.0)?,
            };
            let graph = manifest.timed("graph", || build_graph(&data.records, registry))?;
            let solver = SolverConfig::new(args.alpha);
            let rec = GraphRecommender::new(&graph, &weights, &view, solver)?;
            manifest.timed("recommend", || {
                users
                    .par_iter()
                    .map(|u| {
                        let req = template.for_user(u);
                        if !rec.knows(&req) && args.fallback_popular {
                            log::info!("user `{u}` not in graph, serving popularity");
                            Ok(most_popular(&view, &req))
                        } else {
                            rec.recommend(&req)
                        }
                    })
                    .collect::<hetrec_core::Result<Vec<_>>>()
            })?
        }
    };

    let mut csv = String::from("user_id,rank,item_id,score\n");
    for (user, list) in users.iter().zip(&lists) {
        for (rank, item) in list.items.iter().enumerate() {
            let _ = writeln!(csv, "{user},{},{},{}", rank + 1, item.id, item.score);
        }
    }
    match &args.out_dir {
        Some(dir) => {
            manifest.input("dataset", &args.dataset)?;
            manifest.input("schema", &args.schema)?;
            if let Some(w) = &args.weights {
                manifest.input("weights", w)?;
            }
            manifest.emit(dir, "recommendations.csv", csv.as_bytes())?;
            manifest.write(dir)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn convert_cmd(args: &ConvertArgs) -> Result<()> {
    let mapping: convert::Mapping = hetrec_core::io::read_json(&args.mapping)?;
    let bytes = fs::read(&args.input).map_err(|e| Error::Data(format!("{}: {e}", args.input.display())))?;
    let digest = sha256_bytes(&bytes);
    let out = convert::convert(&mapping, &args.input, &bytes, &digest)?;
    if let Some(schema) = &args.schema {
        let registry = hetrec_core::register_schema(&hetrec_core::io::read_schema(schema)?)?;
        let total = out.records.len();
        let kept = Dataset::from_records(registry, out.records.clone()).records.len();
        if kept != total {
            bail!(Error::Data(format!(
                "{} converted records do not fit the schema (unknown interaction or wrong object tag)",
                total - kept
            )));
        }
    }
    let mut buf = Vec::new();
    write_records(&mut buf, &out.records)?;
    hetrec_core::io::write_atomic(&args.output, &buf)?;
    eprintln!(
        "converted {} records ({} skipped), input sha256 {digest}",
        out.records.len(),
        out.skipped
    );
    Ok(())
}
