//! Config-driven model comparison and weight optimization runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{most_popular, ubknn_recommend, InteractionView};
use crate::error::{Error, Result};
use crate::eval::metrics::MetricsReport;
use crate::eval::split::{subsample_training, EvalSplit, SplitSpec};
use crate::ga::{average_genomes, evolve_seeds, Evolution, FitnessContext, FitnessMetric, GaConfig, GeneLayout, MetricKind};
use crate::graph::{build_graph, register_schema, EdgeTypeRegistry, InteractionRecord, WeightVector};
use crate::io::{read_records, read_schema, read_weights, to_json_pretty, write_atomic};
use crate::ppr::SolverConfig;
use crate::recommend::{FilterRule, GraphRecommender, RecommendMode, RecommendationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    Popular,
    Ubknn { neighbors: usize },
    GraphUniform,
    GraphWeighted { weights: PathBuf },
    GraphUndirected { weights: PathBuf },
    GraphUserstudy { weights: PathBuf },
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Popular => "popular",
            ModelKind::Ubknn { .. } => "ubknn",
            ModelKind::GraphUniform => "graph-uniform",
            ModelKind::GraphWeighted { .. } => "graph-weighted",
            ModelKind::GraphUndirected { .. } => "graph-undirected",
            ModelKind::GraphUserstudy { .. } => "graph-userstudy",
        }
    }

    fn weights_path(&self) -> Option<&Path> {
        match self {
            ModelKind::GraphWeighted { weights }
            | ModelKind::GraphUndirected { weights }
            | ModelKind::GraphUserstudy { weights } => Some(weights),
            _ => None,
        }
    }

    fn weights_path_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            ModelKind::GraphWeighted { weights }
            | ModelKind::GraphUndirected { weights }
            | ModelKind::GraphUserstudy { weights } => Some(weights),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<RecommendMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ModelEntry {
    pub fn new(kind: ModelKind) -> Self {
        ModelEntry {
            name: None,
            kind,
            mode: None,
            alpha: None,
        }
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub split: SplitSpec,
    pub cutoffs: Vec<usize>,
    pub alpha: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_mode")]
    pub mode: RecommendMode,
    #[serde(default)]
    pub filters: Vec<FilterRule>,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub fitness: Option<FitnessMetric>,
    #[serde(default)]
    pub undirected: bool,
    #[serde(default)]
    pub sample: Option<SampleSpec>,
}

fn default_tolerance() -> f64 {
    SolverConfig::new(0.5).tolerance
}

fn default_max_iterations() -> usize {
    SolverConfig::new(0.5).max_iterations
}

fn default_mode() -> RecommendMode {
    RecommendMode::Direct
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    /// Reads a config; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = crate::io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.dataset);
        resolve(base, &mut cfg.schema);
        for m in &mut cfg.models {
            if let Some(p) = m.kind.weights_path_mut() {
                resolve(base, p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(Error::Config("cutoffs must be a non-empty list of positive integers".into()));
        }
        self.solver(self.alpha).validate()?;
        if let Some(s) = &self.sample {
            if !(s.fraction > 0.0 && s.fraction <= 1.0) {
                return Err(Error::Config(format!("sample fraction must lie in (0, 1], got {}", s.fraction)));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        for m in &self.models {
            if let ModelKind::Ubknn { neighbors: 0 } = m.kind {
                return Err(Error::Config("ubknn needs at least one neighbor".into()));
            }
        }
        self.filters.iter().try_for_each(FilterRule::validate)
    }

    pub fn solver(&self, alpha: f64) -> SolverConfig {
        SolverConfig {
            alpha,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }

    pub fn max_cutoff(&self) -> usize {
        self.cutoffs.iter().copied().max().unwrap_or(1)
    }

    pub fn fitness_metric(&self) -> FitnessMetric {
        self.fitness.unwrap_or(FitnessMetric {
            kind: MetricKind::Mrr,
            k: self.cutoffs.iter().copied().min().unwrap_or(1),
        })
    }

    pub fn request_template(&self, registry: &EdgeTypeRegistry) -> RecommendationRequest {
        RecommendationRequest {
            user: String::new(),
            user_tag: registry.user_tag().as_str().to_string(),
            target_tag: self.split.target_tag().to_string(),
            k: self.max_cutoff(),
            mode: self.mode,
            filters: self.filters.clone(),
        }
    }
}

/// Interaction log with its registry. Records whose interaction is not in
/// the schema, or whose object tag disagrees with it, are dropped with a
/// warning.
pub struct Dataset {
    pub registry: EdgeTypeRegistry,
    pub records: Vec<InteractionRecord>,
    pub dropped: usize,
}

impl Dataset {
    pub fn load(dataset: &Path, schema: &Path) -> Result<Self> {
        let registry = register_schema(&read_schema(schema)?)?;
        let records = read_records(dataset)?;
        Ok(Self::from_records(registry, records))
    }

    pub fn from_records(registry: EdgeTypeRegistry, records: Vec<InteractionRecord>) -> Self {
        let total = records.len();
        let records: Vec<_> = records
            .into_iter()
            .filter(|r| {
                registry
                    .interaction(&r.interaction)
                    .is_some_and(|d| d.target == r.object_tag)
            })
            .collect();
        let dropped = total - records.len();
        if dropped > 0 {
            log::warn!("dropped {dropped} records with unregistered interactions or mismatched tags");
        }
        Dataset {
            registry,
            records,
            dropped,
        }
    }
}

/// Builds the split and applies the optional training subsample. The test
/// set is never subsampled.
pub fn prepare_split(cfg: &ExperimentConfig, data: &Dataset) -> Result<EvalSplit> {
    let mut split = cfg.split.split(&data.records, &data.registry)?;
    if let Some(sample) = cfg.sample {
        split.train = subsample_training(&split.train, sample.fraction, sample.seed)?;
        let (fit_train, validation) = cfg.split.validation_from(&split.train, &data.registry)?;
        split.fit_train = fit_train;
        split.validation = validation;
    }
    Ok(split)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRun {
    pub train_records: usize,
    pub validation_cases: usize,
    pub test_cases: usize,
    pub models: Vec<MetricsReport>,
}

fn load_model_weights(cfg: &ExperimentConfig, registry: &EdgeTypeRegistry) -> Result<BTreeMap<String, WeightVector>> {
    let mut out = BTreeMap::new();
    for m in &cfg.models {
        let weights = match (&m.kind, m.kind.weights_path()) {
            (ModelKind::GraphUniform, _) => WeightVector::uniform(registry, 1.0)?,
            (_, Some(path)) => {
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "model `{}`: weight file {} not found",
                        m.name(),
                        path.display()
                    )));
                }
                read_weights(path, registry)?
            }
            _ => continue,
        };
        out.insert(m.name().to_string(), weights);
    }
    Ok(out)
}

/// Evaluates every configured model on the test cases of one split.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    if cfg.models.is_empty() {
        return Err(Error::Config("no models configured".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    for m in &cfg.models {
        if !names.insert(m.name()) {
            return Err(Error::Config(format!("duplicate model name `{}`", m.name())));
        }
    }
    // Weight files are checked against the schema before the log is read.
    let registry = register_schema(&read_schema(&cfg.schema)?)?;
    let weights = load_model_weights(cfg, &registry)?;
    let data = Dataset::from_records(registry, read_records(&cfg.dataset)?);
    let split = prepare_split(cfg, &data)?;
    evaluate_models(cfg, &data.registry, &split, &weights)
}

/// Scores each model of `cfg` on `split.test`, building graphs from
/// `split.train`.
pub fn evaluate_models(
    cfg: &ExperimentConfig,
    registry: &EdgeTypeRegistry,
    split: &EvalSplit,
    weights: &BTreeMap<String, WeightVector>,
) -> Result<ExperimentRun> {
    let view = InteractionView::from_records(&split.train, registry)?;
    let needs_graph = cfg.models.iter().any(|m| weights.contains_key(m.name()));
    let graph = if needs_graph { Some(build_graph(&split.train, registry)?) } else { None };
    let template = cfg.request_template(registry);

    let mut reports = Vec::with_capacity(cfg.models.len());
    for model in &cfg.models {
        let request = RecommendationRequest {
            mode: model.mode.unwrap_or(cfg.mode),
            ..template.clone()
        };
        request.validate()?;
        let lists: Vec<(Vec<String>, bool)> = match &model.kind {
            ModelKind::Popular => split
                .test
                .par_iter()
                .map(|c| (most_popular(&view, &request.for_user(&c.user)).ids().iter().map(|s| s.to_string()).collect(), false))
                .collect(),
            ModelKind::Ubknn { neighbors } => split
                .test
                .par_iter()
                .map(|c| {
                    let req = request.for_user(&c.user);
                    let cold = !view.contains_user(&c.user);
                    (ubknn_recommend(&view, &req, *neighbors).ids().iter().map(|s| s.to_string()).collect(), cold)
                })
                .collect(),
            _ => {
                let graph = graph.as_ref().expect("graph built for graph models");
                let solver = cfg.solver(model.alpha.unwrap_or(cfg.alpha));
                let rec = GraphRecommender::new(graph, &weights[model.name()], &view, solver)?;
                split
                    .test
                    .par_iter()
                    .map(|c| {
                        let req = request.for_user(&c.user);
                        if rec.knows(&req) {
                            let list = rec
                                .recommend(&req)
                                .map_err(|e| Error::Fitness(format!("model `{}`, user `{}`: {e}", model.name(), c.user)))?;
                            Ok((list.ids().iter().map(|s| s.to_string()).collect(), false))
                        } else {
                            log::debug!("{}: user `{}` not in training graph, using popularity", model.name(), c.user);
                            Ok((most_popular(&view, &req).ids().iter().map(|s| s.to_string()).collect(), true))
                        }
                    })
                    .collect::<Result<_>>()?
            }
        };
        reports.push(MetricsReport::build(model.name(), &split.test, &lists, &cfg.cutoffs)?);
    }

    Ok(ExperimentRun {
        train_records: split.train.len(),
        validation_cases: split.validation.len(),
        test_cases: split.test.len(),
        models: reports,
    })
}

impl ExperimentRun {
    pub fn report_json(&self) -> Result<String> {
        to_json_pretty(self)
    }

    /// `user_id,model,cutoff,rr,hit`, one row per test case, model and cutoff.
    pub fn per_user_csv(&self) -> String {
        let mut out = String::from("user_id,model,cutoff,rr,hit\n");
        for report in &self.models {
            for u in &report.per_user {
                for s in &u.scores {
                    out.push_str(&format!("{},{},{},{},{}\n", u.user, report.model, s.cutoff, s.rr, s.hit));
                }
            }
        }
        out
    }

    /// Writes `report.json` and `per_user.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let report = dir.join("report.json");
        let per_user = dir.join("per_user.csv");
        write_atomic(&report, self.report_json()?.as_bytes())?;
        write_atomic(&per_user, self.per_user_csv().as_bytes())?;
        Ok(vec![report, per_user])
    }
}

/// Result of a multi-seed weight search.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationRun {
    pub labels: Vec<String>,
    pub runs: Vec<Evolution>,
    /// Gene-wise mean of the per-seed best genomes.
    pub averaged: Vec<f64>,
    pub validation_cases: usize,
    #[serde(skip)]
    pub weights: WeightVector,
}

/// Learns edge weights on the validation split: the graph is built from
/// `fit_train` and fitness is measured on the validation cases.
pub fn optimize_weights(cfg: &ExperimentConfig, data: &Dataset, split: &EvalSplit) -> Result<OptimizationRun> {
    cfg.validate()?;
    cfg.ga.validate()?;
    if split.validation.is_empty() {
        return Err(Error::Fitness("validation split is empty; cannot evaluate fitness".into()));
    }
    let layout = if cfg.undirected {
        GeneLayout::undirected(&data.registry)
    } else {
        GeneLayout::directed(&data.registry)
    };
    let graph = build_graph(&split.fit_train, &data.registry)?;
    let view = InteractionView::from_records(&split.fit_train, &data.registry)?;
    let context = FitnessContext {
        graph: &graph,
        view: &view,
        layout: layout.clone(),
        validation: &split.validation,
        request: cfg.request_template(&data.registry),
        solver: cfg.solver(cfg.alpha),
        metric: cfg.fitness_metric(),
    };
    let runs = evolve_seeds(&context, layout.gene_count(), &cfg.ga, &cfg.seeds)?;
    let best: Vec<_> = runs.iter().map(|r| r.best.clone()).collect();
    let averaged = average_genomes(&best)?;
    let weights = layout.weights(averaged.genes())?;
    Ok(OptimizationRun {
        labels: layout.labels(),
        runs,
        averaged: averaged.0,
        validation_cases: split.validation.len(),
        weights,
    })
}

/// `generation,best_fitness,mean_fitness`.
pub fn history_csv(run: &Evolution) -> String {
    let mut out = String::from("generation,best_fitness,mean_fitness\n");
    for g in &run.history {
        out.push_str(&format!("{},{},{}\n", g.generation, g.best_fitness, g.mean_fitness));
    }
    out
}
