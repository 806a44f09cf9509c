//! Genetic search over edge-type weights.
//!
//! Each genome holds one weight per gene; fitness is a ranking metric of the
//! graph recommender on held-out validation cases. Every generation keeps the
//! best `parents_mating` genomes unchanged and refills the population with
//! uniformly crossed-over, mutated offspring.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::InteractionView;
use crate::error::{Error, Result};
use crate::eval::metrics::{average_precision_at_k, ndcg_at_k, reciprocal_rank_at_k};
use crate::eval::split::EvalCase;
use crate::graph::{EdgeKey, EdgeTypeRegistry, HeterogeneousGraph, WeightVector};
use crate::ppr::SolverConfig;
use crate::recommend::{GraphRecommender, RecommendationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub parents_mating: usize,
    pub mutation_gene_fraction: f64,
    pub mutation_range: [f64; 2],
    pub gene_range: [f64; 2],
    pub max_generations: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 10,
            parents_mating: 4,
            mutation_gene_fraction: 0.1,
            mutation_range: [-0.3, 0.3],
            gene_range: [0.01, 2.0],
            max_generations: 200,
            patience: 20,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.parents_mating < 2 || self.population_size < self.parents_mating {
            return bad(format!(
                "need population_size >= parents_mating >= 2, got {} and {}",
                self.population_size, self.parents_mating
            ));
        }
        if !(self.mutation_gene_fraction > 0.0 && self.mutation_gene_fraction <= 1.0) {
            return bad(format!(
                "mutation_gene_fraction must lie in (0, 1], got {}",
                self.mutation_gene_fraction
            ));
        }
        let [lo, hi] = self.mutation_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("invalid mutation range [{lo}, {hi}]"));
        }
        let [gmin, gmax] = self.gene_range;
        if !(gmin > 0.0 && gmax.is_finite() && gmin <= gmax) {
            return bad(format!("gene range [{gmin}, {gmax}] must be positive and ordered"));
        }
        if self.max_generations == 0 {
            return bad("max_generations must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(pub Vec<f64>);

impl Genome {
    pub fn genes(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Anything that scores a gene vector; larger is better.
pub trait Fitness: Sync {
    fn evaluate(&self, genes: &[f64]) -> Result<f64>;
}

impl<F> Fitness for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn evaluate(&self, genes: &[f64]) -> Result<f64> {
        self(genes)
    }
}

pub fn init_population<R: Rng>(config: &GaConfig, gene_count: usize, rng: &mut R) -> Result<Vec<Genome>> {
    config.validate()?;
    if gene_count == 0 {
        return Err(Error::Config("genome needs at least one gene".into()));
    }
    let [lo, hi] = config.gene_range;
    Ok((0..config.population_size)
        .map(|_| Genome((0..gene_count).map(|_| rng.gen_range(lo..=hi)).collect()))
        .collect())
}

/// Indices of the `parents` fittest genomes, best first; equal fitness keeps
/// the lower index first.
pub fn select_parents(fitness: &[f64], parents: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order.truncate(parents);
    order
}

pub fn crossover_uniform<R: Rng>(a: &Genome, b: &Genome, rng: &mut R) -> Result<Genome> {
    if a.len() != b.len() {
        return Err(Error::Config(format!(
            "crossover of genomes with {} and {} genes",
            a.len(),
            b.len()
        )));
    }
    Ok(Genome(
        a.0.iter()
            .zip(&b.0)
            .map(|(&x, &y)| if rng.gen_bool(0.5) { x } else { y })
            .collect(),
    ))
}

/// Number of genes perturbed per offspring: the rounded fraction, at least one.
pub fn mutation_count(config: &GaConfig, gene_count: usize) -> usize {
    ((config.mutation_gene_fraction * gene_count as f64).round() as usize).clamp(1, gene_count.max(1))
}

pub fn mutate<R: Rng>(genome: &Genome, config: &GaConfig, rng: &mut R) -> Genome {
    let mut genes = genome.0.clone();
    if genes.is_empty() {
        return Genome(genes);
    }
    let [lo, hi] = config.mutation_range;
    let [gmin, gmax] = config.gene_range;
    for i in sample(rng, genes.len(), mutation_count(config, genes.len())).into_iter() {
        genes[i] = (genes[i] + rng.gen_range(lo..=hi)).clamp(gmin, gmax);
    }
    Genome(genes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxGenerations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub seed: u64,
    pub best: Genome,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub stopped_by: StopReason,
}

/// Runs the search until the best fitness stalls for `patience` generations
/// or `max_generations` is reached.
pub fn evolve<F: Fitness + ?Sized>(fitness: &F, gene_count: usize, config: &GaConfig) -> Result<Evolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<(Genome, Option<f64>)> = init_population(config, gene_count, &mut rng)?
        .into_iter()
        .map(|g| (g, None))
        .collect();

    let mut best: Option<(Genome, f64)> = None;
    let mut stale = 0usize;
    let mut history = Vec::new();

    for generation in 0..config.max_generations {
        let scored: Vec<f64> = population
            .par_iter()
            .map(|(genome, known)| match known {
                Some(f) => Ok(*f),
                None => fitness.evaluate(genome.genes()),
            })
            .collect::<Result<_>>()
            .map_err(|e| Error::Fitness(format!("generation {generation}: {e}")))?;
        if let Some(i) = scored.iter().position(|f| f.is_nan()) {
            return Err(Error::Fitness(format!(
                "generation {generation}: genome {i} has NaN fitness"
            )));
        }
        for ((_, known), &f) in population.iter_mut().zip(&scored) {
            *known = Some(f);
        }

        let order = select_parents(&scored, config.parents_mating);
        let top = scored[order[0]];
        match &best {
            Some((_, f)) if top <= *f => stale += 1,
            _ => {
                best = Some((population[order[0]].0.clone(), top));
                stale = 0;
            }
        }
        history.push(GenerationStats {
            generation,
            best_fitness: best.as_ref().map_or(top, |b| b.1),
            mean_fitness: scored.iter().sum::<f64>() / scored.len() as f64,
        });
        log::debug!(
            "seed {} generation {generation}: best {:.6} mean {:.6}",
            config.seed,
            history[generation].best_fitness,
            history[generation].mean_fitness
        );

        if stale >= config.patience {
            let (best, best_fitness) = best.expect("at least one generation evaluated");
            return Ok(Evolution {
                seed: config.seed,
                best,
                best_fitness,
                history,
                stopped_by: StopReason::Patience,
            });
        }
        if generation + 1 == config.max_generations {
            break;
        }

        let parents: Vec<(Genome, Option<f64>)> = order.iter().map(|&i| population[i].clone()).collect();
        let mut next = parents.clone();
        for i in 0..config.population_size - config.parents_mating {
            let a = &parents[i % parents.len()].0;
            let b = &parents[(i + 1) % parents.len()].0;
            let child = crossover_uniform(a, b, &mut rng)?;
            next.push((mutate(&child, config, &mut rng), None));
        }
        population = next;
    }

    let (best, best_fitness) = best.expect("at least one generation evaluated");
    Ok(Evolution {
        seed: config.seed,
        best,
        best_fitness,
        history,
        stopped_by: StopReason::MaxGenerations,
    })
}

/// Independent runs, one per seed.
pub fn evolve_seeds<F: Fitness + ?Sized>(
    fitness: &F,
    gene_count: usize,
    config: &GaConfig,
    seeds: &[u64],
) -> Result<Vec<Evolution>> {
    seeds
        .iter()
        .map(|&seed| {
            evolve(
                fitness,
                gene_count,
                &GaConfig {
                    seed,
                    ..config.clone()
                },
            )
        })
        .collect()
}

/// Gene-wise mean of several genomes.
pub fn average_genomes(genomes: &[Genome]) -> Result<Genome> {
    let first = genomes
        .first()
        .ok_or_else(|| Error::Config("cannot average zero genomes".into()))?;
    if genomes.iter().any(|g| g.len() != first.len()) {
        return Err(Error::Config("genomes of different lengths".into()));
    }
    let n = genomes.len() as f64;
    Ok(Genome(
        (0..first.len())
            .map(|i| genomes.iter().map(|g| g.0[i]).sum::<f64>() / n)
            .collect(),
    ))
}

/// How genes map onto edge types.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneLayout {
    /// One gene per registered (interaction, direction).
    Directed(Vec<EdgeKey>),
    /// One gene per interaction, shared by both directions.
    Undirected(Vec<(String, Vec<EdgeKey>)>),
}

impl GeneLayout {
    pub fn directed(registry: &EdgeTypeRegistry) -> Self {
        GeneLayout::Directed(registry.edge_keys().to_vec())
    }

    pub fn undirected(registry: &EdgeTypeRegistry) -> Self {
        let mut groups: Vec<(String, Vec<EdgeKey>)> = Vec::new();
        for key in registry.edge_keys() {
            match groups.last_mut() {
                Some((name, keys)) if *name == key.interaction => keys.push(key.clone()),
                _ => groups.push((key.interaction.clone(), vec![key.clone()])),
            }
        }
        GeneLayout::Undirected(groups)
    }

    pub fn gene_count(&self) -> usize {
        match self {
            GeneLayout::Directed(k) => k.len(),
            GeneLayout::Undirected(g) => g.len(),
        }
    }

    /// Weight-file key for each gene.
    pub fn labels(&self) -> Vec<String> {
        match self {
            GeneLayout::Directed(k) => k.iter().map(ToString::to_string).collect(),
            GeneLayout::Undirected(g) => g.iter().map(|(name, _)| name.clone()).collect(),
        }
    }

    pub fn weights(&self, genes: &[f64]) -> Result<WeightVector> {
        if genes.len() != self.gene_count() {
            return Err(Error::Config(format!(
                "genome has {} genes, layout expects {}",
                genes.len(),
                self.gene_count()
            )));
        }
        let mut map = BTreeMap::new();
        match self {
            GeneLayout::Directed(keys) => {
                for (k, &g) in keys.iter().zip(genes) {
                    map.insert(k.clone(), g);
                }
            }
            GeneLayout::Undirected(groups) => {
                for ((_, keys), &g) in groups.iter().zip(genes) {
                    for k in keys {
                        map.insert(k.clone(), g);
                    }
                }
            }
        }
        WeightVector::new(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Mrr,
    Ndcg,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitnessMetric {
    pub kind: MetricKind,
    pub k: usize,
}

impl FitnessMetric {
    pub fn score(&self, ranked: &[&str], truth: &std::collections::BTreeSet<String>) -> Result<f64> {
        match self.kind {
            MetricKind::Mrr => reciprocal_rank_at_k(ranked, truth, self.k),
            MetricKind::Ndcg => ndcg_at_k(ranked, truth, self.k),
            MetricKind::Map => average_precision_at_k(ranked, truth, self.k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessOutcome {
    pub value: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Validation-set ranking quality of the graph recommender under a genome.
pub struct FitnessContext<'a> {
    pub graph: &'a HeterogeneousGraph,
    pub view: &'a InteractionView,
    pub layout: GeneLayout,
    pub validation: &'a [EvalCase],
    pub request: RecommendationRequest,
    pub solver: SolverConfig,
    pub metric: FitnessMetric,
}

impl FitnessContext<'_> {
    pub fn evaluate_detailed(&self, genes: &[f64]) -> Result<FitnessOutcome> {
        if self.validation.is_empty() {
            return Err(Error::Fitness("validation set is empty".into()));
        }
        let weights = self.layout.weights(genes)?;
        let recommender = GraphRecommender::new(self.graph, &weights, self.view, self.solver)?;
        let request = RecommendationRequest {
            k: self.request.k.max(self.metric.k),
            ..self.request.clone()
        };

        let scores: Vec<Option<f64>> = self
            .validation
            .par_iter()
            .map(|case| {
                let req = request.for_user(&case.user);
                if !recommender.knows(&req) {
                    return Ok(None);
                }
                let list = recommender
                    .recommend(&req)
                    .map_err(|e| Error::Fitness(format!("user `{}`: {e}", case.user)))?;
                self.metric.score(&list.ids(), &case.truth).map(Some)
            })
            .collect::<Result<_>>()?;

        let evaluated: Vec<f64> = scores.iter().flatten().copied().collect();
        let skipped = scores.len() - evaluated.len();
        if evaluated.is_empty() {
            return Err(Error::Fitness(format!(
                "none of the {skipped} validation users is in the training graph"
            )));
        }
        Ok(FitnessOutcome {
            value: evaluated.iter().sum::<f64>() / evaluated.len() as f64,
            evaluated: evaluated.len(),
            skipped,
        })
    }
}

impl Fitness for FitnessContext<'_> {
    fn evaluate(&self, genes: &[f64]) -> Result<f64> {
        self.evaluate_detailed(genes).map(|o| o.value)
    }
}

/// Convenience wrapper for a single genome.
pub fn evaluate_fitness(genome: &Genome, context: &FitnessContext<'_>) -> Result<f64> {
    context.evaluate(genome.genes())
}
