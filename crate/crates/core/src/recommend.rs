//! Ranked recommendation lists from personalized PageRank scores.
//!
//! Two modes: rank content vertices of the target tag directly by their
//! score, or take the best-scoring other users as neighbors and rank content
//! by how many of them interacted with it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::baselines::InteractionView;
use crate::error::{Error, Result};
use crate::graph::{HeterogeneousGraph, WeightVector};
use crate::ppr::{build_transition, personalized_pagerank, ScoreVector, SolverConfig, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendMode {
    Direct,
    Neighbors { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterRule {
    /// Drop items the user already interacted with through any of the listed
    /// interactions (any interaction when the list is empty).
    ExcludeInteracted {
        #[serde(default)]
        interactions: BTreeSet<String>,
    },
    /// Keep a mapped item only if the user interacted with its prerequisite.
    RequirePrerequisite {
        prerequisites: BTreeMap<String, String>,
        #[serde(default)]
        interactions: BTreeSet<String>,
    },
}

impl FilterRule {
    pub fn validate(&self) -> Result<()> {
        if let FilterRule::RequirePrerequisite { prerequisites, .. } = self {
            for start in prerequisites.keys() {
                let mut seen = BTreeSet::new();
                let mut cur = start;
                while let Some(next) = prerequisites.get(cur) {
                    if !seen.insert(cur) || next == start {
                        return Err(Error::Config(format!(
                            "prerequisite map has a cycle through `{start}`"
                        )));
                    }
                    cur = next;
                }
            }
        }
        Ok(())
    }

    pub fn allows(&self, view: &InteractionView, user: &str, tag: &str, item: &str) -> bool {
        match self {
            FilterRule::ExcludeInteracted { interactions } => {
                !view.has_interacted(user, tag, item, interactions)
            }
            FilterRule::RequirePrerequisite {
                prerequisites,
                interactions,
            } => match prerequisites.get(item) {
                Some(base) => view.has_interacted(user, tag, base, interactions),
                None => true,
            },
        }
    }
}

pub fn passes_filters(
    filters: &[FilterRule],
    view: &InteractionView,
    user: &str,
    tag: &str,
    item: &str,
) -> bool {
    filters.iter().all(|f| f.allows(view, user, tag, item))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRequest {
    pub user: String,
    pub user_tag: String,
    pub target_tag: String,
    pub k: usize,
    pub mode: RecommendMode,
    #[serde(default)]
    pub filters: Vec<FilterRule>,
}

impl RecommendationRequest {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("cutoff k must be at least 1".into()));
        }
        if let RecommendMode::Neighbors { count: 0 } = self.mode {
            return Err(Error::Config("neighbor count must be at least 1".into()));
        }
        self.filters.iter().try_for_each(FilterRule::validate)
    }

    pub fn for_user(&self, user: &str) -> Self {
        RecommendationRequest {
            user: user.to_string(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub items: Vec<RankedItem>,
}

impl RankedList {
    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Scores closer than this rank as ties; well below the solver tolerance.
const SCORE_RESOLUTION: f64 = 1e-12;

/// Integer ranking key, so that rounding noise between scores that are equal
/// in exact arithmetic cannot decide their order.
pub(crate) fn rank_key(score: f64) -> i64 {
    (score / SCORE_RESOLUTION).round() as i64
}

/// Descending score, then ascending id.
pub(crate) fn by_score_then_id(a: &RankedItem, b: &RankedItem) -> Ordering {
    rank_key(b.score).cmp(&rank_key(a.score)).then_with(|| a.id.cmp(&b.id))
}

/// Graph, transition matrix and training view bundled for repeated requests
/// under one weight setting.
pub struct GraphRecommender<'a> {
    graph: &'a HeterogeneousGraph,
    matrix: TransitionMatrix,
    view: &'a InteractionView,
    solver: SolverConfig,
}

impl<'a> GraphRecommender<'a> {
    pub fn new(
        graph: &'a HeterogeneousGraph,
        weights: &WeightVector,
        view: &'a InteractionView,
        solver: SolverConfig,
    ) -> Result<Self> {
        solver.validate()?;
        Ok(GraphRecommender {
            graph,
            matrix: build_transition(graph, weights)?,
            view,
            solver,
        })
    }

    pub fn graph(&self) -> &HeterogeneousGraph {
        self.graph
    }

    pub fn knows(&self, request: &RecommendationRequest) -> bool {
        self.graph.find(&request.user_tag, &request.user).is_some()
    }

    pub fn scores(&self, request: &RecommendationRequest) -> Result<ScoreVector> {
        let source = self
            .graph
            .find(&request.user_tag, &request.user)
            .ok_or_else(|| Error::UnknownUser(request.user.clone()))?;
        personalized_pagerank(&self.matrix, source, &self.solver)
    }

    pub fn recommend(&self, request: &RecommendationRequest) -> Result<RankedList> {
        request.validate()?;
        let pi = self.scores(request)?;
        Ok(match request.mode {
            RecommendMode::Direct => self.rank_direct(request, &pi),
            RecommendMode::Neighbors { count } => self.rank_neighbors(request, &pi, count),
        })
    }

    fn rank_direct(&self, request: &RecommendationRequest, pi: &ScoreVector) -> RankedList {
        let mut items: Vec<RankedItem> = self
            .graph
            .vertices_with_tag(&request.target_tag)
            .iter()
            .filter(|&&v| v != pi.source)
            .map(|&v| self.graph.vertex(v))
            .filter(|v| {
                passes_filters(&request.filters, self.view, &request.user, &request.target_tag, &v.id)
            })
            .map(|v| RankedItem {
                id: v.id.clone(),
                score: pi.scores[v.index],
            })
            .collect();
        items.sort_by(by_score_then_id);
        items.truncate(request.k);
        RankedList { items }
    }

    fn rank_neighbors(&self, request: &RecommendationRequest, pi: &ScoreVector, count: usize) -> RankedList {
        let mut neighbors: Vec<(usize, f64)> = self
            .graph
            .vertices_with_tag(&request.user_tag)
            .iter()
            .filter(|&&v| v != pi.source && pi.scores[v] > 0.0)
            .map(|&v| (v, pi.scores[v]))
            .collect();
        neighbors.sort_by(|a, b| {
            rank_key(b.1)
                .cmp(&rank_key(a.1))
                .then_with(|| self.graph.vertex(a.0).id.cmp(&self.graph.vertex(b.0).id))
        });
        neighbors.truncate(count);

        let scored = neighbors
            .iter()
            .map(|&(v, score)| (self.graph.vertex(v).id.as_str(), score));
        rank_by_neighbor_frequency(self.view, request, scored)
    }
}

/// Scores each target-tag item by the number of neighbors that interacted
/// with it; ties go to the larger summed neighbor score, then the smaller id.
pub(crate) fn rank_by_neighbor_frequency<'n>(
    view: &InteractionView,
    request: &RecommendationRequest,
    neighbors: impl Iterator<Item = (&'n str, f64)>,
) -> RankedList {
    let mut tally: HashMap<&str, (usize, f64)> = HashMap::new();
    for (neighbor, score) in neighbors {
        for item in view.items_of(neighbor, &request.target_tag) {
            let entry = tally.entry(item).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += score;
        }
    }
    let mut ranked: Vec<(&str, usize, f64)> = tally
        .into_iter()
        .filter(|(item, _)| {
            passes_filters(&request.filters, view, &request.user, &request.target_tag, item)
        })
        .map(|(item, (n, s))| (item, n, s))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| rank_key(b.2).cmp(&rank_key(a.2)))
            .then_with(|| a.0.cmp(b.0))
    });
    ranked.truncate(request.k);
    RankedList {
        items: ranked
            .into_iter()
            .map(|(id, n, _)| RankedItem {
                id: id.to_string(),
                score: n as f64,
            })
            .collect(),
    }
}

/// Top-k target-tag content by PPR score.
pub fn recommend_direct(
    graph: &HeterogeneousGraph,
    weights: &WeightVector,
    view: &InteractionView,
    request: &RecommendationRequest,
    solver: &SolverConfig,
) -> Result<RankedList> {
    let request = RecommendationRequest {
        mode: RecommendMode::Direct,
        ..request.clone()
    };
    GraphRecommender::new(graph, weights, view, *solver)?.recommend(&request)
}

/// Top-k content by interaction frequency among the `neighbors` closest
/// users.
pub fn recommend_via_neighbors(
    graph: &HeterogeneousGraph,
    weights: &WeightVector,
    view: &InteractionView,
    request: &RecommendationRequest,
    neighbors: usize,
    solver: &SolverConfig,
) -> Result<RankedList> {
    let request = RecommendationRequest {
        mode: RecommendMode::Neighbors { count: neighbors },
        ..request.clone()
    };
    GraphRecommender::new(graph, weights, view, *solver)?.recommend(&request)
}
