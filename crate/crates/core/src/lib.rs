//! Recommendation over sparse, heterogeneous interaction logs.
//!
//! Interactions of every type become typed, weighted edges of a directed
//! graph; content is ranked per user with personalized PageRank, and the
//! per-edge-type weights are tuned by a genetic algorithm against validation
//! ranking quality.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod ga;
pub mod graph;
pub mod io;
pub mod ppr;
pub mod recommend;

pub use error::{Error, ErrorClass, Result};
pub use graph::{
    build_graph, register_schema, resolve_weight, Direction, EdgeKey, EdgeType, EdgeTypeRegistry, HeterogeneousGraph,
    InteractionDef, InteractionRecord, Schema, Vertex, VertexTag, WeightVector,
};
pub use ppr::{batch_pagerank, build_transition, personalized_pagerank, ScoreVector, SolverConfig, TransitionMatrix};
pub use recommend::{
    recommend_direct, recommend_via_neighbors, FilterRule, GraphRecommender, RankedItem, RankedList, RecommendMode,
    RecommendationRequest,
};
