//! Offline evaluation: splits, metrics, dataset statistics and experiment
//! orchestration.

pub mod experiment;
pub mod metrics;
pub mod split;
pub mod stats;

pub use experiment::{
    evaluate_models, history_csv, optimize_weights, prepare_split, run_experiment, Dataset, ExperimentConfig,
    ExperimentRun, ModelEntry, ModelKind, OptimizationRun, SampleSpec,
};
pub use metrics::{hit_at_k, reciprocal_rank_at_k, MetricsReport};
pub use split::{
    leakage_violations, split_leave_one_out, split_temporal, subsample_training, EvalCase, EvalSplit, SplitSpec,
};
pub use stats::{dataset_stats, DatasetStats};
