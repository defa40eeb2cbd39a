//! Model splits, condensation-then-prediction pipelines, metrics and budget sweeps.

pub mod metrics;
pub mod pipeline;
pub mod split;

pub use metrics::{mae, midranks, pearson, spearman};
pub use pipeline::{
    evaluate_predictions, fit_predictor, predict_targets, run_pipeline, select_subset,
    sweep_budgets, sweep_csv, EvalReport, PipelineConfig, PredictionConfig, PredictionPair,
    SelectionConfig,
};
pub use split::{median_cutoff, split_models, ModelSplit, SplitPolicy};
