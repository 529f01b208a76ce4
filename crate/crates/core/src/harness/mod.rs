//! Datasets, experiments and artifact files.

pub mod config;
pub mod dataset;
pub mod files;
pub mod io;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use dataset::{
    build_dataset, draw_sample, experiment_plan, ExperimentData, Phase, Sample, SampleMeta,
};
pub use files::{read_data_dir, write_data_dir};
pub use run::{
    baseline_classifiers, emit_metrics, evaluate_classifier, evaluate_experiment,
    experiment_baselines, heatmap, heatmap_grid, load_metrics, run_experiment, train_model,
    Classifier, ExperimentOutcome,
};
