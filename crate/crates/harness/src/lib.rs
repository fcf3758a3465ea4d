//! Experiment orchestration: dataset generation, repeated calibration and
//! test splits, and report files.

pub mod dataset;
pub mod files;
pub mod plan;
pub mod report;
pub mod trials;

pub use dataset::{generate_dataset, Analyzer, Dataset, DatasetSample};
pub use plan::{ExperimentPlan, Mode, ShiftMode};
pub use report::{write_regions, write_summary_csv, write_trials_csv, SummaryRow};
pub use trials::{run_trials, TrialRecord, TrialReport};
