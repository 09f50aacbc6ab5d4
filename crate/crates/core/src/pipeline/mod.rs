//! Uncertainty scoring, budgeted selection, pseudo-labeling and the
//! combined-loss training loop.

mod config;
mod data;
mod pool;
mod report;
mod run;
mod train;

pub use config::{PipelineConfig, UncertaintyMetric, Variant};
pub use data::{Prepared, TrainItem};
pub use pool::{
    assign_pseudo_labels, partition_subsets, preliminary_filter, refresh_pseudo_labels, score_pool,
    score_pool_detailed, select_hls, PoolRecord, PoolState, Scored, Status,
};
pub use report::{
    median, pivot_summaries, read_report, read_summary, write_report, write_summary, EpochRow, PivotTable, SummaryRow,
    TrainingReport, REPORT_HEADER, SUMMARY_HEADER,
};
pub use run::{run_pipeline, run_pipeline_from, run_subset_study, PipelineOutcome, SubsetResult};
pub use train::{evaluate_cer, train_epoch, train_initial, BatchStat, EpochStats, InitialOutcome, Phase};

#[cfg(test)]
mod tests;
