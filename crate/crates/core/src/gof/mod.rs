//! Goodness-of-fit measures and the paired replication study.

mod measures;
mod study;

pub use measures::{
    mise, pearson_chi2, tile_counts_and_masses, QuadratPartition, DEFAULT_QUADRATS,
};
pub use study::{
    mean_and_se, run_study, run_study_resolved, MethodSummary, Metric, Outcome, ReplicateRecord,
    StudyConfig, StudyReport,
};
