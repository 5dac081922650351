//! Experiment orchestration and reports.
