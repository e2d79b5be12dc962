//! Experiment harness for `bb84-core`: seeded multi-session runs, aggregate
//! statistics, JSON/CSV reports and the `bb84` command line.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod report;
pub mod seed;

pub use config::{EveChoice, ExperimentConfig, OutputFormat, PrivacySpec, ResendRuleChoice, StrategySpec};
pub use experiment::{detection_rate_curve, map_sessions, run_experiment, ExperimentError};
pub use report::{Aggregates, CurveReport, ExperimentReport, SessionRow};
