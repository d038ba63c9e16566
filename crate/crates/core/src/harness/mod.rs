//! Experiment driver: configuration files, parameter sweeps, CSV and SVG output.

pub mod config;
pub mod experiment;
pub mod plot;

pub use config::{parse_config, parse_config_str, ParsedConfig, SweepSpec};
pub use experiment::{run_experiment, ExperimentId, Metric, MetricValue, RunOptions, SweepRecord};
