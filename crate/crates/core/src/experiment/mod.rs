//! Experiment plumbing: synthetic datasets, the flat text configuration,
//! pipeline stages and the CSV/SVG artifacts they produce.

mod config;
mod data;
pub mod pipeline;
mod report;

pub use config::{parse_config, EncoderMode, ExperimentConfig};
pub use data::{labeled_dataset, DatasetSpec};
pub use report::{loss_csv, report_csv, scatter_svg, sweep_csv, write_report, write_text, REPORT_HEADER};
