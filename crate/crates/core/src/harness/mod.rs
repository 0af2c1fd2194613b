//! Experiment orchestration: configuration, offline pretraining, online
//! fine-tuning with BAQ and its baselines, hyperparameter sweeps, plots and
//! the command-line front end.

mod agent;
mod bench;
pub mod cli;
mod config;
mod finetune;
mod offline;
mod plot;
mod record;

pub use agent::{Agent, AgentParams, CriticStats};
pub use bench::{bc_config, grid_sweep, Heatmap, Workbench};
pub use config::{default_kq_krho, Algo, BaseAlgo, ExperimentConfig, Sampling, Variant};
pub use finetune::{run_finetune, FinetuneOutcome};
pub use offline::{load_configured_dataset, run_offline, run_offline_on, OfflineOutcome};
pub use plot::{aggregate, curves_csv, emit_plot, render_svg, Curve};
pub use record::{evaluate, RunRecord};
