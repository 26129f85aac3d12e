//! Experiment orchestration: configuration, the table registry, emitters,
//! architecture recommendations and the reproduction checks.

mod config;
mod experiments;
mod recommend;
mod table;
mod verify;

pub use config::{ExperimentConfig, OUTPUT_DIR_ENV};
pub use experiments::{current_commit, experiments, grid_model_spectrum, qr_host, run_experiment, ExperimentInfo, Params};
pub use recommend::{recommend, DecisionReport, Strategy, ENTANGLEMENT_ROUNDS};
pub use table::{Cell, Format, Provenance, Table};
pub use verify::{complete_graph_optimum, verify, verify_all, Check, Targets, VerifyReport, CRITERIA};
