//! Experiment harness for the weight-design library: rationality sweeps on
//! the complete graph, topology comparisons, the published five-agent
//! designs and simulator validation. CSV files are the canonical output;
//! SVG charts are drawn from them.

pub mod error;
pub mod experiments;
pub mod spec;
pub mod svg;

pub use error::{CliError, Result};
pub use experiments::{
    run_chain_validation, run_fig3, run_optimize, run_published_matrices, run_spec,
    run_topology_compare, run_uniform, Check, Report,
};
pub use spec::{ExperimentKind, ExperimentSpec, Topology};
