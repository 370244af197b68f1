//! Configuration files, parameter sweeps, the two-agent experiment, plot
//! data and the command-line interface.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod sweep;

pub use cli::dispatch;
pub use config::{ObjectiveConfig, OutputConfig, ResolvedObjective, RunConfig};
pub use experiment::{
    epsilon_grid, experiment_instance, experiment_run_spec, median, reproduce_experiment, spearman, ExperimentRow,
    ExperimentSpec, ExperimentTable,
};
pub use plot::{emit_plot_data, parse_plot_data, plot_points, PlotPoint, PlotStyle};
pub use sweep::{run_sweep, Aggregate, SeedMode, SweepParameter, SweepSpec, SweepTable};
