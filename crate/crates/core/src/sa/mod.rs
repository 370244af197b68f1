//! The asynchronous recursion: iterate history, the plain and projective
//! steps, the run driver and trace persistence.

pub mod history;
pub mod projection;
pub mod run;
pub mod state;
pub mod trace;

pub use history::IterateHistory;
pub use projection::ProjectionRegion;
pub use run::{run, RunFailure, RunSpec, Simulation};
pub use state::{default_initial, projective_step, sa_step, SimState, TickRecord, TickSample};
pub use trace::{RunTrace, TraceMeta, TraceRow};
