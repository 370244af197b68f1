//! Simulator for asynchronous stochastic approximation with communication
//! delays, partial agent activation, martingale-difference noise and biased,
//! bounded approximation errors.
//!
//! The general recursion updates, at every global tick `n`, only the agents in
//! the active set `Y_n`:
//!
//! ```text
//! x_{n+1}(i) = x_n(i) + a(ν(n,i)) · [ f_i(x_{n-τ_1i(n)}(1), …, x_{n-τ_di(n)}(d)) + ε_n(i) + M_{n+1}(i) ]
//! ```
//!
//! Two instantiations are provided: noisy asynchronous value iteration on
//! finite MDPs (the field is the Bellman residual `TJ − J`) and asynchronous
//! approximate gradient descent on smooth benchmark objectives. A projective
//! counterpart, paired/coupled runs and a set of finite-horizon assumption
//! checkers support stability experiments.
//!
//! Module map:
//!
//! - [`sa`]: iterate history, the step and projective step, run driver, traces.
//! - [`schedules`]: step-size policies, activation sets, rescaled timeline.
//! - [`stochastics`]: delay, error and noise samplers.
//! - [`objectives`]: fields, norms, finite MDPs, smooth benchmarks.
//! - [`stability`]: paired raw/projective runs and gap tracking.
//! - [`diagnostics`]: assumption checkers with three-valued verdicts.
//! - [`harness`]: configuration, sweeps, experiment reproduction, CLI.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod sa;
pub mod schedules;
pub mod stability;
pub mod stochastics;

pub use error::{Error, Result};
