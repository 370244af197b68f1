use std::sync::Arc;

use super::projection::ProjectionRegion;
use super::state::{default_initial, SimState, TickRecord, TickSample};
use super::trace::{RunTrace, TraceMeta, TraceRow};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveField;
use crate::schedules::{ActivationPolicy, StepSizePolicy};
use crate::stochastics::{DelayModel, ErrorModel, NoiseModel, StochasticModels};

/// Everything one run needs, already resolved and validated by the caller
/// or by [`RunSpec::validate`].
#[derive(Clone)]
pub struct RunSpec {
    pub field: Arc<dyn ObjectiveField>,
    pub steps: StepSizePolicy,
    pub activation: ActivationPolicy,
    pub delay: DelayModel,
    pub error: ErrorModel,
    pub noise: NoiseModel,
    pub region: Option<ProjectionRegion>,
    /// Defaults to a uniform draw from `[−1, 1]^d`.
    pub x0: Option<Vec<f64>>,
    pub horizon: u64,
    pub seed: u64,
    pub window: Option<usize>,
    /// Resolved configuration embedded in the trace header.
    pub config: serde_json::Value,
}

impl RunSpec {
    /// Synchronous, noiseless, undelayed run with `a(n) = 1/(n+10)`.
    pub fn new(field: Arc<dyn ObjectiveField>, horizon: u64, seed: u64) -> Self {
        RunSpec {
            field,
            steps: StepSizePolicy::harmonic(10.0),
            activation: ActivationPolicy::All,
            delay: DelayModel::Zero,
            error: ErrorModel::Zero,
            noise: NoiseModel::Zero,
            region: None,
            x0: None,
            horizon,
            seed,
            window: None,
            config: serde_json::Value::Null,
        }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::Config("field dimension must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        self.steps.validate()?;
        self.activation.validate(d)?;
        self.delay.validate(d)?;
        self.error.validate(d)?;
        self.noise.validate()?;
        if let Some(r) = &self.region {
            r.validate(d)?;
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
            }
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("initial point must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| default_initial(self.dim(), self.seed))
    }
}

/// A run advanced tick by tick.
pub struct Simulation {
    pub state: SimState,
    pub models: StochasticModels,
    field: Arc<dyn ObjectiveField>,
    steps: StepSizePolicy,
    region: Option<ProjectionRegion>,
    /// Whether the current iterate came from the projection branch.
    last_projected: bool,
}

impl Simulation {
    pub fn new(spec: &RunSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dim();
        let mut x0 = spec.initial_point();
        let last_projected = spec.region.as_ref().is_some_and(|r| r.project(&mut x0));
        Ok(Simulation {
            state: SimState::new(x0, spec.activation.clone(), spec.seed, spec.window)?,
            models: StochasticModels::new(spec.delay.clone(), spec.error.clone(), spec.noise, d, spec.seed)?,
            field: spec.field.clone(),
            steps: spec.steps,
            region: spec.region.clone(),
            last_projected,
        })
    }

    pub fn field(&self) -> &dyn ObjectiveField {
        self.field.as_ref()
    }

    pub fn current_projected(&self) -> bool {
        self.last_projected
    }

    pub fn step(&mut self) -> Result<TickRecord> {
        let sample = self.draw();
        self.apply(&sample)
    }

    /// Draws the next tick's stochastic inputs without applying them.
    pub fn draw(&mut self) -> TickSample {
        self.state.draw(&mut self.models)
    }

    /// Applies externally drawn inputs, e.g. the shared sample of a coupled pair.
    pub fn apply(&mut self, sample: &TickSample) -> Result<TickRecord> {
        let rec = self.state.apply(self.field.as_ref(), &self.steps, sample, self.region.as_ref())?;
        self.last_projected = rec.projected;
        Ok(rec)
    }

    /// Row for the current iterate, with no tick inputs filled in yet.
    pub fn pending_row(&self) -> TraceRow {
        let x = self.state.current().to_vec();
        TraceRow {
            n: self.state.clock(),
            active: vec![false; x.len()],
            step: self.state.steps(&self.steps),
            error_norm: 0.0,
            max_delay: 0,
            projected: self.last_projected,
            residual: self.field.residual(&x),
            x,
        }
    }

    pub fn trace_meta(&self, config: serde_json::Value) -> TraceMeta {
        TraceMeta { seed: self.state.seed, dim: self.state.dim(), config }
    }
}

impl TraceRow {
    pub fn fill_tick(&mut self, rec: &TickRecord) {
        self.active.clone_from(&rec.active);
        self.step.clone_from(&rec.steps);
        self.error_norm = rec.error_norm;
        self.max_delay = rec.max_delay;
    }
}

/// A failed run with everything recorded up to the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<RunTrace>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        RunFailure { error, partial: None }
    }
}

/// Executes the horizon and records one row per tick, `horizon + 1` in all.
pub fn run(spec: &RunSpec) -> std::result::Result<RunTrace, RunFailure> {
    let mut sim = Simulation::new(spec)?;
    let mut trace = RunTrace::new(sim.trace_meta(spec.config.clone()));
    trace.rows.reserve(spec.horizon as usize + 1);
    for _ in 0..spec.horizon {
        let mut row = sim.pending_row();
        match sim.step() {
            Ok(rec) => {
                row.fill_tick(&rec);
                trace.rows.push(row);
            }
            Err(error) => {
                trace.rows.push(row);
                return Err(RunFailure { error, partial: Some(trace) });
            }
        }
    }
    trace.rows.push(sim.pending_row());
    Ok(trace)
}
