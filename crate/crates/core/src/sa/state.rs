use rand::Rng;

use super::history::IterateHistory;
use super::projection::ProjectionRegion;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveField;
use crate::schedules::{ActivationPolicy, AgentSchedule, StepSizePolicy};
use crate::stochastics::rng::{stream, StreamDomain};
use crate::stochastics::{DelayMatrix, StochasticModels};

/// Full state of one run: clock, iterate history, activation counters and
/// the applied-noise partial sum `ξ_n`.
#[derive(Debug, Clone)]
pub struct SimState {
    pub history: IterateHistory,
    pub schedule: AgentSchedule,
    pub seed: u64,
    noise_sum: Vec<f64>,
}

/// The stochastic inputs of one tick, drawn once so that several states can
/// be driven by the same realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSample {
    pub n: u64,
    pub active: Vec<bool>,
    pub delays: DelayMatrix,
    pub error: Vec<f64>,
    /// `‖ε_n‖` under the error model's norm.
    pub error_norm: f64,
    pub noise: Vec<f64>,
}

/// What happened at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub n: u64,
    pub active: Vec<bool>,
    /// `a(ν(n,i))` for every agent, active or not.
    pub steps: Vec<f64>,
    pub error_norm: f64,
    pub max_delay: u64,
    /// The new iterate came from the projection branch.
    pub projected: bool,
}

/// Uniform on `[−1, 1]^d` from the run's initialisation stream.
pub fn default_initial(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, StreamDomain::Init, 0, 0);
    (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

impl SimState {
    pub fn new(x0: Vec<f64>, activation: ActivationPolicy, seed: u64, window: Option<usize>) -> Result<Self> {
        let d = x0.len();
        let history = match window {
            Some(w) => IterateHistory::with_window(x0, w)?,
            None => IterateHistory::new(x0)?,
        };
        Ok(SimState { history, schedule: AgentSchedule::new(activation, d, seed)?, seed, noise_sum: vec![0.0; d] })
    }

    pub fn dim(&self) -> usize {
        self.history.dim()
    }

    pub fn clock(&self) -> u64 {
        self.history.clock()
    }

    pub fn current(&self) -> &[f64] {
        self.history.latest()
    }

    /// `ξ_n`: the sum of `a(ν(m,i)) · M_{m+1}(i)` over the updates applied so far.
    pub fn noise_sum(&self) -> &[f64] {
        &self.noise_sum
    }

    /// `a(ν(n,i))` for every agent at the current clock.
    pub fn steps(&self, policy: &StepSizePolicy) -> Vec<f64> {
        self.schedule.counters().as_slice().iter().map(|c| policy.at(*c)).collect()
    }

    /// Draws the active set, delays, error and noise for the current tick.
    pub fn draw(&mut self, models: &mut StochasticModels) -> TickSample {
        let n = self.clock();
        let d = self.dim();
        let mut active = vec![false; d];
        self.schedule.draw(n, &mut active);
        let mut delays = DelayMatrix::zeros(d);
        models.delays.sample_tick(n, &mut delays);
        let error = models.errors.sample(n);
        let error_norm = models.errors.model().norm().eval_unchecked(&error);
        TickSample { n, active, delays, error, error_norm, noise: models.noise.sample(n) }
    }

    /// Applies a drawn sample: one step of the recursion, followed by the
    /// projection map when a region is given. The state is left untouched on
    /// error.
    pub fn apply(
        &mut self,
        field: &dyn ObjectiveField,
        steps: &StepSizePolicy,
        sample: &TickSample,
        region: Option<&ProjectionRegion>,
    ) -> Result<TickRecord> {
        let n = self.clock();
        let d = self.dim();
        if sample.n != n {
            return Err(Error::Misaligned(format!("sample for tick {} applied at tick {n}", sample.n)));
        }
        if field.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: field.dim() });
        }
        let step_sizes = self.steps(steps);
        let current = self.history.latest();
        let mut next = current.to_vec();
        let mut noise_sum = self.noise_sum.clone();
        let mut view = vec![0.0; d];
        for i in (0..d).filter(|i| sample.active[*i]) {
            let column = sample.delays.column(i);
            let fi = if column.iter().all(|t| *t == 0) {
                field.component(i, current)
            } else {
                self.history.delayed_view_into(i, &column, &mut view)?;
                field.component(i, &view)
            };
            let a = step_sizes[i];
            next[i] = current[i] + a * (fi + sample.error[i] + sample.noise[i]);
            if !next[i].is_finite() {
                return Err(Error::Divergence { n, component: i, value: next[i] });
            }
            noise_sum[i] += a * sample.noise[i];
        }
        let projected = match region {
            Some(r) => {
                let projected = r.project(&mut next);
                assert!(
                    r.in_outer(&next),
                    "projective iterate left the outer ball at tick {n}: radius {}",
                    r.radius_of(&next)
                );
                projected
            }
            None => false,
        };
        self.history.push(&next)?;
        self.schedule.record(&sample.active);
        self.noise_sum = noise_sum;
        Ok(TickRecord {
            n,
            active: sample.active.clone(),
            steps: step_sizes,
            error_norm: sample.error_norm,
            max_delay: sample.delays.max(),
            projected,
        })
    }
}

/// One tick of the recursion.
pub fn sa_step(
    state: &mut SimState,
    field: &dyn ObjectiveField,
    models: &mut StochasticModels,
    steps: &StepSizePolicy,
) -> Result<TickRecord> {
    let sample = state.draw(models);
    state.apply(field, steps, &sample, None)
}

/// One tick of the projective counterpart.
pub fn projective_step(
    state: &mut SimState,
    field: &dyn ObjectiveField,
    models: &mut StochasticModels,
    steps: &StepSizePolicy,
    region: &ProjectionRegion,
) -> Result<TickRecord> {
    let sample = state.draw(models);
    state.apply(field, steps, &sample, Some(region))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{LinearField, WeightedNorm};
    use crate::stochastics::{DelayModel, ErrorModel, NoiseModel};

    fn state(x0: Vec<f64>, activation: ActivationPolicy) -> SimState {
        SimState::new(x0, activation, 7, None).unwrap()
    }

    #[test]
    fn one_explicit_step() {
        let f = LinearField::scaled_identity(2, -1.0);
        let mut s = state(vec![1.0, 1.0], ActivationPolicy::All);
        let mut m = StochasticModels::deterministic(2);
        let rec = sa_step(&mut s, &f, &mut m, &StepSizePolicy::Constant { a0: 0.1 }).unwrap();
        assert_eq!(s.current(), &[0.9, 0.9]);
        assert_eq!(rec.n, 0);
        assert_eq!(s.clock(), 1);
        assert_eq!(s.schedule.counters().as_slice(), &[1, 1]);
    }

    #[test]
    fn inactive_agent_frozen() {
        let f = LinearField::scaled_identity(2, -1.0);
        let mut s = state(vec![1.0, 1.0], ActivationPolicy::Bernoulli { probs: vec![1.0, 0.0] });
        let mut m = StochasticModels::deterministic(2);
        sa_step(&mut s, &f, &mut m, &StepSizePolicy::Constant { a0: 0.1 }).unwrap();
        assert_eq!(s.current(), &[0.9, 1.0]);
    }

    #[test]
    fn divergence_reports_component() {
        let f = LinearField::scaled_identity(2, f64::MAX);
        let mut s = state(vec![1.0, 1.0], ActivationPolicy::All);
        let mut m = StochasticModels::deterministic(2);
        let steps = StepSizePolicy::Constant { a0: 1.0 };
        let mut result = Ok(());
        for _ in 0..10 {
            if let Err(e) = sa_step(&mut s, &f, &mut m, &steps) {
                result = Err(e);
                break;
            }
        }
        match result {
            Err(Error::Divergence { component, value, .. }) => {
                assert_eq!(component, 0);
                assert!(!value.is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_reduction_matches_euler() {
        let f = LinearField::from_rows(&[vec![-1.0, 0.5], vec![0.2, -2.0]]).unwrap();
        let mut s = state(vec![0.3, -0.7], ActivationPolicy::All);
        let mut m = StochasticModels::deterministic(2);
        let steps = StepSizePolicy::Constant { a0: 0.05 };
        let mut x = vec![0.3, -0.7];
        for _ in 0..200 {
            sa_step(&mut s, &f, &mut m, &steps).unwrap();
            let fx = f.eval(&x);
            x = x.iter().zip(&fx).map(|(v, g)| v + 0.05 * g).collect();
        }
        assert_eq!(s.current(), x.as_slice());
    }

    #[test]
    fn projective_step_stays_in_outer_ball() {
        let f = LinearField::scaled_identity(2, 1.0);
        let region = ProjectionRegion::centered(1.0, 2.0, WeightedNorm::Euclidean);
        let mut s = state(vec![0.5, 0.5], ActivationPolicy::All);
        let mut m = StochasticModels::new(
            DelayModel::Geometric { mean: 2.0 },
            ErrorModel::Zero,
            NoiseModel::BoundedUniform { bound: 0.5 },
            2,
            3,
        )
        .unwrap();
        let steps = StepSizePolicy::Constant { a0: 0.5 };
        let mut any_projected = false;
        for _ in 0..500 {
            any_projected |= projective_step(&mut s, &f, &mut m, &steps, &region).unwrap().projected;
            assert!(region.radius_of(s.current()) < 2.0);
        }
        assert!(any_projected);
    }

    #[test]
    fn noise_sum_tracks_applied_noise() {
        let f = LinearField::scaled_identity(1, 0.0);
        let mut s = state(vec![0.0], ActivationPolicy::All);
        let mut m = StochasticModels::new(DelayModel::Zero, ErrorModel::Zero, NoiseModel::Rademacher { bound: 1.0 }, 1, 2)
            .unwrap();
        for _ in 0..100 {
            sa_step(&mut s, &f, &mut m, &StepSizePolicy::harmonic(10.0)).unwrap();
        }
        // with a zero field the iterate is exactly the noise partial sum
        assert!((s.current()[0] - s.noise_sum()[0]).abs() < 1e-12);
    }

    #[test]
    fn misaligned_sample_rejected() {
        let f = LinearField::scaled_identity(1, -1.0);
        let mut s = state(vec![1.0], ActivationPolicy::All);
        let mut m = StochasticModels::deterministic(1);
        let mut sample = s.draw(&mut m);
        sample.n = 4;
        assert!(matches!(s.apply(&f, &StepSizePolicy::harmonic(1.0), &sample, None), Err(Error::Misaligned(_))));
        assert_eq!(s.clock(), 0);
    }
}
