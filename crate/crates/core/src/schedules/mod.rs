//! Step-size policies, active-set generation and the rescaled timeline.

pub mod activation;
pub mod step;
pub mod timeline;

pub use activation::{ActivationPolicy, ActivationSampler, AgentCounters, AgentSchedule};
pub use step::StepSizePolicy;
pub use timeline::{balance_ratio, counters_trace, effective_step, timeline, EffectiveStep};
