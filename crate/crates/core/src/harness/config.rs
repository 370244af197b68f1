use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{
    bellman_residual_field, gradient_field, FiniteMdp, LinearField, ObjectiveField, QuadraticField,
    SmoothField,
};
use crate::sa::{ProjectionRegion, RunSpec};
use crate::schedules::{ActivationPolicy, StepSizePolicy};
use crate::stochastics::rng::{stream, StreamDomain};
use crate::stochastics::{DelayModel, ErrorModel, NoiseModel};

/// Objective selector of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// `f(x) = K x` with the given rows of `K`.
    Linear { rows: Vec<Vec<f64>> },
    /// `f(x) = scale · x`.
    ScaledIdentity { dimension: usize, scale: f64 },
    /// Descent field `f_i(x) = −(M_i x)_i`, one matrix per agent.
    Quadratic { matrices: Vec<Vec<Vec<f64>>> },
    /// Random positive definite matrices drawn from `instance_seed`
    /// (defaults to the run seed).
    RandomQuadratic {
        dimension: usize,
        /// One matrix shared by every agent.
        #[serde(default)]
        shared: bool,
        #[serde(default)]
        instance_seed: Option<u64>,
    },
    /// Bellman residual of an MDP fixture file; relative paths are resolved
    /// against the configuration file's directory.
    Bellman { fixture: PathBuf },
    /// Bellman residual of a random discounted MDP.
    RandomMdp {
        states: usize,
        actions: usize,
        alpha: f64,
        #[serde(default)]
        instance_seed: Option<u64>,
    },
    /// Negative gradient of `½ θᵀ M θ`; identity when `matrix` is omitted.
    QuadraticBowl {
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        dimension: Option<usize>,
    },
    /// Negative gradient of `(a − x)² + b (y − x²)²`.
    Rosenbrock {
        #[serde(default = "default_rosenbrock_a")]
        a: f64,
        #[serde(default = "default_rosenbrock_b")]
        b: f64,
    },
}

fn default_rosenbrock_a() -> f64 {
    1.0
}

fn default_rosenbrock_b() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Trace file; `.jsonl` selects JSON lines, anything else CSV.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Report file for `a2vi`, `a2pg` and `check`.
    #[serde(default)]
    pub report: Option<PathBuf>,
}

/// A single run, as read from a TOML file. Unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub horizon: u64,
    /// Optional cross-check of the objective's dimension.
    #[serde(default)]
    pub dimension: Option<usize>,
    pub objective: ObjectiveConfig,
    pub step_size: StepSizePolicy,
    #[serde(default)]
    pub activation: ActivationPolicy,
    #[serde(default)]
    pub delay: DelayModel,
    #[serde(default)]
    pub error: ErrorModel,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub projection: Option<ProjectionRegion>,
    /// Initial iterate; uniform on `[−1, 1]^d` under the seed when omitted.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Keep only this many past iterates; older delayed reads are errors.
    #[serde(default)]
    pub history_window: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// An objective ready to run, with the structured object behind it.
#[derive(Clone)]
pub struct ResolvedObjective {
    pub field: Arc<dyn ObjectiveField>,
    pub mdp: Option<Arc<FiniteMdp>>,
    pub smooth: Option<SmoothField>,
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
}

impl ObjectiveConfig {
    pub fn resolve(&self, seed: u64, base_dir: &Path) -> Result<ResolvedObjective> {
        let plain = |field: Arc<dyn ObjectiveField>| ResolvedObjective { field, mdp: None, smooth: None };
        let with_mdp = |mdp: FiniteMdp| -> Result<ResolvedObjective> {
            let mdp = Arc::new(mdp);
            Ok(ResolvedObjective {
                field: Arc::new(bellman_residual_field(mdp.clone())?),
                mdp: Some(mdp),
                smooth: None,
            })
        };
        let with_smooth = |smooth: SmoothField| ResolvedObjective {
            field: Arc::new(gradient_field(smooth.clone())),
            mdp: None,
            smooth: Some(smooth),
        };
        match self {
            ObjectiveConfig::Linear { rows } => Ok(plain(Arc::new(LinearField::from_rows(rows)?))),
            ObjectiveConfig::ScaledIdentity { dimension, scale } => {
                if *dimension == 0 || !scale.is_finite() {
                    return Err(Error::Config("scaled identity needs dimension >= 1 and a finite scale".into()));
                }
                Ok(plain(Arc::new(LinearField::scaled_identity(*dimension, *scale))))
            }
            ObjectiveConfig::Quadratic { matrices } => Ok(plain(Arc::new(QuadraticField::from_rows(matrices)?))),
            ObjectiveConfig::RandomQuadratic { dimension, shared, instance_seed } => {
                if *dimension == 0 {
                    return Err(Error::Config("dimension must be positive".into()));
                }
                let mut rng = stream(instance_seed.unwrap_or(seed), StreamDomain::Instance, 0, 0);
                let field = if *shared {
                    QuadraticField::shared(crate::objectives::random_pd(*dimension, &mut rng))?
                } else {
                    QuadraticField::random(*dimension, &mut rng)?
                };
                Ok(plain(Arc::new(field)))
            }
            ObjectiveConfig::Bellman { fixture } => {
                let path = if fixture.is_absolute() { fixture.clone() } else { base_dir.join(fixture) };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                with_mdp(FiniteMdp::parse(&text)?)
            }
            ObjectiveConfig::RandomMdp { states, actions, alpha, instance_seed } => {
                let mut rng = stream(instance_seed.unwrap_or(seed), StreamDomain::Instance, 0, 0);
                with_mdp(FiniteMdp::random(*states, *actions, *alpha, &mut rng)?)
            }
            ObjectiveConfig::QuadraticBowl { matrix: m, dimension } => {
                let m = match (m, dimension) {
                    (Some(rows), dim) => {
                        let m = matrix(rows)?;
                        if dim.is_some_and(|d| d != m.nrows()) {
                            return Err(Error::DimensionMismatch { expected: m.nrows(), got: dim.unwrap() });
                        }
                        m
                    }
                    (None, Some(d)) if *d > 0 => DMatrix::identity(*d, *d),
                    (None, _) => return Err(Error::Config("quadratic bowl needs a matrix or a dimension".into())),
                };
                Ok(with_smooth(SmoothField::quadratic_bowl(m)?))
            }
            ObjectiveConfig::Rosenbrock { a, b } => Ok(with_smooth(SmoothField::rosenbrock(*a, *b)?)),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn from_toml_value(value: toml::Value, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::from_toml_str(&text, &base)
    }

    pub fn resolve_objective(&self) -> Result<ResolvedObjective> {
        let resolved = self.objective.resolve(self.seed, &self.base_dir)?;
        if let Some(d) = self.dimension {
            if d != resolved.field.dim() {
                return Err(Error::DimensionMismatch { expected: d, got: resolved.field.dim() });
            }
        }
        Ok(resolved)
    }

    /// The configuration as embedded in output headers.
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configs serialize")
    }

    /// Validated run specification for an already resolved objective.
    pub fn run_spec_with(&self, objective: &ResolvedObjective) -> Result<RunSpec> {
        let spec = RunSpec {
            field: objective.field.clone(),
            steps: self.step_size,
            activation: self.activation.clone(),
            delay: self.delay.clone(),
            error: self.error.clone(),
            noise: self.noise,
            region: self.projection.clone(),
            x0: self.initial.clone(),
            horizon: self.horizon,
            seed: self.seed,
            window: self.history_window,
            config: self.resolved_json(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        self.run_spec_with(&self.resolve_objective()?)
    }

    /// Full validation without running.
    pub fn validate(&self) -> Result<()> {
        self.run_spec().map(|_| ())
    }
}
