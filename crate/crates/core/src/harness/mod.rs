//! Experiment driver: config parsing and validation, the shipped
//! experiment kinds, and machine-readable outputs (CSV trajectories, JSON
//! reports).

mod analysis;
mod experiments;
mod output;

pub use analysis::{fit_damped_oscillation, rms_distance};
pub use experiments::{
    filter_sweep, mask_search, mask_search_splits, memory_sweep, run_dynamics, run_experiment,
    DynamicsResult, FilterSweepReport, MaskCandidate, MaskSearchReport, MemorySweepReport,
};
pub use output::{trajectory_csv, write_string};

use crate::bath::{BathError, BathSpec, CouplingAxis, SpectralDensity};
use crate::engine::{EngineConfig, EngineError, Mask};
use crate::tls::{DensityMatrix, TlsError, TwoLevelSystem};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Tls(#[from] TlsError),
}

impl HarnessError {
    /// CLI exit code: 2 for validation problems, 3 for resource limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Syntax(_) => 2,
            HarnessError::Engine(EngineError::Resource { .. }) => 3,
            HarnessError::Engine(EngineError::Config(_)) => 2,
            _ => 1,
        }
    }
}

/// Which column drives report distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SigmaZ,
    Coherence,
}

impl Observable {
    pub fn of(&self, rho: &DensityMatrix) -> f64 {
        match self {
            Observable::SigmaZ => rho.sigma_z_expectation(),
            Observable::Coherence => rho.elements[0][1].norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    X,
    Z,
    Both,
}

#[derive(Debug, Clone)]
pub enum ExperimentKind {
    Dynamics,
    FilterSweep {
        thetas: Vec<f64>,
    },
    MemorySweep {
        axis: SweepAxis,
        t_mems: Vec<f64>,
    },
    MaskSearch {
        n_mask_x: Option<usize>,
        n_mask_z: Option<usize>,
        total_budget: Option<usize>,
        good_factor: f64,
        bad_factor: f64,
    },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::FilterSweep { .. } => "filter_sweep",
            ExperimentKind::MemorySweep { .. } => "memory_sweep",
            ExperimentKind::MaskSearch { .. } => "mask_search",
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub tls: TwoLevelSystem,
    pub bath_x: Option<BathSpec>,
    pub bath_z: Option<BathSpec>,
    pub engine: EngineConfig,
    pub experiment: ExperimentKind,
    pub directory: PathBuf,
    pub observable: Observable,
}

// ---------------------------------------------------------------------------
// raw deserialization layer

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    baths: Option<RawBaths>,
    grid: Option<RawGrid>,
    engine: Option<RawEngine>,
    initial_state: Option<RawState>,
    experiment: Option<RawExperiment>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaths {
    x: Option<RawBath>,
    z: Option<RawBath>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    gamma: Option<f64>,
    omega_c: Option<f64>,
    s: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dt: Option<f64>,
    n_steps: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    t_mem_x: Option<f64>,
    t_mem_z: Option<f64>,
    mask_x: Option<Vec<u32>>,
    mask_z: Option<Vec<u32>>,
    theta: Option<f64>,
    extended_memory: Option<bool>,
    max_records: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    rho00: Option<[f64; 2]>,
    rho01: Option<[f64; 2]>,
    rho10: Option<[f64; 2]>,
    rho11: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: Option<String>,
    thetas: Option<Vec<f64>>,
    axis: Option<SweepAxis>,
    t_mems: Option<Vec<f64>>,
    n_mask_x: Option<usize>,
    n_mask_z: Option<usize>,
    total_budget: Option<usize>,
    good_factor: Option<f64>,
    bad_factor: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
    observable: Option<Observable>,
}

struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn new() -> Self {
        Validator { errors: Vec::new() }
    }

    fn require<T>(&mut self, value: Option<T>, path: &str) -> Option<T> {
        if value.is_none() {
            self.errors.push(format!("{path}: missing required field"));
        }
        value
    }

    fn check(&mut self, ok: bool, path: &str, msg: &str) {
        if !ok {
            self.errors.push(format!("{path}: {msg}"));
        }
    }
}

fn build_bath(
    raw: &RawBath,
    axis: CouplingAxis,
    path: &str,
    v: &mut Validator,
) -> Option<BathSpec> {
    let gamma = v.require(raw.gamma, &format!("{path}.gamma"))?;
    let omega_c = v.require(raw.omega_c, &format!("{path}.omega_c"))?;
    let beta = v.require(raw.beta, &format!("{path}.beta"))?;
    let s = raw.s.unwrap_or(1.0);
    let sd = match SpectralDensity::new(gamma, omega_c, s) {
        Ok(sd) => sd,
        Err(e) => {
            v.errors.push(format!("{path}: {e}"));
            return None;
        }
    };
    match BathSpec::new(sd, beta, axis) {
        Ok(b) => Some(b),
        Err(e) => {
            v.errors.push(format!("{path}.beta: {e}"));
            None
        }
    }
}

/// Parse and fully validate a config file, reporting every problem found.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Syntax(e.to_string()))?;
    let mut v = Validator::new();

    let delta = raw.system.as_ref().and_then(|s| s.delta).unwrap_or(1.0);
    let tls = match TwoLevelSystem::new(delta) {
        Ok(t) => Some(t),
        Err(e) => {
            v.errors.push(format!("system.delta: {e}"));
            None
        }
    };

    let (bath_x, bath_z) = match raw.baths.as_ref() {
        None => {
            v.errors
                .push("baths: at least one of baths.x / baths.z is required".into());
            (None, None)
        }
        Some(b) => {
            if b.x.is_none() && b.z.is_none() {
                v.errors
                    .push("baths: at least one of baths.x / baths.z is required".into());
            }
            (
                b.x.as_ref()
                    .and_then(|r| build_bath(r, CouplingAxis::X, "baths.x", &mut v)),
                b.z.as_ref()
                    .and_then(|r| build_bath(r, CouplingAxis::Z, "baths.z", &mut v)),
            )
        }
    };

    let grid = raw.grid.as_ref();
    let dt = v.require(grid.and_then(|g| g.dt), "grid.dt");
    let n_steps = v.require(grid.and_then(|g| g.n_steps), "grid.n_steps");
    if let Some(dt) = dt {
        v.check(dt > 0.0, "grid.dt", "must be > 0");
    }
    if let Some(n) = n_steps {
        v.check(n > 0, "grid.n_steps", "must be >= 1");
    }

    let re = raw.engine.unwrap_or_default();
    let theta = re.theta.unwrap_or(0.0);
    v.check(theta >= 0.0, "engine.theta", "must be >= 0");
    let extended = re.extended_memory.unwrap_or(false);

    // memory windows in steps, for mask validation
    let mem_steps = |t_mem: Option<f64>, path: &str, v: &mut Validator| -> Option<usize> {
        let (dt, n) = (dt?, n_steps?);
        match t_mem {
            None => Some(n),
            Some(tm) => {
                if !(tm > 0.0) {
                    v.errors.push(format!("{path}: must be > 0"));
                    return None;
                }
                let steps = tm / dt;
                if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                    v.errors
                        .push(format!("{path}: {tm} is not a multiple of grid.dt"));
                    return None;
                }
                Some((steps.round() as usize).clamp(1, n))
            }
        }
    };
    let mem_x = mem_steps(re.t_mem_x, "engine.t_mem_x", &mut v);
    let mem_z = mem_steps(re.t_mem_z, "engine.t_mem_z", &mut v);

    let build_mask = |lags: &Option<Vec<u32>>,
                      mem: Option<usize>,
                      path: &str,
                      v: &mut Validator|
     -> Option<Mask> {
        let bound = if extended { n_steps } else { mem };
        match lags {
            None => Mask::uniform(bound.unwrap_or(1).min(32)).ok(),
            Some(lags) => match Mask::new(lags.clone()) {
                Ok(m) => {
                    if let Some(bound) = bound {
                        if m.max_lag() as usize >= bound {
                            v.errors.push(format!(
                                "{path}: lag {} must be below the memory window of {bound} steps",
                                m.max_lag()
                            ));
                            return None;
                        }
                    }
                    Some(m)
                }
                Err(e) => {
                    v.errors.push(format!("{path}: {e}"));
                    None
                }
            },
        }
    };
    let mask_x = build_mask(&re.mask_x, mem_x, "engine.mask_x", &mut v);
    let mask_z = build_mask(&re.mask_z, mem_z, "engine.mask_z", &mut v);

    let initial_state = match raw.initial_state.as_ref() {
        None => DensityMatrix::z_plus(),
        Some(s) => {
            let el = |o: Option<[f64; 2]>| {
                o.map(|[re, im]| Complex64::new(re, im))
                    .unwrap_or(Complex64::new(0.0, 0.0))
            };
            let rho = DensityMatrix::from_elements([
                [el(s.rho00), el(s.rho01)],
                [el(s.rho10), el(s.rho11)],
            ]);
            v.check(
                rho.hermiticity_defect() <= 1e-12,
                "initial_state",
                "must be hermitian",
            );
            v.check(
                (rho.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-10,
                "initial_state",
                "must have trace 1",
            );
            rho
        }
    };

    let rexp = raw.experiment.unwrap_or_default();
    let kind_name = rexp.kind.clone().unwrap_or_else(|| "dynamics".into());
    let experiment = match kind_name.as_str() {
        "dynamics" => Some(ExperimentKind::Dynamics),
        "filter_sweep" => {
            let thetas = rexp.thetas.clone().unwrap_or_default();
            if thetas.is_empty() {
                v.errors
                    .push("experiment.thetas: required for filter_sweep".into());
                None
            } else {
                v.check(
                    thetas.windows(2).all(|w| w[0] <= w[1]),
                    "experiment.thetas",
                    "must be sorted ascending",
                );
                v.check(
                    thetas.iter().all(|t| *t >= 0.0),
                    "experiment.thetas",
                    "must be >= 0",
                );
                Some(ExperimentKind::FilterSweep { thetas })
            }
        }
        "memory_sweep" => {
            let axis = rexp.axis.unwrap_or(SweepAxis::Both);
            let t_mems = rexp.t_mems.clone().unwrap_or_default();
            if t_mems.is_empty() {
                v.errors
                    .push("experiment.t_mems: required for memory_sweep".into());
                None
            } else {
                if let Some(dt) = dt {
                    for tm in &t_mems {
                        let steps = tm / dt;
                        v.check(
                            (steps - steps.round()).abs() <= 1e-9 * steps.max(1.0),
                            "experiment.t_mems",
                            "every cutoff must be a multiple of grid.dt",
                        );
                    }
                }
                Some(ExperimentKind::MemorySweep { axis, t_mems })
            }
        }
        "mask_search" => {
            let good = rexp.good_factor.unwrap_or(2.0);
            let bad = rexp.bad_factor.unwrap_or(5.0);
            v.check(good >= 1.0, "experiment.good_factor", "must be >= 1");
            v.check(
                bad >= good,
                "experiment.bad_factor",
                "must be >= good_factor",
            );
            if rexp.total_budget.is_none() && rexp.n_mask_x.is_none() && rexp.n_mask_z.is_none() {
                v.errors.push(
                    "experiment: mask_search needs n_mask_x / n_mask_z or total_budget".into(),
                );
                None
            } else {
                Some(ExperimentKind::MaskSearch {
                    n_mask_x: rexp.n_mask_x,
                    n_mask_z: rexp.n_mask_z,
                    total_budget: rexp.total_budget,
                    good_factor: good,
                    bad_factor: bad,
                })
            }
        }
        other => {
            v.errors
                .push(format!("experiment.kind: unknown kind '{other}'"));
            None
        }
    };

    let rout = raw.output.unwrap_or_default();
    let directory = PathBuf::from(rout.directory.unwrap_or_else(|| "out".into()));
    let observable = rout.observable.unwrap_or(Observable::SigmaZ);

    if !v.errors.is_empty() {
        return Err(HarnessError::Validation(v.errors));
    }

    let mut engine = EngineConfig::new(dt.unwrap(), n_steps.unwrap())
        .map_err(|e| HarnessError::Validation(vec![format!("grid: {e}")]))?;
    engine.t_mem_x = re.t_mem_x;
    engine.t_mem_z = re.t_mem_z;
    engine.mask_x = mask_x.unwrap();
    engine.mask_z = mask_z.unwrap();
    engine.theta = theta;
    engine.extended_memory = extended;
    engine.initial_state = initial_state;
    if let Some(cap) = re.max_records {
        engine.max_records = cap;
    }

    Ok(ExperimentConfig {
        tls: tls.unwrap(),
        bath_x,
        bath_z,
        engine,
        experiment: experiment.unwrap(),
        directory,
        observable,
    })
}
