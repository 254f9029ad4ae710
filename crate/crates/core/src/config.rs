//! Run configuration: sectioned key/value config text, defaults, merging.
//!
//! One config file drives every subcommand; CLI flags override file values,
//! which override built-in defaults. Format:
//!
//! ```text
//! # comment
//! [model]
//! kind = kv
//! d2 = 0.015
//!
//! [sweep]
//! xdot = 71.1:1810:6
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filippov::IntegratorConfig;
use crate::state::BallState;
use crate::surface::{calibrated_kv, depth_stiffening, KelvinVoigtParams, SurfaceModel};
use crate::sweep::{Grid1, SweepGrid};
use crate::units::UnitSystem;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    /// "kv" (calibrated Kelvin-Voigt) or "kv-depth-stiffening".
    pub kind: String,
    pub kv: KelvinVoigtParams,
    /// Depth-stiffening slope for the generalized catalog model.
    pub depth: f64,
    /// Shear-rate coefficient of the generalized tangential damping.
    pub shear: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: "kv".into(), kv: calibrated_kv(), depth: 0.5, shear: 0.1 }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<SurfaceModel> {
        match self.kind.as_str() {
            "kv" => SurfaceModel::kelvin_voigt(self.kv),
            "kv-depth-stiffening" => {
                SurfaceModel::generic(depth_stiffening(self.kv, self.depth, self.shear))
            }
            other => Err(Error::Config(format!(
                "unknown model kind '{other}' (expected kv or kv-depth-stiffening)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ManifoldConfig {
    /// Fixed touchdown velocities of the one-parameter spin family.
    pub x_dot: f64,
    pub y_dot: f64,
    /// Bisection bracket over touchdown spin.
    pub lo: f64,
    pub hi: f64,
    /// |H_F| convergence tolerance.
    pub tol: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self { x_dot: 1.0, y_dot: -5.0, lo: 1.0, hi: 8.0, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: String,
    /// "csv" or "json".
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), format: "csv".into() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RigidConfig {
    pub mu: f64,
    pub r: f64,
}

impl Default for RigidConfig {
    fn default() -> Self {
        Self { mu: 0.3, r: 0.5 }
    }
}

/// Full run configuration; every subcommand reads the sections it needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Initial state for `bounce`/`perturb`; defaults to the rolling-landing
    /// state of the perturbation experiment.
    pub initial: BallState,
    pub integrator: IntegratorConfig,
    pub sweep: SweepGrid,
    pub manifold: ManifoldConfig,
    /// Spin perturbation of the perturbation experiment.
    pub perturb_delta: f64,
    pub rigid: RigidConfig,
    pub units: UnitSystem,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            initial: BallState::new(0.3543, -0.1603128, -0.1608, 3.4739, 0.1603128),
            integrator: IntegratorConfig::default(),
            sweep: SweepGrid::table_ranges(),
            manifold: ManifoldConfig::default(),
            perturb_delta: 0.01,
            rigid: RigidConfig::default(),
            units: UnitSystem::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.build()?;
        self.integrator.validate()?;
        self.units.validate()?;
        if !(self.manifold.tol > 0.0) {
            return Err(Error::Config("manifold tol must be positive".into()));
        }
        if self.output.format != "csv" && self.output.format != "json" {
            return Err(Error::Config(format!(
                "output format must be csv or json, got '{}'",
                self.output.format
            )));
        }
        Ok(())
    }
}

/// Parse sectioned key/value config text over the defaults. Unknown sections
/// or keys and invariant violations are reported with their line number.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::Config(format!("line {line_no}: malformed section header")));
            }
            section = line[1..line.len() - 1].trim().to_string();
            match section.as_str() {
                "model" | "initial" | "integrator" | "sweep" | "manifold" | "perturb"
                | "rigid" | "units" | "output" => {}
                other => {
                    return Err(Error::Config(format!("line {line_no}: unknown section [{other}]")))
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {line_no}: expected 'key = value'")));
        };
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, &section, key, value)
            .map_err(|e| Error::Config(format!("line {line_no}: {e}")))?;
    }

    cfg.validate()?;
    Ok(cfg)
}

fn apply_key(cfg: &mut RunConfig, section: &str, key: &str, value: &str) -> Result<()> {
    let num = |v: &str| -> Result<f64> {
        v.parse::<f64>().map_err(|_| Error::Config(format!("'{v}' is not a number")))
    };
    let grid = |v: &str| -> Result<Grid1> {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("'{v}' is not a grid (want min:max:count)")));
        }
        Ok(Grid1 {
            min: num(parts[0])?,
            max: num(parts[1])?,
            count: parts[2]
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("'{}' is not a count", parts[2])))?,
        })
    };

    match (section, key) {
        ("model", "kind") => cfg.model.kind = value.to_string(),
        ("model", "d1") => cfg.model.kv.d1 = num(value)?,
        ("model", "d2") => {
            let d2 = num(value)?;
            if !(0.0..1.0).contains(&d2) {
                return Err(Error::Config(format!(
                    "d2 must be in [0, 1) so the normal subsystem is underdamped, got {d2}"
                )));
            }
            cfg.model.kv.d2 = d2;
        }
        ("model", "eta") => cfg.model.kv.eta = num(value)?,
        ("model", "eps2") => cfg.model.kv.eps2 = num(value)?,
        ("model", "mu") => cfg.model.kv.mu = num(value)?,
        ("model", "g") => cfg.model.kv.g = num(value)?,
        ("model", "depth") => cfg.model.depth = num(value)?,
        ("model", "shear") => cfg.model.shear = num(value)?,
        ("initial", "x") => cfg.initial.x = num(value)?,
        ("initial", "xdot") => cfg.initial.x_dot = num(value)?,
        ("initial", "y") => cfg.initial.y = num(value)?,
        ("initial", "ydot") => cfg.initial.y_dot = num(value)?,
        ("initial", "omega") => cfg.initial.omega = num(value)?,
        ("integrator", "rel_tol") => cfg.integrator.rel_tol = num(value)?,
        ("integrator", "abs_tol") => cfg.integrator.abs_tol = num(value)?,
        ("integrator", "event_tol") => cfg.integrator.event_tol = num(value)?,
        ("integrator", "sliding_tol") => cfg.integrator.sliding_tol = num(value)?,
        ("integrator", "max_steps") => {
            cfg.integrator.max_steps = value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("'{value}' is not a step count")))?
        }
        ("integrator", "max_tau") => cfg.integrator.max_tau = num(value)?,
        ("integrator", "initial_step") => cfg.integrator.initial_step = num(value)?,
        ("sweep", "xdot") => cfg.sweep.x_dot = grid(value)?,
        ("sweep", "ydot") => cfg.sweep.y_dot = grid(value)?,
        ("sweep", "omega") => cfg.sweep.omega = grid(value)?,
        ("manifold", "xdot0") => cfg.manifold.x_dot = num(value)?,
        ("manifold", "ydot0") => cfg.manifold.y_dot = num(value)?,
        ("manifold", "lo") => cfg.manifold.lo = num(value)?,
        ("manifold", "hi") => cfg.manifold.hi = num(value)?,
        ("manifold", "tol") => cfg.manifold.tol = num(value)?,
        ("perturb", "delta") => cfg.perturb_delta = num(value)?,
        ("rigid", "mu") => cfg.rigid.mu = num(value)?,
        ("rigid", "r") => cfg.rigid.r = num(value)?,
        ("units", "ball_radius_m") => cfg.units.ball_radius_m = num(value)?,
        ("units", "time_unit_s") => cfg.units.time_unit_s = num(value)?,
        ("output", "dir") => cfg.output.dir = value.to_string(),
        ("output", "format") => cfg.output.format = value.to_string(),
        ("", k) => return Err(Error::Config(format!("key '{k}' outside any section"))),
        (s, k) => return Err(Error::Config(format!("unknown key '{k}' in section [{s}]"))),
    }
    Ok(())
}
