//! Simulation of a rigid spinning sphere bouncing on a compliant frictional
//! surface.
//!
//! The crate provides:
//!
//! - closed-form rigid impact with Coulomb friction in the normal-impulse
//!   domain ([`rigid`]), with a fine-step oracle;
//! - linear Kelvin-Voigt and generalized elasto-plastic contact laws
//!   ([`surface`]);
//! - event-driven integration of the resulting piecewise-smooth dynamics,
//!   with rolling handled as Filippov sliding ([`filippov`]);
//! - location and classification of the two-fold singularity that governs
//!   lift-off while rolling ([`singularity`]);
//! - experiment drivers: initial-condition sweeps, spin-reversal manifold
//!   bisection, the rolling-lift-off perturbation experiment, and
//!   rigid-limit convergence studies ([`sweep`]);
//! - a CLI plus config/CSV/JSON plumbing ([`cli`], [`config`], [`io`]).

// Validation guards use `!(v > 0.0)` deliberately: unlike `v <= 0.0` the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod filippov;
pub mod io;
pub mod rigid;
pub mod singularity;
pub mod state;
pub mod surface;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
pub use filippov::{simulate_bounce, IntegratorConfig, Trajectory};
pub use rigid::{classify_rigid_case, impulse_trace_oracle, rigid_bounce, RigidParams};
pub use state::{BallState, PhaseTag, SlipDir};
pub use surface::{KelvinVoigtParams, SurfaceModel};
pub use units::UnitSystem;
