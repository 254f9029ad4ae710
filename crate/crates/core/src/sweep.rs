//! Experiment drivers over initial-condition space: touchdown-grid sweeps,
//! spin-reversal manifold bisection, the rolling-lift-off perturbation
//! experiment, and rigid-limit convergence studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filippov::{simulate_bounce, IntegratorConfig, Trajectory};
use crate::rigid::{rigid_bounce, RigidParams};
use crate::state::{BallState, PhaseTag};
use crate::surface::{kv_restitution_exact, KelvinVoigtParams, SurfaceModel};

/// Inclusive linearly spaced 1-D grid.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Grid1 {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid1 {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }
}

/// Touchdown-condition grid over (x', y', omega).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_dot: Grid1,
    pub y_dot: Grid1,
    pub omega: Grid1,
}

impl SweepGrid {
    /// Dimensionless touchdown ranges of the artificial-turf campaign.
    pub fn table_ranges() -> Self {
        Self {
            x_dot: Grid1 { min: 71.1, max: 1810.0, count: 6 },
            y_dot: Grid1 { min: -1710.0, max: -216.0, count: 6 },
            omega: Grid1 { min: -477.0, max: 109.0, count: 7 },
        }
    }

    pub fn len(&self) -> usize {
        self.x_dot.count.max(1) * self.y_dot.count.max(1) * self.omega.count.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<BallState> {
        let mut out = Vec::with_capacity(self.len());
        for &xd in &self.x_dot.values() {
            for &yd in &self.y_dot.values() {
                for &om in &self.omega.values() {
                    out.push(BallState::touchdown(xd, yd, om));
                }
            }
        }
        out
    }
}

/// Outcome of a single swept bounce.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub ic: BallState,
    /// Touchdown slip velocity.
    pub h0: f64,
    /// Lift-off slip velocity (NaN when the simulation failed).
    pub hf: f64,
    pub phases: Vec<PhaseTag>,
    pub rolled: bool,
    pub failed: Option<String>,
}

/// One bounce per grid point; per-point failures are recorded and the sweep
/// continues. Points run in parallel with deterministic result order.
pub fn sweep_ics(model: &SurfaceModel, grid: &SweepGrid, cfg: &IntegratorConfig) -> Vec<SweepRecord> {
    grid.points()
        .into_par_iter()
        .map(|ic| match simulate_bounce(model, &ic, cfg) {
            Ok(traj) => SweepRecord {
                ic,
                h0: ic.slip_velocity(),
                hf: traj.final_slip_velocity(),
                phases: traj.phase_sequence(),
                rolled: traj.contains_roll(),
                failed: None,
            },
            Err(e) => SweepRecord {
                ic,
                h0: ic.slip_velocity(),
                hf: f64::NAN,
                phases: Vec::new(),
                rolled: false,
                failed: Some(e.to_string()),
            },
        })
        .collect()
}

/// Result of the spin-reversal manifold bisection.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ManifoldResult {
    /// Family parameter at the located manifold point.
    pub param: f64,
    /// Final bracket around the manifold.
    pub bracket: (f64, f64),
    /// Lift-off slip velocity at `param`.
    pub hf_at_param: f64,
    pub hf_left_sign: i8,
    pub hf_right_sign: i8,
    pub left_rolled: bool,
    pub right_rolled: bool,
    pub iterations: usize,
}

/// Bisect a one-parameter family of touchdown conditions for the parameter
/// whose bounce lifts off rolling (H_F = 0), the boundary between topspin
/// and backspin lift-off.
pub fn find_spin_reversal_manifold<F>(
    model: &SurfaceModel,
    family: F,
    bracket: (f64, f64),
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<ManifoldResult>
where
    F: Fn(f64) -> BallState,
{
    let eval = |param: f64| -> Result<(f64, bool)> {
        let traj = simulate_bounce(model, &family(param), cfg)?;
        Ok((traj.final_slip_velocity(), traj.contains_roll()))
    };

    let (mut lo, mut hi) = bracket;
    let (hf_lo, lo_rolled) = eval(lo)?;
    let (hf_hi, hi_rolled) = eval(hi)?;
    if hf_lo == 0.0 || hf_hi == 0.0 {
        // An endpoint already sits on the manifold.
        let (param, hf) = if hf_lo == 0.0 { (lo, hf_lo) } else { (hi, hf_hi) };
        return Ok(ManifoldResult {
            param,
            bracket,
            hf_at_param: hf,
            hf_left_sign: sign8(hf_lo),
            hf_right_sign: sign8(hf_hi),
            left_rolled: lo_rolled,
            right_rolled: hi_rolled,
            iterations: 0,
        });
    }
    if hf_lo.signum() == hf_hi.signum() {
        return Err(Error::Bracket { lo, hi });
    }

    let mut iterations = 0;
    let mut mid;
    let mut hf_mid;
    loop {
        iterations += 1;
        mid = 0.5 * (lo + hi);
        (hf_mid, _) = eval(mid)?;
        let width = hi - lo;
        if hf_mid.abs() <= tol || width.abs() <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        if hf_mid.signum() == hf_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if iterations >= 200 {
            break;
        }
    }

    Ok(ManifoldResult {
        param: mid,
        bracket: (lo, hi),
        hf_at_param: hf_mid,
        hf_left_sign: sign8(hf_lo),
        hf_right_sign: sign8(hf_hi),
        left_rolled: lo_rolled,
        right_rolled: hi_rolled,
        iterations,
    })
}

fn sign8(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Family varying the touchdown spin at fixed incoming velocities, the
/// default parameterization of the manifold search.
pub fn omega_family(x_dot: f64, y_dot: f64) -> impl Fn(f64) -> BallState {
    move |omega| BallState::touchdown(x_dot, y_dot, omega)
}

/// The rolling-lift-off perturbation experiment: the base state plus spin
/// perturbations of +/- delta.
pub fn perturbation_experiment(
    model: &SurfaceModel,
    p0: &BallState,
    delta: f64,
    cfg: &IntegratorConfig,
) -> Result<[Trajectory; 3]> {
    let mut plus = *p0;
    plus.omega += delta;
    let mut minus = *p0;
    minus.omega -= delta;
    Ok([
        simulate_bounce(model, p0, cfg)?,
        simulate_bounce(model, &plus, cfg)?,
        simulate_bounce(model, &minus, cfg)?,
    ])
}

/// One row of the rigid-limit convergence table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RigidLimitRow {
    pub eps2: f64,
    pub lift_off: BallState,
    /// Simulated -y'_F / y'_0.
    pub restitution: f64,
    /// Max-norm deviation of (x'_F, y'_F, omega_F) from the rigid bounce
    /// with the closed-form restitution of the model's d2.
    pub deviation: f64,
}

/// Convergence of the compliant bounce to the rigid closed form along a
/// family of Kelvin-Voigt surfaces indexed by eps2.
pub fn rigid_limit_study<F>(
    family: F,
    eps2_values: &[f64],
    state0: &BallState,
    cfg: &IntegratorConfig,
) -> Result<Vec<RigidLimitRow>>
where
    F: Fn(f64) -> KelvinVoigtParams,
{
    let mut rows = Vec::with_capacity(eps2_values.len());
    for &eps2 in eps2_values {
        let kv = family(eps2);
        let model = SurfaceModel::kelvin_voigt(kv)?;
        let traj = simulate_bounce(&model, state0, cfg)?;
        let f = traj.final_state();
        let r = kv_restitution_exact(kv.d2);
        let rigid = rigid_bounce(state0, &RigidParams::new(kv.mu, r)?)?.final_state;
        let deviation = (f.x_dot - rigid.x_dot)
            .abs()
            .max((f.y_dot - rigid.y_dot).abs())
            .max((f.omega - rigid.omega).abs());
        rows.push(RigidLimitRow {
            eps2,
            lift_off: f,
            restitution: -f.y_dot / state0.y_dot,
            deviation,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{calibrated_kv, restitution_asymptotic};

    fn model() -> SurfaceModel {
        SurfaceModel::kelvin_voigt(calibrated_kv()).unwrap()
    }

    #[test]
    fn single_point_vertical_drop() {
        let grid = SweepGrid {
            x_dot: Grid1 { min: 0.0, max: 0.0, count: 1 },
            y_dot: Grid1 { min: -1.0, max: -1.0, count: 1 },
            omega: Grid1 { min: 0.0, max: 0.0, count: 1 },
        };
        let recs = sweep_ics(&model(), &grid, &IntegratorConfig::default());
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.failed.is_none());
        assert_eq!(r.h0, 0.0);
        assert!(r.hf.abs() < 1e-9);
        assert_eq!(r.rolled, r.phases.contains(&PhaseTag::Roll));
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = SweepGrid {
            x_dot: Grid1 { min: 0.5, max: 2.0, count: 3 },
            y_dot: Grid1 { min: -3.0, max: -1.0, count: 2 },
            omega: Grid1 { min: -1.0, max: 4.0, count: 3 },
        };
        let a = sweep_ics(&model(), &grid, &IntegratorConfig::default());
        let b = sweep_ics(&model(), &grid, &IntegratorConfig::default());
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.ic, rb.ic);
            assert_eq!(ra.hf.to_bits(), rb.hf.to_bits(), "nondeterministic H_F");
            assert_eq!(ra.phases, rb.phases);
        }
    }

    #[test]
    fn manifold_bisection_converges_with_rolling_endpoints() {
        let m = model();
        let cfg = IntegratorConfig::default();
        let result =
            find_spin_reversal_manifold(&m, omega_family(1.0, -5.0), (1.0, 8.0), 1e-6, &cfg)
                .unwrap();
        assert!(result.hf_at_param.abs() < 1e-6);
        assert_ne!(result.hf_left_sign, result.hf_right_sign);
        assert!(result.left_rolled && result.right_rolled);
        assert!(result.iterations <= 60);

        // Adjacent sweep points straddling the manifold get opposite signs.
        let below = simulate_bounce(&m, &BallState::touchdown(1.0, -5.0, result.param - 0.5), &cfg)
            .unwrap()
            .final_slip_velocity();
        let above = simulate_bounce(&m, &BallState::touchdown(1.0, -5.0, result.param + 0.5), &cfg)
            .unwrap()
            .final_slip_velocity();
        assert!(below.signum() != above.signum());
    }

    #[test]
    fn manifold_requires_sign_change() {
        let m = model();
        // Both endpoints deep in the slip-throughout regime.
        let err = find_spin_reversal_manifold(
            &m,
            omega_family(30.0, -1.0),
            (40.0, 60.0),
            1e-6,
            &IntegratorConfig::default(),
        );
        assert!(matches!(err, Err(Error::Bracket { .. })));
    }

    #[test]
    fn nested_tolerances_give_nested_brackets() {
        let m = model();
        let cfg = IntegratorConfig::default();
        let coarse =
            find_spin_reversal_manifold(&m, omega_family(1.0, -5.0), (1.0, 8.0), 1e-3, &cfg)
                .unwrap();
        let fine =
            find_spin_reversal_manifold(&m, omega_family(1.0, -5.0), (1.0, 8.0), 1e-9, &cfg)
                .unwrap();
        assert!(fine.bracket.0 >= coarse.bracket.0 - 1e-12);
        assert!(fine.bracket.1 <= coarse.bracket.1 + 1e-12);
    }

    #[test]
    fn zero_perturbation_reproduces_base_trajectory() {
        let m = model();
        let p0 = BallState::new(0.3543, -0.1603128, -0.1608, 3.4739, 0.1603128);
        let [a, b, c] = perturbation_experiment(&m, &p0, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        assert_eq!(a.samples.len(), c.samples.len());
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(sa.state, sb.state);
        }
        for (sa, sc) in a.samples.iter().zip(&c.samples) {
            assert_eq!(sa.state, sc.state);
        }
    }

    #[test]
    fn rigid_limit_deviation_shrinks() {
        // eps2 -> 0 with eps1 = eps2 / eta held fixed, so the tangential
        // compliance shrinks along with the normal one.
        let d2 = 0.1;
        let family = |eps2: f64| KelvinVoigtParams {
            d1: 0.3,
            d2,
            eta: eps2 / 10.0,
            eps2,
            mu: 0.4,
            g: 1.0,
        };
        let state0 = BallState::touchdown(5.0, -1.0, 5.0);
        let rows = rigid_limit_study(family, &[1e-1, 1e-2, 1e-3], &state0, &IntegratorConfig::default())
            .unwrap();
        assert!(rows.windows(2).all(|w| w[1].deviation <= w[0].deviation));
        assert!(rows.last().unwrap().deviation < 1e-3);
        // The damper-0.2 surface lands on the printed asymptotic ~0.745.
        let r_sim = rows.last().unwrap().restitution;
        assert!((r_sim - restitution_asymptotic(2.0 * d2)).abs() < 0.01, "r = {r_sim}");
    }

    #[test]
    fn undamped_normal_bounce_conserves_speed() {
        let family = |eps2: f64| KelvinVoigtParams {
            d1: 0.0,
            d2: 0.0,
            eta: eps2,
            eps2,
            mu: 0.3,
            g: 0.0,
        };
        let state0 = BallState::touchdown(0.0, -2.0, 0.0);
        let rows =
            rigid_limit_study(family, &[1e-2], &state0, &IntegratorConfig::default()).unwrap();
        assert!((rows[0].restitution - 1.0).abs() < 1e-6);
    }
}
