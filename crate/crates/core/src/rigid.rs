//! Closed-form rigid bounce with Coulomb friction in the normal-impulse
//! domain, plus a fine-step impulse-domain oracle.
//!
//! The impact is instantaneous; the independent variable is the accumulated
//! normal impulse, along which the contact-point velocities obey
//! `d v_T / d v_N = -sign(v_T) * (7/2) mu` while slipping and `0` while
//! rolling. Rolling, once entered, is never left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{BallState, SlipDir, CONTACT_FORCE_GAIN, SPIN_FORCE_GAIN};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RigidParams {
    /// Coulomb friction coefficient, > 0.
    pub mu: f64,
    /// Kinematic coefficient of restitution, 0 < r <= 1.
    pub r: f64,
}

impl RigidParams {
    pub fn new(mu: f64, r: f64) -> Result<Self> {
        let p = Self { mu, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Model(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::Model(format!("r must be in (0, 1], got {}", self.r)));
        }
        Ok(())
    }
}

/// Which of the three impact regimes an initial condition falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RigidCase {
    /// |H0/ydot0| > (7/2) mu (1+r): slip of one sign through the whole impact.
    SlipThrough(SlipDir),
    /// Roll is entered during the restitution half of the impulse interval.
    RollInRestitution(SlipDir),
    /// Roll is entered during compression; `None` marks the degenerate
    /// rolling touchdown H0 = 0.
    RollInCompression(Option<SlipDir>),
}

impl std::fmt::Display for RigidCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (name, dir) = match self {
            RigidCase::SlipThrough(d) => ("I", Some(*d)),
            RigidCase::RollInRestitution(d) => ("II", Some(*d)),
            RigidCase::RollInCompression(d) => ("III", *d),
        };
        match dir {
            Some(SlipDir::Positive) => write!(f, "{name}+"),
            Some(SlipDir::Negative) => write!(f, "{name}-"),
            None => write!(f, "{name}"),
        }
    }
}

/// Outcome of the closed-form rigid bounce.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RigidOutcome {
    pub case: RigidCase,
    pub final_state: BallState,
    /// Normal impulse at roll onset, when roll occurs.
    pub roll_entry_impulse: Option<f64>,
}

/// Contact-point velocity trace `(v_T, v_N)` through the impulse domain.
#[derive(Clone, Debug)]
pub struct ImpulseTrace {
    pub samples: Vec<(f64, f64)>,
}

fn check_impact(state0: &BallState) -> Result<()> {
    state0.validate()?;
    if state0.y_dot >= 0.0 {
        return Err(Error::NotAnImpact { ydot: state0.y_dot });
    }
    Ok(())
}

/// Classify an impact into cases I/II/III with the slip-sign suffix.
///
/// Boundary equalities resolve toward rolling: the ratio equal to
/// `(7/2) mu` is case III, equal to `(7/2) mu (1+r)` is case II.
pub fn classify_rigid_case(state0: &BallState, params: &RigidParams) -> Result<RigidCase> {
    check_impact(state0)?;
    params.validate()?;
    let h0 = state0.slip_velocity();
    let Some(dir) = SlipDir::of_h(h0) else {
        return Ok(RigidCase::RollInCompression(None));
    };
    let ratio = (h0 / state0.y_dot).abs();
    let slope = CONTACT_FORCE_GAIN * params.mu;
    if ratio > slope * (1.0 + params.r) {
        Ok(RigidCase::SlipThrough(dir))
    } else if ratio > slope {
        Ok(RigidCase::RollInRestitution(dir))
    } else {
        Ok(RigidCase::RollInCompression(Some(dir)))
    }
}

/// Closed-form bounce: y'_F = -r y'_0 exactly; the tangential contact
/// velocity moves at slope -sign(H) (7/2) mu against the normal-velocity
/// gain (1+r)|y'_0| and freezes at zero; ball velocity and spin recover via
/// dx' = (2/7) dv_T and domega = (5/7) dv_T.
pub fn rigid_bounce(state0: &BallState, params: &RigidParams) -> Result<RigidOutcome> {
    let case = classify_rigid_case(state0, params)?;
    let h0 = state0.slip_velocity();
    let dv_n_total = -(1.0 + params.r) * state0.y_dot;
    let slope = CONTACT_FORCE_GAIN * params.mu;

    // Normal-velocity change consumed by the slipping segment.
    let dv_n_slip = (h0.abs() / slope).min(dv_n_total);
    let dv_t = -h0.signum() * slope * dv_n_slip;

    let final_state = BallState {
        x: state0.x,
        x_dot: state0.x_dot + dv_t / CONTACT_FORCE_GAIN,
        y: state0.y,
        y_dot: -params.r * state0.y_dot,
        omega: state0.omega + dv_t * SPIN_FORCE_GAIN / CONTACT_FORCE_GAIN,
    };
    let roll_entry_impulse = match case {
        RigidCase::SlipThrough(_) => None,
        _ => Some(dv_n_slip),
    };
    Ok(RigidOutcome { case, final_state, roll_entry_impulse })
}

/// Forward-Euler stepping of `d v_T / d v_N` through the impulse domain.
///
/// Independent cross-check for [`rigid_bounce`]: first-order accurate, with
/// the slip-to-roll switch located by clamping `v_T` at its zero crossing.
pub fn impulse_trace_oracle(
    state0: &BallState,
    params: &RigidParams,
    steps: usize,
) -> Result<ImpulseTrace> {
    check_impact(state0)?;
    params.validate()?;
    if steps < 10 {
        return Err(Error::Model(format!("oracle needs at least 10 steps, got {steps}")));
    }
    let v_n_end = -params.r * state0.y_dot;
    let dv_n = (v_n_end - state0.y_dot) / steps as f64;
    let slope = CONTACT_FORCE_GAIN * params.mu;

    let mut v_t = state0.slip_velocity();
    let mut v_n = state0.y_dot;
    let mut rolling = v_t == 0.0;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((v_t, v_n));
    for _ in 0..steps {
        v_n += dv_n;
        if !rolling {
            let dv_t = -v_t.signum() * slope * dv_n;
            if dv_t.abs() >= v_t.abs() {
                // Zero crossing inside this step: enter roll exactly at zero.
                v_t = 0.0;
                rolling = true;
            } else {
                v_t += dv_t;
            }
        }
        samples.push((v_t, v_n));
    }
    Ok(ImpulseTrace { samples })
}

impl ImpulseTrace {
    pub fn final_sample(&self) -> (f64, f64) {
        *self.samples.last().expect("trace is never empty")
    }

    /// Case implied by where (if anywhere) the trace reaches v_T = 0.
    pub fn implied_case(&self, h0: f64) -> RigidCase {
        let dir = SlipDir::of_h(h0);
        let Some(dir) = dir else {
            return RigidCase::RollInCompression(None);
        };
        let roll_at = self.samples.iter().find(|(v_t, _)| *v_t == 0.0).map(|&(_, v_n)| v_n);
        match roll_at {
            None => RigidCase::SlipThrough(dir),
            Some(v_n) if v_n < 0.0 => RigidCase::RollInCompression(Some(dir)),
            Some(_) => RigidCase::RollInRestitution(dir),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn params(mu: f64, r: f64) -> RigidParams {
        RigidParams::new(mu, r).unwrap()
    }

    #[test]
    fn classify_examples() {
        let p = params(0.3, 0.5);
        let s1 = BallState::touchdown(10.0, -2.0, 0.0);
        assert_eq!(classify_rigid_case(&s1, &p).unwrap(), RigidCase::SlipThrough(SlipDir::Positive));

        let s2 = BallState::touchdown(2.5, -2.0, 0.0);
        assert_eq!(
            classify_rigid_case(&s2, &p).unwrap(),
            RigidCase::RollInRestitution(SlipDir::Positive)
        );

        let s3 = BallState::touchdown(1.0, -2.0, -1.0);
        assert_eq!(classify_rigid_case(&s3, &p).unwrap(), RigidCase::RollInCompression(None));
        assert_eq!(classify_rigid_case(&s3, &p).unwrap().to_string(), "III");
    }

    #[test]
    fn boundary_ties_resolve_toward_rolling() {
        let p = params(0.3, 0.5);
        let slope = CONTACT_FORCE_GAIN * p.mu; // 1.05
        let s_iii = BallState::touchdown(slope * 2.0, -2.0, 0.0);
        assert_eq!(
            classify_rigid_case(&s_iii, &p).unwrap(),
            RigidCase::RollInCompression(Some(SlipDir::Positive))
        );
        let s_ii = BallState::touchdown(slope * (1.0 + p.r) * 2.0, -2.0, 0.0);
        assert_eq!(
            classify_rigid_case(&s_ii, &p).unwrap(),
            RigidCase::RollInRestitution(SlipDir::Positive)
        );
    }

    #[test]
    fn rejects_upward_touchdown() {
        let p = params(0.3, 0.5);
        let s = BallState::touchdown(1.0, 0.5, 0.0);
        assert!(matches!(classify_rigid_case(&s, &p), Err(Error::NotAnImpact { .. })));
    }

    #[test]
    fn bounce_case_i_closed_form() {
        let p = params(0.3, 0.5);
        let out = rigid_bounce(&BallState::touchdown(10.0, -2.0, 0.0), &p).unwrap();
        let f = out.final_state;
        assert!((f.x_dot - 9.1).abs() < 1e-12);
        assert!((f.omega - (-2.25)).abs() < 1e-12);
        assert!((f.y_dot - 1.0).abs() < 1e-12);
        assert!((f.slip_velocity() - 6.85).abs() < 1e-12);
        assert!(out.roll_entry_impulse.is_none());
    }

    #[test]
    fn bounce_case_ii_closed_form() {
        let p = params(0.3, 0.5);
        let out = rigid_bounce(&BallState::touchdown(2.5, -2.0, 0.0), &p).unwrap();
        let f = out.final_state;
        assert!((f.x_dot - (2.5 - 5.0 / 7.0)).abs() < 1e-12);
        assert!((f.omega - (-(2.5 - 5.0 / 7.0))).abs() < 1e-12);
        assert!((f.y_dot - 1.0).abs() < 1e-12);
        assert!(f.slip_velocity().abs() < 1e-12);
        let n_roll = out.roll_entry_impulse.unwrap();
        assert!((n_roll - 2.5 / 1.05).abs() < 1e-12);
    }

    #[test]
    fn bounce_rolling_touchdown_freezes_tangential_state() {
        let p = params(0.3, 0.5);
        let out = rigid_bounce(&BallState::touchdown(2.0, -2.0, -2.0), &p).unwrap();
        let f = out.final_state;
        assert_eq!(f.x_dot, 2.0);
        assert_eq!(f.omega, -2.0);
        assert!((f.y_dot - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_closed_form_case_i() {
        let p = params(0.3, 0.5);
        let s = BallState::touchdown(10.0, -2.0, 0.0);
        let trace = impulse_trace_oracle(&s, &p, 100_000).unwrap();
        let out = rigid_bounce(&s, &p).unwrap();
        let (v_t, v_n) = trace.final_sample();
        assert!((v_t - out.final_state.slip_velocity()).abs() < 1e-4);
        // v_N accumulates 1e5 additions; allow the summation rounding.
        assert!((v_n - out.final_state.y_dot).abs() < 1e-9);
    }

    #[test]
    fn oracle_case_iii_rolls_in_compression() {
        let p = params(0.3, 0.5);
        let s = BallState::touchdown(0.5, -2.0, 0.0);
        let trace = impulse_trace_oracle(&s, &p, 100_000).unwrap();
        let roll_at = trace.samples.iter().find(|(v_t, _)| *v_t == 0.0).unwrap().1;
        assert!(roll_at < 0.0, "roll onset at v_N = {roll_at}");
        assert_eq!(trace.implied_case(0.5), RigidCase::RollInCompression(Some(SlipDir::Positive)));
    }

    #[test]
    fn oracle_converges_first_order() {
        // The discretization error lives in the roll-onset location; on pure
        // slip segments the constant-slope Euler step is exact.
        let p = params(0.3, 0.5);
        let s = BallState::touchdown(2.5, -2.0, 0.0);
        let exact_onset = s.y_dot + rigid_bounce(&s, &p).unwrap().roll_entry_impulse.unwrap();
        let onset = |steps: usize| {
            let trace = impulse_trace_oracle(&s, &p, steps).unwrap();
            trace.samples.iter().find(|(v_t, _)| *v_t == 0.0).unwrap().1
        };
        let coarse = (onset(10) - exact_onset).abs();
        let fine = (onset(1_000_000) - exact_onset).abs();
        let dv_n_coarse = -(1.0 + p.r) * s.y_dot / 10.0;
        let dv_n_fine = -(1.0 + p.r) * s.y_dot / 1e6;
        assert!(coarse <= dv_n_coarse);
        assert!(fine <= dv_n_fine.max(1e-9));
        assert!(fine <= coarse);
    }

    #[test]
    fn oracle_slip_slope_is_contact_gain_times_mu() {
        let p = params(0.45, 0.7);
        let s = BallState::touchdown(-3.0, -2.0, -2.0);
        let trace = impulse_trace_oracle(&s, &p, 10_000).unwrap();
        let slope = CONTACT_FORCE_GAIN * p.mu;
        for w in trace.samples.windows(2) {
            let (t0, n0) = w[0];
            let (t1, n1) = w[1];
            if t0 == 0.0 || t1 == 0.0 {
                continue; // roll segment or the clamped switching step
            }
            let observed = ((t1 - t0) / (n1 - n0)).abs();
            assert!((observed - slope).abs() < 1e-9, "slope {observed} vs {slope}");
        }
    }

    #[test]
    fn no_slip_reentry_after_roll() {
        let p = params(0.4, 0.8);
        let s = BallState::touchdown(1.0, -3.0, -0.5);
        let trace = impulse_trace_oracle(&s, &p, 10_000).unwrap();
        let first_zero = trace.samples.iter().position(|(v_t, _)| *v_t == 0.0).unwrap();
        assert!(trace.samples[first_zero..].iter().all(|(v_t, _)| *v_t == 0.0));
    }

    #[test]
    fn classification_matches_bounce_structure_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let y_dot = -rng.gen_range(0.1..5.0);
            let h0: f64 = rng.gen_range(-20.0..20.0);
            let x_dot = rng.gen_range(-10.0..10.0);
            let s = BallState::touchdown(x_dot, y_dot, h0 - x_dot);
            let p = params(rng.gen_range(0.05..1.0), rng.gen_range(0.1..1.0));
            let case = classify_rigid_case(&s, &p).unwrap();
            let out = rigid_bounce(&s, &p).unwrap();
            assert_eq!(case, out.case);
            // Case structure consistent with the outcome.
            match case {
                RigidCase::SlipThrough(dir) => {
                    assert!(out.roll_entry_impulse.is_none());
                    assert_eq!(out.final_state.slip_velocity().signum(), dir.sign());
                }
                RigidCase::RollInRestitution(_) => {
                    let n = out.roll_entry_impulse.unwrap();
                    assert!(n > -s.y_dot && n < -(1.0 + p.r) * s.y_dot);
                    assert!(out.final_state.slip_velocity().abs() < 1e-12);
                }
                RigidCase::RollInCompression(_) => {
                    let n = out.roll_entry_impulse.unwrap();
                    assert!(n <= -s.y_dot);
                    assert!(out.final_state.slip_velocity().abs() < 1e-12);
                }
            }
            // Energy does not increase for r <= 1.
            let e0 = 0.5 * (s.x_dot.powi(2) + s.y_dot.powi(2)) + 0.2 * s.omega.powi(2);
            let f = out.final_state;
            let e1 = 0.5 * (f.x_dot.powi(2) + f.y_dot.powi(2)) + 0.2 * f.omega.powi(2);
            assert!(e1 <= e0 + 1e-12 * e0.max(1.0), "energy grew: {e0} -> {e1}");
        }
    }
}
