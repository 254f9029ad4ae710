//! Event-driven integration of the piecewise-smooth bounce dynamics.
//!
//! Away from the switching surface `H = x' + omega = 0` the motion follows
//! the smooth field `F1` (H > 0) or `F2` (H < 0). On the surface, rolling is
//! Filippov sliding: the unique convex combination `F_s = (1-a) F1 + a F2`
//! tangent to the surface. Transitions are located by bracketing bisection
//! on scalar event functions; contact ends when the normal force crosses
//! zero from above.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{BallState, PhaseTag, SlipDir, CONTACT_FORCE_GAIN, SPIN_FORCE_GAIN};
use crate::surface::SurfaceModel;

/// Fraction of the tangential load that survives in the sliding field:
/// on `H = 0` the convex combination reduces to `x'' = -(5/7) A`,
/// `omega' = +(5/7) A`, which keeps `F_s . grad(H) = 0` identically.
const ROLL_LOAD_FRACTION: f64 = SPIN_FORCE_GAIN / CONTACT_FORCE_GAIN;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Relative tolerance of the embedded Runge-Kutta pair.
    pub rel_tol: f64,
    /// Absolute tolerance of the stepper.
    pub abs_tol: f64,
    /// Tolerance on event functions at located events.
    pub event_tol: f64,
    /// |H| containment scale for sliding samples.
    pub sliding_tol: f64,
    pub max_steps: usize,
    /// Safety horizon; a bounce lasts O(pi) rescaled time units.
    pub max_tau: f64,
    pub initial_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            event_tol: 1e-10,
            sliding_tol: 1e-8,
            max_steps: 1_000_000,
            max_tau: 1e4,
            initial_step: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("event_tol", self.event_tol),
            ("sliding_tol", self.sliding_tol),
            ("max_tau", self.max_tau),
            ("initial_step", self.initial_step),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub state: BallState,
    pub phase: PhaseTag,
    pub lambda_n: f64,
    pub lambda_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    Touchdown,
    RollEntry,
    RollExit { into: SlipDir },
    LiftOff { regime: PhaseTag },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub tau: f64,
    pub state: BallState,
}

/// Time-ordered contact history of a single bounce.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn final_state(&self) -> BallState {
        self.samples.last().expect("trajectory has samples").state
    }

    pub fn final_slip_velocity(&self) -> f64 {
        self.final_state().slip_velocity()
    }

    pub fn lift_off(&self) -> Option<&Event> {
        self.events.iter().find(|e| matches!(e.kind, EventKind::LiftOff { .. }))
    }

    pub fn contains_roll(&self) -> bool {
        self.samples.iter().any(|s| s.phase == PhaseTag::Roll)
    }

    /// Contact phases in order, consecutive duplicates collapsed.
    pub fn phase_sequence(&self) -> Vec<PhaseTag> {
        let mut out: Vec<PhaseTag> = Vec::new();
        for s in &self.samples {
            if out.last() != Some(&s.phase) {
                out.push(s.phase);
            }
        }
        out
    }
}

/// Convex coefficient of the sliding field,
/// `a = (F1 . grad H) / ((F1 - F2) . grad H)`, computed from the fields.
pub fn sliding_alpha(model: &SurfaceModel, p: &BallState) -> Result<f64> {
    let w1 = model.tangency_fn(p, SlipDir::Positive);
    let w2 = model.tangency_fn(p, SlipDir::Negative);
    let denom = w1 - w2;
    if denom.abs() <= 1e-14 * (1.0 + w1.abs().max(w2.abs())) {
        return Err(Error::SingularAlpha { denominator: denom });
    }
    Ok(w1 / denom)
}

/// The sliding field `F_s = (1-a) F1 + a F2` on the switching surface.
pub fn sliding_field(model: &SurfaceModel, p: &BallState) -> Result<[f64; 5]> {
    let alpha = sliding_alpha(model, p)?;
    let (f1, f2) = model.eval_fields(p);
    let mut fs = [0.0; 5];
    for i in 0..5 {
        fs[i] = (1.0 - alpha) * f1[i] + alpha * f2[i];
    }
    Ok(fs)
}

/// First and second directional derivatives of H along one field:
/// `(F_i . grad) H` and `(F_i . grad)^2 H`.
pub fn directional_derivatives(model: &SurfaceModel, p: &BallState, dir: SlipDir) -> (f64, f64) {
    let first = model.tangency_fn(p, dir);
    let field = model.field(p, dir);
    let grad = model.tangency_grad(p, dir);
    let second = (0..5).map(|i| field[i] * grad[i]).sum();
    (first, second)
}

// ---------------------------------------------------------------------------
// Dormand-Prince 4(5) stepper
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Slip(SlipDir),
    Roll,
}

impl Phase {
    fn tag(self) -> PhaseTag {
        match self {
            Phase::Slip(d) => d.phase(),
            Phase::Roll => PhaseTag::Roll,
        }
    }
}

struct Stepper<'m> {
    model: &'m SurfaceModel,
    cfg: IntegratorConfig,
}

impl<'m> Stepper<'m> {
    fn rhs(&self, p: &BallState, phase: Phase) -> [f64; 5] {
        match phase {
            Phase::Slip(dir) => self.model.field(p, dir),
            Phase::Roll => {
                // Regularized sliding field; identical to the convex
                // combination but free of the 0/0 at lambda_n -> 0.
                let a = self.model.tangential_load(p);
                let lam = self.model.normal_force(p);
                [p.x_dot, -ROLL_LOAD_FRACTION * a, p.y_dot, lam, ROLL_LOAD_FRACTION * a]
            }
        }
    }

    /// One embedded Dormand-Prince step attempt. Returns the 5th-order
    /// solution and the scaled error norm.
    fn dp_step(&self, p: &BallState, phase: Phase, h: f64) -> (BallState, f64) {
        let y = p.as_array();
        let f = |v: [f64; 5]| self.rhs(&BallState::from_array(v), phase);
        let add = |y: [f64; 5], terms: &[(f64, [f64; 5])]| {
            let mut out = y;
            for (c, k) in terms {
                for i in 0..5 {
                    out[i] += h * c * k[i];
                }
            }
            out
        };

        let k1 = f(y);
        let k2 = f(add(y, &[(1.0 / 5.0, k1)]));
        let k3 = f(add(y, &[(3.0 / 40.0, k1), (9.0 / 40.0, k2)]));
        let k4 = f(add(y, &[(44.0 / 45.0, k1), (-56.0 / 15.0, k2), (32.0 / 9.0, k3)]));
        let k5 = f(add(
            y,
            &[
                (19372.0 / 6561.0, k1),
                (-25360.0 / 2187.0, k2),
                (64448.0 / 6561.0, k3),
                (-212.0 / 729.0, k4),
            ],
        ));
        let k6 = f(add(
            y,
            &[
                (9017.0 / 3168.0, k1),
                (-355.0 / 33.0, k2),
                (46732.0 / 5247.0, k3),
                (49.0 / 176.0, k4),
                (-5103.0 / 18656.0, k5),
            ],
        ));
        let y5 = add(
            y,
            &[
                (35.0 / 384.0, k1),
                (500.0 / 1113.0, k3),
                (125.0 / 192.0, k4),
                (-2187.0 / 6784.0, k5),
                (11.0 / 84.0, k6),
            ],
        );
        let k7 = f(y5);

        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let mut err_sq = 0.0;
        for i in 0..5 {
            let mut e = 0.0;
            for (j, k) in ks.iter().enumerate() {
                e += E[j] * k[i];
            }
            e *= h;
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max(y5[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        (BallState::from_array(y5), (err_sq / 5.0).sqrt())
    }

    fn project_roll(&self, p: &mut BallState) {
        let h = p.slip_velocity();
        p.x_dot -= 0.5 * h;
        p.omega -= 0.5 * h;
    }

    /// Integrate over exactly `dt` with adaptive sub-steps; returns the end
    /// state. Roll states are projected back onto H = 0 after every
    /// accepted sub-step.
    fn integrate_interval(&self, p0: &BallState, phase: Phase, dt: f64, h_hint: f64) -> Result<BallState> {
        let mut p = *p0;
        let mut remaining = dt;
        let mut h = h_hint.min(dt).max(1e-300);
        let mut steps = 0usize;
        while remaining > 0.0 {
            if steps > self.cfg.max_steps {
                return Err(Error::MaxSteps { max_steps: self.cfg.max_steps });
            }
            steps += 1;
            let step = h.min(remaining);
            let (p_new, err) = self.dp_step(&p, phase, step);
            if err <= 1.0 || step <= 1e-15 * dt.max(1.0) {
                p = p_new;
                if phase == Phase::Roll {
                    self.project_roll(&mut p);
                }
                remaining -= step;
            }
            let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h = step * factor.clamp(0.2, 5.0);
        }
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Event-driven simulation
// ---------------------------------------------------------------------------

struct EventHit {
    dt: f64,
    state: BallState,
    kind: EventCandidate,
}

#[derive(Clone, Copy, PartialEq)]
enum EventCandidate {
    LiftOff,
    SlipHitsSurface,
    AlphaZero,
    AlphaOne,
}

/// Simulate a single contact interval from touchdown (or any in-contact
/// state) to lift-off.
///
/// The active field is `F1` for H > 0, `F2` for H < 0, and the sliding
/// field on H = 0. Roll is entered when H reaches zero with the surface
/// attracting (`F1.grad H < 0 < F2.grad H`); crossings with both tangency
/// functions of one sign pass through. Roll is left when the convex
/// coefficient reaches 0 (into F1) or 1 (into F2). Contact ends when the
/// normal force crosses zero from above; if that happens while still
/// rolling the lift-off event carries `regime = Roll` (the measure-zero
/// rolling lift-off).
pub fn simulate_bounce(
    model: &SurfaceModel,
    state0: &BallState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    state0.validate()?;
    let stepper = Stepper { model, cfg: *cfg };

    let lam0 = model.normal_force(state0);
    let lam_scale = lam0.abs().max(1.0);
    if lam0 < -cfg.event_tol * lam_scale {
        return Err(Error::NotInContact { lambda_n: lam0 });
    }

    let mut p = *state0;
    let mut tau = 0.0;
    let mut traj = Trajectory::default();

    // Initial phase.
    let h_scale = |p: &BallState| 1.0 + p.x_dot.abs() + p.omega.abs();
    let mut phase = initial_phase(model, &p, cfg);
    if phase == Phase::Roll {
        stepper.project_roll(&mut p);
    }
    traj.events.push(Event { kind: EventKind::Touchdown, tau, state: p });
    push_sample(&mut traj, model, tau, &p, phase);

    if lam0 <= cfg.event_tol * lam_scale {
        // Zero normal force at the start: contact only begins if the force
        // is growing (e.g. an undamped touchdown); otherwise this is an
        // immediate lift-off.
        let f = stepper.rhs(&p, phase);
        let (ln_y, ln_yd) = model.normal_force_grad(&p);
        let lam_rate = f[2] * ln_y + f[3] * ln_yd;
        if lam_rate <= 0.0 {
            traj.events.push(Event {
                kind: EventKind::LiftOff { regime: phase.tag() },
                tau,
                state: p,
            });
            return Ok(traj);
        }
    }

    let mut h = cfg.initial_step;
    for _ in 0..cfg.max_steps {
        if tau > cfg.max_tau {
            return Err(Error::MaxSteps { max_steps: cfg.max_steps });
        }

        // One accepted macro step.
        let mut step = h;
        let (mut p_new, mut err) = stepper.dp_step(&p, phase, step);
        while err > 1.0 && step > 1e-15 * tau.max(1.0) {
            step *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
            (p_new, err) = stepper.dp_step(&p, phase, step);
        }
        if phase == Phase::Roll {
            stepper.project_roll(&mut p_new);
        }
        h = step * if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };

        // Event detection over [tau, tau + step].
        let hit = detect_event(model, &stepper, &p, phase, step, &p_new, cfg, lam_scale)?;
        match hit {
            None => {
                tau += step;
                p = p_new;
                push_sample(&mut traj, model, tau, &p, phase);
            }
            Some(hit) => {
                tau += hit.dt;
                p = hit.state;
                match hit.kind {
                    EventCandidate::LiftOff => {
                        push_sample(&mut traj, model, tau, &p, phase);
                        traj.events.push(Event {
                            kind: EventKind::LiftOff { regime: phase.tag() },
                            tau,
                            state: p,
                        });
                        return Ok(traj);
                    }
                    EventCandidate::SlipHitsSurface => {
                        let w1 = model.tangency_fn(&p, SlipDir::Positive);
                        let w2 = model.tangency_fn(&p, SlipDir::Negative);
                        if w1 < 0.0 && w2 > 0.0 {
                            // Attracting: enter roll.
                            stepper.project_roll(&mut p);
                            phase = Phase::Roll;
                            traj.events.push(Event { kind: EventKind::RollEntry, tau, state: p });
                        } else {
                            // Crossing: continue with the other field.
                            let new_dir = match phase {
                                Phase::Slip(SlipDir::Positive) => SlipDir::Negative,
                                Phase::Slip(SlipDir::Negative) => SlipDir::Positive,
                                Phase::Roll => unreachable!("surface hit only fires while slipping"),
                            };
                            // Nudge H across so the event does not re-fire.
                            let nudge = 0.5 * cfg.event_tol * h_scale(&p) * new_dir.sign();
                            p.x_dot += nudge;
                            phase = Phase::Slip(new_dir);
                        }
                        push_sample(&mut traj, model, tau, &p, phase);
                    }
                    EventCandidate::AlphaZero | EventCandidate::AlphaOne => {
                        let into = if hit.kind == EventCandidate::AlphaZero {
                            SlipDir::Positive
                        } else {
                            SlipDir::Negative
                        };
                        stepper.project_roll(&mut p);
                        phase = Phase::Slip(into);
                        traj.events.push(Event { kind: EventKind::RollExit { into }, tau, state: p });
                        push_sample(&mut traj, model, tau, &p, phase);
                    }
                }
            }
        }
    }
    Err(Error::MaxSteps { max_steps: cfg.max_steps })
}

fn initial_phase(model: &SurfaceModel, p: &BallState, cfg: &IntegratorConfig) -> Phase {
    let h = p.slip_velocity();
    let scale = cfg.sliding_tol * (1.0 + p.x_dot.abs() + p.omega.abs());
    if h.abs() > scale {
        return Phase::Slip(if h > 0.0 { SlipDir::Positive } else { SlipDir::Negative });
    }
    let w1 = model.tangency_fn(p, SlipDir::Positive);
    let w2 = model.tangency_fn(p, SlipDir::Negative);
    if w1 < 0.0 && w2 > 0.0 {
        Phase::Roll
    } else if w1 + w2 > 0.0 {
        // Both tangency functions positive: H is pushed upward.
        Phase::Slip(SlipDir::Positive)
    } else {
        Phase::Slip(SlipDir::Negative)
    }
}

fn push_sample(traj: &mut Trajectory, model: &SurfaceModel, tau: f64, p: &BallState, phase: Phase) {
    let forces = model.contact_forces(p, phase.tag());
    traj.samples.push(Sample {
        tau,
        state: *p,
        phase: phase.tag(),
        lambda_n: forces.lambda_n,
        lambda_t: forces.lambda_t,
    });
}

/// Locate the earliest event inside an accepted step, if any. Lift-off wins
/// ties (it ends the model's validity).
#[allow(clippy::too_many_arguments)]
fn detect_event(
    model: &SurfaceModel,
    stepper: &Stepper,
    p0: &BallState,
    phase: Phase,
    step: f64,
    p_end: &BallState,
    cfg: &IntegratorConfig,
    lam_scale: f64,
) -> Result<Option<EventHit>> {
    let mut candidates: Vec<EventHit> = Vec::new();
    let lam_tol = cfg.event_tol * lam_scale;

    // Lift-off: normal force crosses zero from above.
    let lam_end = model.normal_force(p_end);
    if lam_end <= 0.0 {
        let (dt, state) = bisect_event(
            stepper,
            p0,
            phase,
            step,
            &|q: &BallState| model.normal_force(q),
            lam_tol,
        )?;
        candidates.push(EventHit { dt, state, kind: EventCandidate::LiftOff });
    }

    match phase {
        Phase::Slip(dir) => {
            // Switching-surface hit: H reaches zero against the slip sign.
            let h_end = p_end.slip_velocity() * dir.sign();
            if h_end <= 0.0 {
                let (dt, state) = bisect_event(
                    stepper,
                    p0,
                    phase,
                    step,
                    &|q: &BallState| q.slip_velocity() * dir.sign(),
                    cfg.event_tol,
                )?;
                candidates.push(EventHit { dt, state, kind: EventCandidate::SlipHitsSurface });
            }
        }
        Phase::Roll => {
            // Roll exit through either fold. Alpha diverges as lambda_n -> 0,
            // so evaluate the equivalent polynomial event functions
            //   alpha     ~ w1  (exit into F1 when w1 crosses 0 upward)
            //   alpha - 1 ~ -w2 (exit into F2 when w2 crosses 0 downward)
            // which stay finite at the lift-off boundary.
            let w1_end = model.tangency_fn(p_end, SlipDir::Positive);
            if w1_end >= 0.0 {
                let (dt, state) = bisect_event(
                    stepper,
                    p0,
                    phase,
                    step,
                    &|q: &BallState| -model.tangency_fn(q, SlipDir::Positive),
                    cfg.event_tol,
                )?;
                candidates.push(EventHit { dt, state, kind: EventCandidate::AlphaZero });
            }
            let w2_end = model.tangency_fn(p_end, SlipDir::Negative);
            if w2_end <= 0.0 {
                let (dt, state) = bisect_event(
                    stepper,
                    p0,
                    phase,
                    step,
                    &|q: &BallState| model.tangency_fn(q, SlipDir::Negative),
                    cfg.event_tol,
                )?;
                candidates.push(EventHit { dt, state, kind: EventCandidate::AlphaOne });
            }
        }
    }

    if candidates.is_empty() {
        return Ok(None);
    }
    // Earliest event wins; lift-off wins ties within the event tolerance.
    candidates.sort_by(|a, b| a.dt.partial_cmp(&b.dt).expect("event times are finite"));
    let earliest_dt = candidates[0].dt;
    let tie = candidates
        .iter()
        .find(|c| c.kind == EventCandidate::LiftOff && c.dt <= earliest_dt + cfg.event_tol);
    let chosen = tie.unwrap_or(&candidates[0]);
    Ok(Some(EventHit { dt: chosen.dt, state: chosen.state, kind: chosen.kind }))
}

/// Bracketing bisection for the first zero of `f` along the flow over
/// `[0, step]`, given `f(0) > 0 >= f(step)` (callers arrange signs so the
/// crossing is downward). Returns the located time and state.
fn bisect_event(
    stepper: &Stepper,
    p0: &BallState,
    phase: Phase,
    step: f64,
    f: &dyn Fn(&BallState) -> f64,
    f_tol: f64,
) -> Result<(f64, BallState)> {
    let mut lo = 0.0;
    let mut hi = step;
    let mut state_hi = stepper.integrate_interval(p0, phase, hi, step)?;
    // The step endpoint may sit exactly on the zero already.
    let mut best = (hi, state_hi);
    for _ in 0..200 {
        let width = hi - lo;
        let f_hi = f(&best.1);
        if f_hi.abs() <= f_tol || width <= 1e-16 * step.max(1e-12) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let state_mid = stepper.integrate_interval(p0, phase, mid, width)?;
        if f(&state_mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            state_hi = state_mid;
        }
        best = (hi, state_hi);
    }
    Ok(best)
}
