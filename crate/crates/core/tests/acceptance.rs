//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its pinned tolerances. Run with
//! `cargo test -p spinbounce --test acceptance -- --nocapture`.

mod common;

use std::time::Instant;

use rand::Rng;

use common::{fit_slope, random_generic, random_kv, random_model, rng, rolling_touchdown};
use spinbounce::filippov::{
    directional_derivatives, simulate_bounce, sliding_alpha, sliding_field, EventKind,
    IntegratorConfig,
};
use spinbounce::rigid::{classify_rigid_case, impulse_trace_oracle, rigid_bounce, RigidParams};
use spinbounce::singularity::{locate_two_fold, nu_product_asymptotic, two_fold_report, two_fold_seed, TwoFoldClass};
use spinbounce::state::{BallState, PhaseTag, SlipDir, CONTACT_FORCE_GAIN, SPIN_FORCE_GAIN};
use spinbounce::surface::{
    calibrated_kv, kv_energy, restitution_asymptotic, validate_generic_model, KelvinVoigtParams,
    SampleBox, SurfaceModel,
};
use spinbounce::sweep::{find_spin_reversal_manifold, omega_family, perturbation_experiment, sweep_ics, SweepGrid};

/// 1. Closed-form rigid bounce vs the 10^6-step impulse oracle over 1000
///    random impacts: final velocities within 1e-4, case labels identical.
#[test]
fn acceptance_1_rigid_oracle_agreement() {
    let start = Instant::now();
    let mut rng = rng(0xACCE_0001);
    for trial in 0..1000 {
        let y_dot = -rng.gen_range(0.1..5.0);
        let h0: f64 = rng.gen_range(-20.0..20.0);
        let x_dot = rng.gen_range(-10.0..10.0);
        let state0 = BallState::touchdown(x_dot, y_dot, h0 - x_dot);
        let params = RigidParams::new(rng.gen_range(0.05..1.0), rng.gen_range(0.1..1.0)).unwrap();

        let closed = rigid_bounce(&state0, &params).unwrap();
        let trace = impulse_trace_oracle(&state0, &params, 1_000_000).unwrap();
        let (v_t_end, v_n_end) = trace.final_sample();
        // Velocity/spin recovery from the tangential contact-velocity change.
        let dv_t = v_t_end - state0.slip_velocity();
        let oracle_x_dot = state0.x_dot + dv_t / CONTACT_FORCE_GAIN;
        let oracle_omega = state0.omega + dv_t * SPIN_FORCE_GAIN / CONTACT_FORCE_GAIN;

        let f = closed.final_state;
        assert!((f.x_dot - oracle_x_dot).abs() < 1e-4, "trial {trial}: x_dot");
        assert!((f.y_dot - v_n_end).abs() < 1e-4, "trial {trial}: y_dot");
        assert!((f.omega - oracle_omega).abs() < 1e-4, "trial {trial}: omega");

        let case = classify_rigid_case(&state0, &params).unwrap();
        assert_eq!(case, trace.implied_case(state0.slip_velocity()), "trial {trial}: case");
        assert_eq!(case, closed.case, "trial {trial}: closed-form case");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime budget exceeded: {elapsed:.1} s");
    println!("ACCEPTANCE 1 rigid-vs-oracle: PASS (1000 impacts, 1e-4 agreement, {elapsed:.1} s)");
}

/// 2. Simulated restitution of the vertical subsystem matches the printed
///    small-damping asymptotic exp(-(pi/2) d + d^2/2) within 0.01, where d is
///    the vertical damper coefficient (= 2 d2).
#[test]
fn acceptance_2_restitution_asymptotic() {
    let start = Instant::now();
    for d in [0.1, 0.2, 0.3] {
        let kv = KelvinVoigtParams {
            d1: 0.0,
            d2: d / 2.0,
            eta: 1e-4,
            eps2: 1e-3,
            mu: 0.3,
            g: 1.0,
        };
        let model = SurfaceModel::kelvin_voigt(kv).unwrap();
        let p0 = BallState::touchdown(0.0, -1.0, 0.0);
        let traj = simulate_bounce(&model, &p0, &IntegratorConfig::default()).unwrap();
        let r_sim = -traj.final_state().y_dot / p0.y_dot;
        let target = restitution_asymptotic(d);
        assert!(
            (r_sim - target).abs() < 0.01,
            "damper {d}: simulated {r_sim:.6} vs formula {target:.6}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "runtime budget exceeded: {elapsed:.1} s");
    println!("ACCEPTANCE 2 restitution-asymptotic: PASS (d in 0.1/0.2/0.3, |err| < 0.01, {elapsed:.2} s)");
}

/// 3. Perturbation experiment with the committed calibrated surface:
///    trajectory A lifts off rolling (|H_F| < 1e-6); the spin-perturbed
///    trajectories B and C lift off slipping with opposite-sign H_F and
///    nonzero slip velocity just before lift-off.
#[test]
fn acceptance_3_rolling_liftoff_reproduction() {
    let model = SurfaceModel::kelvin_voigt(calibrated_kv()).unwrap();
    let p0 = BallState::new(0.3543, -0.1603128, -0.1608, 3.4739, 0.1603128);
    assert_eq!(model.mu(), 0.3);
    let [a, b, c] =
        perturbation_experiment(&model, &p0, 0.01, &IntegratorConfig::default()).unwrap();

    let hf_a = a.final_slip_velocity();
    assert!(hf_a.abs() < 1e-6, "trajectory A lifts off with H_F = {hf_a}");
    assert!(a.contains_roll());

    for (name, traj) in [("B", &b), ("C", &c)] {
        let lift = traj.lift_off().expect("perturbed trajectory lifts off");
        assert!(
            matches!(
                lift.kind,
                EventKind::LiftOff { regime: PhaseTag::SlipPositive }
                    | EventKind::LiftOff { regime: PhaseTag::SlipNegative }
            ),
            "{name} lift-off regime: {:?}",
            lift.kind
        );
        // Nonzero tangential velocity shortly before lift-off.
        let tail: Vec<f64> = traj
            .samples
            .iter()
            .rev()
            .take(3)
            .map(|s| s.state.slip_velocity())
            .collect();
        assert!(tail.iter().all(|h| h.abs() > 1e-4), "{name} tail H: {tail:?}");
    }
    let hf_b = b.final_slip_velocity();
    let hf_c = c.final_slip_velocity();
    assert!(
        hf_b.signum() != hf_c.signum() && hf_b != 0.0,
        "opposite lift-off slip: B = {hf_b}, C = {hf_c}"
    );
    println!(
        "ACCEPTANCE 3 rolling-lift-off: PASS (|H_F(A)| = {:.1e} < 1e-6, H_F(B) = {hf_b:+.2e}, H_F(C) = {hf_c:+.2e})",
        hf_a.abs()
    );
}

/// 4. Restitution-phase theorem: over >= 500 random bounces containing a
///    roll phase, every roll exit happens with y' > 0 and the exit-side
///    second directional derivative has the fold sign.
#[test]
fn acceptance_4_roll_exits_in_restitution() {
    let mut rng = rng(0xACCE_0004);
    let cfg = IntegratorConfig::default();
    let mut rolled_count = 0usize;
    let mut exit_count = 0usize;
    let mut attempts = 0usize;
    while rolled_count < 500 {
        attempts += 1;
        assert!(attempts < 2000, "could not generate 500 rolling bounces");
        let model = random_model(&mut rng);
        let p0 = rolling_touchdown(&mut rng, model.mu());
        let Ok(traj) = simulate_bounce(&model, &p0, &cfg) else {
            continue;
        };
        if !traj.contains_roll() {
            continue;
        }
        rolled_count += 1;
        for e in &traj.events {
            if let EventKind::RollExit { into } = e.kind {
                exit_count += 1;
                assert!(
                    e.state.y_dot > 0.0,
                    "roll exit during compression: y' = {} at tau = {}",
                    e.state.y_dot,
                    e.tau
                );
                let (_, second) = directional_derivatives(&model, &e.state, into);
                match into {
                    SlipDir::Positive => {
                        assert!(second > 0.0, "(F1.grad)^2 H = {second} at exit into F1")
                    }
                    SlipDir::Negative => {
                        assert!(second < 0.0, "(F2.grad)^2 H = {second} at exit into F2")
                    }
                }
            }
        }
    }
    println!(
        "ACCEPTANCE 4 restitution-phase theorem: PASS ({rolled_count} rolling bounces, {exit_count} exits, 100% y' > 0)"
    );
}

/// 5. Two-fold classification: 100 random constraint-satisfying generalized
///    models give sigma1 = +1 > -1 = sigma2, nu1*nu2 < 1 and the visible
///    saddle; along an eps -> 0 family |nu1*nu2 - 1| scales as eps^3
///    (log-log slope 3 +/- 0.5 across two decades).
#[test]
fn acceptance_5_two_fold_classification() {
    let mut rng = rng(0xACCE_0005);
    let mut checked = 0usize;
    while checked < 100 {
        let gen = random_generic(&mut rng);
        let model = SurfaceModel::generic(gen).unwrap();
        let report = validate_generic_model(&model, &SampleBox::default(), 50, 100.0).unwrap();
        if !report.passed() {
            continue;
        }
        let x_dot = rng.gen_range(0.05..0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let y_dot = rng.gen_range(0.5..2.0);
        let s = locate_two_fold(&model, &two_fold_seed(&model, x_dot, y_dot)).unwrap();
        let tf = two_fold_report(&model, &s).unwrap();
        assert_eq!(tf.sigma1, 1, "model {checked}");
        assert_eq!(tf.sigma2, -1, "model {checked}");
        assert!(tf.nu_product < 1.0, "model {checked}: nu1 nu2 = {}", tf.nu_product);
        assert_eq!(tf.classification, TwoFoldClass::VisibleSaddleLike, "model {checked}");
        checked += 1;
    }

    // eps -> 0 family: deviation of the curvature product scales as eps^3,
    // and the printed asymptotic formula deviates on the same side.
    let base = random_generic(&mut rng);
    let mut ln_eps = Vec::new();
    let mut ln_dev = Vec::new();
    for k in 0..9 {
        let eps = 0.005 * (10.0f64).powf(k as f64 / 4.0);
        let mut gen = base.clone();
        gen.eps = eps;
        let model = SurfaceModel::generic(gen).unwrap();
        let s = locate_two_fold(&model, &two_fold_seed(&model, 0.3, 1.0)).unwrap();
        let tf = two_fold_report(&model, &s).unwrap();
        let dev = (tf.nu_product - 1.0).abs();
        assert!(tf.nu_product < 1.0);
        let asym = nu_product_asymptotic(&model, &s).unwrap();
        assert!(asym < 1.0, "asymptotic route on the same side: {asym}");
        ln_eps.push(eps.ln());
        ln_dev.push(dev.ln());
    }
    let slope = fit_slope(&ln_eps, &ln_dev);
    assert!((slope - 3.0).abs() <= 0.5, "|nu1 nu2 - 1| slope vs eps: {slope:.3}");
    println!(
        "ACCEPTANCE 5 two-fold classification: PASS (100 visible saddles, eps^3 trend slope {slope:.2})"
    );
}

/// 6. Spin-reversal manifold: bisection over touchdown spin converges to
///    |H_F| < 1e-6 in <= 60 iterations with opposite-sign, roll-containing
///    bracket endpoints.
#[test]
fn acceptance_6_spin_reversal_manifold() {
    let model = SurfaceModel::kelvin_voigt(calibrated_kv()).unwrap();
    let result = find_spin_reversal_manifold(
        &model,
        omega_family(1.0, -5.0),
        (1.0, 8.0),
        1e-6,
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert!(result.hf_at_param.abs() < 1e-6, "H_F at manifold = {}", result.hf_at_param);
    assert!(result.iterations <= 60, "iterations = {}", result.iterations);
    assert_ne!(result.hf_left_sign, result.hf_right_sign);
    assert!(result.left_rolled && result.right_rolled, "both endpoints must roll");
    println!(
        "ACCEPTANCE 6 spin-reversal manifold: PASS (omega* = {:.6}, |H_F| = {:.1e}, {} iterations)",
        result.param,
        result.hf_at_param.abs(),
        result.iterations
    );
}

/// 7. Energy monotonicity: on 200 random Kelvin-Voigt bounces the energy
///    functional is non-increasing sample-to-sample within 1e-9.
#[test]
fn acceptance_7_energy_monotone() {
    let mut rng = rng(0xACCE_0007);
    let cfg = IntegratorConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..IntegratorConfig::default()
    };
    for trial in 0..200 {
        let kv = random_kv(&mut rng);
        let model = SurfaceModel::kelvin_voigt(kv).unwrap();
        let p0 = BallState::touchdown(
            rng.gen_range(-2.0..2.0),
            -rng.gen_range(0.3..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let traj = simulate_bounce(&model, &p0, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for s in &traj.samples {
            let e = kv_energy(&kv, &s.state);
            assert!(
                e <= prev + 1e-9,
                "trial {trial}: energy grew {prev} -> {e} at tau = {}",
                s.tau
            );
            prev = e;
        }
    }
    println!("ACCEPTANCE 7 energy-monotonicity: PASS (200 bounces, 1e-9 slack)");
}

/// 8. Sliding consistency: every roll sample of the randomized suite has
///    |H| within the scaled 1e-8 tolerance, alpha in [0, 1], and a sliding
///    field tangent to the switching surface to 1e-12 relative.
#[test]
fn acceptance_8_sliding_consistency() {
    let mut rng = rng(0xACCE_0004); // same suite as criterion 4
    let cfg = IntegratorConfig::default();
    let mut rolled_count = 0usize;
    let mut roll_samples = 0usize;
    let mut attempts = 0usize;
    while rolled_count < 500 {
        attempts += 1;
        assert!(attempts < 2000);
        let model = random_model(&mut rng);
        let p0 = rolling_touchdown(&mut rng, model.mu());
        let Ok(traj) = simulate_bounce(&model, &p0, &cfg) else {
            continue;
        };
        if !traj.contains_roll() {
            continue;
        }
        rolled_count += 1;
        for s in traj.samples.iter().filter(|s| s.phase == PhaseTag::Roll) {
            roll_samples += 1;
            let h = s.state.slip_velocity();
            let h_scale = 1.0 + s.state.x_dot.abs() + s.state.omega.abs();
            assert!(h.abs() <= 1e-8 * h_scale, "|H| = {} on a roll sample", h.abs());
            match sliding_alpha(&model, &s.state) {
                Ok(alpha) => {
                    assert!((-1e-12..=1.0 + 1e-12).contains(&alpha), "alpha = {alpha}");
                    let fs = sliding_field(&model, &s.state).unwrap();
                    let drift = fs[1] + fs[4];
                    let scale: f64 = fs.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!(
                        drift.abs() <= 1e-12 * scale.max(1.0),
                        "F_s . grad H = {drift} (scale {scale})"
                    );
                }
                // Alpha is undefined exactly on the lift-off boundary (the
                // measure-zero rolling lift-off); the normal force must
                // vanish there.
                Err(_) => assert!(s.lambda_n.abs() <= 1e-6),
            }
        }
    }
    println!(
        "ACCEPTANCE 8 sliding-consistency: PASS ({roll_samples} roll samples over {rolled_count} bounces)"
    );
}

/// 9. Two-cluster scatter over the experimental touchdown ranges: every
///    slip-throughout record lifts off with H_F > 0, every rolled record
///    with H_F < 0, and the rolled cluster sits well below the slip cluster.
#[test]
fn acceptance_9_two_cluster_scatter() {
    let model = SurfaceModel::kelvin_voigt(calibrated_kv()).unwrap();
    let records = sweep_ics(&model, &SweepGrid::table_ranges(), &IntegratorConfig::default());
    assert!(records.iter().all(|r| r.failed.is_none()), "sweep had failures");

    let slip: Vec<f64> =
        records.iter().filter(|r| !r.rolled).map(|r| r.hf).collect();
    let rolled: Vec<f64> = records.iter().filter(|r| r.rolled).map(|r| r.hf).collect();
    assert!(!slip.is_empty() && !rolled.is_empty(), "both clusters must be populated");

    let slip_min = slip.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(slip_min > 0.0, "slip-throughout cluster has H_F > 0 (min = {slip_min})");
    let rolled_max = rolled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(rolled_max < 0.0, "rolled cluster has H_F < 0 (max = {rolled_max})");
    // Magnitude gap: every rolled lift-off is slower (in slip speed) than
    // every slip-throughout lift-off.
    let rolled_mag = rolled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(
        rolled_mag < slip_min,
        "clusters not separated: rolled |H_F| up to {rolled_mag}, slip min {slip_min}"
    );
    println!(
        "ACCEPTANCE 9 two-cluster scatter: PASS ({} slip-through records with H_F >= {slip_min:.1}, {} rolled records with H_F in [{:.1e}, {rolled_max:.1e}])",
        slip.len(),
        rolled.len(),
        rolled.iter().cloned().fold(f64::INFINITY, f64::min)
    );
}
