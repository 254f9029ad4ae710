//! Shared generators for the randomized suites: surface models inside the
//! weak-tangential-compliance scaling regime and touchdown states in the
//! rolling regime.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spinbounce::state::{BallState, CONTACT_FORCE_GAIN};
use spinbounce::surface::{GenericModel, KelvinVoigtParams, PolynomialField, SurfaceModel};
use std::sync::Arc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kelvin-Voigt parameters with weak tangential compliance and an
/// underdamped normal subsystem.
pub fn random_kv(rng: &mut ChaCha8Rng) -> KelvinVoigtParams {
    KelvinVoigtParams {
        d1: rng.gen_range(0.0..1.0),
        d2: rng.gen_range(0.005..0.3),
        eta: rng.gen_range(0.005..0.05),
        eps2: rng.gen_range(0.001..0.1),
        mu: rng.gen_range(0.2..0.8),
        g: rng.gen_range(0.0..2.0),
    }
}

/// Generalized model with polynomial coefficient fields chosen to satisfy
/// the structural constraints (stiffening with depth, shear-sign response,
/// O(1) derivatives).
pub fn random_generic(rng: &mut ChaCha8Rng) -> GenericModel {
    let base_u = rng.gen_range(0.1..1.5);
    let base_d = rng.gen_range(0.02..0.35);
    GenericModel {
        gamma_u: Arc::new(PolynomialField {
            base: base_u,
            depth: rng.gen_range(0.0..0.6),
            shear: rng.gen_range(0.0..0.3),
        }),
        gamma_z: Arc::new(PolynomialField {
            base: rng.gen_range(0.5..1.5),
            depth: rng.gen_range(0.0..0.6),
            shear: 0.0,
        }),
        gamma_d: Arc::new(PolynomialField {
            base: base_d,
            depth: rng.gen_range(0.0..0.3),
            shear: 0.0,
        }),
        gamma_k: Arc::new(PolynomialField {
            base: rng.gen_range(0.6..1.4),
            depth: rng.gen_range(0.0..0.5),
            shear: 0.0,
        }),
        mu: rng.gen_range(0.2..0.8),
        g: rng.gen_range(0.2..2.0),
        eps: rng.gen_range(0.01..0.1),
    }
}

/// A touchdown state guaranteed (rigid-theory bound) to enter rolling:
/// |H0 / y'_0| strictly below (7/2) mu.
pub fn rolling_touchdown(rng: &mut ChaCha8Rng, mu: f64) -> BallState {
    let y_dot: f64 = -rng.gen_range(0.5..3.0);
    let ratio = rng.gen_range(0.1..0.85) * CONTACT_FORCE_GAIN * mu;
    let h0 = ratio * y_dot.abs() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let x_dot = rng.gen_range(-1.0..1.0);
    BallState::touchdown(x_dot, y_dot, h0 - x_dot)
}

/// Random model, half Kelvin-Voigt and half generalized.
pub fn random_model(rng: &mut ChaCha8Rng) -> SurfaceModel {
    if rng.gen_bool(0.5) {
        SurfaceModel::kelvin_voigt(random_kv(rng)).expect("generated params are valid")
    } else {
        SurfaceModel::generic(random_generic(rng)).expect("generated model is valid")
    }
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}
