//! Location and classification of the two-fold singularity: the point on the
//! lift-off boundary where both smooth fields are simultaneously tangent to
//! the switching surface (the `alpha = 0` and `alpha = 1` folds intersect).
//!
//! At the singularity `s` the normal force vanishes, so evaluating the
//! classification quantities with the friction force built from the net
//! normal force degenerates (the two fields coincide there and the curvature
//! product collapses to exactly 1). The report therefore evaluates the
//! directional derivatives one-sidedly from the contact side, where the
//! spring-damper mechanism still carries the gravity share of the load:
//! the friction factor is `Lambda_N + eps^2 g` instead of `Lambda_N`. This
//! resolves the degeneracy at order `g eps^3` and produces the saddle-like
//! visible two-fold for every constraint-satisfying model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{BallState, Coord, CONTACT_FORCE_GAIN, SPIN_FORCE_GAIN};
use crate::surface::{Gamma, SurfaceModel};

/// |nu1*nu2 - 1| below this is reported as the degenerate (rigid-limit) case.
pub const DIABOLO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoFoldClass {
    /// sigma1 = +1, sigma2 = -1, nu1*nu2 < 1: a single trajectory reaches
    /// the singularity through the sliding region; rolling lift-off is
    /// codimension one.
    VisibleSaddleLike,
    /// sigma1 = +1, sigma2 = -1, nu1, nu2 > 0, nu1*nu2 > 1: sliding flow
    /// leaves the singularity as a node. Reachable only for models that
    /// violate the structural constraints; its appearance is a diagnostic.
    VisibleOutwardNode,
    /// The normal-form matrix is singular (nu1*nu2 = 1), as in the rigid
    /// limit of vanishing tangential compliance.
    DegenerateDiabolo,
    /// Any other sign pattern (invisible or mixed tangencies).
    Other,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TwoFoldReport {
    /// Singularity location.
    pub s: BallState,
    /// Sign of the second directional derivative of H along F1 at s.
    pub sigma1: i8,
    /// Sign along F2.
    pub sigma2: i8,
    pub nu1: f64,
    pub nu2: f64,
    pub nu_product: f64,
    /// Eigenvalues of the normal-form matrix [[nu2, -sigma1], [sigma2, nu1]];
    /// `None` when the pair is complex.
    pub gamma_minus: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub classification: TwoFoldClass,
}

/// Scalings of the local normal-form coordinates at the singularity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NormalFormFrame {
    /// `|(F1.grad)^2 H * (F2.grad)^2 H|^(-1/2)`.
    pub theta: f64,
    /// `|(F2.grad)^2 H / (F1.grad)^2 H|^(1/4)`.
    pub phi: f64,
    /// Frame coordinates (z1, z2, z3) of the anchor state (zero at s).
    pub z: [f64; 3],
}

/// Directional derivatives `a[i][j] = (F_i . grad)(F_j . grad) H` with the
/// friction factor taken one-sidedly from the contact side.
fn curvature_matrix(model: &SurfaceModel, p: &BallState) -> [[f64; 2]; 2] {
    let mu = model.mu();
    let lam = model.normal_force(p);
    let n_fric = lam + model.grav_term();
    let load = model.tangential_load(p);
    let (ln_y, ln_yd) = model.normal_force_grad(p);
    let grad_a = model.tangential_load_grad(p);

    // t = -1 selects F1 (valid for H > 0), t = +1 selects F2.
    let field = |t: f64| -> [f64; 5] {
        [p.x_dot, t * mu * n_fric - load, p.y_dot, lam, SPIN_FORCE_GAIN * t * mu * n_fric]
    };
    let grad_w = |t: f64| -> [f64; 5] {
        let mut g = [0.0; 5];
        for i in 0..5 {
            g[i] = -grad_a[i];
        }
        g[Coord::Y.index()] += t * CONTACT_FORCE_GAIN * mu * ln_y;
        g[Coord::YDot.index()] += t * CONTACT_FORCE_GAIN * mu * ln_yd;
        g
    };
    let dot = |a: [f64; 5], b: [f64; 5]| (0..5).map(|i| a[i] * b[i]).sum::<f64>();

    let mut a = [[0.0; 2]; 2];
    for (i, ti) in [(-1.0), 1.0].into_iter().enumerate() {
        for (j, tj) in [(-1.0), 1.0].into_iter().enumerate() {
            a[i][j] = dot(field(ti), grad_w(tj));
        }
    }
    a
}

fn sign_of(v: f64, tol: f64) -> i8 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

fn residual_check(model: &SurfaceModel, s: &BallState) -> Result<()> {
    let tol = 1e-8 * (1.0 + s.x_dot.abs() + s.y_dot.abs());
    let h = s.slip_velocity();
    let lam = model.normal_force(s);
    let load = model.tangential_load(s);
    if h.abs() > tol || lam.abs() > tol || load.abs() > tol {
        return Err(Error::Model(format!(
            "state fails the two-fold residual check: H = {h}, lambda_n = {lam}, A = {load}"
        )));
    }
    Ok(())
}

/// Classify the two-fold singularity at `s` (which must satisfy the locate
/// residuals: H = 0, Lambda_N = 0 and both tangency functions zero).
pub fn two_fold_report(model: &SurfaceModel, s: &BallState) -> Result<TwoFoldReport> {
    residual_check(model, s)?;
    let a = curvature_matrix(model, s);
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let sig_tol = 1e-12 * scale.max(1e-300);
    let sigma1 = sign_of(a[0][0], sig_tol);
    let sigma2 = sign_of(a[1][1], sig_tol);

    if sigma1 == 0 || sigma2 == 0 {
        // Vanishing second directional derivative: the frame is undefined,
        // the rigid-limit degeneracy.
        return Ok(TwoFoldReport {
            s: *s,
            sigma1,
            sigma2,
            nu1: f64::NAN,
            nu2: f64::NAN,
            nu_product: 1.0,
            gamma_minus: None,
            gamma_plus: None,
            classification: TwoFoldClass::DegenerateDiabolo,
        });
    }

    let denom = (a[0][0] * a[1][1]).abs().sqrt();
    let nu1 = a[0][1] / denom;
    let nu2 = -a[1][0] / denom;
    let nu_product = nu1 * nu2;

    // Eigenvalues of [[nu2, -sigma1], [sigma2, nu1]].
    let tr = nu1 + nu2;
    let det = nu_product + f64::from(sigma1) * f64::from(sigma2);
    let disc = tr * tr - 4.0 * det;
    let (gamma_minus, gamma_plus) = if disc >= 0.0 {
        let root = disc.sqrt();
        (Some(0.5 * (tr - root)), Some(0.5 * (tr + root)))
    } else {
        (None, None)
    };

    let visible = sigma1 == 1 && sigma2 == -1;
    let classification = if visible && (nu_product - 1.0).abs() <= DIABOLO_TOL {
        TwoFoldClass::DegenerateDiabolo
    } else if visible && nu_product < 1.0 {
        TwoFoldClass::VisibleSaddleLike
    } else if visible && nu1 > 0.0 && nu2 > 0.0 {
        TwoFoldClass::VisibleOutwardNode
    } else {
        TwoFoldClass::Other
    };

    Ok(TwoFoldReport {
        s: *s,
        sigma1,
        sigma2,
        nu1,
        nu2,
        nu_product,
        gamma_minus,
        gamma_plus,
        classification,
    })
}

/// Frame scalings at the singularity; fails when either second directional
/// derivative vanishes.
pub fn normal_form_frame(model: &SurfaceModel, s: &BallState) -> Result<NormalFormFrame> {
    residual_check(model, s)?;
    let a = curvature_matrix(model, s);
    if a[0][0] == 0.0 || a[1][1] == 0.0 {
        return Err(Error::Model("second directional derivatives vanish at s".into()));
    }
    let theta = (a[0][0] * a[1][1]).abs().powf(-0.5);
    let phi = (a[1][1] / a[0][0]).abs().powf(0.25);
    Ok(NormalFormFrame { theta, phi, z: normal_form_coords_with(model, s, theta, phi) })
}

/// Local coordinates (z1, z2, z3) of a state in a frame anchored at `s`.
pub fn normal_form_coords(model: &SurfaceModel, frame: &NormalFormFrame, p: &BallState) -> [f64; 3] {
    normal_form_coords_with(model, p, frame.theta, frame.phi)
}

fn normal_form_coords_with(model: &SurfaceModel, p: &BallState, theta: f64, phi: f64) -> [f64; 3] {
    let w1 = model.tangency_fn(p, crate::state::SlipDir::Positive);
    let w2 = model.tangency_fn(p, crate::state::SlipDir::Negative);
    [theta * p.slip_velocity(), -phi * theta * w1, theta * w2 / phi]
}

/// Find the two-fold singularity near a seed state, holding the seed's
/// `(x_dot, y_dot)` fixed and solving `{H = 0, Lambda_N = 0, A = 0}` for
/// `(x, y, omega)` by damped Newton iteration.
pub fn locate_two_fold(model: &SurfaceModel, seed: &BallState) -> Result<BallState> {
    seed.validate()?;
    if model.mu() <= 1e-12 {
        return Err(Error::NoTwoFold(
            "frictionless model: the two fields coincide and carry no fold structure".into(),
        ));
    }
    if seed.y_dot <= 0.0 {
        return Err(Error::NoTwoFold(format!(
            "seed must be in the restitution phase (y_dot > 0), got y_dot = {}",
            seed.y_dot
        )));
    }

    let tol = 1e-10 * (1.0 + seed.x_dot.abs() + seed.y_dot.abs());
    let mut p = *seed;
    let residual = |p: &BallState| -> [f64; 3] {
        [p.slip_velocity(), model.normal_force(p), model.tangential_load(p)]
    };
    let norm = |r: &[f64; 3]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut r = residual(&p);
    for _ in 0..100 {
        if norm(&r) <= tol {
            return Ok(p);
        }
        // Analytic Jacobian over (x, y, omega).
        let (ln_y, _) = model.normal_force_grad(&p);
        let ga = model.tangential_load_grad(&p);
        let jac = [
            [0.0, 0.0, 1.0],
            [0.0, ln_y, 0.0],
            [ga[Coord::X.index()], ga[Coord::Y.index()], ga[Coord::Omega.index()]],
        ];
        let delta = solve3_damped(&jac, &[-r[0], -r[1], -r[2]])
            .ok_or_else(|| Error::NoTwoFold("singular Jacobian in Newton iteration".into()))?;

        // Backtracking line search.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate = BallState::new(
                p.x + step * delta[0],
                p.x_dot,
                p.y + step * delta[1],
                p.y_dot,
                p.omega + step * delta[2],
            );
            let r_new = residual(&candidate);
            if norm(&r_new) < norm(&r) || norm(&r_new) <= tol {
                p = candidate;
                r = r_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(&r) <= tol {
        Ok(p)
    } else {
        Err(Error::NoTwoFold(format!("Newton stalled with residual {:?}", r)))
    }
}

/// Solve a 3x3 system, falling back to a Tikhonov-regularized least-squares
/// step when the matrix is (near) singular, as in the rigid limit where the
/// tangential-load residual is identically zero.
fn solve3_damped(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    if let Some(x) = solve3(a, b) {
        return Some(x);
    }
    // Normal equations with a small ridge.
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (row, rhs) in a.iter().zip(b) {
                ata[i][j] += row[i] * row[j];
                if j == 0 {
                    atb[i] += row[i] * rhs;
                }
            }
        }
    }
    let scale = ata.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, row) in ata.iter_mut().enumerate() {
        row[i] += 1e-12 * scale.max(1e-300);
    }
    solve3(&ata, &atb)
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).expect("finite pivot")
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let pivot_row = m[col];
        for row in (col + 1)..3 {
            let f = m[row][col] / pivot_row[col];
            for (dst, src) in m[row].iter_mut().zip(pivot_row.iter()).skip(col) {
                *dst -= f * src;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut sum = rhs[row];
        for k in (row + 1)..3 {
            sum -= m[row][k] * x[k];
        }
        if m[row][row].abs() < 1e-300 {
            return None;
        }
        x[row] = sum / m[row][row];
    }
    Some(x)
}

/// The printed leading-order expansion of the curvature product,
/// `nu1 nu2 = 1 + (20/7) (d gamma_u / d x' * x') / (d Lambda_N / d y' * y') g eps^3`.
pub fn nu_product_asymptotic(model: &SurfaceModel, s: &BallState) -> Result<f64> {
    if s.y_dot <= 0.0 {
        return Err(Error::Model(format!(
            "the singularity must lie in the restitution phase, got y_dot = {}",
            s.y_dot
        )));
    }
    let gu_xd = model.gamma_partial(Gamma::U, s, Coord::XDot);
    let (_, ln_yd) = model.normal_force_grad(s);
    let den = ln_yd * s.y_dot;
    if den.abs() < 1e-300 {
        return Err(Error::Model("d Lambda_N / d y' vanishes at s".into()));
    }
    Ok(1.0 + (20.0 / 7.0) * (gu_xd * s.x_dot / den) * model.grav_term() * model.eps())
}

/// Construct a two-fold seed for a model: pick `(x_dot, y_dot)`, solve the
/// vertical lift-off condition for `y`, the tangential balance for `x`, and
/// H = 0 for omega. Exact for the Kelvin-Voigt model; a Newton polish via
/// [`locate_two_fold`] tightens generic models.
pub fn two_fold_seed(model: &SurfaceModel, x_dot: f64, y_dot: f64) -> BallState {
    let mut p = BallState::new(0.0, x_dot, 0.0, y_dot, -x_dot);
    // Vertical: gamma_d y' + gamma_k y + eps^2 g = 0, iterated because the
    // coefficients may depend on (y, y').
    for _ in 0..50 {
        let gd = model.gamma(Gamma::D, &p);
        let gk = model.gamma(Gamma::K, &p);
        p.y = -(gd * y_dot + model.grav_term()) / gk.max(1e-12);
    }
    // Tangential: eps gamma_u x' + eps^2 gamma_z x = 0.
    let e = model.eps();
    if e > 0.0 {
        for _ in 0..50 {
            let gu = model.gamma(Gamma::U, &p);
            let gz = model.gamma(Gamma::Z, &p);
            p.x = -gu * x_dot / (e * gz.max(1e-12));
        }
    }
    p
}
