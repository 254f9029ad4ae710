//! Planar state of the bouncing sphere and shared sphere constants.
//!
//! Lengths are measured in ball radii (the sphere has unit radius), the ball
//! has unit mass, and its moment of inertia is the uniform-sphere 2/5. Those
//! normalizations surface only through the constant gains below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin response to a unit tangential contact force: omega' = 5/2 * Lambda_T
/// for a uniform unit sphere (I = 2/5, lever arm 1).
pub const SPIN_FORCE_GAIN: f64 = 2.5;

/// Contact-point tangential response to a unit tangential force:
/// H' picks up (1 + 5/2) * Lambda_T = 7/2 * Lambda_T.
pub const CONTACT_FORCE_GAIN: f64 = 3.5;

/// Dynamical state `[x, x', y, y', omega]` of the sphere.
///
/// `y <= 0` while in contact; positive `omega` is counter-clockwise rotation,
/// i.e. backspin for a ball travelling in +x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub y_dot: f64,
    pub omega: f64,
}

impl BallState {
    pub fn new(x: f64, x_dot: f64, y: f64, y_dot: f64, omega: f64) -> Self {
        Self { x, x_dot, y, y_dot, omega }
    }

    /// Touchdown state at the origin with the given velocities and spin.
    pub fn touchdown(x_dot: f64, y_dot: f64, omega: f64) -> Self {
        Self::new(0.0, x_dot, 0.0, y_dot, omega)
    }

    /// Contact-point tangential velocity H = x' + omega.
    pub fn slip_velocity(&self) -> f64 {
        self.x_dot + self.omega
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Model(format!("non-finite state: {self:?}")))
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.x, self.x_dot, self.y, self.y_dot, self.omega]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }
}

/// State coordinate index, used for partial derivatives of model fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    X,
    XDot,
    Y,
    YDot,
    Omega,
}

impl Coord {
    pub const ALL: [Coord; 5] = [Coord::X, Coord::XDot, Coord::Y, Coord::YDot, Coord::Omega];

    pub fn index(self) -> usize {
        match self {
            Coord::X => 0,
            Coord::XDot => 1,
            Coord::Y => 2,
            Coord::YDot => 3,
            Coord::Omega => 4,
        }
    }

    pub fn of(self, p: &BallState) -> f64 {
        p.as_array()[self.index()]
    }
}

/// Contact regime of a trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTag {
    Airborne,
    /// Forward slip, H > 0; the F1 field applies.
    SlipPositive,
    /// Negative slip, H < 0; the F2 field applies.
    SlipNegative,
    /// Rolling contact: Filippov sliding on H = 0.
    Roll,
}

impl PhaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseTag::Airborne => "airborne",
            PhaseTag::SlipPositive => "slip+",
            PhaseTag::SlipNegative => "slip-",
            PhaseTag::Roll => "roll",
        }
    }
}

impl std::fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Direction of slip, i.e. which smooth field is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlipDir {
    /// H > 0 (field F1, friction acts in -x at the contact point).
    Positive,
    /// H < 0 (field F2).
    Negative,
}

impl SlipDir {
    pub fn sign(self) -> f64 {
        match self {
            SlipDir::Positive => 1.0,
            SlipDir::Negative => -1.0,
        }
    }

    pub fn of_h(h: f64) -> Option<SlipDir> {
        if h > 0.0 {
            Some(SlipDir::Positive)
        } else if h < 0.0 {
            Some(SlipDir::Negative)
        } else {
            None
        }
    }

    pub fn phase(self) -> PhaseTag {
        match self {
            SlipDir::Positive => PhaseTag::SlipPositive,
            SlipDir::Negative => PhaseTag::SlipNegative,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // H is linear in the state: component-wise combinations combine.
        #[test]
        fn slip_velocity_is_linear(
            s1 in proptest::array::uniform5(-100.0f64..100.0),
            s2 in proptest::array::uniform5(-100.0f64..100.0),
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let p1 = BallState::from_array(s1);
            let p2 = BallState::from_array(s2);
            let mut combo = [0.0; 5];
            for i in 0..5 {
                combo[i] = a * s1[i] + b * s2[i];
            }
            let lhs = BallState::from_array(combo).slip_velocity();
            let rhs = a * p1.slip_velocity() + b * p2.slip_velocity();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())));
        }
    }

    #[test]
    fn slip_velocity_examples() {
        assert_eq!(BallState::touchdown(1.0, -1.0, 0.0).slip_velocity(), 1.0);
        // Rolling landing condition from the perturbation-experiment state.
        let p = BallState::new(0.3543, -0.1603128, -0.1608, 3.4739, 0.1603128);
        assert_eq!(p.slip_velocity(), 0.0);
        assert_eq!(BallState::touchdown(2.0, -1.0, -2.0).slip_velocity(), 0.0);
    }

    #[test]
    fn validate_rejects_non_finite() {
        let mut p = BallState::touchdown(1.0, -1.0, 0.0);
        p.y_dot = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn coord_roundtrip() {
        let p = BallState::new(1.0, 2.0, 3.0, 4.0, 5.0);
        for c in Coord::ALL {
            assert_eq!(c.of(&p), p.as_array()[c.index()]);
        }
        assert_eq!(BallState::from_array(p.as_array()), p);
    }
}
