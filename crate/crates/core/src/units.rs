//! Conversion between physical measurement units and the dimensionless
//! simulation units (lengths in ball radii, time in `time_unit` seconds,
//! spin in rad per time unit).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RPM_TO_RAD_PER_SEC: f64 = 2.0 * std::f64::consts::PI / 60.0;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Ball radius in metres. The experimental tables imply roughly 0.0215 m.
    pub ball_radius_m: f64,
    /// Time unit in seconds.
    pub time_unit_s: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { ball_radius_m: 0.0215, time_unit_s: 1.0 }
    }
}

impl UnitSystem {
    pub fn validate(&self) -> Result<()> {
        if !(self.ball_radius_m > 0.0) {
            return Err(Error::Config(format!(
                "ball_radius_m must be positive, got {}",
                self.ball_radius_m
            )));
        }
        if !(self.time_unit_s > 0.0) {
            return Err(Error::Config(format!(
                "time_unit_s must be positive, got {}",
                self.time_unit_s
            )));
        }
        Ok(())
    }

    /// Nondimensionalize a measured record: linear velocities in m/s divided
    /// by radius/time-unit, spin in rpm converted to rad/s and scaled by the
    /// time unit.
    pub fn nondimensionalize_record(
        &self,
        v_x_mps: f64,
        v_y_mps: f64,
        spin_rpm: f64,
    ) -> Result<(f64, f64, f64)> {
        self.validate()?;
        let vel_scale = self.ball_radius_m / self.time_unit_s;
        Ok((
            v_x_mps / vel_scale,
            v_y_mps / vel_scale,
            spin_rpm * RPM_TO_RAD_PER_SEC * self.time_unit_s,
        ))
    }

    /// Inverse of [`nondimensionalize_record`](Self::nondimensionalize_record).
    pub fn redimensionalize_record(
        &self,
        x_dot: f64,
        y_dot: f64,
        omega: f64,
    ) -> Result<(f64, f64, f64)> {
        self.validate()?;
        let vel_scale = self.ball_radius_m / self.time_unit_s;
        Ok((
            x_dot * vel_scale,
            y_dot * vel_scale,
            omega / (RPM_TO_RAD_PER_SEC * self.time_unit_s),
        ))
    }
}
