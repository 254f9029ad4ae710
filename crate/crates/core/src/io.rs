//! Trajectory/report serialization (CSV and JSON) and ingestion of measured
//! bounce records for overlay against simulated sweeps.
//!
//! CSV is the interchange format for plots (gnuplot-friendly), JSON for
//! structured reports. All numeric output is printed with 17 significant
//! digits so identical inputs produce byte-identical files.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filippov::Trajectory;
use crate::state::PhaseTag;
use crate::sweep::SweepRecord;
use crate::units::UnitSystem;

/// Trajectory CSV column order; fixed, part of the file contract.
pub const TRAJECTORY_HEADER: &str = "tau,x,xdot,y,ydot,omega,H,LambdaN,LambdaT,phase";

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a trajectory as CSV with the fixed column contract.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let p = s.state;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt17(s.tau),
            fmt17(p.x),
            fmt17(p.x_dot),
            fmt17(p.y),
            fmt17(p.y_dot),
            fmt17(p.omega),
            fmt17(p.slip_velocity()),
            fmt17(s.lambda_n),
            fmt17(s.lambda_t),
            s.phase
        );
    }
    out
}

/// Row of a parsed trajectory CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub tau: f64,
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub y_dot: f64,
    pub omega: f64,
    pub h: f64,
    pub lambda_n: f64,
    pub lambda_t: f64,
    pub phase: PhaseTag,
}

/// Parse trajectory CSV text produced by [`trajectory_to_csv`].
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
    if header.trim() != TRAJECTORY_HEADER {
        return Err(Error::Parse(format!("unexpected trajectory header '{header}'")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::Parse(format!("row {}: expected 10 columns", idx + 2)));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: bad number '{}'", idx + 2, cols[i])))
        };
        let phase = match cols[9].trim() {
            "airborne" => PhaseTag::Airborne,
            "slip+" => PhaseTag::SlipPositive,
            "slip-" => PhaseTag::SlipNegative,
            "roll" => PhaseTag::Roll,
            other => return Err(Error::Parse(format!("row {}: bad phase '{other}'", idx + 2))),
        };
        rows.push(TrajectoryRow {
            tau: num(0)?,
            x: num(1)?,
            x_dot: num(2)?,
            y: num(3)?,
            y_dot: num(4)?,
            omega: num(5)?,
            h: num(6)?,
            lambda_n: num(7)?,
            lambda_t: num(8)?,
            phase,
        });
    }
    Ok(rows)
}

/// JSON mirror of the CSV contract, with the events array included.
pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    serde_json::to_string_pretty(traj)
        .map_err(|e| Error::Parse(format!("trajectory serialization failed: {e}")))
}

/// Render a trajectory in the requested format ("csv" or "json").
pub fn export_trajectory(traj: &Trajectory, format: &str) -> Result<String> {
    match format {
        "csv" => Ok(trajectory_to_csv(traj)),
        "json" => trajectory_to_json(traj),
        other => Err(Error::Config(format!("unknown trajectory format '{other}'"))),
    }
}

/// Sweep records as CSV, Fig-4 style: H0 and H_F first.
pub fn sweep_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("h0,hf,xdot0,ydot0,omega0,rolled,phases,failed\n");
    for r in records {
        let phases: Vec<&str> = r.phases.iter().map(|p| p.as_str()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt17(r.h0),
            fmt17(r.hf),
            fmt17(r.ic.x_dot),
            fmt17(r.ic.y_dot),
            fmt17(r.ic.omega),
            r.rolled,
            phases.join("|"),
            r.failed.clone().unwrap_or_default()
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Measurement ingestion
// ---------------------------------------------------------------------------

/// One measured bounce: incoming and outgoing velocities in physical units.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// (v_x, v_y, spin) in (m/s, m/s, rpm); incoming v_y < 0.
    pub incoming: (f64, f64, f64),
    /// Same, with outgoing v_y > 0.
    pub outgoing: (f64, f64, f64),
    pub surface: String,
}

/// Ingestion result: accepted records, their nondimensional (H0, H_F) pairs,
/// and per-row rejections.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: Vec<MeasurementRecord>,
    pub h_pairs: Vec<(f64, f64)>,
    /// (1-based data row, reason) for rows that failed the invariants.
    pub rejected: Vec<(usize, String)>,
}

/// Required measurement CSV header; every velocity column must declare its
/// unit. Unit-less headers are rejected, units are never inferred.
pub const MEASUREMENT_HEADER: &str =
    "vx_in[m/s],vy_in[m/s],spin_in[rpm],vx_out[m/s],vy_out[m/s],spin_out[rpm],surface";

/// Parse measured bounce records and nondimensionalize them for overlay
/// against sweep output.
pub fn ingest_measurements(text: &str, units: &UnitSystem) -> Result<IngestSummary> {
    units.validate()?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty measurement file".into()))?;
    let normalized: String = header.split(',').map(str::trim).collect::<Vec<_>>().join(",");
    if normalized != MEASUREMENT_HEADER {
        return Err(Error::Parse(format!(
            "measurement header must declare units exactly as '{MEASUREMENT_HEADER}', got '{header}'"
        )));
    }

    let mut summary = IngestSummary::default();
    for (idx, line) in lines.enumerate() {
        let row_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 7 {
            summary.rejected.push((row_no, format!("expected 7 columns, got {}", cols.len())));
            continue;
        }
        let mut nums = [0.0f64; 6];
        let mut bad = None;
        for (i, slot) in nums.iter_mut().enumerate() {
            match cols[i].parse::<f64>() {
                Ok(v) if v.is_finite() => *slot = v,
                _ => {
                    bad = Some(format!("bad number '{}' in column {}", cols[i], i + 1));
                    break;
                }
            }
        }
        if let Some(reason) = bad {
            summary.rejected.push((row_no, reason));
            continue;
        }
        let [vx_in, vy_in, spin_in, vx_out, vy_out, spin_out] = nums;
        if vy_in >= 0.0 {
            summary.rejected.push((row_no, format!("incoming v_y must be negative, got {vy_in}")));
            continue;
        }
        if vy_out <= 0.0 {
            summary.rejected.push((row_no, format!("outgoing v_y must be positive, got {vy_out}")));
            continue;
        }
        let (xd0, _, om0) = units.nondimensionalize_record(vx_in, vy_in, spin_in)?;
        let (xdf, _, omf) = units.nondimensionalize_record(vx_out, vy_out, spin_out)?;
        summary.records.push(MeasurementRecord {
            incoming: (vx_in, vy_in, spin_in),
            outgoing: (vx_out, vy_out, spin_out),
            surface: cols[6].to_string(),
        });
        summary.h_pairs.push((xd0 + om0, xdf + omf));
    }
    Ok(summary)
}

/// (H0, H_F) pairs as CSV for overlay plots.
pub fn h_pairs_to_csv(pairs: &[(f64, f64)]) -> String {
    let mut out = String::from("h0,hf\n");
    for (h0, hf) in pairs {
        let _ = writeln!(out, "{},{}", fmt17(*h0), fmt17(*hf));
    }
    out
}
