//! Command-line driver: one config file drives any subcommand, flags
//! override config values, every error path exits nonzero with a single
//! machine-parsable `error[<code>]: <message>` line on stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::filippov::simulate_bounce;
use crate::io;
use crate::rigid::{rigid_bounce, RigidParams};
use crate::singularity::{locate_two_fold, nu_product_asymptotic, two_fold_report, two_fold_seed};
use crate::state::BallState;
use crate::sweep::{
    find_spin_reversal_manifold, omega_family, perturbation_experiment, sweep_ics,
};

/// Environment variable holding the default config path.
pub const CONFIG_ENV: &str = "SPINBOUNCE_CONFIG";

#[derive(Parser, Debug)]
#[command(
    name = "spinbounce",
    version,
    about = "Bounce of a rigid spinning sphere on a compliant frictional surface"
)]
struct Cli {
    /// Config file; flags override config values, config overrides defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct StateArgs {
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    xdot: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ydot: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
}

impl StateArgs {
    fn apply(&self, base: &mut BallState) {
        if let Some(v) = self.x {
            base.x = v;
        }
        if let Some(v) = self.xdot {
            base.x_dot = v;
        }
        if let Some(v) = self.y {
            base.y = v;
        }
        if let Some(v) = self.ydot {
            base.y_dot = v;
        }
        if let Some(v) = self.omega {
            base.omega = v;
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form rigid bounce: case label and post-impact state.
    Rigid {
        #[arg(long, allow_negative_numbers = true)]
        xdot: f64,
        #[arg(long, allow_negative_numbers = true)]
        ydot: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
    },
    /// Simulate one bounce and export the trajectory.
    Bounce {
        #[command(flatten)]
        state: StateArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or json.
        #[arg(long)]
        format: Option<String>,
    },
    /// Sweep the touchdown grid and write one record per point.
    Sweep {
        /// Output file; defaults to <output.dir>/sweep.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bisect the spin-reversal manifold over touchdown spin.
    Manifold {
        #[arg(long, allow_negative_numbers = true)]
        xdot0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        ydot0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        tol: Option<f64>,
    },
    /// Locate and classify the two-fold singularity.
    Twofold {
        /// Model name overriding the config ([model] kind).
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = -0.2, allow_negative_numbers = true)]
        seed_xdot: f64,
        #[arg(long, default_value_t = 1.3, allow_negative_numbers = true)]
        seed_ydot: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rolling-lift-off perturbation experiment: trajectories A, B, C.
    Perturb {
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        /// Directory for a/b/c trajectory files; defaults to output.dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Ingest measured bounce records and emit nondimensional (H0, HF) pairs.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Output file; defaults to <output.dir>/ingested.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Run the CLI against explicit arguments; returns the process exit status.
pub fn run_cli(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap renders its own help/usage text; -h/--help/--version exit 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(stdout) => {
            if !stdout.is_empty() {
                println!("{stdout}");
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            match e {
                Error::Config(_) | Error::Parse(_) => 2,
                _ => 1,
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    let chosen = path
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    match chosen {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            parse_config(&text)
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, content)?;
    Ok(())
}

#[derive(Serialize)]
struct RigidReport {
    case: String,
    final_state: BallState,
    roll_entry_impulse: Option<f64>,
    h0: f64,
    hf: f64,
}

fn execute(cli: Cli) -> Result<String> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Rigid { xdot, ydot, omega, mu, r } => {
            let params = RigidParams::new(mu.unwrap_or(cfg.rigid.mu), r.unwrap_or(cfg.rigid.r))?;
            let state0 = BallState::touchdown(xdot, ydot, omega);
            let out = rigid_bounce(&state0, &params)?;
            let report = RigidReport {
                case: out.case.to_string(),
                final_state: out.final_state,
                roll_entry_impulse: out.roll_entry_impulse,
                h0: state0.slip_velocity(),
                hf: out.final_state.slip_velocity(),
            };
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Parse(e.to_string()))?;
            Ok(format!("case {}\n{json}", report.case))
        }
        Command::Bounce { state, out, format } => {
            let model = cfg.model.build()?;
            let mut p0 = cfg.initial;
            state.apply(&mut p0);
            let lam = model.normal_force(&p0);
            if lam < 0.0 {
                return Err(Error::NotInContact { lambda_n: lam });
            }
            let traj = simulate_bounce(&model, &p0, &cfg.integrator)?;
            let format = format.unwrap_or_else(|| cfg.output.format.clone());
            let rendered = io::export_trajectory(&traj, &format)?;
            match out {
                Some(path) => {
                    write_file(&path, &rendered)?;
                    Ok(format!(
                        "wrote {} samples, {} events to {}",
                        traj.samples.len(),
                        traj.events.len(),
                        path.display()
                    ))
                }
                None => Ok(rendered),
            }
        }
        Command::Sweep { out } => {
            let model = cfg.model.build()?;
            let records = sweep_ics(&model, &cfg.sweep, &cfg.integrator);
            let path = out.unwrap_or_else(|| Path::new(&cfg.output.dir).join("sweep.csv"));
            write_file(&path, &io::sweep_to_csv(&records))?;
            let failed = records.iter().filter(|r| r.failed.is_some()).count();
            let rolled = records.iter().filter(|r| r.rolled).count();
            Ok(format!(
                "swept {} points ({rolled} rolled, {failed} failed) -> {}",
                records.len(),
                path.display()
            ))
        }
        Command::Manifold { xdot0, ydot0, lo, hi, tol } => {
            let model = cfg.model.build()?;
            let m = cfg.manifold;
            let family =
                omega_family(xdot0.unwrap_or(m.x_dot), ydot0.unwrap_or(m.y_dot));
            let result = find_spin_reversal_manifold(
                &model,
                family,
                (lo.unwrap_or(m.lo), hi.unwrap_or(m.hi)),
                tol.unwrap_or(m.tol),
                &cfg.integrator,
            )?;
            serde_json::to_string_pretty(&result).map_err(|e| Error::Parse(e.to_string()))
        }
        Command::Twofold { model, seed_xdot, seed_ydot, out } => {
            let mut model_cfg = cfg.model.clone();
            if let Some(kind) = model {
                model_cfg.kind = kind;
            }
            let surface = model_cfg.build()?;
            let seed = two_fold_seed(&surface, seed_xdot, seed_ydot);
            let s = locate_two_fold(&surface, &seed)?;
            let report = two_fold_report(&surface, &s)?;
            let asymptotic = nu_product_asymptotic(&surface, &s).ok();
            #[derive(Serialize)]
            struct TwoFoldOut {
                #[serde(flatten)]
                report: crate::singularity::TwoFoldReport,
                nu_product_asymptotic: Option<f64>,
            }
            let json = serde_json::to_string_pretty(&TwoFoldOut { report, nu_product_asymptotic: asymptotic })
                .map_err(|e| Error::Parse(e.to_string()))?;
            if let Some(path) = out {
                write_file(&path, &json)?;
                Ok(format!("wrote two-fold report to {}", path.display()))
            } else {
                Ok(json)
            }
        }
        Command::Perturb { delta, out_dir } => {
            let model = cfg.model.build()?;
            let delta = delta.unwrap_or(cfg.perturb_delta);
            let trajectories =
                perturbation_experiment(&model, &cfg.initial, delta, &cfg.integrator)?;
            let dir = out_dir.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let mut summary = Vec::new();
            for (name, traj) in ["a", "b", "c"].iter().zip(&trajectories) {
                let ext = if cfg.output.format == "json" { "json" } else { "csv" };
                let path = dir.join(format!("trajectory_{name}.{ext}"));
                write_file(&path, &io::export_trajectory(traj, &cfg.output.format)?)?;
                summary.push(serde_json::json!({
                    "trajectory": name,
                    "hf": traj.final_slip_velocity(),
                    "rolled": traj.contains_roll(),
                    "file": path.display().to_string(),
                }));
            }
            serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))
        }
        Command::Ingest { input, out } => {
            let text = fs::read_to_string(&input)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", input.display())))?;
            let summary = io::ingest_measurements(&text, &cfg.units)?;
            let path = out.unwrap_or_else(|| Path::new(&cfg.output.dir).join("ingested.csv"));
            write_file(&path, &io::h_pairs_to_csv(&summary.h_pairs))?;
            for (row, reason) in &summary.rejected {
                eprintln!("rejected row {row}: {reason}");
            }
            Ok(format!(
                "ingested {} records ({} rejected) -> {}",
                summary.records.len(),
                summary.rejected.len(),
                path.display()
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("spinbounce").chain(list.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn rigid_prints_case_label() {
        let cli = Cli::try_parse_from(args(&[
            "rigid", "--xdot", "10", "--ydot", "-2", "--omega", "0", "--mu", "0.3", "--r", "0.5",
        ]))
        .unwrap();
        let out = execute(cli).unwrap();
        assert!(out.starts_with("case I+"), "{out}");
        assert!(out.contains("\"hf\": 6.85"), "{out}");
    }

    #[test]
    fn bounce_rejects_out_of_contact_state() {
        let cli = Cli::try_parse_from(args(&["bounce", "--y", "0.5", "--ydot", "2.0"])).unwrap();
        let err = execute(cli).unwrap_err();
        assert!(matches!(err, Error::NotInContact { .. }));
        assert_eq!(err.code(), "not_in_contact");
    }

    #[test]
    fn usage_error_exits_2() {
        let code = run_cli(&args(&["rigid", "--xdot", "10"]));
        assert_eq!(code, 2);
    }

    #[test]
    fn unknown_subcommand_exits_2() {
        let code = run_cli(&args(&["wobble"]));
        assert_eq!(code, 2);
    }
}
