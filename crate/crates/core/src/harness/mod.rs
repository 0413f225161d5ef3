//! Reproducible experiment runs: configuration, output directories,
//! manifests and the command-line front end.

pub mod cli;
pub mod config;
mod manifest;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{energy_report, existence_time, EnergyReport};
use crate::dynamics::ModelKind;
use crate::spectral::{forward_transform, write_field_csv, write_snapshot, RealField, SnapshotError};
use crate::stepping::integrate;
use crate::validation::{delta_convergence, dispersion_check, epsilon_sweep, ValidationError};

pub use config::{
    load_config, parse_config, serialize_config, ConfigError, InitialCondition, Length, RunConfig,
};
pub use manifest::{Manifest, RunOutcome};

/// Process exit status of a harness command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    IoFailure,
    ConfigError,
    BlowUp,
    ValidationFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::IoFailure => 1,
            Status::ConfigError => 2,
            Status::BlowUp => 3,
            Status::ValidationFailure => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    SweepEpsilon,
    SweepDelta,
    Dispersion,
    EnergyReport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepEpsilon => "sweep-epsilon",
            Command::SweepDelta => "sweep-delta",
            Command::Dispersion => "dispersion",
            Command::EnergyReport => "energy-report",
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

impl HarnessError {
    pub fn status(&self) -> Status {
        match self {
            HarnessError::Config(_) => Status::ConfigError,
            HarnessError::Io(_) | HarnessError::Snapshot(_) => Status::IoFailure,
            HarnessError::Validation(e) => match e {
                ValidationError::ReferenceBlowUp { .. }
                | ValidationError::PhiBlowUp { .. }
                | ValidationError::TooFewSurvivors { .. }
                | ValidationError::Stepping(crate::stepping::SteppingError::BlowUp { .. }) => {
                    Status::BlowUp
                }
                _ => Status::ConfigError,
            },
        }
    }
}

/// What a finished command produced.
#[derive(Debug)]
pub struct RunReport {
    pub status: Status,
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

/// Hex SHA-256 of the canonical serialized config.
pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(serialize_config(cfg).as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `<output.dir>/<command>-<first 16 hex digits of the config hash>`.
pub fn output_dir(cfg: &RunConfig, cmd: Command) -> PathBuf {
    cfg.output.dir.join(format!("{}-{}", cmd.name(), &config_hash(cfg)[..16]))
}

/// Collects emitted files and their hashes.
struct Emitter {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Emitter {
    fn new(dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn record(&mut self, name: &str) -> io::Result<()> {
        let bytes = fs::read(self.dir.join(name))?;
        self.files.push((name.to_string(), sha256_hex(&bytes)));
        Ok(())
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.record(name)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "{header}").unwrap();
    for row in rows {
        writeln!(out, "{row}").unwrap();
    }
    out
}

fn weight_field(cfg: &RunConfig, u: &RealField) -> RealField {
    match (cfg.model.kind, cfg.model.delta) {
        (ModelKind::GraphMollified, Some(delta)) => forward_transform(u).mollified(delta).to_real(),
        _ => u.clone(),
    }
}

/// Runs one command end to end, writing into [`output_dir`].
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    let dir = output_dir(cfg, cmd);
    run_in(cmd, cfg, &dir)
}

/// Like [`run`] with an explicit output directory.
pub fn run_in(cmd: Command, cfg: &RunConfig, dir: &Path) -> Result<RunReport, HarnessError> {
    let mut out = Emitter::new(dir.to_path_buf())?;
    let mut manifest = Manifest::new(cmd.name(), cfg);
    let mut summary = Vec::new();
    let status = match cmd {
        Command::Simulate => simulate(cfg, &mut out, &mut manifest, &mut summary)?,
        Command::SweepEpsilon => sweep_epsilon(cfg, &mut out, &mut manifest, &mut summary)?,
        Command::SweepDelta => sweep_delta(cfg, &mut out, &mut manifest, &mut summary)?,
        Command::Dispersion => dispersion(cfg, &mut out, &mut manifest, &mut summary)?,
        Command::EnergyReport => energy(cfg, None, &mut out, &mut manifest, &mut summary)?,
    };
    finish(out, manifest, status, summary)
}

/// `energy-report` on an explicit snapshot file instead of the configured
/// initial condition.
pub fn run_energy_report_on(
    cfg: &RunConfig,
    field: &Path,
    dir: &Path,
) -> Result<RunReport, HarnessError> {
    let mut out = Emitter::new(dir.to_path_buf())?;
    let mut manifest = Manifest::new(Command::EnergyReport.name(), cfg);
    let mut summary = Vec::new();
    let u = crate::spectral::read_snapshot(field)?;
    let status = energy(cfg, Some(u), &mut out, &mut manifest, &mut summary)?;
    finish(out, manifest, status, summary)
}

fn finish(
    mut out: Emitter,
    mut manifest: Manifest,
    status: Status,
    summary: Vec<String>,
) -> Result<RunReport, HarnessError> {
    manifest.partial = status == Status::BlowUp;
    manifest.files = out.files.iter().cloned().collect();
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    out.write("manifest.json", &json)?;
    Ok(RunReport {
        status,
        dir: out.dir,
        manifest,
        summary,
    })
}

fn simulate(
    cfg: &RunConfig,
    out: &mut Emitter,
    manifest: &mut Manifest,
    summary: &mut Vec<String>,
) -> Result<Status, HarnessError> {
    let params = cfg.model_params()?;
    let stepper = cfg.stepper_config()?;
    manifest.note_snapshot_interval(cfg.stepper.snapshot_every, stepper.snapshot_every());
    let u0 = cfg.initial_field()?;
    let series = integrate(&u0, &params, &stepper, &mut [])
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let rows = series.diagnostics.iter().map(EnergyReport::csv_row);
    out.write("diagnostics.csv", &csv(EnergyReport::CSV_HEADER, rows))?;
    for (i, u) in series.snapshots.iter().enumerate() {
        if cfg.output.snapshots {
            let name = format!("snap_{i}.fld");
            write_snapshot(out.path(&name), u)?;
            out.record(&name)?;
        }
        if cfg.output.field_csv {
            let name = format!("snap_{i}.csv");
            write_field_csv(out.path(&name), u)?;
            out.record(&name)?;
        }
    }
    let last = series.diagnostics.last().expect("initial state recorded");
    summary.push(format!(
        "stored {} snapshots up to t = {}; final l2 = {:e}, h4 = {:e}",
        series.len(),
        last.t,
        last.l2,
        last.h4
    ));
    Ok(match series.blow_up {
        Some(t) => {
            manifest.outcomes.push(RunOutcome::blew_up("simulate", t));
            summary.push(format!("blew up at t = {t}"));
            Status::BlowUp
        }
        None => {
            manifest.outcomes.push(RunOutcome::completed("simulate"));
            Status::Success
        }
    })
}

fn sweep_epsilon(
    cfg: &RunConfig,
    out: &mut Emitter,
    manifest: &mut Manifest,
    summary: &mut Vec<String>,
) -> Result<Status, HarnessError> {
    let exp = &cfg.experiment;
    let stepper = cfg.stepper_for(exp.tau_star)?;
    manifest.note_snapshot_interval(cfg.stepper.snapshot_every, stepper.snapshot_every());
    let u0 = cfg.initial_field()?;
    let result = match epsilon_sweep(&u0, &exp.eps_values, exp.tau_star, &stepper) {
        Ok(r) => r,
        Err(e) if HarnessError::from(e.clone()).status() == Status::BlowUp => {
            manifest.outcomes.push(RunOutcome::failed("sweep", e.to_string()));
            summary.push(e.to_string());
            return Ok(Status::BlowUp);
        }
        Err(e) => return Err(e.into()),
    };
    for &eps in &result.eps_values {
        manifest.outcomes.push(RunOutcome::completed(&format!("epsilon={eps}")));
    }
    for &(eps, t) in &result.dropped {
        manifest.outcomes.push(RunOutcome::blew_up(&format!("epsilon={eps}"), t));
    }
    let rows = result
        .eps_values
        .iter()
        .zip(&result.sup_errors)
        .zip(&result.y_space_errors)
        .map(|((e, s), y)| format!("{e:e},{s:e},{y:e}"));
    out.write("sweep.csv", &csv("epsilon,sup_error,y_space_error", rows))?;
    let json = serde_json::json!({
        "slope": result.fitted_slope,
        "tau_star": result.tau_star,
        "config_hash": manifest.config_hash,
    });
    out.write("summary.json", &serde_json::to_vec_pretty(&json).unwrap())?;

    let decreasing = result.strictly_decreasing();
    let bounded = result.bounded_by_constant(exp.bound_factor);
    summary.push(format!(
        "fitted slope {:.4} (min {}), strictly decreasing: {decreasing}, bound constant {:.4e} (bounded: {bounded})",
        result.fitted_slope,
        exp.min_slope,
        result.bound_constant()
    ));
    manifest.checks.insert("slope".into(), result.fitted_slope >= exp.min_slope);
    manifest.checks.insert("strictly_decreasing".into(), decreasing);
    manifest.checks.insert("bounded_by_constant".into(), bounded);
    Ok(if !result.dropped.is_empty() {
        Status::BlowUp
    } else if result.fitted_slope >= exp.min_slope && decreasing && bounded {
        Status::Success
    } else {
        Status::ValidationFailure
    })
}

fn sweep_delta(
    cfg: &RunConfig,
    out: &mut Emitter,
    manifest: &mut Manifest,
    summary: &mut Vec<String>,
) -> Result<Status, HarnessError> {
    let stepper = cfg.stepper_config()?;
    manifest.note_snapshot_interval(cfg.stepper.snapshot_every, stepper.snapshot_every());
    let y0 = cfg.initial_field()?;
    let alpha = cfg.model.alpha.expect("defaults applied");
    let deltas = &cfg.experiment.delta_values;
    let study = delta_convergence(&y0, alpha, deltas, stepper.t_end(), &stepper)?;
    for &delta in deltas {
        match study.blow_ups.iter().find(|(d, _)| *d == delta) {
            Some(&(_, t)) => manifest.outcomes.push(RunOutcome::blew_up(&format!("delta={delta}"), t)),
            None => manifest.outcomes.push(RunOutcome::completed(&format!("delta={delta}"))),
        }
    }
    let rows = study.differences.iter().enumerate().map(|(i, d)| {
        let d = d.map(|v| format!("{v:e}")).unwrap_or_default();
        format!("{:e},{:e},{d}", deltas[i], deltas[i + 1])
    });
    out.write("delta.csv", &csv("delta,next_delta,h4_difference", rows))?;
    for (i, f) in study.finals.iter().enumerate() {
        if let (Some(f), true) = (f, cfg.output.snapshots) {
            let name = format!("final_{i}.fld");
            write_snapshot(out.path(&name), f)?;
            out.record(&name)?;
        }
    }
    let monotone = study.monotone_nonincreasing();
    let json = serde_json::json!({
        "monotone": monotone,
        "differences": study.differences,
        "t_end": stepper.t_end(),
        "config_hash": manifest.config_hash,
    });
    out.write("summary.json", &serde_json::to_vec_pretty(&json).unwrap())?;
    manifest.checks.insert("monotone".into(), monotone);
    summary.push(format!("H4 differences {:?}, monotone: {monotone}", study.differences));
    Ok(if !study.blow_ups.is_empty() {
        Status::BlowUp
    } else if monotone {
        Status::Success
    } else {
        Status::ValidationFailure
    })
}

fn dispersion(
    cfg: &RunConfig,
    out: &mut Emitter,
    manifest: &mut Manifest,
    summary: &mut Vec<String>,
) -> Result<Status, HarnessError> {
    let grid = cfg.grid()?;
    let stepper = cfg.stepper_config()?;
    manifest.note_snapshot_interval(cfg.stepper.snapshot_every, stepper.snapshot_every());
    let exp = &cfg.experiment;
    let mut rows = Vec::new();
    let mut ok = true;
    for &p in &exp.dispersion_modes {
        let r = dispersion_check(&grid, p, exp.dispersion_amplitude, &stepper)?;
        let pass = r.relative_error() <= exp.dispersion_tolerance;
        ok &= pass;
        manifest.outcomes.push(RunOutcome::completed(&format!("p={p}")));
        manifest.checks.insert(format!("p={p}"), pass);
        summary.push(format!(
            "p = {p}: measured {:.6e}, analytic {:.6e}, relative error {:.3e}",
            r.measured,
            r.analytic,
            r.relative_error()
        ));
        rows.push(format!(
            "{},{:e},{:e},{:e},{:e}",
            p,
            r.k,
            r.measured,
            r.analytic,
            r.relative_error()
        ));
    }
    out.write("dispersion.csv", &csv("p,k,measured,analytic,relative_error", rows))?;
    Ok(if ok {
        Status::Success
    } else {
        Status::ValidationFailure
    })
}

fn energy(
    cfg: &RunConfig,
    field: Option<RealField>,
    out: &mut Emitter,
    manifest: &mut Manifest,
    summary: &mut Vec<String>,
) -> Result<Status, HarnessError> {
    let u = match field {
        Some(u) => u,
        None => cfg.initial_field()?,
    };
    let report = energy_report(&u, 0.0, &weight_field(cfg, &u))
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let t_exist = existence_time(report.h4, cfg.lemma.gamma, cfg.lemma.m)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    out.write("energy.csv", &csv(EnergyReport::CSV_HEADER, [report.csv_row()]))?;
    let json = serde_json::json!({
        "report": report,
        "existence_time": if t_exist.is_finite() { serde_json::json!(t_exist) } else { serde_json::json!("inf") },
        "gamma": cfg.lemma.gamma,
        "m": cfg.lemma.m,
    });
    out.write("energy.json", &serde_json::to_vec_pretty(&json).unwrap())?;
    manifest.outcomes.push(RunOutcome::completed("energy-report"));
    summary.push(format!(
        "l2 = {:e}, h4 = {:e}, h5 = {:e}, energy_I = {:e}, existence time = {t_exist}",
        report.l2, report.h4, report.h5, report.energy_i
    ));
    Ok(Status::Success)
}

#[cfg(test)]
mod tests;
