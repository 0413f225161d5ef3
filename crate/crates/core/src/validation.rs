//! Numerical experiments: closeness of the rescaled graph model to KS as
//! `ε → 0`, convergence of the mollified model as `δ → 0`, and the linear
//! dispersion check.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::ModelParams;
use crate::spectral::{
    forward_transform, spectral_sobolev_norm, Grid, RealField, SpectralError, SpectralField,
};
use crate::stepping::{integrate, StepperConfig, SteppingError, TimeSeries};

/// Environment variable capping the number of worker threads in sweeps.
pub const THREADS_ENV: &str = "FLAMEFRONT_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("need ≥ 3 epsilon values")]
    TooFewEpsilons,
    #[error("need ≥ 2 delta values")]
    TooFewDeltas,
    #[error("{name} values must be positive and strictly decreasing")]
    NotDecreasing { name: &'static str },
    #[error("epsilon must be finite and ≥ 0 (got {0})")]
    InvalidEpsilon(f64),
    #[error("only {survivors} epsilon runs reached tau_star; need ≥ 3 for a slope")]
    TooFewSurvivors { survivors: usize },
    #[error("the KS reference run blew up at τ = {t}")]
    ReferenceBlowUp { t: f64 },
    #[error("the phi run with ε = {epsilon} blew up at τ = {t}")]
    PhiBlowUp { epsilon: f64, t: f64 },
    #[error("growth rate σ = {sigma:e} of mode {p} is too small to measure")]
    Unmeasurable { p: i64, sigma: f64 },
    #[error("mode {p} is not resolved on a grid with {n} points")]
    UnresolvedMode { p: i64, n: usize },
    #[error("rescaling factor must be positive (got {0})")]
    InvalidScale(f64),
    #[error(transparent)]
    Stepping(#[from] SteppingError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `0.1(sin(4k₀ξ) + 0.5 sin(6k₀ξ))` with `k₀ = 2π/L`.
pub fn default_u0(grid: &Arc<Grid>) -> RealField {
    RealField::from_modes(grid.clone(), &[(4, 0.1, 0.0), (6, 0.05, 0.0)])
        .expect("modes 4 and 6 need N ≥ 16")
}

/// Runs `f` on a pool sized by [`THREADS_ENV`] when it is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn horizon(cfg: &StepperConfig, t_end: f64) -> Result<StepperConfig, SteppingError> {
    let every = cfg.snapshot_every().min(t_end);
    StepperConfig::new(cfg.dt(), cfg.scheme(), t_end, every.max(cfg.dt()))
}

fn reference_run(
    u0: &RealField,
    tau_star: f64,
    cfg: &StepperConfig,
) -> Result<TimeSeries, ValidationError> {
    let cfg = horizon(cfg, tau_star)?;
    let series = integrate(u0, &ModelParams::ks_rescaled(), &cfg, &mut [])?;
    match series.blow_up {
        Some(t) => Err(ValidationError::ReferenceBlowUp { t }),
        None => Ok(series),
    }
}

fn phi_trace_against(
    reference: &TimeSeries,
    u0: &RealField,
    epsilon: f64,
    tau_star: f64,
    cfg: &StepperConfig,
) -> Result<Vec<(f64, f64)>, ValidationError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ValidationError::InvalidEpsilon(epsilon));
    }
    let cfg = horizon(cfg, tau_star)?;
    let phi = integrate(u0, &ModelParams::phi(epsilon), &cfg, &mut [])?;
    if let Some(t) = phi.blow_up {
        return Err(ValidationError::PhiBlowUp { epsilon, t });
    }
    Ok(phi
        .times
        .iter()
        .zip(&phi.snapshots)
        .zip(&reference.snapshots)
        .map(|((&t, p), u)| (t, (p - u).l2_norm()))
        .collect())
}

/// `‖Φ(τ) - U(τ)‖_{L²}` at every stored snapshot, both runs started from `u0`.
pub fn phi_vs_ks_trace(
    u0: &RealField,
    epsilon: f64,
    tau_star: f64,
    cfg: &StepperConfig,
) -> Result<Vec<(f64, f64)>, ValidationError> {
    let reference = reference_run(u0, tau_star, cfg)?;
    phi_trace_against(&reference, u0, epsilon, tau_star, cfg)
}

/// `sup_{τ ≤ τ*} ‖Φ(τ) - U(τ)‖_{L²}` over stored snapshots.
pub fn phi_vs_ks(
    u0: &RealField,
    epsilon: f64,
    tau_star: f64,
    cfg: &StepperConfig,
) -> Result<f64, ValidationError> {
    Ok(sup_of(&phi_vs_ks_trace(u0, epsilon, tau_star, cfg)?))
}

fn sup_of(trace: &[(f64, f64)]) -> f64 {
    trace.iter().map(|&(_, e)| e).fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub eps_values: Vec<f64>,
    pub sup_errors: Vec<f64>,
    /// `ε^{3/4}·sup_error`, the error measured in the original variables.
    pub y_space_errors: Vec<f64>,
    pub fitted_slope: f64,
    pub tau_star: f64,
    /// `(ε, τ)` for runs that blew up before `τ*`.
    pub dropped: Vec<(f64, f64)>,
}

impl SweepResult {
    /// Assembles the result from per-ε sup errors (ε decreasing).
    pub fn from_errors(eps_values: Vec<f64>, sup_errors: Vec<f64>, tau_star: f64) -> Self {
        let y_space_errors = eps_values
            .iter()
            .zip(&sup_errors)
            .map(|(e, s)| e.powf(0.75) * s)
            .collect();
        let fitted_slope = loglog_slope(&eps_values, &sup_errors);
        Self {
            eps_values,
            sup_errors,
            y_space_errors,
            fitted_slope,
            tau_star,
            dropped: Vec::new(),
        }
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.sup_errors.windows(2).all(|w| w[1] < w[0])
    }

    /// `y_space_error / ε^{7/4}`, i.e. `sup_error / ε`, per ε.
    pub fn scaled_y_errors(&self) -> Vec<f64> {
        self.eps_values
            .iter()
            .zip(&self.y_space_errors)
            .map(|(e, y)| y / e.powf(1.75))
            .collect()
    }

    /// The constant bounding `y_space_error / ε^{7/4}` over the sweep.
    pub fn bound_constant(&self) -> f64 {
        self.scaled_y_errors().into_iter().fold(0.0, f64::max)
    }

    /// Whether the scaled y-space error at the smallest ε stays within
    /// `factor` times the largest scaled error at the larger ε values, so
    /// that one constant covers the whole sweep as ε shrinks.
    pub fn bounded_by_constant(&self, factor: f64) -> bool {
        let scaled = self.scaled_y_errors();
        match scaled.split_last() {
            Some((last, rest)) if !rest.is_empty() => {
                *last <= factor * rest.iter().cloned().fold(0.0, f64::max)
            }
            _ => false,
        }
    }

    /// Whether the ε values cover at least one decade.
    pub fn spans_decade(&self) -> bool {
        match (self.eps_values.first(), self.eps_values.last()) {
            (Some(a), Some(b)) => a / b >= 10.0,
            _ => false,
        }
    }
}

fn check_decreasing(values: &[f64], name: &'static str) -> Result<(), ValidationError> {
    let ok = values.iter().all(|v| *v > 0.0 && v.is_finite())
        && values.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(ValidationError::NotDecreasing { name })
    }
}

/// Runs [`phi_vs_ks`] for every ε (in parallel, one shared KS reference run)
/// and fits the log-log slope over the runs that reached `τ*`.
pub fn epsilon_sweep(
    u0: &RealField,
    eps_values: &[f64],
    tau_star: f64,
    cfg: &StepperConfig,
) -> Result<SweepResult, ValidationError> {
    if eps_values.len() < 3 {
        return Err(ValidationError::TooFewEpsilons);
    }
    check_decreasing(eps_values, "epsilon")?;
    let reference = reference_run(u0, tau_star, cfg)?;
    let outcomes: Vec<Result<f64, ValidationError>> = with_thread_cap(|| {
        eps_values
            .par_iter()
            .map(|&eps| phi_trace_against(&reference, u0, eps, tau_star, cfg).map(|t| sup_of(&t)))
            .collect()
    });
    let mut kept_eps = Vec::new();
    let mut kept_err = Vec::new();
    let mut dropped = Vec::new();
    for (&eps, outcome) in eps_values.iter().zip(outcomes) {
        match outcome {
            Ok(e) => {
                kept_eps.push(eps);
                kept_err.push(e);
            }
            Err(ValidationError::PhiBlowUp { epsilon, t }) => dropped.push((epsilon, t)),
            Err(e) => return Err(e),
        }
    }
    if kept_eps.len() < 3 {
        return Err(ValidationError::TooFewSurvivors {
            survivors: kept_eps.len(),
        });
    }
    let mut result = SweepResult::from_errors(kept_eps, kept_err, tau_star);
    result.dropped = dropped;
    Ok(result)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaStudy {
    pub deltas: Vec<f64>,
    /// Final states per δ, `None` where the run blew up.
    #[serde(skip)]
    pub finals: Vec<Option<RealField>>,
    /// `(δ, t)` for runs that blew up before `t_end`.
    pub blow_ups: Vec<(f64, f64)>,
    /// `‖y^{δ_i} - y^{δ_{i+1}}‖_{H⁴}` at `t_end`, `None` if either run blew up.
    pub differences: Vec<Option<f64>>,
}

impl DeltaStudy {
    pub fn monotone_nonincreasing(&self) -> bool {
        let diffs: Option<Vec<f64>> = self.differences.iter().cloned().collect();
        match diffs {
            Some(d) => d.windows(2).all(|w| w[1] <= w[0]),
            None => false,
        }
    }
}

/// Integrates the mollified model for every δ with data `J^δ y₀`.
pub fn delta_convergence(
    y0: &RealField,
    alpha: f64,
    deltas: &[f64],
    t_end: f64,
    cfg: &StepperConfig,
) -> Result<DeltaStudy, ValidationError> {
    if deltas.len() < 2 {
        return Err(ValidationError::TooFewDeltas);
    }
    check_decreasing(deltas, "delta")?;
    let cfg = horizon(cfg, t_end)?;
    let c0 = forward_transform(y0);
    let runs: Vec<Result<TimeSeries, SteppingError>> = with_thread_cap(|| {
        deltas
            .par_iter()
            .map(|&delta| {
                let start = c0.mollified(delta).to_real();
                integrate(&start, &ModelParams::graph_mollified(alpha, delta), &cfg, &mut [])
            })
            .collect()
    });
    let mut finals = Vec::with_capacity(deltas.len());
    let mut blow_ups = Vec::new();
    for (&delta, run) in deltas.iter().zip(runs) {
        let run = run?;
        match run.blow_up {
            Some(t) => {
                blow_ups.push((delta, t));
                finals.push(None);
            }
            None => finals.push(Some(run.last().clone())),
        }
    }
    let differences = finals
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Some(a), Some(b)) => Some(spectral_sobolev_norm(&forward_transform(&(a - b)), 4.0)),
            _ => None,
        })
        .collect();
    Ok(DeltaStudy {
        deltas: deltas.to_vec(),
        finals,
        blow_ups,
        differences,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionOutcome {
    pub p: i64,
    pub k: f64,
    pub measured: f64,
    pub analytic: f64,
}

impl DispersionOutcome {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.analytic).abs() / self.analytic.abs()
    }
}

/// Growth rate of mode `p` of rescaled KS started from `amplitude·sin(k_p ξ)`,
/// fitted as the least-squares slope of `ln|ĉ_p|` over the stored snapshots,
/// against `σ = k² - 4k⁴`.
pub fn dispersion_check(
    grid: &Arc<Grid>,
    p: i64,
    amplitude: f64,
    cfg: &StepperConfig,
) -> Result<DispersionOutcome, ValidationError> {
    if p <= 0 || p as usize >= grid.n_points() / 2 {
        return Err(ValidationError::UnresolvedMode {
            p,
            n: grid.n_points(),
        });
    }
    let k = grid.wavenumber(p);
    let analytic = k * k - 4.0 * k.powi(4);
    if analytic.abs() < 1e-6 {
        return Err(ValidationError::Unmeasurable { p, sigma: analytic });
    }
    let u0 = RealField::from_modes(grid.clone(), &[(p, amplitude, 0.0)])?;
    let series = integrate(&u0, &ModelParams::ks_rescaled(), cfg, &mut [])?;
    if let Some(t) = series.blow_up {
        return Err(SteppingError::BlowUp { t }.into());
    }
    let logs: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.snapshots)
        .map(|(&t, u)| (t, forward_transform(u).coeff(p).norm().ln()))
        .collect();
    let n = logs.len() as f64;
    let mt = logs.iter().map(|l| l.0).sum::<f64>() / n;
    let ml = logs.iter().map(|l| l.1).sum::<f64>() / n;
    let stl: f64 = logs.iter().map(|(t, l)| (t - mt) * (l - ml)).sum();
    let stt: f64 = logs.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    Ok(DispersionOutcome {
        p,
        k,
        measured: stl / stt,
        analytic,
    })
}

/// `g(x) = f(a·x)` on the period `L/a`, sampled at `n_out` points by
/// trigonometric interpolation. For band-limited `f`,
/// `‖g‖_{L²} = a^{-1/2}‖f‖_{L²}`.
pub fn rescale_argument(f: &RealField, a: f64, n_out: usize) -> Result<RealField, ValidationError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(ValidationError::InvalidScale(a));
    }
    let target = Grid::new(f.grid().length() / a, n_out)?;
    let c = forward_transform(f);
    // mode p of f keeps its index on the shorter period
    let coeffs: Vec<_> = (0..target.spectrum_len())
        .map(|j| {
            let last = target.spectrum_len() - 1;
            let p = if j == last { -(n_out as i64) / 2 } else { j as i64 };
            let half = f.grid().n_points() as i64 / 2;
            if p.abs() < half {
                c.coeff(p)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(SpectralField::from_half_spectrum(target, coeffs)?.to_real())
}
