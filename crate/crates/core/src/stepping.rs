//! Fixed-step time integration of `∂_t u = L u + N(u)` with diagonal `L`.
//!
//! The exponential fourth-order Runge–Kutta scheme (ETDRK4) is the default;
//! first-order IMEX and classical explicit RK4 are available for cross-checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{energy_report, EnergyReport};
use crate::dynamics::{make_split, DynamicsError, ModelKind, ModelParams, RhsSplit};
use crate::spectral::{forward_transform, RealField, SpectralField};

/// Any sample beyond this magnitude counts as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;
const CONTOUR_POINTS: usize = 32;
const CONTOUR_RADIUS: f64 = 1.0;
const CONTOUR_SWITCH: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteppingError {
    #[error("stepper.{name} must be positive and finite (got {value})")]
    InvalidTime { name: &'static str, value: f64 },
    #[error("stepper.dt ({dt}) must not exceed stepper.snapshot_every ({snapshot_every})")]
    SnapshotTooShort { dt: f64, snapshot_every: f64 },
    #[error("stepper.snapshot_every ({snapshot_every}) must not exceed stepper.t_end ({t_end})")]
    SnapshotTooLong { snapshot_every: f64, t_end: f64 },
    #[error("initial condition grid does not match the model grid")]
    GridMismatch,
    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error(transparent)]
    Model(#[from] DynamicsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Etdrk4,
    Imex1,
    Rk4Explicit,
}

/// Validated step size, horizon and output cadence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepperConfig {
    dt: f64,
    scheme: Scheme,
    t_end: f64,
    snapshot_every: f64,
}

impl StepperConfig {
    /// `snapshot_every` is rounded to the nearest positive multiple of `dt`.
    pub fn new(
        dt: f64,
        scheme: Scheme,
        t_end: f64,
        snapshot_every: f64,
    ) -> Result<Self, SteppingError> {
        for (name, value) in [("dt", dt), ("t_end", t_end), ("snapshot_every", snapshot_every)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SteppingError::InvalidTime { name, value });
            }
        }
        if dt > snapshot_every * (1.0 + 1e-12) {
            return Err(SteppingError::SnapshotTooShort { dt, snapshot_every });
        }
        if snapshot_every > t_end * (1.0 + 1e-12) {
            return Err(SteppingError::SnapshotTooLong { snapshot_every, t_end });
        }
        let every = (snapshot_every / dt).round().max(1.0);
        Ok(Self {
            dt,
            scheme,
            t_end,
            snapshot_every: every * dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn snapshot_every(&self) -> f64 {
        self.snapshot_every
    }

    pub fn steps_per_snapshot(&self) -> usize {
        (self.snapshot_every / self.dt).round() as usize
    }

    /// Number of steps needed to reach `t_end`, the last one possibly
    /// overshooting by less than a step.
    pub fn total_steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// `φ`-type weights evaluated by averaging over a circle around `z` in the
/// complex plane, which avoids cancellation near `z = 0`.
fn contour_mean(z: f64, f: impl Fn(Complex64) -> Complex64) -> f64 {
    let sum: Complex64 = (0..CONTOUR_POINTS)
        .map(|j| {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
            f(Complex64::new(z, 0.0) + Complex64::from_polar(CONTOUR_RADIUS, theta))
        })
        .sum();
    sum.re / CONTOUR_POINTS as f64
}

/// `φ₁(z) = (e^z - 1)/z`, accurate for all real `z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < CONTOUR_SWITCH {
        contour_mean(z, |w| (w.exp() - 1.0) / w)
    } else {
        z.exp_m1() / z
    }
}

/// Per-mode ETDRK4 coefficients for a real diagonal symbol.
#[derive(Clone, Debug)]
pub struct EtdWeights {
    pub e: Vec<f64>,
    pub e2: Vec<f64>,
    pub q: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
}

impl EtdWeights {
    pub fn new(symbol: &[f64], dt: f64) -> Self {
        let n = symbol.len();
        let mut w = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &l in symbol {
            let z = l * dt;
            w.e.push(z.exp());
            w.e2.push((0.5 * z).exp());
            let (q, f1, f2, f3) = if z.abs() < CONTOUR_SWITCH {
                (
                    contour_mean(z, |r| ((0.5 * r).exp() - 1.0) / r),
                    contour_mean(z, |r| (-4.0 - r + r.exp() * (4.0 - 3.0 * r + r * r)) / r.powu(3)),
                    contour_mean(z, |r| (2.0 + r + r.exp() * (r - 2.0)) / r.powu(3)),
                    contour_mean(z, |r| (-4.0 - 3.0 * r - r * r + r.exp() * (4.0 - r)) / r.powu(3)),
                )
            } else {
                let ez = z.exp();
                let z3 = z * z * z;
                (
                    (0.5 * z).exp_m1() / z,
                    (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3,
                    (2.0 + z + ez * (z - 2.0)) / z3,
                    (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3,
                )
            };
            w.q.push(dt * q);
            w.f1.push(dt * f1);
            w.f2.push(dt * f2);
            w.f3.push(dt * f3);
        }
        w
    }
}

fn combine(terms: &[(&[f64], &SpectralField)]) -> SpectralField {
    let (_, first) = terms[0];
    let len = first.half_spectrum().len();
    let coeffs = (0..len)
        .map(|p| {
            terms
                .iter()
                .map(|(w, f)| f.half_spectrum()[p] * w[p])
                .sum::<Complex64>()
        })
        .collect();
    SpectralField::from_raw(first.grid().clone(), coeffs)
}

fn axpy(a: &SpectralField, scale: f64, b: &SpectralField) -> SpectralField {
    let coeffs = a
        .half_spectrum()
        .iter()
        .zip(b.half_spectrum())
        .map(|(x, y)| x + y * scale)
        .collect();
    SpectralField::from_raw(a.grid().clone(), coeffs)
}

/// One integrator bound to a split and a step size.
#[derive(Clone, Debug)]
pub struct Stepper {
    split: RhsSplit,
    cfg: StepperConfig,
    weights: Option<EtdWeights>,
}

impl Stepper {
    pub fn new(split: RhsSplit, cfg: StepperConfig) -> Self {
        let weights = match cfg.scheme {
            Scheme::Etdrk4 => Some(EtdWeights::new(split.linear_symbol(), cfg.dt)),
            _ => None,
        };
        Self {
            split,
            cfg,
            weights,
        }
    }

    pub fn split(&self) -> &RhsSplit {
        &self.split
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Advances Fourier coefficients by one step without any checks.
    pub fn advance(&self, v: &SpectralField) -> SpectralField {
        let dt = self.cfg.dt;
        let nl = |x: &SpectralField| self.split.nonlinear_spectral(x);
        match self.cfg.scheme {
            Scheme::Etdrk4 => {
                let w = self.weights.as_ref().expect("weights built for etdrk4");
                let nv = nl(v);
                let a = combine(&[(&w.e2, v), (&w.q, &nv)]);
                let na = nl(&a);
                let b = combine(&[(&w.e2, v), (&w.q, &na)]);
                let nb = nl(&b);
                let two_nb_minus_nv = axpy(&nb.scaled(2.0), -1.0, &nv);
                let c = combine(&[(&w.e2, &a), (&w.q, &two_nb_minus_nv)]);
                let nc = nl(&c);
                let na_nb = axpy(&na, 1.0, &nb).scaled(2.0);
                combine(&[(&w.e, v), (&w.f1, &nv), (&w.f2, &na_nb), (&w.f3, &nc)])
            }
            Scheme::Imex1 => {
                let nv = nl(v);
                let coeffs = v
                    .half_spectrum()
                    .iter()
                    .zip(nv.half_spectrum())
                    .zip(self.split.linear_symbol())
                    .map(|((x, n), l)| (x + n * dt) / (1.0 - dt * l))
                    .collect();
                SpectralField::from_raw(v.grid().clone(), coeffs)
            }
            Scheme::Rk4Explicit => {
                let f = |x: &SpectralField| axpy(&self.split.apply_linear(x), 1.0, &nl(x));
                let k1 = f(v);
                let k2 = f(&axpy(v, 0.5 * dt, &k1));
                let k3 = f(&axpy(v, 0.5 * dt, &k2));
                let k4 = f(&axpy(v, dt, &k3));
                let incr = axpy(&axpy(&k1, 2.0, &k2), 2.0, &axpy(&k3, 0.5, &k4));
                axpy(v, dt / 6.0, &incr)
            }
        }
    }

    /// One checked step from time `t`; blow-up reports `t + dt`.
    pub fn step(&self, u: &RealField, t: f64) -> Result<RealField, SteppingError> {
        self.step_spectral(&forward_transform(u), t).map(|(_, u)| u)
    }

    fn step_spectral(
        &self,
        v: &SpectralField,
        t: f64,
    ) -> Result<(SpectralField, RealField), SteppingError> {
        let next = self.advance(v);
        let u = next.to_real();
        if !u.is_finite() || u.max_abs() > BLOW_UP_THRESHOLD {
            return Err(SteppingError::BlowUp { t: t + self.cfg.dt });
        }
        Ok((next, u))
    }
}

/// One step of `cfg.scheme` for the given split.
pub fn step(u: &RealField, split: &RhsSplit, cfg: &StepperConfig) -> Result<RealField, SteppingError> {
    if !u.grid().same_as(split.grid()) {
        return Err(SteppingError::GridMismatch);
    }
    Stepper::new(split.clone(), *cfg).step(u, 0.0)
}

/// Snapshots of one run. On blow-up the series holds everything up to the
/// last finite snapshot and `blow_up` carries the time it was detected.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<RealField>,
    pub diagnostics: Vec<EnergyReport>,
    pub blow_up: Option<f64>,
}

impl TimeSeries {
    pub fn is_partial(&self) -> bool {
        self.blow_up.is_some()
    }

    pub fn last(&self) -> &RealField {
        self.snapshots.last().expect("series always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Called once per stored snapshot, initial state included.
pub trait Observer {
    fn observe(&mut self, t: f64, u: &RealField, report: &EnergyReport);
}

impl<F: FnMut(f64, &RealField, &EnergyReport)> Observer for F {
    fn observe(&mut self, t: f64, u: &RealField, report: &EnergyReport) {
        self(t, u, report)
    }
}

/// Field whose slope weights the dissipation integrals.
fn weight_field(params: &ModelParams, u: &RealField) -> RealField {
    match (params.kind, params.delta) {
        (ModelKind::GraphMollified, Some(delta)) => {
            forward_transform(u).mollified(delta).to_real()
        }
        _ => u.clone(),
    }
}

/// Integrates a model from `u0` to `cfg.t_end`, storing every
/// `cfg.snapshot_every` and at the final time.
pub fn integrate(
    u0: &RealField,
    params: &ModelParams,
    cfg: &StepperConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<TimeSeries, SteppingError> {
    let split = make_split(params, u0.grid())?;
    let params = *params;
    integrate_split(u0, split, cfg, move |u| weight_field(&params, u), observers)
}

/// Like [`integrate`] for an arbitrary split.
pub fn integrate_split(
    u0: &RealField,
    split: RhsSplit,
    cfg: &StepperConfig,
    weights: impl Fn(&RealField) -> RealField,
    observers: &mut [&mut dyn Observer],
) -> Result<TimeSeries, SteppingError> {
    if !u0.grid().same_as(split.grid()) {
        return Err(SteppingError::GridMismatch);
    }
    let stepper = Stepper::new(split, *cfg);
    let report = |u: &RealField, t: f64| {
        energy_report(u, t, &weights(u)).expect("fields share a grid")
    };
    let mut series = TimeSeries {
        times: Vec::new(),
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        blow_up: None,
    };
    let mut record = |series: &mut TimeSeries, t: f64, u: RealField| {
        let r = report(&u, t);
        for obs in observers.iter_mut() {
            obs.observe(t, &u, &r);
        }
        series.times.push(t);
        series.diagnostics.push(r);
        series.snapshots.push(u);
    };
    record(&mut series, 0.0, u0.clone());

    let total = cfg.total_steps();
    let every = cfg.steps_per_snapshot();
    let mut v = forward_transform(u0);
    for i in 0..total {
        let t = i as f64 * cfg.dt;
        match stepper.step_spectral(&v, t) {
            Ok((next, u)) => {
                v = next;
                let done = i + 1;
                if done % every == 0 || done == total {
                    record(&mut series, done as f64 * cfg.dt, u);
                }
            }
            Err(SteppingError::BlowUp { t }) => {
                series.blow_up = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(series)
}
