//! Periodic grids, real/spectral field representations and the Fourier
//! multipliers built on them: integer and fractional derivatives, the sharp
//! cutoff mollifier `J^δ`, Sobolev norms, and the zero-padding used to
//! evaluate nonlinear terms without aliasing.
//!
//! Coefficients are normalized as true Fourier-series coefficients,
//! `f(x_j) = Σ_p c_p exp(i k_p x_j)`, so `∫|f|² dx = L Σ_p |c_p|²`.
//! Real fields store the half spectrum `p = 0..N/2-1` plus the unpaired
//! `p = -N/2` mode in the last slot, which is always kept real.

mod snapshot;

pub use snapshot::{
    decode_snapshot, encode_snapshot, read_snapshot, write_field_csv, write_snapshot, SnapshotError,
    SNAPSHOT_MAGIC,
};

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use thiserror::Error;

/// Highest integer derivative order accepted by [`derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 8;

/// Relative slack applied to the mollifier cutoff so that wavenumbers equal
/// to `1/δ` up to rounding are kept.
const CUTOFF_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid.N must be even ≥ 8 (got {0})")]
    InvalidPointCount(usize),
    #[error("grid.L must be positive and finite (got {0})")]
    InvalidLength(f64),
    #[error("field has {got} samples but grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("derivative order {0} exceeds the supported maximum of {MAX_DERIVATIVE_ORDER}")]
    OrderTooHigh(u32),
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("pointwise_apply needs at least one field")]
    NoFields,
}

/// Uniform periodic grid on `[0, L)` with `N` nodes and its FFT plans.
pub struct Grid {
    length: f64,
    n: usize,
    /// `k` for half-spectrum slots `0..=N/2`; the last slot is `k_{-N/2} < 0`.
    half_wavenumbers: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    padded: OnceLock<Arc<Grid>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length)
            .field("n_points", &self.n)
            .finish()
    }
}

impl Grid {
    pub fn new(length: f64, n_points: usize) -> Result<Arc<Grid>, SpectralError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::InvalidLength(length));
        }
        if n_points < 8 || n_points % 2 != 0 {
            return Err(SpectralError::InvalidPointCount(n_points));
        }
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        let k0 = 2.0 * PI / length;
        let half = n_points / 2;
        let mut half_wavenumbers: Vec<f64> = (0..half).map(|p| k0 * p as f64).collect();
        half_wavenumbers.push(-k0 * half as f64);
        Ok(Arc::new(Grid {
            length,
            n: n_points,
            half_wavenumbers,
            forward,
            inverse,
            padded: OnceLock::new(),
        }))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest resolved |k|, attained by the unpaired `-N/2` mode.
    pub fn k_max(&self) -> f64 {
        self.k0() * (self.n / 2) as f64
    }

    /// `k_p = 2πp/L` for `p ∈ {-N/2, …, N/2-1}`.
    pub fn wavenumber(&self, p: i64) -> f64 {
        self.k0() * p as f64
    }

    /// Full wavenumber table ordered `p = -N/2, …, N/2-1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|p| self.wavenumber(p)).collect()
    }

    /// Wavenumbers of the stored half-spectrum slots.
    pub fn half_wavenumbers(&self) -> &[f64] {
        &self.half_wavenumbers
    }

    /// Number of stored half-spectrum coefficients, `N/2 + 1`.
    pub fn spectrum_len(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|j| j as f64 * h).collect()
    }

    /// Same domain with twice the points; used for dealiased products.
    pub fn padded(&self) -> Arc<Grid> {
        self.padded
            .get_or_init(|| Grid::new(self.length, 2 * self.n).expect("doubling a valid grid"))
            .clone()
    }

    /// Grids are interchangeable when they describe the same domain and node count.
    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.length == other.length)
    }
}

/// Samples `f(x_j)`, `x_j = j·h`, of a real periodic function.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for RealField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values
    }
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.n_points() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness check; callers that may produce overflow
    /// (time stepping) check for it themselves.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_points();
        Self::from_raw(grid, vec![0.0; n])
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let n = grid.n_points();
        Self::from_raw(grid, vec![value; n])
    }

    /// Samples `func` at the grid nodes. Non-finite samples are rejected.
    pub fn from_fn(grid: Arc<Grid>, func: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        let values = grid.nodes().into_iter().map(func).collect();
        Self::new(grid, values)
    }

    /// `Σ amplitude·sin(k_p x + phase)` over the given `(p, amplitude, phase)` triples.
    pub fn from_modes(grid: Arc<Grid>, modes: &[(i64, f64, f64)]) -> Result<Self, SpectralError> {
        let k0 = grid.k0();
        Self::from_fn(grid, |x| {
            modes
                .iter()
                .map(|&(p, a, phase)| a * (k0 * p as f64 * x + phase).sin())
                .sum()
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `‖f‖_{L²}` by the periodic trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn map(&self, func: impl Fn(f64) -> f64) -> RealField {
        RealField::from_raw(self.grid.clone(), self.values.iter().map(|&v| func(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> RealField {
        self.map(|v| factor * v)
    }

    /// Sample-wise `func(self, other)`.
    ///
    /// Panics if the fields live on different grids.
    pub fn zip_map(&self, other: &RealField, func: impl Fn(f64, f64) -> f64) -> RealField {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| func(a, b))
            .collect();
        RealField::from_raw(self.grid.clone(), values)
    }

    /// Circular shift by `shift` nodes: `g(x_j) = f(x_{j - shift})`.
    pub fn shifted(&self, shift: usize) -> RealField {
        let n = self.values.len();
        let values = (0..n).map(|j| self.values[(j + n - shift % n) % n]).collect();
        RealField::from_raw(self.grid.clone(), values)
    }

    pub fn to_spectral(&self) -> SpectralField {
        forward_transform(self)
    }
}

impl std::ops::Sub for &RealField {
    type Output = RealField;
    fn sub(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl std::ops::Add for &RealField {
    type Output = RealField;
    fn add(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

/// Fourier coefficients of a real field in half-spectrum storage.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Builds a field from half-spectrum coefficients. The imaginary parts of
    /// the mean and `-N/2` slots are dropped to keep the field real.
    pub fn from_half_spectrum(
        grid: Arc<Grid>,
        mut coeffs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.spectrum_len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.spectrum_len(),
                got: coeffs.len(),
            });
        }
        let last = coeffs.len() - 1;
        coeffs[0].im = 0.0;
        coeffs[last].im = 0.0;
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.spectrum_len());
        Self { grid, coeffs }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let m = grid.spectrum_len();
        Self::from_raw(grid, vec![Complex64::new(0.0, 0.0); m])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Stored coefficients for `p = 0, …, N/2-1` followed by `p = -N/2`.
    pub fn half_spectrum(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_half_spectrum(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient `c_p` for `p ∈ {-N/2, …, N/2-1}`.
    pub fn coeff(&self, p: i64) -> Complex64 {
        let half = (self.grid.n_points() / 2) as i64;
        assert!((-half..half).contains(&p), "mode {p} outside the grid");
        if p == -half {
            self.coeffs[half as usize]
        } else if p >= 0 {
            self.coeffs[p as usize]
        } else {
            self.coeffs[(-p) as usize].conj()
        }
    }

    /// `Σ_p w(k_p)|c_p|²` over the full spectrum, for even weights `w`.
    pub fn weighted_power(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let last = self.coeffs.len() - 1;
        self.coeffs
            .iter()
            .zip(self.grid.half_wavenumbers())
            .enumerate()
            .map(|(j, (c, &k))| {
                let mult = if j == 0 || j == last { 1.0 } else { 2.0 };
                mult * weight(k) * c.norm_sqr()
            })
            .sum()
    }

    /// Multiplies every mode by an even real symbol `m(k)`.
    pub fn apply_even_symbol(&self, symbol: impl Fn(f64) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.half_wavenumbers())
            .map(|(c, &k)| c * symbol(k))
            .collect();
        SpectralField::from_raw(self.grid.clone(), coeffs)
    }

    /// Multiplies by `(ik)^order`; odd orders annihilate the `-N/2` mode.
    pub fn differentiate(&self, order: u32) -> SpectralField {
        let last = self.coeffs.len() - 1;
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.half_wavenumbers())
            .enumerate()
            .map(|(j, (c, &k))| {
                if order == 0 {
                    *c
                } else if j == last && order % 2 == 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, k).powu(order)
                }
            })
            .collect();
        SpectralField::from_raw(self.grid.clone(), coeffs)
    }

    /// Sharp cutoff: keeps modes with `|k| ≤ 1/δ`.
    pub fn mollified(&self, delta: f64) -> SpectralField {
        let cutoff = (1.0 / delta) * (1.0 + CUTOFF_SLACK);
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.half_wavenumbers())
            .map(|(c, &k)| if k.abs() <= cutoff { *c } else { Complex64::new(0.0, 0.0) })
            .collect();
        SpectralField::from_raw(self.grid.clone(), coeffs)
    }

    /// Exact trigonometric interpolation onto the grid with `2N` points.
    pub fn padded(&self) -> SpectralField {
        let target = self.grid.padded();
        let half = self.grid.n_points() / 2;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); target.spectrum_len()];
        coeffs[..half].copy_from_slice(&self.coeffs[..half]);
        // the unpaired mode splits evenly between ±N/2 on the finer grid
        coeffs[half] = Complex64::new(0.5 * self.coeffs[half].re, 0.0);
        SpectralField::from_raw(target, coeffs)
    }

    /// Projects a field on a `2N` grid back onto `target` (`N` points),
    /// folding the `±N/2` pair into the unpaired mode. Inverse of [`padded`](Self::padded).
    pub fn truncated_to(&self, target: &Arc<Grid>) -> SpectralField {
        assert!(
            self.grid.n_points() == 2 * target.n_points() && self.grid.length() == target.length(),
            "truncation needs a grid with exactly twice the points of the target"
        );
        let half = target.n_points() / 2;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); target.spectrum_len()];
        coeffs[..half].copy_from_slice(&self.coeffs[..half]);
        coeffs[half] = Complex64::new(2.0 * self.coeffs[half].re, 0.0);
        SpectralField::from_raw(target.clone(), coeffs)
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        self.apply_even_symbol(|_| factor)
    }

    pub fn to_real(&self) -> RealField {
        inverse_transform(self)
    }
}

impl std::ops::Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.grid.same_as(&rhs.grid), "grid mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        SpectralField::from_raw(self.grid.clone(), coeffs)
    }
}

impl std::ops::Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.grid.same_as(&rhs.grid), "grid mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        SpectralField::from_raw(self.grid.clone(), coeffs)
    }
}

pub fn forward_transform(f: &RealField) -> SpectralField {
    let grid = f.grid.clone();
    let mut input = f.values.clone();
    let mut output = grid.forward.make_output_vec();
    grid.forward
        .process(&mut input, &mut output)
        .expect("buffer sizes come from the plan");
    let scale = 1.0 / grid.n_points() as f64;
    for c in output.iter_mut() {
        *c *= scale;
    }
    SpectralField::from_half_spectrum(grid, output).expect("plan output length")
}

pub fn inverse_transform(c: &SpectralField) -> RealField {
    let grid = c.grid.clone();
    let mut input = c.coeffs.clone();
    let last = input.len() - 1;
    input[0].im = 0.0;
    input[last].im = 0.0;
    let mut output = grid.inverse.make_output_vec();
    grid.inverse
        .process(&mut input, &mut output)
        .expect("imaginary parts of the real modes were cleared");
    RealField::from_raw(grid, output)
}

/// `∂^order f` via the multiplier `(ik)^order`.
pub fn derivative(f: &RealField, order: u32) -> Result<RealField, SpectralError> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(SpectralError::OrderTooHigh(order));
    }
    if order == 0 {
        return Ok(f.clone());
    }
    Ok(forward_transform(f).differentiate(order).to_real())
}

/// `|∇|^s f` via the multiplier `|k|^s`.
pub fn fractional_derivative(f: &RealField, s: f64) -> Result<RealField, SpectralError> {
    check_nonneg("s", s)?;
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(forward_transform(f).apply_even_symbol(|k| k.abs().powf(s)).to_real())
}

/// The sharp Fourier cutoff `J^δ`: zeroes every mode with `|k| > 1/δ`.
pub fn mollify(f: &RealField, delta: f64) -> Result<RealField, SpectralError> {
    check_positive("delta", delta)?;
    Ok(forward_transform(f).mollified(delta).to_real())
}

/// `‖(1-Δ)^{s/2} f‖_{L²} = (L Σ_p (1+k_p²)^s |c_p|²)^{1/2}`.
pub fn sobolev_norm(f: &RealField, s: f64) -> Result<f64, SpectralError> {
    check_nonneg("s", s)?;
    Ok(spectral_sobolev_norm(&forward_transform(f), s))
}

pub(crate) fn spectral_sobolev_norm(c: &SpectralField, s: f64) -> f64 {
    let l = c.grid().length();
    (l * c.weighted_power(|k| (1.0 + k * k).powf(s))).sqrt()
}

/// `‖|∇|^s f‖_{L²}` computed from coefficients.
pub(crate) fn homogeneous_norm(c: &SpectralField, s: f64) -> f64 {
    let l = c.grid().length();
    let weight = |k: f64| if k == 0.0 { if s == 0.0 { 1.0 } else { 0.0 } } else { k.abs().powf(2.0 * s) };
    (l * c.weighted_power(weight)).sqrt()
}

/// `∫ f g dx` by the periodic trapezoid rule.
pub fn l2_inner(f: &RealField, g: &RealField) -> Result<f64, SpectralError> {
    if !f.grid.same_as(&g.grid) {
        return Err(SpectralError::GridMismatch);
    }
    let h = f.grid.spacing();
    Ok(h * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>())
}

/// Applies `func` node by node to the samples of `fields`, which must share a
/// grid. No padding happens here; evaluate on `grid.padded()` when aliasing matters.
pub fn pointwise_apply(
    fields: &[&RealField],
    func: impl Fn(&[f64]) -> f64,
) -> Result<RealField, SpectralError> {
    let first = fields.first().ok_or(SpectralError::NoFields)?;
    if fields.iter().any(|f| !f.grid.same_as(&first.grid)) {
        return Err(SpectralError::GridMismatch);
    }
    let mut args = vec![0.0; fields.len()];
    let values = (0..first.len())
        .map(|j| {
            for (a, f) in args.iter_mut().zip(fields) {
                *a = f.values[j];
            }
            func(&args)
        })
        .collect();
    Ok(RealField::from_raw(first.grid.clone(), values))
}

/// Random real trigonometric polynomial `Σ_{p=1}^{max_mode} a_p cos(k_p x) + b_p sin(k_p x)`
/// with `a_p, b_p` uniform in `[-amplitude, amplitude]` and zero mean.
pub fn random_trig_polynomial<R: Rng + ?Sized>(
    grid: &Arc<Grid>,
    max_mode: usize,
    amplitude: f64,
    rng: &mut R,
) -> RealField {
    let max_mode = max_mode.min(grid.n_points() / 2 - 1);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.spectrum_len()];
    for c in coeffs.iter_mut().take(max_mode + 1).skip(1) {
        let a: f64 = rng.gen_range(-amplitude..=amplitude);
        let b: f64 = rng.gen_range(-amplitude..=amplitude);
        // a cos + b sin = Re[(a - ib) e^{ikx}]
        *c = Complex64::new(0.5 * a, -0.5 * b);
    }
    SpectralField::from_raw(grid.clone(), coeffs).to_real()
}

fn check_nonneg(name: &'static str, value: f64) -> Result<(), SpectralError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(SpectralError::InvalidParameter {
            name,
            value,
            reason: "must be finite and nonnegative",
        })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SpectralError> {
    if value > 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(SpectralError::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        })
    }
}

#[cfg(test)]
mod tests;
