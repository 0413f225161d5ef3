//! Right-hand sides of the evolution equations and their stiff/non-stiff
//! splitting `∂_t u = L u + N(u)` with `L` diagonal in Fourier space.
//!
//! Every pointwise nonlinearity is evaluated on the doubled grid and projected
//! back, see [`SpectralField::padded`] and [`SpectralField::truncated_to`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Coefficients, Jet, SlopeStack, VelocityLaw};
use crate::spectral::{forward_transform, Grid, RealField, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("model.delta is required for the graph_mollified model")]
    MissingDelta,
    #[error("model.delta must be positive (got {0})")]
    InvalidDelta(f64),
    #[error("model.epsilon must be finite and ≥ 0 (got {0})")]
    InvalidEpsilon(f64),
    #[error("model.alpha must be finite (got {0})")]
    InvalidAlpha(f64),
    #[error("the mollified model is only defined for the full velocity law")]
    MollifiedSimplified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `f_t = -½f_x² - (α-1)f_xx - 4f_xxxx`
    Ks,
    /// `U_τ = -½U_ξ² - U_ξξ - 4U_ξξξξ`
    KsRescaled,
    /// Graph form of the coordinate-free velocity law.
    Graph,
    /// Graph form regularized by the Fourier cutoff `J^δ`.
    GraphMollified,
    /// The graph model in the rescaled `(ξ, τ)` variables with `α = 1 + ε`.
    Phi,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelKind::Ks => "ks",
            ModelKind::KsRescaled => "ks_rescaled",
            ModelKind::Graph => "graph",
            ModelKind::GraphMollified => "graph_mollified",
            ModelKind::Phi => "phi",
        };
        f.write_str(name)
    }
}

/// Scalar parameters of every supported equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub law: VelocityLaw,
    /// Set when `alpha` was chosen independently of `1 + ε` for the phi model.
    pub alpha_override: bool,
}

impl ModelParams {
    fn base(kind: ModelKind, alpha: f64) -> Self {
        Self {
            kind,
            alpha,
            epsilon: alpha - 1.0,
            delta: None,
            law: VelocityLaw::Full,
            alpha_override: false,
        }
    }

    pub fn ks(alpha: f64) -> Self {
        Self::base(ModelKind::Ks, alpha)
    }

    pub fn ks_rescaled() -> Self {
        Self::base(ModelKind::KsRescaled, 2.0)
    }

    pub fn graph(alpha: f64) -> Self {
        Self::base(ModelKind::Graph, alpha)
    }

    pub fn graph_simplified(alpha: f64) -> Self {
        Self {
            law: VelocityLaw::Simplified,
            ..Self::base(ModelKind::Graph, alpha)
        }
    }

    pub fn graph_mollified(alpha: f64, delta: f64) -> Self {
        Self {
            delta: Some(delta),
            ..Self::base(ModelKind::GraphMollified, alpha)
        }
    }

    /// Phi model with `α = 1 + ε`.
    pub fn phi(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::base(ModelKind::Phi, 1.0 + epsilon)
        }
    }

    pub fn phi_with_alpha(alpha: f64, epsilon: f64) -> Self {
        Self {
            epsilon,
            alpha_override: true,
            ..Self::base(ModelKind::Phi, alpha)
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !self.alpha.is_finite() {
            return Err(DynamicsError::InvalidAlpha(self.alpha));
        }
        match self.kind {
            ModelKind::GraphMollified => {
                let delta = self.delta.ok_or(DynamicsError::MissingDelta)?;
                if !(delta > 0.0) {
                    return Err(DynamicsError::InvalidDelta(delta));
                }
                if self.law != VelocityLaw::Full {
                    return Err(DynamicsError::MollifiedSimplified);
                }
            }
            ModelKind::Phi => {
                if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
                    return Err(DynamicsError::InvalidEpsilon(self.epsilon));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Coefficient `c` of the leading `-c ∂⁴` term.
    pub fn fourth_order_coefficient(&self) -> f64 {
        match (self.kind, self.law) {
            (ModelKind::Ks | ModelKind::KsRescaled, _) => 4.0,
            (ModelKind::Graph, VelocityLaw::Simplified) => 4.0,
            _ => Coefficients::new(self.alpha).fourth_order,
        }
    }

    /// Full right-hand side in physical space.
    pub fn rhs(&self, u: &RealField) -> RealField {
        self.rhs_spectral(&forward_transform(u)).to_real()
    }

    pub(crate) fn rhs_spectral(&self, c: &SpectralField) -> SpectralField {
        match self.kind {
            ModelKind::Ks => ks_rhs_spectral(c, self.alpha),
            ModelKind::KsRescaled => ks_rhs_spectral(c, 2.0),
            ModelKind::Graph => match self.law {
                VelocityLaw::Full => graph_rhs_spectral(c, self.alpha),
                VelocityLaw::Simplified => {
                    let alpha = self.alpha;
                    dealiased(c, move |j| -j.metric().sqrt() * j.normal_velocity(alpha, VelocityLaw::Simplified))
                }
            },
            ModelKind::GraphMollified => {
                mollified_rhs_spectral(c, self.alpha, self.delta.expect("validated"))
            }
            ModelKind::Phi => phi_rhs_spectral(c, self.alpha, self.epsilon),
        }
    }
}

/// Evaluates `rate` on the jet of `c` at the nodes of the doubled grid and
/// projects the result back onto the grid of `c`.
fn dealiased(c: &SpectralField, rate: impl Fn(Jet) -> f64) -> SpectralField {
    let fine = SlopeStack::padded_from(c).map(rate);
    forward_transform(&fine).truncated_to(c.grid())
}

/// `-½ f_x²`, dealiased.
fn ks_nonlinear_spectral(c: &SpectralField) -> SpectralField {
    dealiased(c, |j| -0.5 * j.y_x * j.y_x)
}

fn ks_rhs_spectral(c: &SpectralField, alpha: f64) -> SpectralField {
    let linear = c.apply_even_symbol(|k| ks_symbol(k, alpha));
    &linear + &ks_nonlinear_spectral(c)
}

fn ks_symbol(k: f64, alpha: f64) -> f64 {
    let k2 = k * k;
    (alpha - 1.0) * k2 - 4.0 * k2 * k2
}

/// Pointwise graph-form rate for the full velocity law, term by term as the
/// equation is usually written after substituting the arclength derivative.
#[inline]
fn graph_rate(j: Jet, alpha: f64, c: Coefficients) -> f64 {
    let q = j.metric();
    let sq = q.sqrt();
    let q2 = q * q;
    let y2 = j.y_xx;
    -(alpha - 1.0) * y2 / q
        - c.quadratic * y2 * y2 / (q2 * sq)
        - c.cubic * y2 * y2 * y2 / (q2 * q2)
        - c.fourth_order * j.kappa_xx() / sq
        - sq
        + c.fourth_order * j.y_x * j.kappa() * j.kappa_x()
}

fn graph_rhs_spectral(c: &SpectralField, alpha: f64) -> SpectralField {
    let coeffs = Coefficients::new(alpha);
    dealiased(c, move |j| graph_rate(j, alpha, coeffs))
}

/// Every y-derivative inside the brackets is taken of `J^δ y` and every
/// bracket is mollified again; both placements are linear so the outer cutoff
/// is applied once to the sum.
fn mollified_rhs_spectral(c: &SpectralField, alpha: f64, delta: f64) -> SpectralField {
    graph_rhs_spectral(&c.mollified(delta), alpha).mollified(delta)
}

#[inline]
fn phi_rate(j: Jet, alpha: f64, eps: f64) -> f64 {
    let c = Coefficients::new(alpha);
    let e3 = eps * eps * eps;
    let (p1, p2, p3, p4) = (j.y_x, j.y_xx, j.y_xxx, j.y_xxxx);
    let d = 1.0 + e3 * p1 * p1;
    let d2 = d * d;
    let d3 = d2 * d;
    let d4 = d2 * d2;
    let p2_cubed = p2 * p2 * p2;
    -c.fourth_order * p4 / d2 - p2 / d - p1 * p1 / (1.0 + d.sqrt())
        + 10.0 * c.fourth_order * e3 * p1 * p2 * p3 / d3
        + 3.0 * c.fourth_order * e3 * p2_cubed / d3
        - 18.0 * c.fourth_order * e3 * e3 * p2_cubed * p1 * p1 / d4
        - c.quadratic * eps * p2 * p2 / (d2 * d.sqrt())
        - c.cubic * e3 * p2_cubed / d4
}

fn phi_rhs_spectral(c: &SpectralField, alpha: f64, eps: f64) -> SpectralField {
    dealiased(c, move |j| phi_rate(j, alpha, eps))
}

/// `f_t = -½f_x² - (α-1)f_xx - 4f_xxxx`
pub fn rhs_ks(f: &RealField, alpha: f64) -> RealField {
    ks_rhs_spectral(&forward_transform(f), alpha).to_real()
}

/// `U_τ = -½U_ξ² - U_ξξ - 4U_ξξξξ`
pub fn rhs_ks_rescaled(u: &RealField) -> RealField {
    rhs_ks(u, 2.0)
}

/// Graph-form evolution of the front under the full velocity law.
pub fn rhs_graph(y: &RealField, alpha: f64) -> RealField {
    graph_rhs_spectral(&forward_transform(y), alpha).to_real()
}

/// Mollified graph-form evolution; the output is supported in `|k| ≤ 1/δ`.
pub fn rhs_mollified(y: &RealField, alpha: f64, delta: f64) -> RealField {
    mollified_rhs_spectral(&forward_transform(y), alpha, delta).to_real()
}

/// Right side of the rescaled graph model in `(ξ, τ)` variables.
pub fn rhs_phi(phi: &RealField, alpha: f64, eps: f64) -> RealField {
    phi_rhs_spectral(&forward_transform(phi), alpha, eps).to_real()
}

type NonlinearFn = dyn Fn(&SpectralField) -> SpectralField + Send + Sync;

#[derive(Clone)]
enum Nonlinear {
    Zero,
    Model(ModelParams),
    Custom(Arc<NonlinearFn>),
}

/// `∂_t u = L u + N(u)` with `L` a real even Fourier symbol.
#[derive(Clone)]
pub struct RhsSplit {
    grid: Arc<Grid>,
    linear_symbol: Vec<f64>,
    nonlinear: Nonlinear,
}

impl fmt::Debug for RhsSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nonlinear = match &self.nonlinear {
            Nonlinear::Zero => "zero".to_string(),
            Nonlinear::Model(p) => p.kind.to_string(),
            Nonlinear::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("RhsSplit")
            .field("grid", &self.grid)
            .field("nonlinear", &nonlinear)
            .finish()
    }
}

impl RhsSplit {
    /// Purely linear problem, `N ≡ 0`.
    pub fn linear_only(grid: Arc<Grid>, symbol: impl Fn(f64) -> f64) -> Self {
        let linear_symbol = grid.half_wavenumbers().iter().map(|&k| symbol(k)).collect();
        Self {
            grid,
            linear_symbol,
            nonlinear: Nonlinear::Zero,
        }
    }

    /// Linear symbol plus an arbitrary spectral-space nonlinearity.
    pub fn custom(
        grid: Arc<Grid>,
        symbol: impl Fn(f64) -> f64,
        nonlinear: impl Fn(&SpectralField) -> SpectralField + Send + Sync + 'static,
    ) -> Self {
        Self {
            nonlinear: Nonlinear::Custom(Arc::new(nonlinear)),
            ..Self::linear_only(grid, symbol)
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `L̂` per half-spectrum slot.
    pub fn linear_symbol(&self) -> &[f64] {
        &self.linear_symbol
    }

    pub fn apply_linear(&self, c: &SpectralField) -> SpectralField {
        let coeffs = c
            .half_spectrum()
            .iter()
            .zip(&self.linear_symbol)
            .map(|(c, l)| c * l)
            .collect();
        SpectralField::from_raw(c.grid().clone(), coeffs)
    }

    pub fn nonlinear_spectral(&self, c: &SpectralField) -> SpectralField {
        match &self.nonlinear {
            Nonlinear::Zero => SpectralField::zeros(c.grid().clone()),
            Nonlinear::Custom(f) => f(c),
            Nonlinear::Model(p) => match p.kind {
                ModelKind::Ks | ModelKind::KsRescaled => ks_nonlinear_spectral(c),
                _ => &p.rhs_spectral(c) - &self.apply_linear(c),
            },
        }
    }

    pub fn nonlinear(&self, u: &RealField) -> RealField {
        self.nonlinear_spectral(&forward_transform(u)).to_real()
    }

    /// `L u + N(u)`.
    pub fn rhs(&self, u: &RealField) -> RealField {
        let c = forward_transform(u);
        (&self.apply_linear(&c) + &self.nonlinear_spectral(&c)).to_real()
    }
}

/// Splits a model into its constant-coefficient stiff symbol and the rest.
///
/// * `ks`: `L̂ = (α-1)k² - 4k⁴`; `ks_rescaled`: `L̂ = k² - 4k⁴`; `N = -½f_x²`.
/// * `graph`: `L̂ = -α²(α+3)k⁴` (`-4k⁴` for the simplified law).
/// * `graph_mollified`: as `graph` inside `|k| ≤ 1/δ`, zero outside.
/// * `phi`: `L̂ = k² - α²(α+3)k⁴`, so that at `ε = 0` it coincides with `ks_rescaled`.
///
/// In every case `N = rhs - L u`.
pub fn make_split(params: &ModelParams, grid: &Arc<Grid>) -> Result<RhsSplit, DynamicsError> {
    params.validate()?;
    let c4 = params.fourth_order_coefficient();
    let alpha = params.alpha;
    let symbol: Box<dyn Fn(f64) -> f64> = match params.kind {
        ModelKind::Ks => Box::new(move |k| ks_symbol(k, alpha)),
        ModelKind::KsRescaled => Box::new(|k| ks_symbol(k, 2.0)),
        ModelKind::Graph => Box::new(move |k: f64| -c4 * k.powi(4)),
        ModelKind::GraphMollified => {
            let cutoff = 1.0 / params.delta.expect("validated");
            Box::new(move |k: f64| {
                if k.abs() <= cutoff * (1.0 + 1e-12) {
                    -c4 * k.powi(4)
                } else {
                    0.0
                }
            })
        }
        ModelKind::Phi => Box::new(move |k: f64| k * k - c4 * k.powi(4)),
    };
    Ok(RhsSplit {
        nonlinear: Nonlinear::Model(*params),
        ..RhsSplit::linear_only(grid.clone(), symbol)
    })
}
