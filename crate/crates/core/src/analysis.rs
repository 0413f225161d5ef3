//! Monitored norms and energies, and the closed-form bounds that accompany
//! them: the existence time and the two Gronwall-type lemmas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{
    forward_transform, homogeneous_norm, spectral_sobolev_norm, RealField, SpectralField,
};

pub const DEFAULT_M: f64 = 10.0;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const GRONWALL_NODES: usize = 10_000;
const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("fields live on different grids")]
    GridMismatch,
}

fn out_of_range(name: &'static str, value: f64, reason: &'static str) -> AnalysisError {
    AnalysisError::OutOfRange {
        name,
        value,
        reason,
    }
}

/// Norms and energy of one snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub l2: f64,
    pub h4: f64,
    pub h5: f64,
    /// `‖y‖² + ‖∂⁴y‖²`
    #[serde(rename = "energy_I")]
    pub energy_i: f64,
    pub wdiss2: f64,
    pub wdiss6: f64,
    pub wdiss7: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,l2,h4,h5,energy_I,wdiss2,wdiss6,wdiss7";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.l2, self.h4, self.h5, self.energy_i, self.wdiss2, self.wdiss6, self.wdiss7
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.l2,
            self.h4,
            self.h5,
            self.energy_i,
            self.wdiss2,
            self.wdiss6,
            self.wdiss7,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// `∫ (∂^s u)² / (1 + w_x²)² dx`, with the integrand sampled on the doubled grid.
fn weighted_dissipation(u: &SpectralField, w_x_fine: &[f64], s: u32) -> f64 {
    let fine = u.differentiate(s).padded().to_real();
    let h = fine.grid().spacing();
    h * fine
        .values()
        .iter()
        .zip(w_x_fine)
        .map(|(d, wx)| {
            let q = 1.0 + wx * wx;
            d * d / (q * q)
        })
        .sum::<f64>()
}

/// Diagnostics of `u` at time `t`. The dissipation integrals are taken of
/// `weight_field`, which is `u` itself except on mollified runs where it is
/// the mollified field.
pub fn energy_report(
    u: &RealField,
    t: f64,
    weight_field: &RealField,
) -> Result<EnergyReport, AnalysisError> {
    if !u.grid().same_as(weight_field.grid()) {
        return Err(AnalysisError::GridMismatch);
    }
    let c = forward_transform(u);
    let l2 = spectral_sobolev_norm(&c, 0.0);
    let d4 = homogeneous_norm(&c, 4.0);
    let w = forward_transform(weight_field);
    let w_x = w.differentiate(1).padded().to_real().into_values();
    Ok(EnergyReport {
        t,
        l2,
        h4: spectral_sobolev_norm(&c, 4.0),
        h5: spectral_sobolev_norm(&c, 5.0),
        energy_i: l2 * l2 + d4 * d4,
        wdiss2: weighted_dissipation(&w, &w_x, 2),
        wdiss6: weighted_dissipation(&w, &w_x, 6),
        wdiss7: weighted_dissipation(&w, &w_x, 7),
    })
}

/// `T = ln(1 + γ/‖y₀‖_{H⁴}^{m-2}) / γ`; infinite for `‖y₀‖ = 0`.
pub fn existence_time(h4_norm_y0: f64, gamma: f64, m: f64) -> Result<f64, AnalysisError> {
    if !(m > 2.0) || !m.is_finite() {
        return Err(out_of_range("m", m, "must be > 2"));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(out_of_range("gamma", gamma, "must be positive"));
    }
    if !(h4_norm_y0 >= 0.0) {
        return Err(out_of_range("h4_norm_y0", h4_norm_y0, "must be nonnegative"));
    }
    Ok((gamma / h4_norm_y0.powf(m - 2.0)).ln_1p() / gamma)
}

/// `β_n = sup{t : (n-1) ∫_{lo}^t k b a^{n-1} ds < 1}` on `[lo, hi]`,
/// using [`GRONWALL_NODES`] trapezoid nodes.
pub fn gronwall_beta(
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    k: impl Fn(f64) -> f64,
    n: u32,
    lo: f64,
    hi: f64,
) -> Result<f64, AnalysisError> {
    gronwall_beta_with_nodes(a, b, k, n, lo, hi, GRONWALL_NODES)
}

pub fn gronwall_beta_with_nodes(
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    k: impl Fn(f64) -> f64,
    n: u32,
    lo: f64,
    hi: f64,
    nodes: usize,
) -> Result<f64, AnalysisError> {
    if n < 2 {
        return Err(out_of_range("n", n as f64, "must be at least 2"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(out_of_range("hi", hi, "interval must satisfy lo < hi"));
    }
    if nodes < 2 {
        return Err(out_of_range("nodes", nodes as f64, "need at least 2 nodes"));
    }
    let weight = (n - 1) as f64;
    let g = |s: f64| weight * k(s) * b(s) * a(s).powi(n as i32 - 1);
    let h = (hi - lo) / (nodes - 1) as f64;
    let mut prev_t = lo;
    let mut prev_g = g(lo);
    let mut acc = 0.0;
    for i in 1..nodes {
        let t = lo + i as f64 * h;
        let gt = g(t);
        let next = acc + 0.5 * h * (prev_g + gt);
        if next >= 1.0 {
            // trapezoid on [prev_t, s] with the integrand interpolated linearly
            let partial = |s: f64| {
                let w = (s - prev_t) / h;
                let gs = prev_g + w * (gt - prev_g);
                acc + 0.5 * (s - prev_t) * (prev_g + gs)
            };
            let (mut left, mut right) = (prev_t, t);
            while right - left > BISECTION_TOL {
                let mid = 0.5 * (left + right);
                if partial(mid) < 1.0 {
                    left = mid;
                } else {
                    right = mid;
                }
            }
            return Ok(0.5 * (left + right));
        }
        acc = next;
        prev_t = t;
        prev_g = gt;
    }
    Ok(hi)
}

/// Inputs of the threshold lemma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub n: u32,
    pub m: f64,
    pub gamma_star: f64,
    pub t_star: f64,
    pub e0: f64,
}

impl GronwallParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let nonneg = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("e0", self.e0),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(out_of_range(name, v, "must be finite and nonnegative"));
            }
        }
        if self.epsilon > 1.0 {
            return Err(out_of_range("epsilon", self.epsilon, "must lie in [0, 1]"));
        }
        if !(self.m >= 1.0 && self.m.is_finite()) {
            return Err(out_of_range("m", self.m, "must be ≥ 1"));
        }
        if !(self.gamma_star > 0.0 && self.gamma_star.is_finite()) {
            return Err(out_of_range("gamma_star", self.gamma_star, "must be positive"));
        }
        if !(self.t_star > 0.0 && self.t_star.is_finite()) {
            return Err(out_of_range("t_star", self.t_star, "must be positive"));
        }
        Ok(())
    }

    /// `α + βΓ* + εⁿΓ*^{m-1}`
    pub fn rate(&self) -> f64 {
        self.alpha
            + self.beta * self.gamma_star
            + self.epsilon.powi(self.n as i32) * self.gamma_star.powf(self.m - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub tau0: f64,
    pub e_star: f64,
}

/// `τ₀ = ln(Γ*/E₀)/rate` and the initial size `E* = Γ*·e^{-rate·t*}` for
/// which `τ₀ = t*`.
pub fn gronwall_threshold(p: &GronwallParams) -> Result<Threshold, AnalysisError> {
    p.validate()?;
    if !(p.e0 > 0.0 && p.e0 < p.gamma_star) {
        return Err(out_of_range("e0", p.e0, "must satisfy 0 < E0 < gamma_star"));
    }
    let rate = p.rate();
    if !(rate > 0.0) {
        return Err(out_of_range("rate", rate, "α + βΓ* + εⁿΓ*^(m-1) must be positive"));
    }
    Ok(Threshold {
        tau0: (p.gamma_star / p.e0).ln() / rate,
        e_star: p.gamma_star * (-rate * p.t_star).exp(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnOutcome {
    pub passed: bool,
    /// `‖|∇|^s f‖ / (‖|∇|^{s1} f‖^θ ‖|∇|^{s2} f‖^{1-θ})`, zero for `f ≡ 0`.
    pub ratio: f64,
}

/// Interpolation inequality on the `L²` ladder:
/// `‖|∇|^s f‖ ≤ C ‖|∇|^{s1} f‖^θ ‖|∇|^{s2} f‖^{1-θ}` with `s = θs1 + (1-θ)s2`.
pub fn gn_check(
    f: &RealField,
    s: f64,
    s1: f64,
    s2: f64,
    theta: f64,
    constant: f64,
) -> Result<GnOutcome, AnalysisError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(out_of_range("theta", theta, "must lie in [0, 1]"));
    }
    for (name, v) in [("s", s), ("s1", s1), ("s2", s2)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(out_of_range(name, v, "must be finite and nonnegative"));
        }
    }
    let combo = theta * s1 + (1.0 - theta) * s2;
    if (s - combo).abs() > 1e-12 * s.abs().max(1.0) {
        return Err(out_of_range("s", s, "must equal θ·s1 + (1-θ)·s2"));
    }
    if !(constant > 0.0) {
        return Err(out_of_range("C", constant, "must be positive"));
    }
    let c = forward_transform(f);
    let lhs = homogeneous_norm(&c, s);
    if lhs == 0.0 {
        return Ok(GnOutcome {
            passed: true,
            ratio: 0.0,
        });
    }
    let rhs = homogeneous_norm(&c, s1).powf(theta) * homogeneous_norm(&c, s2).powf(1.0 - theta);
    let ratio = lhs / rhs;
    Ok(GnOutcome {
        passed: ratio <= constant * (1.0 + 1e-12),
        ratio,
    })
}
