//! Curvature of a graph `y(x)` and the conversion between the normal velocity
//! of the front and the vertical velocity of the graph.
//!
//! All derivatives of `y` are spectral; the x-derivatives of κ use the closed
//! forms in terms of `y_x … y_xxxx` rather than differentiating κ itself.

use std::sync::Arc;

use crate::spectral::{
    forward_transform, Grid, RealField, SpectralError, SpectralField,
};

/// Which coordinate-free velocity law to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityLaw {
    /// `V_n = 1 + (α-1)κ + (1+α²/2)κ² + (2α+5α²-α³/3)κ³ + α²(α+3)κ_ss`
    Full,
    /// `V_n = 1 + (α-1)κ + 4κ_ss`
    Simplified,
}

/// Derivatives of `y` at a single node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub y_x: f64,
    pub y_xx: f64,
    pub y_xxx: f64,
    pub y_xxxx: f64,
}

impl Jet {
    /// `1 + y_x²`, never below one.
    #[inline]
    pub fn metric(&self) -> f64 {
        1.0 + self.y_x * self.y_x
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        let q = self.metric();
        self.y_xx / (q * q.sqrt())
    }

    #[inline]
    pub fn kappa_x(&self) -> f64 {
        let q = self.metric();
        let sq = q.sqrt();
        self.y_xxx / (q * sq) - 3.0 * self.y_x * self.y_xx * self.y_xx / (q * q * sq)
    }

    #[inline]
    pub fn kappa_xx(&self) -> f64 {
        let q = self.metric();
        let sq = q.sqrt();
        let (y1, y2, y3, y4) = (self.y_x, self.y_xx, self.y_xxx, self.y_xxxx);
        y4 / (q * sq) - (3.0 * y2 * y2 * y2 + 9.0 * y1 * y2 * y3) / (q * q * sq)
            + 15.0 * y1 * y1 * y2 * y2 * y2 / (q * q * q * sq)
    }

    /// `κ_ss = κ_xx/(1+y_x²) - y_x y_xx κ_x/(1+y_x²)²`
    #[inline]
    pub fn kappa_ss(&self) -> f64 {
        let q = self.metric();
        self.kappa_xx() / q - self.y_x * self.y_xx * self.kappa_x() / (q * q)
    }

    pub fn normal_velocity(&self, alpha: f64, law: VelocityLaw) -> f64 {
        let k = self.kappa();
        match law {
            VelocityLaw::Full => {
                let c = Coefficients::new(alpha);
                1.0 + (alpha - 1.0) * k
                    + c.quadratic * k * k
                    + c.cubic * k * k * k
                    + c.fourth_order * self.kappa_ss()
            }
            VelocityLaw::Simplified => 1.0 + (alpha - 1.0) * k + 4.0 * self.kappa_ss(),
        }
    }
}

/// The α-dependent coefficients of the full velocity law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    /// `1 + α²/2`
    pub quadratic: f64,
    /// `2α + 5α² - α³/3`
    pub cubic: f64,
    /// `α²(α+3)`
    pub fourth_order: f64,
}

impl Coefficients {
    pub fn new(alpha: f64) -> Self {
        let a2 = alpha * alpha;
        Self {
            quadratic: 1.0 + 0.5 * a2,
            cubic: 2.0 * alpha + 5.0 * a2 - a2 * alpha / 3.0,
            fourth_order: a2 * (alpha + 3.0),
        }
    }
}

/// `y_x, y_xx, y_xxx, y_xxxx` sampled on a common grid.
#[derive(Clone, Debug)]
pub struct SlopeStack {
    grid: Arc<Grid>,
    derivs: [Vec<f64>; 4],
}

impl SlopeStack {
    /// Derivatives on the grid of `y` itself.
    pub fn of(y: &RealField) -> Self {
        Self::from_spectral(&forward_transform(y))
    }

    pub fn from_spectral(c: &SpectralField) -> Self {
        let derivs = [1, 2, 3, 4].map(|order| c.differentiate(order).to_real().into_values());
        Self {
            grid: c.grid().clone(),
            derivs,
        }
    }

    /// Derivatives interpolated onto the doubled grid, for dealiased evaluation.
    pub fn padded_from(c: &SpectralField) -> Self {
        Self::from_spectral(&c.padded())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn jet(&self, j: usize) -> Jet {
        Jet {
            y_x: self.derivs[0][j],
            y_xx: self.derivs[1][j],
            y_xxx: self.derivs[2][j],
            y_xxxx: self.derivs[3][j],
        }
    }

    /// Evaluates `func` on the jet at every node.
    pub fn map(&self, func: impl Fn(Jet) -> f64) -> RealField {
        let values = (0..self.grid.n_points()).map(|j| func(self.jet(j))).collect();
        RealField::from_raw(self.grid.clone(), values)
    }
}

/// κ and its derivatives along a graph.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub kappa: RealField,
    pub kappa_x: RealField,
    pub kappa_xx: RealField,
    pub kappa_ss: RealField,
}

impl CurvatureBundle {
    pub fn new(y: &RealField) -> Self {
        let stack = SlopeStack::of(y);
        Self {
            kappa: stack.map(|j| j.kappa()),
            kappa_x: stack.map(|j| j.kappa_x()),
            kappa_xx: stack.map(|j| j.kappa_xx()),
            kappa_ss: stack.map(|j| j.kappa_ss()),
        }
    }
}

/// `κ = y_xx/(1+y_x²)^{3/2}`
pub fn curvature(y: &RealField) -> RealField {
    SlopeStack::of(y).map(|j| j.kappa())
}

/// Closed-form `dκ/dx`.
pub fn curvature_dx(y: &RealField) -> RealField {
    SlopeStack::of(y).map(|j| j.kappa_x())
}

/// Closed-form `d²κ/dx²`.
pub fn curvature_dxx(y: &RealField) -> RealField {
    SlopeStack::of(y).map(|j| j.kappa_xx())
}

/// Second arclength derivative of κ.
pub fn kappa_ss(y: &RealField) -> RealField {
    SlopeStack::of(y).map(|j| j.kappa_ss())
}

pub fn normal_velocity(y: &RealField, alpha: f64, law: VelocityLaw) -> RealField {
    SlopeStack::of(y).map(|j| j.normal_velocity(alpha, law))
}

/// `y_t = -√(1+y_x²)·V_n`
pub fn graph_velocity(y: &RealField, v_n: &RealField) -> Result<RealField, SpectralError> {
    if !y.grid().same_as(v_n.grid()) {
        return Err(SpectralError::GridMismatch);
    }
    let y_x = forward_transform(y).differentiate(1).to_real();
    Ok(y_x.zip_map(v_n, |s, v| -(1.0 + s * s).sqrt() * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{derivative, random_trig_polynomial};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(2.0 * PI, n).unwrap()
    }

    fn sine(n: usize) -> RealField {
        RealField::from_fn(grid(n), f64::sin).unwrap()
    }

    fn rel(a: &RealField, b: &RealField) -> f64 {
        (a - b).l2_norm() / b.l2_norm()
    }

    fn random_smooth(seed: u64, n: usize) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_trig_polynomial(&grid(n), 4, 0.15, &mut rng)
    }

    /// Index of x = π/2 on an N-point grid over [0, 2π).
    fn quarter(n: usize) -> usize {
        n / 4
    }

    #[test]
    fn flat_graphs_have_zero_curvature() {
        let c = RealField::constant(grid(32), 3.0);
        assert!(curvature(&c).max_abs() < 1e-14);
        assert!(curvature_dx(&c).max_abs() < 1e-14);
        assert!(curvature_dxx(&c).max_abs() < 1e-14);
        assert!(kappa_ss(&c).max_abs() < 1e-14);
        assert!(curvature(&RealField::zeros(grid(32))).max_abs() == 0.0);
    }

    #[test]
    fn sine_values_at_crest() {
        let n = 64;
        let y = sine(n);
        let j = quarter(n);
        assert!((curvature(&y).values()[j] + 1.0).abs() < 1e-12);
        assert!(curvature_dx(&y).values()[j].abs() < 1e-12);
        assert!((curvature_dxx(&y).values()[j] - 4.0).abs() < 1e-11);
        assert!((kappa_ss(&y).values()[j] - 4.0).abs() < 1e-11);
    }

    #[test]
    fn closed_forms_match_spectral_derivatives_of_curvature() {
        for seed in 0..5 {
            let y = random_smooth(seed, 256);
            let kappa = curvature(&y);
            let dk = derivative(&kappa, 1).unwrap();
            let ddk = derivative(&kappa, 2).unwrap();
            assert!(rel(&curvature_dx(&y), &dk) < 1e-8);
            assert!(rel(&curvature_dxx(&y), &ddk) < 1e-7);
        }
    }

    #[test]
    fn kappa_ss_is_the_chain_rule_combination() {
        let y = random_smooth(9, 128);
        let y_x = derivative(&y, 1).unwrap();
        let y_xx = derivative(&y, 2).unwrap();
        let kx = curvature_dx(&y);
        let kxx = curvature_dxx(&y);
        let expected: Vec<f64> = (0..y.len())
            .map(|i| {
                let q = 1.0 + y_x.values()[i].powi(2);
                kxx.values()[i] / q - y_x.values()[i] * y_xx.values()[i] * kx.values()[i] / (q * q)
            })
            .collect();
        let expected = RealField::new(y.grid().clone(), expected).unwrap();
        assert!(rel(&kappa_ss(&y), &expected) < 1e-8);
    }

    /// Parameterizes y = sin x by arclength with cumulative trapezoid
    /// quadrature on a refined grid and differences κ twice in s.
    pub(crate) fn arclength_oracle(n: usize, refine: usize) -> Vec<f64> {
        let m = n * refine;
        let h = 2.0 * PI / m as f64;
        let xs: Vec<f64> = (0..=m + 1).map(|i| (i as f64 - 1.0) * h).collect();
        let speed = |x: f64| (1.0 + x.cos().powi(2)).sqrt();
        let mut s = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            s[i] = s[i - 1] + 0.5 * h * (speed(xs[i - 1]) + speed(xs[i]));
        }
        let kappa = |x: f64| -x.sin() / (1.0 + x.cos().powi(2)).powf(1.5);
        (0..n)
            .map(|j| {
                let i = j * refine + 1;
                let (hm, hp) = (s[i] - s[i - 1], s[i + 1] - s[i]);
                let (km, k0, kp) = (kappa(xs[i - 1]), kappa(xs[i]), kappa(xs[i + 1]));
                2.0 * ((kp - k0) / hp - (k0 - km) / hm) / (hp + hm)
            })
            .collect()
    }

    #[test]
    fn kappa_ss_matches_arclength_oracle() {
        let n = 512;
        let oracle = arclength_oracle(n, 16);
        let closed = kappa_ss(&sine(n));
        let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = closed
            .values()
            .iter()
            .zip(&oracle)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err / scale < 1e-4, "relative error {}", err / scale);
    }

    #[test]
    fn even_graph_gives_even_curvature_and_odd_slope() {
        let g = grid(64);
        let y = RealField::from_fn(g.clone(), |x| 0.4 * x.cos() + 0.1 * (3.0 * x).cos()).unwrap();
        let k = curvature(&y);
        let kx = curvature_dx(&y);
        let n = y.len();
        for j in 1..n {
            let (a, b) = (j, n - j);
            assert!((k.values()[a] - k.values()[b]).abs() < 1e-10);
            assert!((kx.values()[a] + kx.values()[b]).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_front_moves_at_unit_normal_speed() {
        let y = RealField::zeros(grid(32));
        for law in [VelocityLaw::Full, VelocityLaw::Simplified] {
            for alpha in [0.3, 1.0, 2.5] {
                let v = normal_velocity(&y, alpha, law);
                assert!(v.values().iter().all(|&x| x == 1.0));
                let yt = graph_velocity(&y, &v).unwrap();
                assert!(yt.values().iter().all(|&x| x == -1.0));
            }
        }
        let c = RealField::constant(grid(32), 7.0);
        for law in [VelocityLaw::Full, VelocityLaw::Simplified] {
            let yt = graph_velocity(&c, &normal_velocity(&c, 1.7, law)).unwrap();
            assert!(yt.values().iter().all(|&x| (x + 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn full_law_coefficients_at_alpha_one() {
        let c = Coefficients::new(1.0);
        assert_eq!(c.quadratic, 1.5);
        assert!((c.cubic - 20.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.fourth_order, 4.0);
    }

    #[test]
    fn simplified_law_on_sine_crest() {
        let n = 64;
        let y = sine(n);
        for alpha in [0.5, 1.0, 1.3] {
            let v = normal_velocity(&y, alpha, VelocityLaw::Simplified);
            assert!((v.values()[quarter(n)] - (18.0 - alpha)).abs() < 1e-10);
        }
    }

    #[test]
    fn graph_velocity_inverts_algebraically() {
        let y = random_smooth(21, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let v = random_trig_polynomial(y.grid(), 10, 2.0, &mut rng);
        let yt = graph_velocity(&y, &v).unwrap();
        let y_x = derivative(&y, 1).unwrap();
        for i in 0..y.len() {
            let recovered = -yt.values()[i] / (1.0 + y_x.values()[i].powi(2)).sqrt();
            assert!((recovered - v.values()[i]).abs() < 1e-12 * (1.0 + v.values()[i].abs()));
        }
        assert!(graph_velocity(&y, &RealField::zeros(grid(32))).is_err());
        assert!(graph_velocity(&y, &RealField::zeros(y.grid().clone()))
            .unwrap()
            .values()
            .iter()
            .all(|&x| x == 0.0));
    }
}
