use super::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn two_pi_grid(n: usize) -> Arc<Grid> {
    Grid::new(2.0 * PI, n).unwrap()
}

fn rel_l2(a: &RealField, b: &RealField) -> f64 {
    (a - b).l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
}

/// Direct O(N²) DFT: c_p = (1/N) Σ_j f_j e^{-i k_p x_j}.
fn naive_dft(f: &RealField, p: i64) -> Complex64 {
    let grid = f.grid();
    let k = grid.wavenumber(p);
    let n = grid.n_points() as f64;
    grid.nodes()
        .iter()
        .zip(f.values())
        .map(|(&x, &v)| v * Complex64::new(0.0, -k * x).exp())
        .sum::<Complex64>()
        / n
}

#[test]
fn grid_rejects_odd_or_tiny_point_counts() {
    assert_eq!(
        Grid::new(1.0, 63).unwrap_err().to_string(),
        "grid.N must be even ≥ 8 (got 63)"
    );
    assert!(Grid::new(1.0, 6).is_err());
    assert!(Grid::new(0.0, 16).is_err());
    assert!(Grid::new(f64::NAN, 16).is_err());
}

#[test]
fn wavenumbers_antisymmetric_except_unpaired_mode() {
    let grid = Grid::new(3.7, 16).unwrap();
    let k = grid.wavenumbers();
    assert_eq!(k.len(), 16);
    assert!((grid.spacing() * 16.0 - 3.7).abs() < 1e-15);
    // k[0] is -N/2, k[8] is 0
    assert_eq!(k[8], 0.0);
    for p in 1..8 {
        assert_eq!(k[8 + p], -k[8 - p]);
    }
    assert!(k[0] < 0.0 && (k[0] + grid.k_max()).abs() < 1e-12);
}

#[test]
fn zero_field_has_zero_coefficients() {
    let grid = two_pi_grid(32);
    let c = forward_transform(&RealField::zeros(grid));
    assert!(c.half_spectrum().iter().all(|c| c.norm() == 0.0));
}

#[test]
fn cosine_has_two_half_coefficients() {
    let grid = Grid::new(5.0, 32).unwrap();
    let l = grid.length();
    let f = RealField::from_fn(grid, |x| (2.0 * PI * x / l).cos()).unwrap();
    let c = forward_transform(&f);
    for p in -16..16i64 {
        let expected = if p.abs() == 1 { 0.5 } else { 0.0 };
        assert!((c.coeff(p) - Complex64::new(expected, 0.0)).norm() < 1e-12, "p = {p}");
    }
}

#[test]
fn transform_matches_direct_dft_and_round_trips() {
    let grid = two_pi_grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_trig_polynomial(&grid, 16, 1.0, &mut rng);
    let c = forward_transform(&f);
    for p in -32..32i64 {
        assert!((c.coeff(p) - naive_dft(&f, p)).norm() < 1e-13, "p = {p}");
    }
    let back = inverse_transform(&c);
    let max_err = back
        .values()
        .iter()
        .zip(f.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(max_err < 1e-12);
}

#[test]
fn derivative_of_sine_and_constant() {
    let grid = two_pi_grid(64);
    let k = 3.0;
    let f = RealField::from_fn(grid.clone(), |x| (k * x).sin()).unwrap();
    let df = derivative(&f, 1).unwrap();
    for (x, v) in grid.nodes().iter().zip(df.values()) {
        assert!((v - k * (k * x).cos()).abs() < 1e-10);
    }
    let c = RealField::constant(grid, 2.5);
    for order in 1..=8 {
        assert!(derivative(&c, order).unwrap().max_abs() < 1e-12);
    }
}

#[test]
fn fourth_derivative_matches_repeated_first() {
    let grid = Grid::new(7.0, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_trig_polynomial(&grid, 12, 1.0, &mut rng);
    let mut g = f.clone();
    for _ in 0..4 {
        g = derivative(&g, 1).unwrap();
    }
    let d4 = derivative(&f, 4).unwrap();
    assert!(rel_l2(&d4, &g) < 1e-9);
}

#[test]
fn derivative_order_guard() {
    let grid = two_pi_grid(16);
    let f = RealField::zeros(grid);
    assert_eq!(derivative(&f, 9).unwrap_err(), SpectralError::OrderTooHigh(9));
    assert!(derivative(&f, 8).is_ok());
}

#[test]
fn odd_derivatives_drop_the_unpaired_mode() {
    let grid = two_pi_grid(16);
    // cos(8x) lives entirely in the -N/2 slot
    let f = RealField::from_fn(grid, |x| (8.0 * x).cos()).unwrap();
    assert!(derivative(&f, 1).unwrap().max_abs() < 1e-12);
    let d2 = derivative(&f, 2).unwrap();
    assert!(rel_l2(&d2, &f.scaled(-64.0)) < 1e-12);
}

#[test]
fn fractional_derivative_cases() {
    let grid = two_pi_grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_trig_polynomial(&grid, 10, 1.0, &mut rng);
    assert_eq!(fractional_derivative(&f, 0.0).unwrap(), f);

    let s = RealField::from_fn(grid.clone(), f64::sin).unwrap();
    let half = fractional_derivative(&s, 0.5).unwrap();
    assert!(rel_l2(&half, &s) < 1e-12);

    let minus_d2 = derivative(&f, 2).unwrap().scaled(-1.0);
    let frac2 = fractional_derivative(&f, 2.0).unwrap();
    assert!(rel_l2(&frac2, &minus_d2) < 1e-10);

    assert!(fractional_derivative(&f, -1.0).is_err());
}

#[test]
fn mollifier_examples() {
    let grid = two_pi_grid(64);
    let f = RealField::from_fn(grid.clone(), |x| (3.0 * x).sin()).unwrap();
    assert!(mollify(&f, 0.4).unwrap().max_abs() < 1e-14);
    // tie at |k| = 1/δ is kept
    let kept = mollify(&f, 1.0 / 3.0).unwrap();
    assert!(rel_l2(&kept, &f) < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = random_trig_polynomial(&grid, 31, 1.0, &mut rng);
    let identity = mollify(&g, 0.9 / grid.k_max()).unwrap();
    assert!(rel_l2(&identity, &g) < 1e-14);

    // only the mean survives a cutoff below the fundamental
    let g_mean = RealField::constant(grid.clone(), g.mean());
    let shifted = &g + &g_mean;
    let m = mollify(&shifted, 10.0).unwrap();
    assert!((&m - &g_mean).max_abs() < 1e-13);

    assert!(mollify(&g, 0.0).is_err());
}

#[test]
fn mollifier_is_a_projection_on_coefficients() {
    let grid = two_pi_grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = forward_transform(&random_trig_polynomial(&grid, 31, 1.0, &mut rng));
    let once = c.mollified(0.1);
    let twice = once.mollified(0.1);
    assert_eq!(once.half_spectrum(), twice.half_spectrum());
}

#[test]
fn sobolev_norm_examples() {
    let grid = two_pi_grid(64);
    assert_eq!(sobolev_norm(&RealField::zeros(grid.clone()), 3.0).unwrap(), 0.0);
    let s = RealField::from_fn(grid.clone(), f64::sin).unwrap();
    assert!((sobolev_norm(&s, 0.0).unwrap() - PI.sqrt()).abs() < 1e-12);
    assert!((sobolev_norm(&s, 1.0).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-12);

    // quadrature oracle: ‖f‖²_{H¹} = ∫ f² + f_x² on a fine midpoint rule
    let m = 20_000;
    let h = 2.0 * PI / m as f64;
    let quad: f64 = (0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            x.sin().powi(2) + x.cos().powi(2)
        })
        .sum::<f64>()
        * h;
    assert!((sobolev_norm(&s, 1.0).unwrap().powi(2) - quad).abs() < 1e-9);
}

#[test]
fn sobolev_norm_monotone_in_s_and_l2_consistent() {
    let grid = Grid::new(3.0, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_trig_polynomial(&grid, 15, 1.0, &mut rng);
    let mut prev = 0.0;
    for s in [0.0, 0.5, 1.0, 2.0, 3.5, 5.0] {
        let n = sobolev_norm(&f, s).unwrap();
        assert!(n >= prev);
        prev = n;
    }
    let l2 = sobolev_norm(&f, 0.0).unwrap();
    assert!((l2 - f.l2_norm()).abs() < 1e-12 * l2);
    assert!((l2_inner(&f, &f).unwrap() - l2 * l2).abs() < 1e-12 * l2 * l2);
}

#[test]
fn inner_product_examples() {
    let grid = two_pi_grid(32);
    let s = RealField::from_fn(grid.clone(), f64::sin).unwrap();
    let c = RealField::from_fn(grid.clone(), f64::cos).unwrap();
    assert!(l2_inner(&s, &c).unwrap().abs() < 1e-12);

    let other = RealField::zeros(two_pi_grid(16));
    assert_eq!(l2_inner(&s, &other).unwrap_err(), SpectralError::GridMismatch);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_trig_polynomial(&grid, 15, 1.0, &mut rng);
    let g = random_trig_polynomial(&grid, 15, 1.0, &mut rng);
    let lhs = l2_inner(&mollify(&f, 0.2).unwrap(), &g).unwrap();
    let rhs = l2_inner(&f, &mollify(&g, 0.2).unwrap()).unwrap();
    assert!((lhs - rhs).abs() < 1e-12);
    assert!((l2_inner(&f, &g).unwrap() - l2_inner(&g, &f).unwrap()).abs() < 1e-14);
}

#[test]
fn pointwise_apply_examples() {
    let grid = two_pi_grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let y = random_trig_polynomial(&grid, 6, 0.5, &mut rng);
    assert_eq!(pointwise_apply(&[&y], |a| a[0]).unwrap(), y);

    let s = RealField::from_fn(grid.clone(), f64::sin).unwrap();
    let sq = pointwise_apply(&[&s, &s], |a| a[0] * a[1]).unwrap();
    let c = forward_transform(&sq);
    assert!((c.coeff(0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    assert!((c.coeff(2) - Complex64::new(-0.25, 0.0)).norm() < 1e-14);
    assert!((c.coeff(-2) - Complex64::new(-0.25, 0.0)).norm() < 1e-14);

    let yx = derivative(&y, 1).unwrap();
    let r = pointwise_apply(&[&yx], |a| 1.0 / (1.0 + a[0] * a[0]).powi(2)).unwrap();
    for (out, v) in r.values().iter().zip(yx.values()) {
        assert_eq!(*out, 1.0 / (1.0 + v * v).powi(2));
    }

    assert_eq!(pointwise_apply(&[], |_| 0.0).unwrap_err(), SpectralError::NoFields);
    let other = RealField::zeros(two_pi_grid(16));
    assert!(pointwise_apply(&[&y, &other], |a| a[0]).is_err());
}

#[test]
fn translation_is_a_phase_rotation() {
    let grid = Grid::new(4.0, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_trig_polynomial(&grid, 15, 1.0, &mut rng);
    let shift = 5usize;
    let a = shift as f64 * grid.spacing();
    let cf = forward_transform(&f);
    let cs = forward_transform(&f.shifted(shift));
    for p in -15..16i64 {
        let rotated = cf.coeff(p) * Complex64::new(0.0, -grid.wavenumber(p) * a).exp();
        assert!((cs.coeff(p) - rotated).norm() < 1e-12, "p = {p}");
    }
}

#[test]
fn padding_interpolates_and_truncation_inverts_it() {
    let grid = two_pi_grid(16);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut f = random_trig_polynomial(&grid, 7, 1.0, &mut rng);
    f = &f + &RealField::from_fn(grid.clone(), |x| 0.3 * (8.0 * x).cos()).unwrap();
    let c = forward_transform(&f);
    let padded = c.padded();
    let fine = padded.to_real();
    // every other fine node is a coarse node
    for (j, v) in f.values().iter().enumerate() {
        assert!((fine.values()[2 * j] - v).abs() < 1e-13);
    }
    let back = padded.truncated_to(&grid);
    for (a, b) in back.half_spectrum().iter().zip(c.half_spectrum()) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn snapshot_round_trip_and_rejections() {
    let grid = Grid::new(32.0 * PI, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let f = random_trig_polynomial(&grid, 7, 1.0, &mut rng);
    let bytes = encode_snapshot(&f);
    assert_eq!(bytes.len(), 24 + 16 * 8);
    assert_eq!(&bytes[..4], b"FLMF");
    let back = decode_snapshot(&bytes).unwrap();
    assert_eq!(back, f);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_snapshot(&bad), Err(SnapshotError::BadMagic)));
    assert!(matches!(
        decode_snapshot(&bytes[..bytes.len() - 8]),
        Err(SnapshotError::Truncated { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap_0.fld");
    write_snapshot(&path, &f).unwrap();
    assert_eq!(read_snapshot(&path).unwrap(), f);
    let csv = dir.path().join("f.csv");
    write_field_csv(&csv, &f).unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("x,value\n"));
    assert_eq!(text.lines().count(), 17);
}

proptest! {
    #[test]
    fn parseval_and_round_trip(seed in any::<u64>(), log_n in 3usize..8, length in 0.5f64..100.0) {
        let grid = Grid::new(length, 1 << log_n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_trig_polynomial(&grid, grid.n_points() / 2, 1.0, &mut rng);
        let c = forward_transform(&f);
        let energy = f.l2_norm().powi(2);
        let parseval = length * c.weighted_power(|_| 1.0);
        prop_assert!((energy - parseval).abs() <= 1e-12 * energy.max(1e-300));
        let back = inverse_transform(&c);
        prop_assert!((&back - &f).l2_norm() <= 1e-12 * f.l2_norm().max(1e-300));
    }

    #[test]
    fn mollifier_norm_bounds(seed in any::<u64>(), delta in 0.01f64..2.0) {
        let grid = two_pi_grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_trig_polynomial(&grid, 31, 1.0, &mut rng);
        let m = mollify(&f, delta).unwrap();
        for s in [0.0, 1.0, 2.0, 4.0, 5.0] {
            prop_assert!(sobolev_norm(&m, s).unwrap() <= sobolev_norm(&f, s).unwrap() * (1.0 + 1e-12));
        }
        for order in 1..=4u32 {
            let lhs = derivative(&m, order).unwrap().l2_norm();
            prop_assert!(lhs <= delta.powi(-(order as i32)) * f.l2_norm() * (1.0 + 1e-12));
        }
    }
}
