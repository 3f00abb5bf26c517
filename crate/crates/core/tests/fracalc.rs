mod common;

use coagss::fracalc::{
    check_difference_integral, convolve, finite_part_pairing, integral_of_finite_part_pairing,
    left, left_derivative, left_integral, reflect, right, right_derivative, right_integral,
    FinitePart,
};
use coagss::real::gamma;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn composition_error(f: &dyn Fn(f64) -> f64, j: f64, k: f64, n: usize) -> f64 {
    let grid = uniform(8.0, n);
    let s = sample(&grid, f);
    let lhs = left(&left(&s, k).unwrap(), j).unwrap();
    let rhs = left(&s, j + k).unwrap();
    max_abs_diff(lhs.values(), rhs.values())
}

#[test]
fn composition_is_first_order_and_improves_under_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let f = smooth(
            rng.gen_range(0.5..2.0),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(0.5..3.0),
        );
        for (j, k) in [(-0.5, -0.5), (0.5, -0.5), (1.0, -0.5)] {
            let coarse = composition_error(&f, j, k, 512);
            let fine = composition_error(&f, j, k, 1024);
            let h = 8.0 / 512.0;
            eprintln!("composition ({j}, {k}): {coarse:e} -> {fine:e}");
            assert!(coarse <= h, "({j}, {k}) error {coarse:e} above first order");
            assert!(
                fine < coarse,
                "({j}, {k}) no improvement: {coarse:e} -> {fine:e}"
            );
        }
    }
}

#[test]
fn half_derivative_inverts_half_integral() {
    let grid = uniform(6.0, 1024);
    let f = sample(&grid, smooth(1.0, 0.0, 0.0));
    let back = left_derivative(&left_integral(&f, 0.5).unwrap(), 0.5).unwrap();
    let err = max_abs_diff(back.values(), f.values());
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn first_derivative_of_y_exp() {
    let grid = uniform(6.0, 600);
    let h = 6.0 / 600.0;
    let f = sample(&grid, |y| y * (-y).exp());
    let d = left_derivative(&f, 1.0).unwrap();
    let exact: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| (1.0 - y) * (-y).exp())
        .collect();
    assert!(max_abs_diff(d.values(), &exact) <= 2.0 * h * h);
}

#[test]
fn running_integral_and_zero_input() {
    let grid = uniform(2.0, 200);
    let one = sample(&grid, |_| 1.0);
    let v = left_integral(&one, 1.0).unwrap();
    assert!((v.values()[199] - 2.0).abs() < 1e-12);
    let zero = sample(&grid, |_| 0.0);
    assert!(left_integral(&zero, 0.7)
        .unwrap()
        .values()
        .iter()
        .all(|&x| x == 0.0));
}

#[test]
fn right_operators_mirror_left_ones() {
    let grid = uniform(5.0, 300);
    let f = sample(&grid, |y| (y * (5.0 - y)).powi(2) * (0.3 * y).cos());
    for k in [0.5, 1.0, 1.7] {
        let a = right_integral(&f, k).unwrap();
        let b = reflect(&left_integral(&reflect(&f).unwrap(), k).unwrap()).unwrap();
        assert_eq!(a.values(), b.values());
        let a = right_derivative(&f, k).unwrap();
        let b = right(&f, k).unwrap();
        assert_eq!(a.values(), b.values());
    }
    assert_eq!(right(&f, 0.0).unwrap().values(), f.values());
}

#[test]
fn right_integral_of_exponential_is_its_tail() {
    let grid = uniform(40.0, 4000);
    let f = sample(&grid, |y| (-y).exp());
    let r = right_integral(&f, 1.0).unwrap();
    for (&y, &v) in grid
        .nodes()
        .iter()
        .zip(r.values())
        .filter(|(&y, _)| y < 10.0)
    {
        assert!(
            (v - (-y).exp()).abs() < 1e-5,
            "y = {y}: {v} vs {}",
            (-y).exp()
        );
    }
}

fn pairing(y: &[f64], a: &[f64], b: &[f64], h: f64) -> f64 {
    y.iter().enumerate().map(|(i, _)| a[i] * b[i]).sum::<f64>() * h
}

#[test]
fn duality_between_left_and_right_operators() {
    let (l, n) = (6.0, 2048);
    let grid = uniform(l, n);
    let h = l / n as f64;
    let f = sample(&grid, bump(0.5, 3.0));
    let g = sample(&grid, |y| bump(1.5, 5.0)(y) * (1.0 + 0.3 * y));
    for k in [-0.5, -1.3, 0.5, 1.0] {
        let lhs = pairing(grid.nodes(), left(&f, k).unwrap().values(), g.values(), h);
        let rhs = pairing(grid.nodes(), f.values(), right(&g, k).unwrap().values(), h);
        eprintln!("duality k = {k}: {lhs} vs {rhs}");
        assert!(
            (lhs - rhs).abs() <= 1e-4 * lhs.abs().max(1.0),
            "k = {k}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn convolution_commutes_with_fractional_operators() {
    let grid = uniform(10.0, 2000);
    let t = sample(&grid, |y| y * (-y).exp());
    let s = sample(&grid, |y| y * y * (-2.0 * y).exp());
    for k in [-1.0, 0.5] {
        let lhs = left(&convolve(&t, &s).unwrap(), k).unwrap();
        let rhs = convolve(&left(&t, k).unwrap(), &s).unwrap();
        let err = max_abs_diff(lhs.values(), rhs.values());
        eprintln!("convolution k = {k}: {err:e}");
        assert!(err <= 1e-4, "k = {k}: {err:e}");
    }
}

#[test]
fn difference_integral_matches_closed_form() {
    for (k, z) in [(0.5f64, 1.0f64), (0.5, 4.0), (0.3, 2.0)] {
        let (num, exact) = check_difference_integral(k, z).unwrap();
        assert!(
            ((num - exact) / exact).abs() <= 1e-4,
            "({k}, {z}): {num} vs {exact}"
        );
    }
    let (_, e) = check_difference_integral(0.5f64, 4.0).unwrap();
    assert!((e - 4.0).abs() < 1e-12);
    let (_, e) = check_difference_integral(0.5f64, 1.0).unwrap();
    assert!((e - 2.0).abs() < 1e-12);
}

#[test]
fn finite_part_pairing_examples() {
    let grid = geometric(1e-6, 60.0, 2000);
    let f = FinitePart::new(sample(&grid, |y| (-y).exp()));
    assert_eq!(finite_part_pairing(&f, |_| 3.0).unwrap(), 0.0);
    assert!((finite_part_pairing(&f, |y| y).unwrap() - 1.0).abs() < 1e-4);
    let unit = geometric(1e-8, 1.0, 2000);
    let s = FinitePart::new(sample(&unit, |y| y.powf(-1.2)));
    assert!((finite_part_pairing(&s, |y| y).unwrap() - 1.25).abs() < 1e-4);
}

/// `|⟨D^{-k}{f}, φ⟩| ≤ 2/Γ(k+1) ‖y^k f‖_1 ‖φ‖_∞` for nonnegative `f` that
/// need not be integrable at the origin.
#[test]
fn fractional_integral_of_finite_part_obeys_l1_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let phi_grid = uniform(12.0, 1200);
    let fgrid = geometric(1e-7, 60.0, 1500);
    for trial in 0..20 {
        let k: f64 = rng.gen_range(0.2..0.95);
        let p: f64 = rng.gen_range(0.0..(0.9 + k));
        let c: f64 = rng.gen_range(0.3..3.0);
        let a: f64 = rng.gen_range(0.1..5.0);
        let f = sample(&fgrid, |y| a * y.powf(-p) * (-c * y).exp());
        let norm = f.moment_with_tail(k).unwrap().total();
        let bound = 2.0 / gamma(k + 1.0) * norm;
        let fp = FinitePart::new(f);
        // test functions near ±1 on a stretch, nonnegative or sign-changing
        let lo: f64 = rng.gen_range(0.0..2.0);
        let hi = lo + rng.gen_range(1.0..8.0);
        let plain = sample(&phi_grid, bump(lo, hi));
        let signed = sample(&phi_grid, |y| bump(lo, hi)(y) * (3.0 * y).cos());
        for phi in [plain, signed] {
            let sup = phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let v = integral_of_finite_part_pairing(&fp, &phi, k).unwrap();
            assert!(
                v.abs() <= bound * sup * (1.0 + 1e-6),
                "trial {trial}: |{v}| > {bound} (k = {k}, p = {p})"
            );
        }
    }
}

#[test]
fn weak_product_rule_at_2048_nodes() {
    let (l, n, k) = (4.0, 2048, 0.5);
    let grid = uniform(l, n);
    let phi = |y: f64| y.cos() + 0.5 * y;
    let dphi = |y: f64| -y.sin() + 0.5;
    let psi = bump(1.0, 3.0);
    let inner = right_integral(&sample(&grid, psi), k).unwrap();
    let prod = inner.map(|y, v| phi(y) * v);
    let lhs = right_derivative(&prod, k).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &y) in grid.nodes().iter().enumerate().step_by(8) {
        let rhs = product_rule_rhs(y, k, phi, dphi, psi, (1.0, 3.0));
        worst = worst.max((lhs.values()[i] - rhs).abs());
    }
    eprintln!("weak product rule max error {worst:e}");
    assert!(worst <= 1e-3, "{worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn left_integral_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.1f64..2.5) {
        let grid = uniform(4.0, 128);
        let f = sample(&grid, |y| y * (-y).exp());
        let g = sample(&grid, |y| (y * 1.3).sin() * y);
        let lhs = left_integral(&f.lin_comb(a, &g, b).unwrap(), k).unwrap();
        let rhs = left_integral(&f, k).unwrap().lin_comb(a, &left_integral(&g, k).unwrap(), b).unwrap();
        let scale = 1.0 + lhs.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(lhs.values(), rhs.values()) <= 1e-12 * scale);
    }

    #[test]
    fn integrals_of_nonnegative_functions_are_nonnegative(c in 0.2f64..3.0, k in 0.05f64..3.0) {
        let grid = uniform(5.0, 200);
        let f = sample(&grid, |y| y * (-c * y).exp());
        prop_assert!(left_integral(&f, k).unwrap().values().iter().all(|&v| v >= 0.0));
        prop_assert!(right_integral(&f, k).unwrap().values().iter().all(|&v| v >= -1e-15));
    }
}
