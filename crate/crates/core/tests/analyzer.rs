mod common;

use std::time::Instant;

use coagss::analyzer::{
    asymptotics_iii, check_asymptotics_iii, check_monotone_ii, check_tau_bounds,
    check_tau_identity, fit_tau, monotone_ii, smoothness_of_solution, smoothness_sanity,
    tau_formula, uniqueness_experiment, verify,
};
use coagss::profiles::{solve, GridSpec, LambdaFunction, ProfileSolution};
use coagss::{Error, KernelSpec64, SolverOptions64};
use common::*;

#[test]
fn fit_recovers_pure_power_laws() {
    let grid = geometric(1e-8, 1e10, 3000);
    for tau in [1.25f64, 1.45] {
        let g = sample(&grid, |y| y.powf(-tau));
        let (fit, nodes) = fit_tau(&g).unwrap();
        assert!(nodes >= 16);
        assert!((fit - tau).abs() <= 1e-3, "τ = {tau}: fit {fit}");
    }
    let coarse = geometric(1e-3, 10.0, 20);
    assert!(matches!(
        fit_tau(&sample(&coarse, |y| 1.0 / y)),
        Err(Error::InsufficientResolution(_))
    ));
}

#[test]
fn tau_identity_for_the_exponential() {
    let k = KernelSpec64::constant();
    let g = sample(&geometric(1e-6, 60.0, 1500), |y| (-y).exp());
    assert!((tau_formula(&k, &g).unwrap() - 1.0).abs() <= 1e-6);
    let sol = ProfileSolution::from_profile(k, g).unwrap();
    let c = check_tau_identity(&sol).unwrap();
    assert!(c.passed && (c.measured - c.expected).abs() <= 2e-2, "{c:?}");
    assert!(check_monotone_ii(&sol).unwrap().passed);
}

#[test]
fn tau_identity_and_bounds_for_positive_lambda() {
    let k = KernelSpec64::single(0.0, 0.2, 1.0).unwrap();
    let sol = solve(&k, 1.0, &SolverOptions64::default()).unwrap();
    assert!(sol.converged);
    let c = check_tau_identity(&sol).unwrap();
    eprintln!("λ = 0.2: fit {} vs formula {}", c.measured, c.expected);
    assert!(c.passed, "{c:?}");
    let b = check_tau_bounds(&sol).unwrap();
    assert!(b.passed, "{b:?}");
    assert!(b.measured > 1.0 - 5e-2 && b.measured < 1.2 + 5e-2);
    let report = verify(&sol, 1e-2, "beta-0.2").unwrap();
    assert!(
        report.passed(),
        "{:?}",
        report.failures().collect::<Vec<_>>()
    );
}

#[test]
fn tau_bounds_reject_values_outside_the_interval() {
    let k = KernelSpec64::single(0.0, 0.2, 1.0).unwrap();
    let g = sample(&geometric(1e-4, 50.0, 400), |y| (-y).exp());
    let mut sol = ProfileSolution::from_profile(k, g).unwrap();
    for (tau, ok) in [(1.1, true), (0.9, false), (1.3, false)] {
        sol.tau = Some(tau);
        assert_eq!(check_tau_bounds(&sol).unwrap().passed, ok, "τ = {tau}");
    }
}

#[test]
fn monotonicity_examples() {
    let grid = geometric(1e-4, 50.0, 400);
    assert!(monotone_ii(&sample(&grid, |y| (-y).exp()), 1.0).passed);
    assert!(monotone_ii(&sample(&grid, |_| 0.0), 1.0).passed);
    // a power law with a dip: G jumps where the dip begins
    let mut v: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| y.powf(-1.25) * (-y).exp())
        .collect();
    for x in &mut v[100..110] {
        *x *= 0.2;
    }
    let g = coagss::GridFunction64::new(grid.clone(), v).unwrap();
    let c = monotone_ii(&g, 1.25);
    assert!(!c.passed);
    assert!(c.detail.contains("node"), "{}", c.detail);
}

#[test]
fn exact_exponential_of_lambda_gives_unit_k() {
    let k = KernelSpec64::single(-0.5, 0.5, 1.0).unwrap();
    // e^{-Λ} underflows below about 1e-5
    let grid = geometric(1e-3, 60.0, 800);
    let lf = LambdaFunction::new(&k, &sample(&grid, |y| y * (-y).exp())).unwrap();
    let g = sample(&grid, |y| (-lf.eval(y)).exp());
    let checks = asymptotics_iii(&g, &lf);
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    let osc = checks.iter().find(|c| c.name == "K_oscillation").unwrap();
    assert!(osc.measured <= 1e-12);
    let k0 = checks.iter().find(|c| c.name == "K0_positive").unwrap();
    assert!((k0.measured - 1.0).abs() <= 1e-12);
}

#[test]
fn negative_alpha_solution_passes_asymptotics() {
    let k = KernelSpec64::single(-0.5, 0.5, 1.0).unwrap();
    let sol = solve(&k, 1.0, &SolverOptions64::default()).unwrap();
    let checks = check_asymptotics_iii(&sol).unwrap();
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    // dropping the y^β term of Λ changes K at y0 by exp((1-λ) M_α/β y0^β) → 1
    let lf = sol.lambda_fn.as_ref().unwrap();
    let y0 = sol.g.nodes()[0];
    let factor = (lf.m_alpha() / 0.5 * y0.sqrt()).exp();
    assert!(factor - 1.0 <= 3.0 * lf.m_alpha() * y0.sqrt());
    assert!(matches!(
        check_tau_identity(&sol),
        Err(Error::ClassMismatch { .. })
    ));
}

#[test]
fn identical_seeds_give_identical_profiles() {
    let opts = SolverOptions64::default();
    let grid = opts.grid.build().unwrap();
    let seed = sample(&grid, |y| y * (-y).exp());
    let k = KernelSpec64::single(-0.5, 0.5, 1.0).unwrap();
    let (r, _) = uniqueness_experiment(&k, 1.0, [&seed, &seed], &opts).unwrap();
    let d = r.checks.iter().find(|c| c.name == "seed_distance").unwrap();
    assert_eq!(d.measured, 0.0);
    assert!(r.passed());
}

#[test]
fn constant_kernel_uniqueness() {
    let opts = SolverOptions64::default();
    let grid = opts.grid.build().unwrap();
    // ½ 1[0,2], smoothed over a width of 0.1
    let step = sample(&grid, |y| 0.25 * (1.0 - ((y - 2.0) / 0.1).tanh()));
    let exp = sample(&grid, |y| (-y).exp());
    let (r, [a, b]) =
        uniqueness_experiment(&KernelSpec64::constant(), 1.0, [&exp, &step], &opts).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    for s in [&a, &b] {
        let err = s.g.l1_1_distance(&sample(&grid, |y| (-y).exp())).unwrap();
        assert!(err <= 3e-3, "{err:e}");
    }
}

#[test]
fn negative_alpha_uniqueness() {
    let opts = SolverOptions64::default();
    let grid = opts.grid.build().unwrap();
    let seeds = [
        sample(&grid, |y| (-y).exp()),
        sample(&grid, |y| y * y * (-2.0 * y).exp()),
    ];
    let k = KernelSpec64::single(-0.5, 0.5, 1.0).unwrap();
    let (r, _) = uniqueness_experiment(&k, 1.0, [&seeds[0], &seeds[1]], &opts).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    for name in ["M_alpha_agreement", "M_beta_agreement"] {
        assert!(r.checks.iter().any(|c| c.name == name && c.passed));
    }
}

#[test]
fn smoothness_examples() {
    let run = |f: &dyn Fn(f64) -> f64| {
        smoothness_sanity(
            &sample(&geometric(1e-3, 30.0, 256), f),
            &sample(&geometric(1e-3, 30.0, 512), f),
        )
    };
    assert!(run(&|y| (-y).exp()).iter().all(|c| c.passed));
    let checks = run(&|y| (y - 1.01).abs().sqrt() * (-y).exp());
    assert!(checks.iter().any(|c| !c.passed), "{checks:?}");
    let checks = run(&|y| if y < 1.01 { 1.0 } else { 0.5 });
    assert!(checks.iter().all(|c| !c.passed), "{checks:?}");
}

#[test]
fn refinement_pair_is_fast() {
    let mut opts = SolverOptions64::default();
    opts.grid = GridSpec {
        y_min: 1e-4,
        y_max: 50.0,
        n: 256,
    };
    let start = Instant::now();
    let sol = solve(&KernelSpec64::constant(), 1.0, &opts).unwrap();
    let checks = smoothness_of_solution(&sol, &opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    eprintln!("refinement pair: {secs:.3} s");
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    assert!(secs < 1.0);
}
