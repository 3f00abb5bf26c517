use std::sync::Arc;

use coagss::coagop::apply_pointwise;
use coagss::profiles::{solve, GridSpec, SolverOptions};
use coagss::{Grid32, GridFunction32, KernelSpec32};

#[test]
fn grid_and_moments_in_single_precision() {
    let grid = Arc::new(Grid32::geometric(1e-4, 40.0, 400).unwrap());
    let e = GridFunction32::from_fn(grid, |y| (-y).exp());
    assert!((e.moment(1.0).unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn constant_kernel_operator_in_single_precision() {
    let k = KernelSpec32::constant();
    let grid = Arc::new(Grid32::geometric(1e-4, 40.0, 512).unwrap());
    let g = GridFunction32::from_fn(grid, |y| (-y).exp());
    let c = apply_pointwise(&k, &g, &g).unwrap();
    let at1 = c.eval(1.0).unwrap();
    assert!((at1 + (-1.0f32).exp()).abs() < 1e-3, "{at1}");
}

#[test]
fn constant_kernel_profile_in_single_precision() {
    let opts = SolverOptions::<f32> {
        grid: GridSpec {
            y_min: 1e-4,
            y_max: 40.0,
            n: 400,
        },
        tol: 1e-4,
        residual_tol: 1e-2,
        ..SolverOptions::default()
    };
    let sol = solve(&KernelSpec32::constant(), 1.0, &opts).unwrap();
    let exact = GridFunction32::from_fn(sol.g.grid().clone(), |y| (-y).exp());
    let err = sol.g.l1_1_distance(&exact).unwrap();
    assert!(err < 1e-2, "{err}");
    assert!((sol.tau.unwrap() - 1.0).abs() < 1e-2);
}
