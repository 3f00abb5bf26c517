//! Oracles shared by the integration tests; independent of the library's
//! own quadrature.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use coagss::{Grid64, GridFunction64};

/// Double-exponential quadrature of `f` over `[a, b]`; tolerates integrable
/// endpoint singularities since no abscissa reaches an endpoint.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let step = 1.0 / 32.0;
    let half = 0.5 * (b - a);
    let n = (4.0 / step) as i64;
    let mut s = 0.0;
    for i in -n..=n {
        let t = i as f64 * step;
        let u = FRAC_PI_2 * t.sinh();
        let c = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (c * c);
        // distance to the nearer endpoint, without cancellation
        let d = half * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        if d <= 0.0 || w == 0.0 {
            continue;
        }
        let x = if u < 0.0 { a + d } else { b - d };
        s += w * f(x);
    }
    s * step * half
}

/// `∫_a^∞ f` for integrands decaying at least exponentially, by mapping the
/// half-line onto `[0, 1)`.
pub fn tanh_sinh_tail(f: impl Fn(f64) -> f64, a: f64) -> f64 {
    tanh_sinh(
        |s| {
            let x = a + s / (1.0 - s);
            let v = f(x) / ((1.0 - s) * (1.0 - s));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
    )
}

pub fn geometric(y_min: f64, y_max: f64, n: usize) -> Arc<Grid64> {
    Arc::new(Grid64::geometric(y_min, y_max, n).unwrap())
}

pub fn uniform(y_max: f64, n: usize) -> Arc<Grid64> {
    Arc::new(Grid64::uniform(y_max, n).unwrap())
}

pub fn sample(grid: &Arc<Grid64>, f: impl Fn(f64) -> f64) -> GridFunction64 {
    GridFunction64::from_fn(grid.clone(), f)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Smooth bump supported on `[a, b]`, equal to `1` at the midpoint.
pub fn bump(a: f64, b: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x: f64| {
        if x <= a || x >= b {
            0.0
        } else {
            let m = 0.5 * (a + b);
            let peak = (-1.0 / ((m - a) * (b - m))).exp();
            (-1.0 / ((x - a) * (b - x))).exp() / peak
        }
    }
}

/// `∫ y |f - g| dy` by the trapezoid rule in `y`, independent of the grid
/// weights.
pub fn l1_1_trapezoid(y: &[f64], f: &[f64], g: &[f64]) -> f64 {
    (1..y.len())
        .map(|i| {
            let e = |j: usize| y[j] * (f[j] - g[j]).abs();
            0.5 * (y[i] - y[i - 1]) * (e(i) + e(i - 1))
        })
        .sum()
}

/// `y^2 e^{-c y} (1 + b sin(ω y))`: smooth, vanishing to second order at 0.
pub fn smooth(c: f64, b: f64, w: f64) -> impl Fn(f64) -> f64 {
    move |y: f64| y * y * (-c * y).exp() * (1.0 + b * (w * y).sin())
}

/// Right side of the weak product rule by nested double-exponential
/// quadrature.
pub fn product_rule_rhs(
    y: f64,
    k: f64,
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64 + Copy,
    psi: impl Fn(f64) -> f64,
    support: (f64, f64),
) -> f64 {
    let lo = y.max(support.0);
    let hi = support.1;
    let tail = if lo >= hi {
        0.0
    } else {
        tanh_sinh(
            |x| {
                psi(x)
                    * tanh_sinh(
                        |u| dphi(y + u * (x - y)) * (1.0 - u).powf(k) * u.powf(-k),
                        0.0,
                        1.0,
                    )
            },
            lo,
            hi,
        )
    };
    phi(y) * psi(y) - (PI * k).sin() / PI * tail
}
