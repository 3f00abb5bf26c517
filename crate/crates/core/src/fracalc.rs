//! Riemann–Liouville integrals and derivatives on uniform grids, finite-part
//! pairings, and the numeric form of the difference integral
//! `∫_0^∞ (x^{k-1} - (z+x)^{k-1}) dx = z^k / k`.
//!
//! A uniform grid `y_i = (i+1) h` carries an implicit node at the origin.
//! Left operators read the value there by quadratic extrapolation from the
//! first three samples (exact for functions that are quadratic near `0`, and
//! `≈ 0` for functions vanishing there). Right operators are defined through
//! the reflection `i ↦ n-1-i`, so their window closes one step past `y_max`,
//! mirroring the origin cell.
//!
//! Integrals use product integration: the function is piecewise linear and
//! the power kernel `(y-z)^{k-1}` is integrated exactly on every cell.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{power_law_head, Grid, GridFunction, GridKind};
use crate::real::{from_usize, gamma, lit, pow, to_f64, Real};

/// Order `k` with the decomposition `k = n - s`, `n` a nonnegative integer,
/// `0 <= s < 1`, used for `k >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder<T> {
    pub k: T,
    pub n: usize,
    pub s: T,
}

impl<T: Real> FracOrder<T> {
    pub fn new(k: T) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Domain(format!("order must be finite, got {k}")));
        }
        if k <= T::zero() {
            return Ok(Self {
                k,
                n: 0,
                s: T::zero(),
            });
        }
        let n = k.ceil();
        let s = n - k;
        Ok(Self {
            k,
            n: n.to_usize().expect("order fits in usize"),
            s,
        })
    }
}

fn uniform_step<T: Real>(f: &GridFunction<T>) -> Result<T> {
    match f.grid().kind() {
        GridKind::Uniform { step, .. } => Ok(step),
        GridKind::Geometric { .. } => Err(Error::GridKind {
            expected: "uniform",
        }),
    }
}

/// Value at the implicit origin node, extrapolated from the first samples.
fn origin_value<T: Real>(v: &[T]) -> T {
    match v.len() {
        0 => T::zero(),
        1 | 2 => v[0],
        _ => lit::<T>(3.0) * (v[0] - v[1]) + v[2],
    }
}

/// Samples at `0, h, ..., n h`, the origin value extrapolated.
fn with_origin<T: Real>(v: &[T]) -> Vec<T> {
    let origin = origin_value(v);
    let mut ext = Vec::with_capacity(v.len() + 1);
    ext.push(origin);
    ext.extend_from_slice(v);
    ext
}

/// Left integral of order `k > 0` of piecewise-linear samples `ext` at
/// `t_j = j h`, evaluated at every `t_N`.
fn rl_integral<T: Real>(ext: &[T], h: T, k: T) -> Vec<T> {
    let m = ext.len();
    let one = T::one();
    let kp1 = k + one;
    let c: Vec<T> = (0..=m).map(|j| pow(from_usize::<T>(j), kp1)).collect();
    let interior: Vec<T> = (0..m)
        .map(|d| {
            if d == 0 {
                T::zero()
            } else {
                c[d + 1] - (c[d] + c[d]) + c[d - 1]
            }
        })
        .collect();
    let scale = pow(h, k) / gamma(k + lit(2.0));
    let mut out = vec![T::zero(); m];
    for nn in 1..m {
        let nf = from_usize::<T>(nn);
        let first = c[nn - 1] - (nf - k - one) * pow(nf, k);
        let mut acc = first * ext[0];
        for (j, &v) in ext.iter().enumerate().take(nn).skip(1) {
            acc = acc + interior[nn - j] * v;
        }
        acc = acc + ext[nn];
        out[nn] = scale * acc;
    }
    out
}

/// First derivative of samples at uniform spacing `h`: central in the
/// interior, one-sided second order at both ends.
fn differentiate<T: Real>(v: &[T], h: T) -> Vec<T> {
    let m = v.len();
    let two_h = h + h;
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    if m < 3 {
        let d = if m == 2 { (v[1] - v[0]) / h } else { T::zero() };
        return vec![d; m];
    }
    let mut d = vec![T::zero(); m];
    d[0] = (-three * v[0] + four * v[1] - v[2]) / two_h;
    for j in 1..m - 1 {
        d[j] = (v[j + 1] - v[j - 1]) / two_h;
    }
    d[m - 1] = (three * v[m - 1] - four * v[m - 2] + v[m - 3]) / two_h;
    d
}

/// `D^k` on the samples with origin, for any real `k`.
fn left_ext<T: Real>(ext: &[T], h: T, k: T) -> Result<Vec<T>> {
    let order = FracOrder::new(k)?;
    if k < T::zero() {
        return Ok(rl_integral(ext, h, -k));
    }
    let mut v = if order.s > T::zero() {
        rl_integral(ext, h, order.s)
    } else {
        ext.to_vec()
    };
    for _ in 0..order.n {
        v = differentiate(&v, h);
    }
    Ok(v)
}

fn finish<T: Real>(f: &GridFunction<T>, ext: Vec<T>) -> Result<GridFunction<T>> {
    GridFunction::new(f.grid().clone(), ext[1..].to_vec())
}

/// `D^{-k} f(y) = Γ(k)^{-1} ∫_0^y f(z) (y-z)^{k-1} dz` for `k > 0`.
pub fn left_integral<T: Real>(f: &GridFunction<T>, k: T) -> Result<GridFunction<T>> {
    if !(k > T::zero()) {
        return Err(Error::Domain(format!(
            "integral order must be positive, got {k}"
        )));
    }
    left(f, -k)
}

/// `D^k f = d^n/dy^n D^{-s} f` for `k = n - s >= 0`; `D^0` is the identity.
pub fn left_derivative<T: Real>(f: &GridFunction<T>, k: T) -> Result<GridFunction<T>> {
    if k < T::zero() {
        return Err(Error::Domain(format!(
            "derivative order must be nonnegative, got {k}"
        )));
    }
    left(f, k)
}

/// `D^k` for any real order: an integral for `k < 0`, a derivative otherwise.
pub fn left<T: Real>(f: &GridFunction<T>, k: T) -> Result<GridFunction<T>> {
    let h = uniform_step(f)?;
    if k == T::zero() {
        return Ok(f.clone());
    }
    finish(f, left_ext(&with_origin(f.values()), h, k)?)
}

/// Reflection `y ↦ y_max + h - y`, i.e. node `i ↦ n-1-i`.
pub fn reflect<T: Real>(f: &GridFunction<T>) -> Result<GridFunction<T>> {
    uniform_step(f)?;
    let mut v = f.values().to_vec();
    v.reverse();
    GridFunction::new(f.grid().clone(), v)
}

/// `D_k = R D^k R` for any real order.
pub fn right<T: Real>(f: &GridFunction<T>, k: T) -> Result<GridFunction<T>> {
    reflect(&left(&reflect(f)?, k)?)
}

/// `D_{-k} f(y) = Γ(k)^{-1} ∫_y^∞ f(z) (z-y)^{k-1} dz` for `k > 0`.
pub fn right_integral<T: Real>(f: &GridFunction<T>, k: T) -> Result<GridFunction<T>> {
    if !(k > T::zero()) {
        return Err(Error::Domain(format!(
            "integral order must be positive, got {k}"
        )));
    }
    right(f, -k)
}

/// `D_k f = (-1)^n d^n/dy^n D_{-s} f` for `k = n - s >= 0`.
pub fn right_derivative<T: Real>(f: &GridFunction<T>, k: T) -> Result<GridFunction<T>> {
    if k < T::zero() {
        return Err(Error::Domain(format!(
            "derivative order must be nonnegative, got {k}"
        )));
    }
    right(f, k)
}

/// `D_{-k} f` at the nodes together with its value at the origin.
pub fn right_integral_with_origin<T: Real>(
    f: &GridFunction<T>,
    k: T,
) -> Result<(T, GridFunction<T>)> {
    let h = uniform_step(f)?;
    if !(k > T::zero()) {
        return Err(Error::Domain(format!(
            "integral order must be positive, got {k}"
        )));
    }
    // reflected samples at t_0 = y_max + h (extrapolated), ..., t_{n+1} = 0
    let mut rev = f.values().to_vec();
    rev.reverse();
    let mut ext = with_origin(&rev);
    ext.push(origin_value(f.values()));
    let out = rl_integral(&ext, h, k);
    let m = out.len();
    let mut nodes = out[1..m - 1].to_vec();
    nodes.reverse();
    Ok((out[m - 1], GridFunction::new(f.grid().clone(), nodes)?))
}

/// `∫_0^y f(z) g(y-z) dz` on a uniform grid (trapezoid including the origin).
pub fn convolve<T: Real>(f: &GridFunction<T>, g: &GridFunction<T>) -> Result<GridFunction<T>> {
    let h = uniform_step(f)?;
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let fe = with_origin(f.values());
    let ge = with_origin(g.values());
    let half = lit::<T>(0.5);
    let values = (1..fe.len())
        .map(|nn| {
            let mut acc = half * (fe[0] * ge[nn] + fe[nn] * ge[0]);
            for j in 1..nn {
                acc = acc + fe[j] * ge[nn - j];
            }
            acc * h
        })
        .collect();
    GridFunction::new(f.grid().clone(), values)
}

/// The distribution `⟨{f}, φ⟩ = ∫_0^∞ f(z) (φ(z) - φ(0)) dz`, which is finite
/// when `z f` is integrable near `0` even if `f` is not.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePart<T> {
    pub f: GridFunction<T>,
}

impl<T: Real> FinitePart<T> {
    pub fn new(f: GridFunction<T>) -> Self {
        Self { f }
    }

    /// `⟨{f}, φ⟩` with `f` zero beyond `y_max`; the part below `y0` is
    /// estimated from a local power law. A non-integrable integrand at the
    /// origin is reported as divergent.
    pub fn pair(&self, phi: impl Fn(T) -> T) -> Result<T> {
        let phi0 = phi(T::zero());
        let y = self.f.nodes();
        let integrand: Vec<T> = y
            .iter()
            .zip(self.f.values())
            .map(|(&z, &v)| {
                if v == T::zero() {
                    v
                } else {
                    v * (phi(z) - phi0)
                }
            })
            .collect();
        if let Some(i) = integrand.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { node: i });
        }
        let body = self.f.grid().integrate(&integrand);
        let head = power_law_head(y[0], integrand[0], y[1], integrand[1]).map_err(|p| {
            Error::Divergent {
                exponent: to_f64(p),
            }
        })?;
        Ok(body + head)
    }
}

/// `⟨{f}, φ⟩`.
pub fn finite_part_pairing<T: Real>(f: &FinitePart<T>, phi: impl Fn(T) -> T) -> Result<T> {
    f.pair(phi)
}

/// `⟨D^{-k}{f}, φ⟩ = ⟨{f}, D_{-k} φ⟩` with `φ` sampled on a uniform grid and
/// `{f}` on any grid. `D_{-k} φ` is read by linear interpolation, through its
/// origin value below the first node and as zero past the window.
pub fn integral_of_finite_part_pairing<T: Real>(
    f: &FinitePart<T>,
    phi: &GridFunction<T>,
    k: T,
) -> Result<T> {
    let (psi0, psi) = right_integral_with_origin(phi, k)?;
    let h = uniform_step(phi)?;
    let top = psi.grid().y_max();
    let read = |z: T| -> T {
        if z == T::zero() {
            psi0
        } else if z < h {
            psi0 + (psi.values()[0] - psi0) * z / h
        } else if z > top {
            T::zero()
        } else {
            psi.eval(z).unwrap_or(T::zero())
        }
    };
    f.pair(read)
}

/// Numeric value of `∫_0^∞ (x^{k-1} - (z+x)^{k-1}) dx` and the closed form
/// `z^k / k`.
///
/// The integral is taken on a geometric grid over `[1e-12 z, 1e6 z]` with a
/// power-law head and the asymptotic tail `z X^{k-1}` past `X = 1e6 z`.
pub fn check_difference_integral<T: Real>(k: T, z: T) -> Result<(T, T)> {
    if !(k > T::zero() && k < T::one()) {
        return Err(Error::Domain(format!("need 0 < k < 1, got {k}")));
    }
    if !(z > T::zero()) {
        return Err(Error::Domain(format!("need z > 0, got {z}")));
    }
    let one = T::one();
    let x_lo = z * lit(1e-12);
    let x_hi = z * lit(1e6);
    let grid = Arc::new(Grid::geometric(x_lo, x_hi, 4096)?);
    let km1 = k - one;
    let f = GridFunction::from_fn(grid.clone(), |x| pow(x, km1) - pow(z + x, km1));
    let body = grid.integrate(f.values());
    let y = grid.nodes();
    let head =
        power_law_head(y[0], f.values()[0], y[1], f.values()[1]).map_err(|p| Error::Divergent {
            exponent: to_f64(p),
        })?;
    let tail = z * pow(x_hi, km1);
    Ok((body + head + tail, pow(z, k) / k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(y_max: f64, n: usize) -> Arc<Grid<f64>> {
        Arc::new(Grid::uniform(y_max, n).unwrap())
    }

    #[test]
    fn order_decomposition() {
        let o = FracOrder::new(0.5f64).unwrap();
        assert_eq!((o.n, o.s), (1, 0.5));
        let o = FracOrder::new(2.0f64).unwrap();
        assert_eq!((o.n, o.s), (2, 0.0));
        let o = FracOrder::new(1.3f64).unwrap();
        assert_eq!(o.n, 2);
        assert!((o.s - 0.7).abs() < 1e-12);
    }

    #[test]
    fn half_integral_of_indicator() {
        let grid = uniform(4.0, 400);
        let one = GridFunction::from_fn(grid, |_| 1.0f64);
        let r = left_integral(&one, 0.5).unwrap();
        let i = r
            .nodes()
            .iter()
            .position(|&y| (y - 1.0).abs() < 1e-9)
            .unwrap();
        let expect = 2.0 / std::f64::consts::PI.sqrt();
        assert!((r.values()[i] - expect).abs() < 1e-12, "{}", r.values()[i]);
        assert!((expect - 1.128379).abs() < 1e-6);
    }

    #[test]
    fn first_integral_is_running_integral() {
        let grid = uniform(4.0, 40);
        let one = GridFunction::from_fn(grid, |_| 1.0f64);
        let r = left_integral(&one, 1.0).unwrap();
        let i = r
            .nodes()
            .iter()
            .position(|&y| (y - 2.0).abs() < 1e-9)
            .unwrap();
        assert!((r.values()[i] - 2.0).abs() < 1e-12);
        let z = GridFunction::zeros(r.grid().clone());
        assert!(left_integral(&z, 0.7).unwrap().is_zero());
    }

    #[test]
    fn zero_order_is_identity() {
        let grid = uniform(3.0, 30);
        let f = GridFunction::from_fn(grid, |y: f64| y * (-y).exp());
        assert_eq!(left_derivative(&f, 0.0).unwrap(), f);
        assert_eq!(right_derivative(&f, 0.0).unwrap(), f);
    }

    #[test]
    fn first_derivative_second_order() {
        let err = |n: usize| {
            let grid = uniform(10.0, n);
            let f = GridFunction::from_fn(grid, |y: f64| y * (-y).exp());
            let d = left_derivative(&f, 1.0).unwrap();
            d.nodes()
                .iter()
                .zip(d.values())
                .take(n - 1)
                .map(|(&y, &v)| (v - (1.0 - y) * (-y).exp()).abs())
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(200), err(400));
        assert!(a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn geometric_grid_rejected() {
        let grid = Arc::new(Grid::geometric(1e-2, 1.0, 16).unwrap());
        let f = GridFunction::from_fn(grid, |y: f64| y);
        assert_eq!(
            left_integral(&f, 0.5),
            Err(Error::GridKind {
                expected: "uniform"
            })
        );
    }

    #[test]
    fn right_integral_of_exponential() {
        let grid = uniform(30.0, 3000);
        let f = GridFunction::from_fn(grid, |y: f64| (-y).exp());
        let r = right_integral(&f, 1.0).unwrap();
        for (&y, &v) in r.nodes().iter().zip(r.values()).step_by(97) {
            assert!((v - (-y).exp()).abs() < 2e-5, "y={y}");
        }
    }

    #[test]
    fn right_integral_origin_value() {
        let grid = uniform(30.0, 3000);
        let f = GridFunction::from_fn(grid, |y: f64| (-y).exp());
        let (at0, nodes) = right_integral_with_origin(&f, 1.0).unwrap();
        assert!((at0 - 1.0).abs() < 2e-5, "{at0}");
        assert_eq!(nodes, right_integral(&f, 1.0).unwrap());
    }

    #[test]
    fn finite_part_examples() {
        let grid = Arc::new(Grid::geometric(1e-6, 50.0, 2048).unwrap());
        let e = FinitePart::new(GridFunction::from_fn(grid, |y: f64| (-y).exp()));
        assert_eq!(e.pair(|_| 3.0).unwrap(), 0.0);
        assert!((e.pair(|y| y).unwrap() - 1.0).abs() < 1e-5);

        let grid = Arc::new(Grid::geometric(1e-6, 1.0, 1024).unwrap());
        let p = FinitePart::new(GridFunction::from_fn(grid, |y: f64| y.powf(-1.2)));
        assert!((p.pair(|y| y).unwrap() - 1.25).abs() < 1e-4);
        assert!(matches!(
            p.pair(|y| (1.0 + y).ln() / (1.0 + y) + 1.0 / (y + 1.0)),
            Ok(_)
        ));
        let q = FinitePart::new(GridFunction::from_fn(p.f.grid().clone(), |y: f64| {
            y.powf(-2.5)
        }));
        assert!(matches!(q.pair(|y| y), Err(Error::Divergent { .. })));
    }

    #[test]
    fn difference_integral_values() {
        for (k, z, exact) in [(0.5f64, 4.0, 4.0), (0.5, 1.0, 2.0)] {
            let (num, ex) = check_difference_integral(k, z).unwrap();
            assert!((ex - exact).abs() < 1e-12);
            assert!((num - ex).abs() < 1e-4 * ex, "k={k} z={z} {num}");
        }
    }
}
