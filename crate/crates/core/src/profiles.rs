//! Self-similar profiles `2g + y g' + (1-λ) C(g, g) = 0` through the
//! rewritten forms of the equation.
//!
//! For `α = 0` the primitive form `(τ-1) G - y g + h = 0` with
//! `h = (1-λ) W G * (y^λ g)` and `τ = 2 - (1-λ) W M_λ[g]` gives
//! `G = y^{1-τ} K`, `K' = -y^{τ-2} h`. The iteration takes `K(∞) = 0` and
//! differentiates `y^{1-τ} K` exactly:
//! `g = (τ-1) y^{-τ} K + h / y`.
//!
//! For `α < 0` the form `g = K e^{-Λ}`, `K' = e^Λ h / y` with
//! `h = -(1-λ) Σ w (y^α g) * (y^β g) <= 0` gives a nonincreasing `K`; the
//! iteration integrates `K` from the right with `K(∞) = 0`.
//!
//! Each step is damped, clipped at zero and brought back to the target mass
//! through the scaling `g ↦ μ^{1+λ} g(μ y)`, which maps profiles to profiles.

use std::sync::Arc;

use crate::coagop::apply_pointwise;
use crate::error::{Error, Result};
use crate::grid::{exponential_tail, Grid, GridFunction, Moment};
use crate::kernel::{KernelClass, KernelSpec};
use crate::real::{lit, pow, to_f64, Real};
use crate::sampled::{convolve_at, Plan, Row, Sampled};

/// Geometric grid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub y_min: T,
    pub y_max: T,
    pub n: usize,
}

impl<T: Real> Default for GridSpec<T> {
    fn default() -> Self {
        Self {
            y_min: lit(1e-4),
            y_max: lit(50.0),
            n: 512,
        }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn build(&self) -> Result<Arc<Grid<T>>> {
        Ok(Arc::new(Grid::geometric(self.y_min, self.y_max, self.n)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T> {
    pub grid: GridSpec<T>,
    /// Bound on the estimated relative `L¹_1` distance to the fixed point.
    pub tol: T,
    pub max_iter: usize,
    /// Damping factor `ω` in `g ← (1-ω) g + ω T(g)`.
    pub omega: T,
    /// Bound on the mass-density residual (see [`residual_norms`]).
    pub residual_tol: T,
    /// Declared `L¹_1` accuracy of a converged profile; sets the uniqueness
    /// threshold.
    pub accuracy: T,
    /// Starting iterate; the class default when absent.
    pub initial: Option<GridFunction<T>>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tol: lit(1e-8),
            max_iter: 5000,
            omega: lit(0.5),
            residual_tol: lit(5e-3),
            accuracy: lit(1e-3),
            initial: None,
        }
    }
}

/// Moments of a profile with their truncation estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileMoments<T> {
    pub mass: Moment<T>,
    pub lambda: Moment<T>,
    pub alpha: Moment<T>,
    pub beta: Moment<T>,
}

impl<T: Real> ProfileMoments<T> {
    pub fn of(g: &GridFunction<T>, k: &KernelSpec<T>) -> Result<Self> {
        Ok(Self {
            mass: g.moment_with_tail(T::one())?,
            lambda: g.moment_with_tail(k.lambda())?,
            alpha: g.moment_with_tail(k.alpha_eff())?,
            beta: g.moment_with_tail(k.beta_eff())?,
        })
    }
}

/// One kernel term's contribution to `Λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaTerm<T> {
    pub alpha: T,
    pub beta: T,
    pub weight: T,
    pub m_alpha: T,
    pub m_beta: T,
}

/// `Λ(y) = 2 log y - (1-λ) Σ w (M_β/α y^α + M_α/β y^β)`, where an exponent
/// equal to zero contributes `M log y` instead of `M y^0 / 0`. For a single
/// term with `β = 0` this is `(2 - (1-λ) M_α) log y - (1-λ) M_β/α y^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFunction<T> {
    pub lambda: T,
    pub terms: Vec<LambdaTerm<T>>,
}

impl<T: Real> LambdaFunction<T> {
    pub fn new(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<Self> {
        let terms = k
            .terms()
            .iter()
            .map(|t| {
                Ok(LambdaTerm {
                    alpha: t.alpha,
                    beta: t.beta,
                    weight: t.weight,
                    m_alpha: g.moment_with_tail(t.alpha)?.total(),
                    m_beta: g.moment_with_tail(t.beta)?.total(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda: k.lambda(),
            terms,
        })
    }

    /// `M_α` of the first term.
    pub fn m_alpha(&self) -> T {
        self.terms[0].m_alpha
    }

    /// `M_β` of the first term.
    pub fn m_beta(&self) -> T {
        self.terms[0].m_beta
    }

    pub fn beta_is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.beta == T::zero())
    }

    pub fn eval(&self, y: T) -> T {
        let ln_y = y.ln();
        let c = T::one() - self.lambda;
        let piece = |e: T, m: T| {
            if e == T::zero() {
                m * ln_y
            } else {
                m / e * pow(y, e)
            }
        };
        let sum = self.terms.iter().fold(T::zero(), |s, t| {
            s + t.weight * (piece(t.alpha, t.m_beta) + piece(t.beta, t.m_alpha))
        });
        lit::<T>(2.0) * ln_y - c * sum
    }

    /// `Λ'(y) y = 2 - (1-λ) Σ w (M_β y^α + M_α y^β)`.
    pub fn mu(&self, y: T) -> T {
        let c = T::one() - self.lambda;
        let sum = self.terms.iter().fold(T::zero(), |s, t| {
            s + t.weight * (t.m_beta * pow(y, t.alpha) + t.m_alpha * pow(y, t.beta))
        });
        lit::<T>(2.0) - c * sum
    }
}

/// A computed profile with its characteristic quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution<T> {
    pub g: GridFunction<T>,
    pub kernel: KernelSpec<T>,
    pub moments: ProfileMoments<T>,
    /// `2 - (1-λ) W M_λ[g]` (`α = 0`).
    pub tau: Option<T>,
    /// `Λ` built from the profile's moments (`α < 0`).
    pub lambda_fn: Option<LambdaFunction<T>>,
    /// `lim g e^Λ` for `α < 0`, `lim y^{τ-1} G` for `α = 0`, read at `y0`.
    pub k0: Option<T>,
    /// Mass-density residual of the profile equation on the trusted interval.
    pub residual: T,
    /// Absolute sup of the residual on the trusted interval.
    pub residual_abs: T,
    pub iterations: usize,
    /// Estimated relative `L¹_1` distance to the discrete fixed point.
    pub last_change: T,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> ProfileSolution<T> {
    pub fn lambda(&self) -> T {
        self.kernel.lambda()
    }

    /// Packages a given profile: moments, `τ` or `Λ`, `K0` and residuals.
    pub fn from_profile(kernel: KernelSpec<T>, g: GridFunction<T>) -> Result<Self> {
        let moments = ProfileMoments::of(&g, &kernel)?;
        let (tau, lambda_fn, k0) = match kernel.class() {
            KernelClass::AlphaNeg => {
                let lf = LambdaFunction::new(&kernel, &g)?;
                let k0 = k_at_origin(&g, &lf);
                (None, Some(lf), Some(k0))
            }
            KernelClass::AlphaZero => {
                let tau = tau_of(&kernel, &g)?;
                let big_g = g.tail_primitive();
                let y0 = g.nodes()[0];
                let k0 = pow(y0, tau - T::one()) * big_g.values()[0];
                (Some(tau), None, Some(k0))
            }
            KernelClass::AlphaPos => (None, None, None),
        };
        let (residual_abs, residual) = residual_norms(&kernel, &g)?;
        Ok(Self {
            g,
            kernel,
            moments,
            tau,
            lambda_fn,
            k0,
            residual,
            residual_abs,
            iterations: 0,
            last_change: T::zero(),
            converged: false,
            warnings: Vec::new(),
        })
    }
}

fn k_at_origin<T: Real>(g: &GridFunction<T>, lf: &LambdaFunction<T>) -> T {
    let y0 = g.nodes()[0];
    let v = g.values()[0];
    if v > T::zero() {
        (v.ln() + lf.eval(y0)).exp()
    } else {
        T::zero()
    }
}

fn tau_of<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<T> {
    let m = g.moment_with_tail(k.lambda())?.total();
    Ok(lit::<T>(2.0) - (T::one() - k.lambda()) * k.total_weight() * m)
}

/// Solves `μ(y) g + y g' = h` with `g(y_a) = g_a`, i.e. `g = K e^{-Λ}`,
/// `Λ' = μ / y`, `K' = e^Λ h / y`.
///
/// The integrating factor is applied cell by cell, `e^{Λ(z) - Λ(y)}`, so no
/// exponential is ever formed on its own; quadrature is trapezoidal in
/// `ln y`.
pub fn ode_solve<T: Real>(
    mu: &GridFunction<T>,
    h: &GridFunction<T>,
    anchor: (T, T),
) -> Result<GridFunction<T>> {
    if !mu.same_grid(h) {
        return Err(Error::GridMismatch);
    }
    let y = mu.nodes();
    let (ya, ga) = anchor;
    let ia = y
        .iter()
        .position(|&v| (v - ya).abs() <= lit::<T>(1e-12) * ya.abs())
        .ok_or_else(|| Error::Domain(format!("anchor {ya} is not a grid node")))?;
    let n = y.len();
    let m = mu.values();
    let hv = h.values();
    let half = lit::<T>(0.5);
    let mut out = vec![T::zero(); n];
    out[ia] = ga;
    for i in ia..n - 1 {
        let ds = (y[i + 1] / y[i]).ln();
        let dl = (m[i] + m[i + 1]) * half * ds;
        let decay = (-dl).exp();
        out[i + 1] = out[i] * decay + ds * half * (hv[i] * decay + hv[i + 1]);
    }
    for i in (1..=ia).rev() {
        let ds = (y[i] / y[i - 1]).ln();
        let dl = (m[i] + m[i - 1]) * half * ds;
        let grow = dl.exp();
        out[i - 1] = out[i] * grow - ds * half * (hv[i] * grow + hv[i - 1]);
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!(
            "ode solution not finite at node {i}"
        )));
    }
    GridFunction::new(mu.grid().clone(), out)
}

/// `μ^{1+λ} g(μ y)` on the same grid. Values below `y0` follow the local
/// power law; values past `y_max` follow an exponential fitted to the last
/// two nodes.
pub fn rescale<T: Real>(g: &GridFunction<T>, lambda: T, mu: T) -> Result<GridFunction<T>> {
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(Error::Domain(format!(
            "scaling factor must be positive, got {mu}"
        )));
    }
    if mu == T::one() {
        return Ok(g.clone());
    }
    let grid = g.grid().clone();
    let y = grid.nodes();
    let n = y.len();
    let v = g.values();
    let s = Sampled::shape(&grid, v);
    let amp = pow(mu, T::one() + lambda);
    let ymax = grid.y_max();
    let rate = {
        let (a, b) = (v[n - 2], v[n - 1]);
        if a > T::zero() && b > T::zero() && b < a {
            (a / b).ln() / (y[n - 1] - y[n - 2])
        } else {
            T::zero()
        }
    };
    let values = y
        .iter()
        .map(|&x| {
            let t = mu * x;
            let val = if t > ymax {
                if rate > T::zero() {
                    v[n - 1] * (-(t - ymax) * rate).exp()
                } else {
                    T::zero()
                }
            } else {
                s.at(t)
            };
            amp * val
        })
        .collect();
    GridFunction::new(grid, values)
}

/// [`rescale`] applied to a solution; quantities are recomputed.
pub fn rescale_profile<T: Real>(sol: &ProfileSolution<T>, mu: T) -> Result<ProfileSolution<T>> {
    let g = rescale(&sol.g, sol.lambda(), mu)?;
    let mut out = ProfileSolution::from_profile(sol.kernel.clone(), g)?;
    out.iterations = sol.iterations;
    out.last_change = sol.last_change;
    out.converged = sol.converged;
    out.warnings = sol.warnings.clone();
    Ok(out)
}

/// Brings `g` to the target mass along the scaling family.
pub(crate) fn to_mass<T: Real>(g: &GridFunction<T>, lambda: T, mass: T) -> Result<GridFunction<T>> {
    let m = g.moment_with_tail(T::one())?.total();
    if !(m > T::zero()) || !m.is_finite() {
        return Err(Error::InvalidInitialization(format!(
            "iterate has mass {m}"
        )));
    }
    // μ^{λ-1} m = mass
    let mu = pow(mass / m, T::one() / (lambda - T::one()));
    rescale(g, lambda, mu)
}

/// Pointwise `2g + y g' + (1-λ) C(g, g)` with `y g' = dg/d(ln y)` by central
/// differences (one-sided at the ends) and `C` from the gain/loss integrals.
pub fn profile_residual<T: Real>(
    k: &KernelSpec<T>,
    g: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    let c = apply_pointwise(k, g, g)?;
    let yg = log_derivative(g);
    let lam = T::one() - k.lambda();
    let two = lit::<T>(2.0);
    let values = g
        .values()
        .iter()
        .zip(&yg)
        .zip(c.values())
        .map(|((&v, &d), &cv)| two * v + d + lam * cv)
        .collect();
    GridFunction::new(g.grid().clone(), values)
}

/// `y g'(y)` at the nodes by second-order differences in `ln y`.
pub fn log_derivative<T: Real>(g: &GridFunction<T>) -> Vec<T> {
    let y = g.nodes();
    let v = g.values();
    let n = y.len();
    let s: Vec<T> = y.iter().map(|x| x.ln()).collect();
    let mut d = vec![T::zero(); n];
    if n < 3 {
        if n == 2 {
            let slope = (v[1] - v[0]) / (s[1] - s[0]);
            d = vec![slope; 2];
        }
        return d;
    }
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (s[i + 1] - s[i - 1]);
    }
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    d[0] = (-three * v[0] + four * v[1] - v[2]) / (s[2] - s[0]);
    d[n - 1] = (three * v[n - 1] - four * v[n - 2] + v[n - 3]) / (s[n - 1] - s[n - 3]);
    d
}

/// Absolute sup of the residual `R` on the trusted interval, and the
/// mass-density form `sup y |R(y)| / sup y |g(y)|` there. The second is
/// invariant under the scaling family and does not overweight regions where
/// `g` is singular or vanishingly small.
pub fn residual_norms<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<(T, T)> {
    let r = profile_residual(k, g)?;
    let y = g.nodes();
    let mut abs = T::zero();
    let mut num = T::zero();
    let mut den = T::zero();
    for i in g.grid().trusted_indices() {
        let ri = r.values()[i].abs();
        abs = abs.max(ri);
        num = num.max(y[i] * ri);
        den = den.max(y[i] * g.values()[i].abs());
    }
    let rel = if den > T::zero() { num / den } else { num };
    Ok((abs, rel))
}

/// Residual of a solution at every node.
pub fn residual<T: Real>(sol: &ProfileSolution<T>) -> Result<GridFunction<T>> {
    profile_residual(&sol.kernel, &sol.g)
}

/// Right-accumulated `∫_{y_i}^∞ F` (log-trapezoid plus exponential tail).
fn tail_integral<T: Real>(grid: &Grid<T>, f: &[T]) -> Vec<T> {
    let y = grid.nodes();
    let n = y.len();
    let mut out = vec![T::zero(); n];
    out[n - 1] = exponential_tail(y[n - 2], f[n - 2], y[n - 1], f[n - 1]);
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + grid.segment(y[i], f[i], y[i + 1], f[i + 1]);
    }
    out
}

/// `(u * v)(y_i)` at every node.
fn convolve_all<T: Real>(grid: &Grid<T>, u: &[T], v: &[T]) -> Vec<T> {
    let su = Sampled::new(grid, u);
    let sv = Sampled::new(grid, v);
    let plan = Plan::new(grid);
    let mut row = Row::new();
    (0..grid.len())
        .map(|i| {
            plan.row(i, &mut row);
            convolve_at(&su, &sv, &row)
        })
        .collect()
}

fn weighted<T: Real>(g: &GridFunction<T>, e: T) -> Vec<T> {
    g.nodes()
        .iter()
        .zip(g.values())
        .map(|(&y, &v)| if v == T::zero() { v } else { pow(y, e) * v })
        .collect()
}

/// One step of the `α = 0` map: returns `T(g)` and `τ`.
fn step_alpha_zero<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<(Vec<T>, T)> {
    let grid = g.grid();
    let lambda = k.lambda();
    let tau = tau_of(k, g)?;
    let big_g = g.tail_primitive();
    let s = weighted(g, lambda);
    let c = (T::one() - lambda) * k.total_weight();
    let h: Vec<T> = convolve_all(grid, big_g.values(), &s)
        .into_iter()
        .map(|v| c * v)
        .collect();
    let y = grid.nodes();
    let integrand: Vec<T> = y
        .iter()
        .zip(&h)
        .map(|(&x, &hv)| pow(x, tau - lit(2.0)) * hv)
        .collect();
    let kk = tail_integral(grid, &integrand);
    let update = y
        .iter()
        .zip(kk.iter().zip(&h))
        .map(|(&x, (&kv, &hv))| ((tau - T::one()) * pow(x, -tau) * kv + hv / x).max(T::zero()))
        .collect();
    Ok((update, tau))
}

/// One step of the `α < 0` map: returns `T(g)` and `K` at the nodes.
fn step_alpha_neg<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<(Vec<T>, Vec<T>)> {
    let grid = g.grid();
    let y = grid.nodes();
    let n = y.len();
    let lf = LambdaFunction::new(k, g)?;
    let c = T::one() - k.lambda();
    let mut h = vec![T::zero(); n];
    for t in k.terms() {
        let conv = convolve_all(grid, &weighted(g, t.alpha), &weighted(g, t.beta));
        for (hv, cv) in h.iter_mut().zip(conv) {
            *hv = *hv + c * t.weight * cv;
        }
    }
    let lam: Vec<T> = y.iter().map(|&x| lf.eval(x)).collect();
    // e^Λ |h| / y, formed in log space
    let integrand: Vec<T> = lam
        .iter()
        .zip(&h)
        .zip(y)
        .map(|((&l, &hv), &x)| {
            if hv > T::zero() {
                (l + hv.ln() - x.ln()).exp()
            } else {
                T::zero()
            }
        })
        .collect();
    if let Some(i) = integrand.iter().position(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("e^Λ h overflows at node {i}")));
    }
    let kk = tail_integral(grid, &integrand);
    let update = kk
        .iter()
        .zip(&lam)
        .map(|(&kv, &l)| {
            if kv > T::zero() {
                (kv.ln() - l).exp()
            } else {
                T::zero()
            }
        })
        .collect();
    Ok((update, kk))
}

fn default_seed<T: Real>(grid: &Arc<Grid<T>>, k: &KernelSpec<T>) -> GridFunction<T> {
    match k.class() {
        KernelClass::AlphaZero => {
            let lambda = k.lambda();
            let p = if lambda > T::zero() {
                -(T::one() + lambda * lit(0.5))
            } else {
                T::zero()
            };
            GridFunction::from_fn(grid.clone(), |y| pow(y, p) * (-y).exp())
        }
        _ => GridFunction::from_fn(grid.clone(), |y| (-y).exp()),
    }
}

fn seed<T: Real>(k: &KernelSpec<T>, mass: T, opts: &SolverOptions<T>) -> Result<GridFunction<T>> {
    if !(mass > T::zero()) || !mass.is_finite() {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    let g = match &opts.initial {
        Some(g) => {
            if !g.grid().is_geometric() {
                return Err(Error::GridKind {
                    expected: "geometric",
                });
            }
            g.clone()
        }
        None => default_seed(&opts.grid.build()?, k),
    };
    if let Some(i) = g.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { node: i });
    }
    if g.values().iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidInitialization(
            "initial iterate has negative values".into(),
        ));
    }
    if g.is_zero() {
        return Err(Error::InvalidInitialization(
            "initial iterate is identically zero".into(),
        ));
    }
    to_mass(&g, k.lambda(), mass)
}

fn relative_change<T: Real>(new: &GridFunction<T>, old: &GridFunction<T>) -> Result<T> {
    let d = new.l1_1_distance(old)?;
    let norm = new.l1_1_norm();
    Ok(if norm > T::zero() { d / norm } else { d })
}

/// Damped fixed-point loop shared by both classes; the first step is
/// undamped. With `log_damping` the mix is taken in `ln g`, which lets values
/// at the scale of `e^{-Λ}` near the origin settle at the same rate as the
/// bulk. Stops when the change,
/// inflated by the observed contraction `q` as `change / (1 - q)`, is below
/// `opts.tol`.
fn iterate<T: Real>(
    k: &KernelSpec<T>,
    mass: T,
    opts: &SolverOptions<T>,
    log_damping: bool,
    step: impl Fn(&GridFunction<T>) -> Result<Vec<T>>,
) -> Result<(GridFunction<T>, usize, T, bool)> {
    let lambda = k.lambda();
    let mut g = seed(k, mass, opts)?;
    let omega = opts.omega;
    if !(omega > T::zero() && omega <= T::one()) {
        return Err(Error::Domain(format!(
            "damping must lie in (0, 1], got {omega}"
        )));
    }
    let mut prev_change: Option<T> = None;
    let mut q = lit::<T>(0.5);
    let mut estimate = T::infinity();
    for it in 1..=opts.max_iter {
        let update = step(&g)?;
        // the first step replaces the seed, whose behaviour at the origin
        // would otherwise persist at order (1-ω)^n
        let omega = if it == 1 { T::one() } else { omega };
        let mixed: Vec<T> = g
            .values()
            .iter()
            .zip(&update)
            .map(|(&a, &b)| {
                if !log_damping {
                    (T::one() - omega) * a + omega * b
                } else if a > T::zero() && b > T::zero() {
                    ((T::one() - omega) * a.ln() + omega * b.ln()).exp()
                } else {
                    T::zero()
                }
            })
            .collect();
        let next = to_mass(&GridFunction::new(g.grid().clone(), mixed)?, lambda, mass)?;
        let change = relative_change(&next, &g)?;
        if let Some(p) = prev_change {
            if p > T::zero() {
                q = (change / p).min(lit(0.99)).max(T::zero());
            }
        }
        prev_change = Some(change);
        estimate = change / (T::one() - q);
        g = next;
        if !estimate.is_finite() {
            return Err(Error::Overflow(format!("iteration diverged at step {it}")));
        }
        if estimate < opts.tol {
            return Ok((g, it, estimate, true));
        }
    }
    Ok((g, opts.max_iter, estimate, false))
}

fn finish<T: Real>(
    k: &KernelSpec<T>,
    g: GridFunction<T>,
    iterations: usize,
    change: T,
    fixed_point: bool,
    opts: &SolverOptions<T>,
) -> Result<ProfileSolution<T>> {
    let mut sol = ProfileSolution::from_profile(k.clone(), g)?;
    sol.iterations = iterations;
    sol.last_change = change;
    sol.converged = fixed_point && sol.residual <= opts.residual_tol;
    if !fixed_point {
        sol.warnings.push(format!(
            "fixed-point iteration stopped after {iterations} steps with estimated change {:e}",
            to_f64(change)
        ));
    }
    if sol.residual > opts.residual_tol {
        sol.warnings.push(format!(
            "residual {:e} exceeds {:e}",
            to_f64(sol.residual),
            to_f64(opts.residual_tol)
        ));
    }
    Ok(sol)
}

fn require_class<T: Real>(k: &KernelSpec<T>, expected: KernelClass) -> Result<()> {
    if k.class() != expected {
        return Err(Error::ClassMismatch {
            expected: expected.name().into(),
            found: k.class().name().into(),
        });
    }
    Ok(())
}

/// Profile of the given mass for a kernel whose terms all have `α = 0`.
///
/// A finished solve with `τ` outside `(1, min{3/2, 1+λ})` is reported as not
/// converged, with a warning.
pub fn solve_alpha_zero<T: Real>(
    k: &KernelSpec<T>,
    mass: T,
    opts: &SolverOptions<T>,
) -> Result<ProfileSolution<T>> {
    require_class(k, KernelClass::AlphaZero)?;
    if k.terms().iter().any(|t| t.alpha != T::zero()) {
        return Err(Error::ClassMismatch {
            expected: KernelClass::AlphaZero.name().into(),
            found: "mixed alpha".into(),
        });
    }
    let (g, it, change, ok) = iterate(k, mass, opts, false, |g| Ok(step_alpha_zero(k, g)?.0))?;
    let mut sol = finish(k, g, it, change, ok, opts)?;
    if let Some(tau) = sol.tau {
        let lambda = k.lambda();
        let upper = (T::one() + lambda).min(lit(1.5));
        let slack = lit::<T>(5e-2);
        let inside = if lambda > T::zero() {
            tau > T::one() - slack && tau < upper + slack
        } else {
            (tau - T::one()).abs() < slack
        };
        if !inside {
            sol.converged = false;
            sol.warnings
                .push(format!("tau = {tau} outside the admissible range"));
        }
    }
    Ok(sol)
}

/// Profile of the given mass for a kernel with `α < 0`.
///
/// A profile whose `g e^Λ` increases somewhere carries a warning.
pub fn solve_alpha_neg<T: Real>(
    k: &KernelSpec<T>,
    mass: T,
    opts: &SolverOptions<T>,
) -> Result<ProfileSolution<T>> {
    require_class(k, KernelClass::AlphaNeg)?;
    let (g, it, change, ok) = iterate(k, mass, opts, true, |g| Ok(step_alpha_neg(k, g)?.0))?;
    let mut sol = finish(k, g, it, change, ok, opts)?;
    if let Some(lf) = &sol.lambda_fn {
        let slack = lit::<T>(1e-6);
        let kv: Vec<T> = sol
            .g
            .nodes()
            .iter()
            .zip(sol.g.values())
            .map(|(&y, &v)| {
                if v > T::zero() {
                    (v.ln() + lf.eval(y)).exp()
                } else {
                    T::zero()
                }
            })
            .collect();
        if let Some(i) = (1..kv.len()).find(|&i| kv[i] > kv[i - 1] * (T::one() + slack)) {
            sol.warnings
                .push(format!("g e^Lambda increases at node {i}"));
        }
    }
    Ok(sol)
}

/// Dispatches on the kernel class; `α > 0` kernels are not covered by the
/// rewritten forms.
pub fn solve<T: Real>(
    k: &KernelSpec<T>,
    mass: T,
    opts: &SolverOptions<T>,
) -> Result<ProfileSolution<T>> {
    match k.class() {
        KernelClass::AlphaZero => solve_alpha_zero(k, mass, opts),
        KernelClass::AlphaNeg => solve_alpha_neg(k, mass, opts),
        KernelClass::AlphaPos => Err(Error::ClassMismatch {
            expected: "alpha_zero or alpha_neg".into(),
            found: KernelClass::AlphaPos.name().into(),
        }),
    }
}
