//! Time-dependent coagulation `∂_t f = C(f, f)` and relaxation of the
//! rescaled equation towards a self-similar profile.
//!
//! Stepping is a finite-volume update of the mass density `y f` in flux form:
//! `∂_t (y f) + ∂_y J = 0` with
//! `J(x) = ∫_0^x ∫_{x-u}^∞ u a(u, v) f(u) f(v) dv du`,
//! midpoint in `u` and piecewise constant in `v`. Interior fluxes telescope,
//! so the discrete mass changes only through the flux across `y_max`, which
//! is recorded.

use std::sync::Arc;

use crate::coagop::gain_loss;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, GridKind};
use crate::kernel::KernelSpec;
use crate::profiles::{rescale, to_mass, ProfileSolution};
use crate::real::{lit, pow, to_f64, Real};
use crate::sampled::Sampled;

/// Cell boundaries `y_{i-1/2}`, `i = 0..=n`: geometric midpoints on
/// geometric grids, arithmetic midpoints otherwise.
pub fn cell_edges<T: Real>(grid: &Grid<T>) -> Vec<T> {
    let y = grid.nodes();
    let n = y.len();
    let mut e = Vec::with_capacity(n + 1);
    match grid.kind() {
        GridKind::Geometric { .. } => {
            let r = (y[1] / y[0]).sqrt();
            e.push(y[0] / r);
            for i in 0..n - 1 {
                e.push((y[i] * y[i + 1]).sqrt());
            }
            e.push(y[n - 1] * r);
        }
        GridKind::Uniform { .. } => {
            let half = lit::<T>(0.5);
            e.push((y[0] - half * (y[1] - y[0])).max(T::zero()));
            for i in 0..n - 1 {
                e.push(half * (y[i] + y[i + 1]));
            }
            e.push(y[n - 1] + half * (y[n - 1] - y[n - 2]));
        }
    }
    e
}

/// State of a time-dependent run; values of `f` are cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState<T> {
    pub f: GridFunction<T>,
    pub t: T,
    pub t0: T,
    pub mass0: T,
    /// Cumulative mass carried across `y_max`.
    pub outflux: T,
    /// Cumulative mass added by clipping negative cell values.
    pub clip_defect: T,
}

impl<T: Real> EvolutionState<T> {
    pub fn new(f: GridFunction<T>, t0: T) -> Result<Self> {
        if !(t0 > T::zero()) {
            return Err(Error::Domain(format!(
                "time offset must be positive, got {t0}"
            )));
        }
        if let Some(i) = f.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { node: i });
        }
        if f.values().len() < 2 {
            return Err(Error::InsufficientResolution(
                "at least two cells required".into(),
            ));
        }
        let mass0 = fv_moment(&f, T::one());
        Ok(Self {
            f,
            t: T::zero(),
            t0,
            mass0,
            outflux: T::zero(),
            clip_defect: T::zero(),
        })
    }

    /// `Σ x_i^μ f_i Δ_i` over the cells.
    pub fn moment(&self, mu: T) -> T {
        fv_moment(&self.f, mu)
    }

    pub fn mass(&self) -> T {
        self.moment(T::one())
    }

    pub fn number(&self) -> T {
        self.moment(T::zero())
    }

    /// `|M1 - mass0| / mass0`.
    pub fn mass_drift(&self) -> T {
        if self.mass0 == T::zero() {
            return self.mass().abs();
        }
        (self.mass() - self.mass0).abs() / self.mass0
    }
}

fn fv_moment<T: Real>(f: &GridFunction<T>, mu: T) -> T {
    let e = cell_edges(f.grid());
    f.nodes()
        .iter()
        .zip(f.values())
        .enumerate()
        .fold(T::zero(), |s, (i, (&x, &v))| {
            s + pow(x, mu) * v * (e[i + 1] - e[i])
        })
}

/// `max_i Σ_j a(x_i, x_j) f_j Δ_j`, the largest loss rate.
pub fn max_loss_rate<T: Real>(f: &GridFunction<T>, k: &KernelSpec<T>) -> T {
    let e = cell_edges(f.grid());
    let x = f.nodes();
    let v = f.values();
    let mut best = T::zero();
    for &xi in x {
        let mut s = T::zero();
        for j in 0..x.len() {
            if v[j] != T::zero() {
                s = s + k.eval_unchecked(xi, x[j]) * v[j].abs() * (e[j + 1] - e[j]);
            }
        }
        best = best.max(s);
    }
    best
}

/// Largest stable step, `1 / max loss rate`.
pub fn stability_bound<T: Real>(f: &GridFunction<T>, k: &KernelSpec<T>) -> T {
    let r = max_loss_rate(f, k);
    if r > T::zero() {
        T::one() / r
    } else {
        T::infinity()
    }
}

/// Mass fluxes `J_{i+1/2}`, `i = 0..n`; the last entry is the outflux.
pub fn mass_fluxes<T: Real>(f: &GridFunction<T>, k: &KernelSpec<T>) -> Vec<T> {
    let grid = f.grid();
    let x = grid.nodes();
    let n = x.len();
    let e = cell_edges(grid);
    let v = f.values();
    let width: Vec<T> = (0..n).map(|j| e[j + 1] - e[j]).collect();
    // suffix sums Σ_{j >= m} x_j^p f_j Δ_j for each exponent in the kernel
    let mut exps: Vec<T> = Vec::new();
    for t in k.terms() {
        for p in [t.alpha, t.beta] {
            if !exps.contains(&p) {
                exps.push(p);
            }
        }
    }
    let suffix: Vec<Vec<T>> = exps
        .iter()
        .map(|&p| {
            let mut s = vec![T::zero(); n + 1];
            for j in (0..n).rev() {
                s[j] = s[j + 1] + pow(x[j], p) * v[j] * width[j];
            }
            s
        })
        .collect();
    let idx = |p: T| exps.iter().position(|&q| q == p).expect("exponent listed");
    let mut flux = vec![T::zero(); n];
    for i in 0..n {
        let edge = e[i + 1];
        let mut total = T::zero();
        // m: cell containing edge - x_l, nonincreasing in l
        let mut m = n;
        for l in 0..=i {
            if v[l] == T::zero() {
                continue;
            }
            let b = edge - x[l];
            if m == n {
                m = e.partition_point(|&c| c <= b).saturating_sub(1).min(n - 1);
            } else {
                while m > 0 && e[m] > b {
                    m -= 1;
                }
            }
            let (start, partial) = if b <= e[0] {
                (0, T::zero())
            } else {
                let part = k.eval_unchecked(x[l], x[m]) * v[m] * (e[m + 1] - b);
                (m + 1, part)
            };
            let mut inner = partial;
            for t in k.terms() {
                let sa = suffix[idx(t.beta)][start];
                let sb = suffix[idx(t.alpha)][start];
                inner = inner + t.weight * (pow(x[l], t.alpha) * sa + pow(x[l], t.beta) * sb);
            }
            total = total + width[l] * x[l] * v[l] * inner;
        }
        flux[i] = total;
    }
    flux
}

/// One explicit Euler step of the flux-form scheme.
pub fn step<T: Real>(
    state: &EvolutionState<T>,
    dt: T,
    k: &KernelSpec<T>,
) -> Result<EvolutionState<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Domain(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let bound = stability_bound(&state.f, k);
    if dt >= bound {
        return Err(Error::StabilityViolation {
            dt: to_f64(dt),
            bound: to_f64(bound),
        });
    }
    let grid = state.f.grid().clone();
    let x = grid.nodes();
    let e = cell_edges(&grid);
    let flux = mass_fluxes(&state.f, k);
    let n = x.len();
    let mut clip = T::zero();
    let values = (0..n)
        .map(|i| {
            let w = e[i + 1] - e[i];
            let left = if i == 0 { T::zero() } else { flux[i - 1] };
            let mass = x[i] * state.f.values()[i] * w - dt * (flux[i] - left);
            if mass < T::zero() {
                clip = clip - mass;
                T::zero()
            } else {
                mass / (x[i] * w)
            }
        })
        .collect();
    let f = GridFunction::new(grid, values)?;
    Ok(EvolutionState {
        f,
        t: state.t + dt,
        t0: state.t0,
        mass0: state.mass0,
        outflux: state.outflux + dt * flux[n - 1],
        clip_defect: state.clip_defect + clip,
    })
}

/// Advances to `t_end` with steps `cfl · stability_bound`, calling `observe`
/// after every step.
pub fn evolve<T: Real>(
    state: &EvolutionState<T>,
    k: &KernelSpec<T>,
    t_end: T,
    cfl: T,
    mut observe: impl FnMut(&EvolutionState<T>),
) -> Result<EvolutionState<T>> {
    if !(cfl > T::zero() && cfl < T::one()) {
        return Err(Error::Domain(format!("cfl must lie in (0, 1), got {cfl}")));
    }
    let mut s = state.clone();
    while s.t < t_end {
        let dt = (cfl * stability_bound(&s.f, k)).min(t_end - s.t);
        let dt = if dt.is_finite() { dt } else { t_end - s.t };
        s = step(&s, dt, k)?;
        observe(&s);
    }
    Ok(s)
}

/// `ĝ(y) = f(t, y/p) / q` with `q = (t0+t)^{-2/(1-λ)}`, `p = (t0+t)^{-1/(1-λ)}`,
/// on the state's grid.
pub fn rescale_to_profile_frame<T: Real>(
    state: &EvolutionState<T>,
    lambda: T,
) -> Result<GridFunction<T>> {
    let grid = state.f.grid().clone();
    rescale_onto(state, lambda, &grid)
}

/// [`rescale_to_profile_frame`] sampled on another grid; `f` vanishes past
/// `y_max` and follows its local power law below `y0`.
pub fn rescale_onto<T: Real>(
    state: &EvolutionState<T>,
    lambda: T,
    target: &Arc<Grid<T>>,
) -> Result<GridFunction<T>> {
    if !(lambda > -T::one() && lambda < T::one()) {
        return Err(Error::InvalidRange(format!(
            "lambda = {lambda} outside (-1, 1)"
        )));
    }
    let tt = state.t0 + state.t;
    if !(tt > T::zero()) {
        return Err(Error::Domain("t0 + t must be positive".into()));
    }
    let c = T::one() / (T::one() - lambda);
    let q = pow(tt, -lit::<T>(2.0) * c);
    let p = pow(tt, -c);
    let grid = state.f.grid();
    let s = Sampled::shape(grid, state.f.values());
    let ymax = grid.y_max();
    let values = target
        .nodes()
        .iter()
        .map(|&y| {
            let z = y / p;
            if z > ymax {
                T::zero()
            } else {
                s.at(z) / q
            }
        })
        .collect();
    GridFunction::new(target.clone(), values)
}

/// Options for [`relax_to_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxOptions<T> {
    /// Bound on `‖∂_s g‖_{L¹_1} / ‖g‖_{L¹_1}`.
    pub tol: T,
    pub max_steps: usize,
    /// Pseudo-time step.
    pub dt: T,
    pub residual_tol: T,
    /// Target mass; that of `g0` when absent.
    pub mass: Option<T>,
}

impl<T: Real> Default for RelaxOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-6),
            max_steps: 20_000,
            dt: lit(1.0),
            residual_tol: lit(5e-3),
            mass: None,
        }
    }
}

/// One pseudo-time step of `∂_s g = 2g + y ∂_y g + (1-λ) C(g, g)`.
///
/// Advection (central differences in `ln y`, forward at `y0`) and loss, with
/// the loss rate frozen, are implicit; gain and `2g` are explicit. The
/// tridiagonal system has positive diagonal and skew off-diagonal part, so
/// elimination without pivoting is well defined. Past `y_max` an
/// exponential ghost value is used.
fn relax_step<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>, dt: T) -> Result<Vec<T>> {
    let parts = gain_loss(k, g, g, false)?;
    let y = g.nodes();
    let v = g.values();
    let n = y.len();
    let ghost = if v[n - 2] > T::zero() && v[n - 1] > T::zero() && v[n - 1] < v[n - 2] {
        v[n - 1] * v[n - 1] / v[n - 2]
    } else {
        T::zero()
    };
    let lam = T::one() - k.lambda();
    let two = lit::<T>(2.0);
    let inv = T::one() / dt;
    let mut lower = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    let mut rhs = vec![T::zero(); n];
    for i in 0..n {
        diag[i] = inv + lam * parts.rate_g[i];
        rhs[i] = v[i] * (inv + two) + lam * parts.gain[i];
        if i == 0 {
            let c = T::one() / (y[1] / y[0]).ln();
            diag[i] = diag[i] + c;
            upper[i] = -c;
        } else {
            let right = if i + 1 < n {
                y[i + 1]
            } else {
                y[i] * y[i] / y[i - 1]
            };
            let c = T::one() / (right / y[i - 1]).ln();
            lower[i] = c;
            if i + 1 < n {
                upper[i] = -c;
            } else {
                rhs[i] = rhs[i] + c * ghost;
            }
        }
    }
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] = diag[i] - m * upper[i - 1];
        rhs[i] = rhs[i] - m * rhs[i - 1];
    }
    let mut out = vec![T::zero(); n];
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
    }
    Ok(out.into_iter().map(|x| x.max(T::zero())).collect())
}

/// Relaxes `∂_s g = 2g + y ∂_y g + (1-λ) C(g, g)` with mass renormalization
/// along the scaling family after every step, until the relative rate of
/// change drops below `opts.tol`.
pub fn relax_to_profile<T: Real>(
    k: &KernelSpec<T>,
    g0: &GridFunction<T>,
    opts: &RelaxOptions<T>,
) -> Result<ProfileSolution<T>> {
    if !g0.grid().is_geometric() {
        return Err(Error::GridKind {
            expected: "geometric",
        });
    }
    if g0.values().iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(Error::InvalidInitialization(
            "initial profile must be finite and nonnegative".into(),
        ));
    }
    if !(opts.dt > T::zero()) {
        return Err(Error::Domain(format!(
            "pseudo-time step must be positive, got {}",
            opts.dt
        )));
    }
    let lambda = k.lambda();
    if g0.is_zero() {
        let mut sol = ProfileSolution::from_profile(k.clone(), g0.clone())?;
        sol.converged = true;
        sol.warnings
            .push("degenerate: zero initial profile is stationary".into());
        return Ok(sol);
    }
    let mass = match opts.mass {
        Some(m) => m,
        None => g0.moment_with_tail(T::one())?.total(),
    };
    let grid = g0.grid().clone();
    let mut g = to_mass(g0, lambda, mass)?;
    let mut rate = T::infinity();
    let mut steps = 0;
    while steps < opts.max_steps {
        let next = relax_step(k, &g, opts.dt)?;
        let next = to_mass(&GridFunction::new(grid.clone(), next)?, lambda, mass)?;
        rate = next.l1_1_distance(&g)? / (opts.dt * next.l1_1_norm());
        g = next;
        steps += 1;
        if !rate.is_finite() {
            return Err(Error::Overflow(format!(
                "relaxation diverged at step {steps}"
            )));
        }
        if rate < opts.tol {
            break;
        }
    }
    let mut sol = ProfileSolution::from_profile(k.clone(), g)?;
    sol.iterations = steps;
    sol.last_change = rate;
    let settled = rate < opts.tol;
    sol.converged = settled && sol.residual <= opts.residual_tol;
    if !settled {
        sol.warnings.push(format!(
            "relaxation stopped after {steps} steps with rate {:e}",
            to_f64(rate)
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

/// Convenience: `f(0) = ` the given profile scaled into the time-dependent
/// frame at `t = 0`, i.e. `q(0) g(p(0) y)`.
pub fn self_similar_initial<T: Real>(
    g: &GridFunction<T>,
    lambda: T,
    t0: T,
) -> Result<EvolutionState<T>> {
    let c = T::one() / (T::one() - lambda);
    let p = pow(t0, -c);
    // q g(p y) = p^2 g(p y) = p^{1-λ} · p^{1+λ} g(p y)
    let f = rescale(g, lambda, p)?.scaled(pow(p, T::one() - lambda));
    EvolutionState::new(f, t0)
}
