//! Checks of computed profiles against structural properties: the `τ`
//! identity, monotonicity of `y^{τ-1} G` and `g e^Λ`, behaviour of `g e^Λ`
//! at the origin, agreement of profiles from different seeds, and bounded
//! discrete derivatives under refinement.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{KernelClass, KernelSpec};
use crate::profiles::{solve, LambdaFunction, ProfileSolution, SolverOptions};
use crate::real::{lit, pow, to_f64, Real};

/// One verified property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check<T> {
    pub name: String,
    /// The property, stated.
    pub property: String,
    pub measured: T,
    pub expected: T,
    pub tolerance: T,
    pub passed: bool,
    /// Informational checks do not gate [`VerificationReport::passed`].
    pub warning: bool,
    pub detail: String,
}

impl<T: Real> Check<T> {
    fn new(
        name: &str,
        property: &str,
        measured: T,
        expected: T,
        tolerance: T,
        passed: bool,
    ) -> Self {
        Self {
            name: name.into(),
            property: property.into(),
            measured,
            expected,
            tolerance,
            passed,
            warning: false,
            detail: String::new(),
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    fn informational(mut self) -> Self {
        self.warning = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport<T> {
    pub profile_id: String,
    pub checks: Vec<Check<T>>,
}

impl<T: Real> VerificationReport<T> {
    pub fn new(profile_id: impl Into<String>) -> Self {
        Self {
            profile_id: profile_id.into(),
            checks: Vec::new(),
        }
    }

    /// All non-informational checks pass.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| !c.warning).all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check<T>> {
        self.checks.iter().filter(|c| !c.warning && !c.passed)
    }
}

fn require<T: Real>(sol: &ProfileSolution<T>, class: KernelClass) -> Result<()> {
    if sol.kernel.class() != class {
        return Err(Error::ClassMismatch {
            expected: class.name().into(),
            found: sol.kernel.class().name().into(),
        });
    }
    Ok(())
}

/// Least-squares slope of `ln G` against `ln y` over `[2 y0, 20 y0]`,
/// `τ_fit = 1 - slope`.
pub fn fit_tau<T: Real>(g: &GridFunction<T>) -> Result<(T, usize)> {
    let big_g = g.tail_primitive();
    let y0 = g.nodes()[0];
    let (lo, hi) = (lit::<T>(2.0) * y0, lit::<T>(20.0) * y0);
    let eps = lit::<T>(1e-9);
    let pts: Vec<(T, T)> = g
        .nodes()
        .iter()
        .zip(big_g.values())
        .filter(|(&y, &v)| {
            y >= lo * (T::one() - eps) && y <= hi * (T::one() + eps) && v > T::zero()
        })
        .map(|(&y, &v)| (y.ln(), v.ln()))
        .collect();
    if pts.len() < 16 {
        return Err(Error::InsufficientResolution(format!(
            "fit window [2 y0, 20 y0] holds {} nodes, 16 required",
            pts.len()
        )));
    }
    let m = crate::real::from_usize::<T>(pts.len());
    let (sx, sy) = pts
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    Ok((T::one() - sxy / sxx, pts.len()))
}

/// `2 - (1-λ) W M_λ[g]`.
pub fn tau_formula<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<T> {
    let m = g.moment_with_tail(k.lambda())?.total();
    Ok(lit::<T>(2.0) - (T::one() - k.lambda()) * k.total_weight() * m)
}

/// Fitted singularity exponent against `2 - (1-λ) W M_λ`; agreement within
/// `5e-2`.
pub fn check_tau_identity<T: Real>(sol: &ProfileSolution<T>) -> Result<Check<T>> {
    require(sol, KernelClass::AlphaZero)?;
    let (fit, nodes) = fit_tau(&sol.g)?;
    let formula = tau_formula(&sol.kernel, &sol.g)?;
    let tol = lit::<T>(5e-2);
    Ok(Check::new(
        "tau_identity",
        "G(y) ~ c y^(1-tau) at 0 with tau = 2 - (1-lambda) M_lambda",
        fit,
        formula,
        tol,
        (fit - formula).abs() <= tol,
    )
    .detail(format!("fit over {nodes} nodes in [2 y0, 20 y0]")))
}

/// `1 < τ < min{3/2, 1+λ}` with slack `5e-2` on each side (`λ > 0`).
pub fn check_tau_bounds<T: Real>(sol: &ProfileSolution<T>) -> Result<Check<T>> {
    require(sol, KernelClass::AlphaZero)?;
    let lambda = sol.lambda();
    let tau = match sol.tau {
        Some(t) => t,
        None => tau_formula(&sol.kernel, &sol.g)?,
    };
    let slack = lit::<T>(5e-2);
    let upper = (T::one() + lambda).min(lit(1.5));
    let passed = tau > T::one() - slack && tau < upper + slack;
    Ok(Check::new(
        "tau_bounds",
        "1 < tau < min(3/2, 1 + lambda)",
        tau,
        upper,
        slack,
        passed,
    )
    .detail(format!("admissible interval (1, {upper})")))
}

fn first_increase<T: Real>(v: &[T], slack: T) -> Option<(usize, T)> {
    let mut worst: Option<(usize, T)> = None;
    for i in 1..v.len() {
        let prev = v[i - 1];
        if v[i] > prev * (T::one() + slack) && v[i] > T::zero() {
            let rel = if prev > T::zero() {
                v[i] / prev - T::one()
            } else {
                T::infinity()
            };
            if worst.map_or(true, |(_, w)| rel > w) {
                worst = Some((i, rel));
            }
        }
    }
    worst
}

/// `y^{τ-1} G(y)` nonincreasing across nodes within relative slack `1e-6`.
pub fn check_monotone_ii<T: Real>(sol: &ProfileSolution<T>) -> Result<Check<T>> {
    require(sol, KernelClass::AlphaZero)?;
    let tau = match sol.tau {
        Some(t) => t,
        None => tau_formula(&sol.kernel, &sol.g)?,
    };
    Ok(monotone_ii(&sol.g, tau))
}

/// [`check_monotone_ii`] for a bare function and exponent.
pub fn monotone_ii<T: Real>(g: &GridFunction<T>, tau: T) -> Check<T> {
    let big_g = g.tail_primitive();
    let k: Vec<T> = g
        .nodes()
        .iter()
        .zip(big_g.values())
        .map(|(&y, &v)| pow(y, tau - T::one()) * v)
        .collect();
    monotone("monotone_G", "y^(tau-1) G(y) nonincreasing", &k)
}

fn monotone<T: Real>(name: &str, property: &str, k: &[T]) -> Check<T> {
    let slack = lit::<T>(1e-6);
    match first_increase(k, slack) {
        None => Check::new(name, property, T::zero(), T::zero(), slack, true),
        Some((i, rel)) => Check::new(name, property, rel, T::zero(), slack, false)
            .detail(format!("largest relative increase at node {i}")),
    }
}

/// `K(y) = g(y) e^{Λ(y)}` at the nodes, assembled in log space.
pub fn k_function<T: Real>(g: &GridFunction<T>, lf: &LambdaFunction<T>) -> Vec<T> {
    g.nodes()
        .iter()
        .zip(g.values())
        .map(|(&y, &v)| {
            if v > T::zero() {
                (v.ln() + lf.eval(y)).exp()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Behaviour of `K = g e^Λ` at the origin: nonincreasing on the whole grid,
/// positive at the first resolved node, relative oscillation at most `5e-2`
/// over the lowest resolved half-decade. The first resolved value is the
/// `K0` estimate.
pub fn check_asymptotics_iii<T: Real>(sol: &ProfileSolution<T>) -> Result<Vec<Check<T>>> {
    require(sol, KernelClass::AlphaNeg)?;
    let lf = match &sol.lambda_fn {
        Some(l) => l.clone(),
        None => LambdaFunction::new(&sol.kernel, &sol.g)?,
    };
    Ok(asymptotics_iii(&sol.g, &lf))
}

/// [`check_asymptotics_iii`] for a bare function and `Λ`.
pub fn asymptotics_iii<T: Real>(g: &GridFunction<T>, lf: &LambdaFunction<T>) -> Vec<Check<T>> {
    let k = k_function(g, lf);
    let y = g.nodes();
    let mut out = vec![monotone("monotone_K", "g(y) e^Lambda(y) nonincreasing", &k)];
    let first = k.iter().position(|&v| v > T::zero());
    let Some(i0) = first else {
        out.push(
            Check::new(
                "K0_positive",
                "lim g e^Lambda > 0 at the origin",
                T::zero(),
                T::zero(),
                T::zero(),
                false,
            )
            .detail("g vanishes on the whole grid"),
        );
        return out;
    };
    let k0 = k[i0];
    out.push(
        Check::new(
            "K0_positive",
            "lim g e^Lambda > 0 at the origin",
            k0,
            T::zero(),
            T::zero(),
            k0 > T::zero(),
        )
        .detail(format!("K0 estimate at y = {}", y[i0])),
    );
    let top = y[i0] * lit::<T>(10.0).sqrt();
    let window: Vec<T> = (i0..y.len())
        .take_while(|&i| y[i] <= top * lit(1.0 + 1e-12))
        .map(|i| k[i])
        .collect();
    let (lo, hi) = window
        .iter()
        .fold((T::infinity(), T::zero()), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let osc = if hi > T::zero() {
        (hi - lo) / hi
    } else {
        T::zero()
    };
    let tol = lit::<T>(5e-2);
    let mut c = Check::new(
        "K_oscillation",
        "g e^Lambda settles at the origin",
        osc,
        T::zero(),
        tol,
        osc <= tol,
    );
    let span = y[i0 + window.len() - 1] / y[i0];
    c = if i0 > 0 || span < top / y[i0] * lit(0.999) {
        c.detail(format!(
            "underflow window: starts at node {i0}, spans a factor {span}"
        ))
    } else {
        c.detail(format!(
            "{} nodes over the lowest half-decade",
            window.len()
        ))
    };
    out.push(c);
    out
}

/// Profile-equation residual against the solver bound.
pub fn check_residual<T: Real>(sol: &ProfileSolution<T>, bound: T) -> Check<T> {
    Check::new(
        "residual",
        "2g + y g' + (1-lambda) C(g,g) = 0 on the trusted interval",
        sol.residual,
        T::zero(),
        bound,
        sol.residual <= bound,
    )
    .detail(format!("absolute sup {}", sol.residual_abs))
}

/// Class-appropriate checks of a single profile.
pub fn verify<T: Real>(
    sol: &ProfileSolution<T>,
    residual_bound: T,
    id: &str,
) -> Result<VerificationReport<T>> {
    let mut r = VerificationReport::new(id);
    r.checks.push(check_residual(sol, residual_bound));
    match sol.kernel.class() {
        KernelClass::AlphaZero => {
            match check_tau_identity(sol) {
                Ok(c) => r.checks.push(c),
                Err(Error::InsufficientResolution(m)) => r.checks.push(
                    Check::new(
                        "tau_identity",
                        "fit window resolved",
                        T::zero(),
                        T::zero(),
                        T::zero(),
                        false,
                    )
                    .detail(m)
                    .informational(),
                ),
                Err(e) => return Err(e),
            }
            let bounds = check_tau_bounds(sol)?;
            r.checks.push(if sol.lambda() > T::zero() {
                bounds
            } else {
                bounds.informational()
            });
            r.checks.push(check_monotone_ii(sol)?);
        }
        KernelClass::AlphaNeg => r.checks.extend(check_asymptotics_iii(sol)?),
        KernelClass::AlphaPos => {}
    }
    Ok(r)
}

/// Two solves from different seeds at equal mass: their `L¹_1` distance
/// against `3 · opts.accuracy`, and agreement of the moments entering the
/// comparison conditions. `K0` of both runs is recorded.
pub fn uniqueness_experiment<T: Real>(
    k: &KernelSpec<T>,
    mass: T,
    seeds: [&GridFunction<T>; 2],
    opts: &SolverOptions<T>,
) -> Result<(VerificationReport<T>, [ProfileSolution<T>; 2])> {
    let run = |s: &GridFunction<T>| {
        let o = SolverOptions {
            initial: Some(s.clone()),
            ..opts.clone()
        };
        solve(k, mass, &o)
    };
    let a = run(seeds[0])?;
    let b = run(seeds[1])?;
    let mut r = VerificationReport::new("uniqueness");
    let dist = a.g.l1_1_distance(&b.g)?;
    let tol = lit::<T>(3.0) * opts.accuracy;
    r.checks.push(
        Check::new(
            "seed_distance",
            "equal-mass profiles coincide",
            dist,
            T::zero(),
            tol,
            dist <= tol,
        )
        .detail(format!("iterations {} and {}", a.iterations, b.iterations)),
    );
    r.checks.push(Check::new(
        "both_converged",
        "both solves converged",
        T::zero(),
        T::zero(),
        T::zero(),
        a.converged && b.converged,
    ));
    let rel = |x: T, y: T| (x - y).abs() / x.abs().max(y.abs()).max(T::min_positive_value());
    let mtol = lit::<T>(1e-4);
    let pairs: Vec<(&str, T, T)> = match k.class() {
        KernelClass::AlphaZero => vec![(
            "M_lambda",
            a.moments.lambda.total(),
            b.moments.lambda.total(),
        )],
        _ => vec![
            ("M_alpha", a.moments.alpha.total(), b.moments.alpha.total()),
            ("M_beta", a.moments.beta.total(), b.moments.beta.total()),
        ],
    };
    for (name, x, y) in pairs {
        let d = rel(x, y);
        r.checks.push(
            Check::new(
                &format!("{name}_agreement"),
                "moments of equal-mass profiles agree",
                d,
                T::zero(),
                mtol,
                d <= mtol,
            )
            .detail(format!("{} vs {}", x, y)),
        );
    }
    if let (Some(x), Some(y)) = (a.k0, b.k0) {
        let d = rel(x, y);
        r.checks.push(
            Check::new(
                "K0_agreement",
                "limits at the origin agree",
                d,
                T::zero(),
                mtol,
                d <= mtol,
            )
            .detail(format!("{} vs {}", x, y))
            .informational(),
        );
    }
    Ok((r, [a, b]))
}

/// Largest `|d^2 g / ds^2|` and `|d^3 g / ds^3|` (`s = ln y`) on the trusted
/// interval, by central differences.
pub fn log_derivative_bounds<T: Real>(g: &GridFunction<T>) -> (T, T) {
    let y = g.nodes();
    let v = g.values();
    let n = y.len();
    let range = g.grid().trusted_indices();
    let two = lit::<T>(2.0);
    let mut d2 = T::zero();
    let mut d3 = T::zero();
    for i in range {
        if i < 2 || i + 2 >= n {
            continue;
        }
        let h = (y[i + 1] / y[i]).ln();
        let h2 = h * h;
        d2 = d2.max(((v[i + 1] - two * v[i] + v[i - 1]) / h2).abs());
        let t = (v[i + 2] - two * v[i + 1] + two * v[i - 1] - v[i - 2]) / (two * h2 * h);
        d3 = d3.max(t.abs());
    }
    (d2, d3)
}

/// Discrete second and third derivatives under refinement: the ratios
/// fine/coarse must stay at most 4.
pub fn smoothness_sanity<T: Real>(
    coarse: &GridFunction<T>,
    fine: &GridFunction<T>,
) -> Vec<Check<T>> {
    let (c2, c3) = log_derivative_bounds(coarse);
    let (f2, f3) = log_derivative_bounds(fine);
    let bound = lit::<T>(4.0);
    let ratio = |f: T, c: T| {
        if c > T::zero() {
            f / c
        } else if f > T::zero() {
            T::infinity()
        } else {
            T::one()
        }
    };
    let (r2, r3) = (ratio(f2, c2), ratio(f3, c3));
    vec![
        Check::new(
            "second_difference_ratio",
            "bounded second derivative under refinement",
            r2,
            T::one(),
            bound,
            r2 <= bound,
        )
        .detail(format!("{} -> {}", to_f64(c2), to_f64(f2))),
        Check::new(
            "third_difference_ratio",
            "bounded third derivative under refinement",
            r3,
            T::one(),
            bound,
            r3 <= bound,
        )
        .detail(format!("{} -> {}", to_f64(c3), to_f64(f3))),
    ]
}

/// [`smoothness_sanity`] for a solution, re-solving on a grid with twice the
/// nodes over the same interval.
pub fn smoothness_of_solution<T: Real>(
    sol: &ProfileSolution<T>,
    opts: &SolverOptions<T>,
) -> Result<Vec<Check<T>>> {
    let grid = sol.g.grid();
    let mut o = opts.clone();
    o.grid.y_min = grid.y0();
    o.grid.y_max = grid.y_max();
    o.grid.n = 2 * grid.len();
    o.initial = None;
    let fine = solve(&sol.kernel, sol.moments.mass.total(), &o)?;
    Ok(smoothness_sanity(&sol.g, &fine.g))
}
