//! The coagulation operator `C(f, g)` in pointwise, weak and convolution form,
//! and the tail primitive of `C(g, g)` for kernels with `α = 0`.

use crate::error::{Error, Result};
use crate::grid::{exponential_tail, local_exponent, GridFunction};
use crate::kernel::{KernelClass, KernelSpec};
use crate::real::{lit, pow, to_f64, Real};
use crate::sampled::{convolve_at, finite_part_convolve_at, Plan, Row, Sampled};

fn check_pair<T: Real>(f: &GridFunction<T>, g: &GridFunction<T>) -> Result<()> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    for (i, (a, b)) in f.values().iter().zip(g.values()).enumerate() {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFiniteValue { node: i });
        }
    }
    if f.grid().len() < 2 {
        return Err(Error::InvalidRange(
            "operator needs at least 2 nodes".into(),
        ));
    }
    Ok(())
}

/// Integral over `(0, c)` of an integrand with value `fc` at `c`, by a local
/// power law whose exponent comes from the samples `(ec, eh)` at `c` and `c/2`.
/// Kernels with `α >= 0` drop the contribution; for `α < 0` a non-integrable
/// power is reported.
fn sub_grid_part<T: Real>(class: KernelClass, c: T, fc: T, ec: T, eh: T) -> Result<T> {
    if class != KernelClass::AlphaNeg || fc == T::zero() {
        return Ok(T::zero());
    }
    let p = local_exponent(c * lit(0.5), eh, c, ec);
    if p <= -T::one() {
        return Err(Error::SingularIntegrand {
            exponent: to_f64(p),
        });
    }
    Ok(c * fc / (p + T::one()))
}

/// `C(f, g)` at every node from the gain and loss integrals.
///
/// Gain: `½ ∫_0^y a(z, y-z) [f(z) g(y-z) + g(z) f(y-z)] / 2 · 2 dz`, folded
/// onto `(0, y/2]`. Loss: `½ [f(y) ∫ a(z,y) g(z) dz + g(y) ∫ a(z,y) f(z) dz]`.
pub fn apply_pointwise<T: Real>(
    k: &KernelSpec<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    let parts = gain_loss(k, f, g, true)?;
    let half = lit::<T>(0.5);
    let out = (0..f.values().len())
        .map(|i| {
            parts.gain[i]
                - half * (f.values()[i] * parts.rate_g[i] + g.values()[i] * parts.rate_f[i])
        })
        .collect();
    GridFunction::new(f.grid().clone(), out)
}

/// Gain term and the loss rates `∫ a(z, y) f(z) dz`, `∫ a(z, y) g(z) dz`.
pub(crate) struct GainLoss<T> {
    pub gain: Vec<T>,
    pub rate_f: Vec<T>,
    pub rate_g: Vec<T>,
}

/// With `strict` unset, sub-grid estimates that come out non-integrable are
/// dropped instead of reported; transient iterates can look singular at `y0`
/// without being so.
pub(crate) fn gain_loss<T: Real>(
    k: &KernelSpec<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    strict: bool,
) -> Result<GainLoss<T>> {
    check_pair(f, g)?;
    let grid = f.grid().clone();
    let y = grid.nodes();
    let n = y.len();
    let class = k.class();
    let half = lit::<T>(0.5);
    let fs = Sampled::new(&grid, f.values());
    let gs = Sampled::new(&grid, g.values());
    let plan = Plan::new(&grid);
    let mut row = Row::new();
    let mut gain_out = vec![T::zero(); n];
    for (i, &x) in y.iter().enumerate() {
        plan.row(i, &mut row);
        let pair = |z: T, fz: T, gz: T, fr: T, gr: T| {
            let s = fz * gr + gz * fr;
            if s == T::zero() {
                T::zero()
            } else {
                k.eval_unchecked(z, x - z) * s
            }
        };
        let mut gain = T::zero();
        for (j, w, loc) in &row.pts {
            let z = y[*j];
            gain = gain + *w * pair(z, fs.node(*j), gs.node(*j), fs.at_loc(loc), gs.at_loc(loc));
        }
        if let Some(lc) = &row.loc_c {
            let (fc, gc) = (fs.at_loc(lc), gs.at_loc(lc));
            gain = gain + row.wc * pair(row.c, fc, gc, fc, gc);
        }
        // the exponent follows the singular factor at `z -> 0`, with the far
        // factor frozen at `x`
        let ch = row.c.min(grid.y0());
        let direct = pair(ch, fs.at(ch), gs.at(ch), fs.at(x - ch), gs.at(x - ch));
        let (fx, gx) = (fs.node(i), gs.node(i));
        let frozen = |z: T| pair(z, fs.at(z), gs.at(z), fx, gx);
        gain = gain
            + relaxed(
                sub_grid_part(class, ch, direct, frozen(ch), frozen(ch * half)),
                strict,
            )?;
        gain_out[i] = gain * half;
    }
    Ok(GainLoss {
        gain: gain_out,
        rate_f: loss_rates(k, &grid, f.values(), strict)?,
        rate_g: loss_rates(k, &grid, g.values(), strict)?,
    })
}

fn relaxed<T: Real>(r: Result<T>, strict: bool) -> Result<T> {
    match r {
        Err(Error::SingularIntegrand { .. }) if !strict => Ok(T::zero()),
        other => other,
    }
}

/// `∫_0^∞ a(z, x) v(z) dz = Σ w [x^β M_α[v] + x^α M_β[v]]` at every node,
/// with moments carrying the sub-grid (`α < 0` only) and tail estimates.
fn loss_rates<T: Real>(
    k: &KernelSpec<T>,
    grid: &crate::grid::Grid<T>,
    v: &[T],
    strict: bool,
) -> Result<Vec<T>> {
    let y = grid.nodes();
    let n = y.len();
    let with_head = k.class() == KernelClass::AlphaNeg;
    let moment = |e: T| -> Result<T> {
        let vals: Vec<T> = y
            .iter()
            .zip(v)
            .map(|(&z, &vz)| if vz == T::zero() { vz } else { pow(z, e) * vz })
            .collect();
        let mut acc = grid.integrate(&vals);
        if with_head && vals[0] != T::zero() {
            let p = local_exponent(y[0], vals[0], y[1], vals[1]);
            if p > -T::one() {
                acc = acc + y[0] * vals[0] / (p + T::one());
            } else if strict {
                return Err(Error::SingularIntegrand {
                    exponent: to_f64(p),
                });
            }
        }
        Ok(acc + exponential_tail(y[n - 2], vals[n - 2], y[n - 1], vals[n - 1]))
    };
    let terms = k
        .terms()
        .iter()
        .map(|t| Ok((t.alpha, t.beta, t.weight, moment(t.alpha)?, moment(t.beta)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(y.iter()
        .map(|&x| {
            terms.iter().fold(T::zero(), |s, &(a, b, w, ma, mb)| {
                s + w * (pow(x, b) * ma + pow(x, a) * mb)
            })
        })
        .collect())
}

/// How the weak pairing treats the point `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakForm {
    /// Bracket `φ(x+z) − φ(x) − φ(z)`: the pairing of the operator on `(0, ∞)`.
    HalfLine,
    /// Bracket `φ(x+z) − φ(x) − φ(z) + φ(0)`: the operator extended to a
    /// distribution on the whole line, which carries extra mass at `0`.
    Extended,
}

/// Value of a weak pairing together with the test function it used.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakPairing<T> {
    pub value: T,
    pub test_function: String,
}

/// `⟨C(f, g), φ⟩ = ½ ∬ a(x, z) f(x) g(z) [bracket] dx dz` as a double sum
/// over the grid weights. `φ` must be defined on `[0, 2 y_max]`.
pub fn apply_weak<T: Real>(
    k: &KernelSpec<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    phi: impl Fn(T) -> T,
    form: WeakForm,
) -> Result<T> {
    check_pair(f, g)?;
    let grid = f.grid();
    let y = grid.nodes();
    let w = grid.weights();
    let phi_y: Vec<T> = y.iter().map(|&v| phi(v)).collect();
    let phi0 = match form {
        WeakForm::HalfLine => T::zero(),
        WeakForm::Extended => phi(T::zero()),
    };
    let mut total = T::zero();
    for i in 0..y.len() {
        let fi = f.values()[i];
        if fi == T::zero() {
            continue;
        }
        let mut row = T::zero();
        for j in 0..y.len() {
            let gj = g.values()[j];
            if gj == T::zero() {
                continue;
            }
            let bracket = phi(y[i] + y[j]) - phi_y[i] - phi_y[j] + phi0;
            row = row + w[j] * k.eval_unchecked(y[i], y[j]) * gj * bracket;
        }
        total = total + w[i] * fi * row;
    }
    let total = total * lit(0.5);
    if !total.is_finite() {
        return Err(Error::Overflow("weak pairing is not finite".into()));
    }
    Ok(total)
}

/// [`apply_weak`] packaged with a description of the test function.
pub fn weak_pairing<T: Real>(
    k: &KernelSpec<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    phi: impl Fn(T) -> T,
    form: WeakForm,
    description: &str,
) -> Result<WeakPairing<T>> {
    Ok(WeakPairing {
        value: apply_weak(k, f, g, phi, form)?,
        test_function: description.into(),
    })
}

/// `C(f, g) = Σ w · ½ ({y^α f} * {y^β g} + {y^β f} * {y^α g})`, each finite-part
/// convolution evaluated through its regularized form (see the crate docs).
pub fn apply_convolution<T: Real>(
    k: &KernelSpec<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    check_pair(f, g)?;
    let grid = f.grid().clone();
    let y = grid.nodes();
    let n = y.len();
    let mut out = vec![T::zero(); n];
    let plan = Plan::new(&grid);
    let mut row = Row::new();
    let weighted = |v: &[T], e: T| -> Vec<T> {
        y.iter()
            .zip(v)
            .map(|(&x, &s)| if s == T::zero() { s } else { pow(x, e) * s })
            .collect()
    };
    for term in k.terms() {
        let fa = weighted(f.values(), term.alpha);
        let fb = weighted(f.values(), term.beta);
        let ga = weighted(g.values(), term.alpha);
        let gb = weighted(g.values(), term.beta);
        let (sfa, sfb) = (Sampled::new(&grid, &fa), Sampled::new(&grid, &fb));
        let (sga, sgb) = (Sampled::new(&grid, &ga), Sampled::new(&grid, &gb));
        let scale = term.weight * lit(0.5);
        for (i, o) in out.iter_mut().enumerate() {
            plan.row(i, &mut row);
            let a = finite_part_convolve_at(&sfa, &sgb, i, &row);
            let b = finite_part_convolve_at(&sfb, &sga, i, &row);
            match (a, b) {
                (Some(a), Some(b)) => *o = *o + scale * (a + b),
                _ => {
                    let p = sfa.head_exponent().min(sga.head_exponent());
                    return Err(Error::SingularIntegrand {
                        exponent: to_f64(p),
                    });
                }
            }
        }
    }
    GridFunction::new(grid, out)
}

/// Tail primitive `∫_y^∞ C(g, g)` for kernels whose terms all have `α = 0`:
/// `W [G * (y^λ g) − M_λ[g] G]`, with `G(y) = ∫_y^∞ g` and `W` the total weight.
pub fn primitive_of_c<T: Real>(k: &KernelSpec<T>, g: &GridFunction<T>) -> Result<GridFunction<T>> {
    if k.terms().iter().any(|t| t.alpha != T::zero()) {
        return Err(Error::ClassMismatch {
            expected: KernelClass::AlphaZero.name().into(),
            found: k.class().name().into(),
        });
    }
    check_pair(g, g)?;
    let grid = g.grid().clone();
    let lambda = k.lambda();
    let big_g = g.tail_primitive();
    let s: Vec<T> = grid
        .nodes()
        .iter()
        .zip(g.values())
        .map(|(&y, &v)| {
            if v == T::zero() {
                v
            } else {
                pow(y, lambda) * v
            }
        })
        .collect();
    let m_lambda = g.moment_with_tail(lambda)?.total();
    let sg = Sampled::new(&grid, big_g.values());
    let ss = Sampled::new(&grid, &s);
    let w = k.total_weight();
    let plan = Plan::new(&grid);
    let mut row = Row::new();
    let values = (0..grid.len())
        .map(|i| {
            plan.row(i, &mut row);
            w * (convolve_at(&sg, &ss, &row) - m_lambda * big_g.values()[i])
        })
        .collect();
    GridFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn exp_on(n: usize) -> GridFunction<f64> {
        let grid = Arc::new(Grid::geometric(1e-4, 50.0, n).unwrap());
        GridFunction::from_fn(grid, |y: f64| (-y).exp())
    }

    fn value_at(g: &GridFunction<f64>, y: f64) -> f64 {
        let i = g.nodes().iter().position(|&v| v >= y).unwrap();
        let (a, b) = (g.nodes()[i - 1], g.nodes()[i]);
        let t = (y.ln() - a.ln()) / (b.ln() - a.ln());
        g.values()[i - 1] + t * (g.values()[i] - g.values()[i - 1])
    }

    #[test]
    fn pointwise_constant_kernel_closed_form() {
        let k = KernelSpec::constant();
        let g = exp_on(512);
        let c = apply_pointwise(&k, &g, &g).unwrap();
        for i in g.grid().trusted_indices() {
            let y = g.nodes()[i];
            let exact = (y - 2.0) * (-y).exp();
            assert!((c.values()[i] - exact).abs() < 2e-4, "y={y}");
        }
        assert!((value_at(&c, 1.0) + (-1f64).exp()).abs() < 2e-4);
        assert!(value_at(&c, 2.0).abs() < 2e-4);
    }

    #[test]
    fn zero_argument_gives_zero() {
        let k = KernelSpec::single(-0.5, 0.5, 1.0).unwrap();
        let g = exp_on(128);
        let z = GridFunction::zeros(g.grid().clone());
        assert!(apply_pointwise(&k, &z, &g).unwrap().is_zero());
        assert!(apply_convolution(&k, &z, &g).unwrap().is_zero());
    }

    #[test]
    fn weak_pairings_constant_kernel() {
        let k = KernelSpec::constant();
        let grid = Arc::new(Grid::geometric(1e-6, 60.0, 1024).unwrap());
        let g = GridFunction::from_fn(grid, |y: f64| (-y).exp());
        let one = apply_weak(&k, &g, &g, |_| 1.0, WeakForm::HalfLine).unwrap();
        assert!((one + 1.0).abs() < 1e-3, "{one}");
        let ext = apply_weak(&k, &g, &g, |_| 1.0, WeakForm::Extended).unwrap();
        assert_eq!(ext, 0.0);
        let lin = apply_weak(&k, &g, &g, |y| y, WeakForm::HalfLine).unwrap();
        assert!(lin.abs() < 1e-14, "{lin}");
    }

    #[test]
    fn convolution_matches_pointwise_constant_kernel() {
        let k = KernelSpec::constant();
        let g = exp_on(512);
        let a = apply_pointwise(&k, &g, &g).unwrap();
        let b = apply_convolution(&k, &g, &g).unwrap();
        let d = a.lin_comb(1.0, &b, -1.0).unwrap().trusted_sup();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn primitive_constant_kernel() {
        let k = KernelSpec::constant();
        let g = exp_on(2048);
        let p = primitive_of_c(&k, &g).unwrap();
        let err = p
            .nodes()
            .iter()
            .zip(p.values())
            .map(|(&y, &v)| (v - (y - 1.0) * (-y).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn primitive_rejects_negative_alpha() {
        let k = KernelSpec::single(-0.5, 0.5, 1.0).unwrap();
        let g = exp_on(64);
        assert!(matches!(
            primitive_of_c(&k, &g),
            Err(Error::ClassMismatch { .. })
        ));
    }
}
