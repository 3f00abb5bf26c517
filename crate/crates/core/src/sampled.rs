//! Evaluation of grid samples between and below the nodes, shared by the
//! convolution-type operators.
//!
//! Between nodes the values are interpolated in the grid coordinate, cubic
//! where the four-point stencil exists and linear at the ends, so operators
//! built on it stay bilinear. The shape mode interpolates `ln|v|` instead
//! (cubic where four neighbours share a sign, linear where only two do;
//! across a sign change the values themselves), which is exact on powers and
//! exponentials and resolves profiles that vanish like `e^{-Λ}` at the origin.
//! Below `y0` the first two samples define a local power law.

use crate::grid::{exponential_tail, local_exponent, Grid};
use crate::real::{from_usize, lit, pow, Real};

pub(crate) struct Sampled<'a, T: Real> {
    grid: &'a Grid<T>,
    v: &'a [T],
    ln_abs: Vec<T>,
    suffix: Vec<T>,
    head_p: T,
    positive: bool,
    shape: bool,
}

/// A point between nodes `cell` and `cell + 1` at fraction `th` of the cell
/// in the grid coordinate, with its cubic Lagrange weights on the stencil
/// `cell - 1 ..= cell + 2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Loc<T> {
    pub cell: usize,
    pub th: T,
    pub w: [T; 4],
}

impl<T: Real> Loc<T> {
    pub fn new(cell: usize, th: T) -> Self {
        let one = T::one();
        let two = one + one;
        let six = lit::<T>(6.0);
        let (tp, tm, t2) = (th + one, th - one, th - two);
        let w = [
            -th * tm * t2 / six,
            tp * tm * t2 / two,
            -tp * th * t2 / two,
            tp * th * tm / six,
        ];
        Self { cell, th, w }
    }

    pub fn node(cell: usize) -> Self {
        Self {
            cell,
            th: T::zero(),
            w: [T::zero(); 4],
        }
    }
}

impl<'a, T: Real> Sampled<'a, T> {
    /// Value interpolation; linear in the samples.
    pub fn new(grid: &'a Grid<T>, v: &'a [T]) -> Self {
        Self::build(grid, v, false)
    }

    /// Interpolation of `ln|v|`.
    pub fn shape(grid: &'a Grid<T>, v: &'a [T]) -> Self {
        Self::build(grid, v, true)
    }

    fn build(grid: &'a Grid<T>, v: &'a [T], shape: bool) -> Self {
        let y = grid.nodes();
        let n = y.len();
        let ln_abs = if shape {
            v.iter().map(|x| x.abs().ln()).collect()
        } else {
            Vec::new()
        };
        let mut suffix = vec![T::zero(); n];
        suffix[n - 1] = exponential_tail(y[n - 2], v[n - 2], y[n - 1], v[n - 1]);
        for i in (0..n - 1).rev() {
            suffix[i] = suffix[i + 1] + grid.segment(y[i], v[i], y[i + 1], v[i + 1]);
        }
        let head_p = local_exponent(y[0], v[0], y[1], v[1]);
        let positive = v.iter().all(|&x| x > T::zero());
        Self {
            grid,
            v,
            ln_abs,
            suffix,
            head_p,
            positive,
            shape,
        }
    }

    #[inline]
    pub fn node(&self, i: usize) -> T {
        self.v[i]
    }

    /// Exponent of the power law used below `y0`.
    pub fn head_exponent(&self) -> T {
        self.head_p
    }

    /// Value at an arbitrary point of `(0, y_max]`.
    #[inline]
    pub fn at(&self, t: T) -> T {
        let y0 = self.grid.y0();
        if t < y0 {
            let v0 = self.v[0];
            if v0 == T::zero() {
                return T::zero();
            }
            return v0 * pow(t / y0, self.head_p);
        }
        let t = t.min(self.grid.y_max());
        let (i, th) = self.grid.locate(t).expect("point inside grid");
        self.at_loc(&Loc::new(i, th))
    }

    /// Value at a located point.
    #[inline]
    pub fn at_loc(&self, loc: &Loc<T>) -> T {
        let i = loc.cell;
        let a = self.v[i];
        if loc.th == T::zero() {
            return a;
        }
        let b = self.v[i + 1];
        let n = self.v.len();
        if !self.shape {
            let (v, w) = (self.v, &loc.w);
            return if i >= 1 && i + 2 < n {
                w[0] * v[i - 1] + w[1] * a + w[2] * b + w[3] * v[i + 2]
            } else {
                a + loc.th * (b - a)
            };
        }
        if !same_sign(a, b) {
            return a + loc.th * (b - a);
        }
        let ln = &self.ln_abs;
        let cubic = i >= 1
            && i + 2 < n
            && (self.positive || (same_sign(self.v[i - 1], a) && same_sign(b, self.v[i + 2])));
        let m = if cubic {
            let w = &loc.w;
            (w[0] * ln[i - 1] + w[1] * ln[i] + w[2] * ln[i + 1] + w[3] * ln[i + 2]).exp()
        } else {
            (ln[i] + loc.th * (ln[i + 1] - ln[i])).exp()
        };
        if a > T::zero() {
            m
        } else {
            -m
        }
    }

    /// `∫_a^b` of the power law continuation below `y0` (`0 <= a <= b <= y0`).
    pub fn head_integral(&self, a: T, b: T) -> Option<T> {
        let v0 = self.v[0];
        if v0 == T::zero() {
            return Some(T::zero());
        }
        let y0 = self.grid.y0();
        let p1 = self.head_p + T::one();
        if p1.abs() < lit(1e-12) {
            if a == T::zero() {
                return None;
            }
            return Some(v0 * y0 * (b / a).ln());
        }
        if a == T::zero() && p1 <= T::zero() {
            return None;
        }
        Some(v0 * y0 * (pow(b / y0, p1) - pow(a / y0, p1)) / p1)
    }

    /// `∫_a^∞` including the power-law head when `a < y0` and the
    /// exponential tail past `y_max`.
    pub fn integral_from(&self, a: T) -> T {
        let y = self.grid.nodes();
        let y0 = y[0];
        if a < y0 {
            return self.head_integral(a, y0).unwrap_or(T::zero()) + self.suffix[0];
        }
        if a >= self.grid.y_max() {
            return self.suffix[y.len() - 1];
        }
        let (i, th) = self.grid.locate(a).expect("point inside grid");
        if th == T::zero() {
            return self.suffix[i];
        }
        let va = self.at(a);
        self.grid.segment(a, va, y[i + 1], self.v[i + 1]) + self.suffix[i + 1]
    }

    /// `∫_0^c u(z) φ(z) dz` for `c <= y0`, with `u` the power-law head of
    /// these samples and `φ` linear between `φ(0) = phi0` and `φ(c) = phi_c`.
    /// `None` when the weight is not integrable against the linear profile.
    pub fn head_product(&self, c: T, phi0: T, phi_c: T) -> Option<T> {
        let v0 = self.v[0];
        if v0 == T::zero() || c <= T::zero() {
            return Some(T::zero());
        }
        let p = self.head_p;
        let one = T::one();
        let two = one + one;
        let scale = v0 * pow(c / self.grid.y0(), p) * c;
        let slope_part = phi_c - phi0;
        let mut out = T::zero();
        if phi0 != T::zero() {
            if p <= -one {
                return None;
            }
            out = out + phi0 / (p + one);
        }
        if slope_part != T::zero() {
            if p <= -two {
                return None;
            }
            out = out + slope_part / (p + two);
        }
        Some(scale * out)
    }
}

/// Reusable quadrature layout for integrals `∫_0^{x/2}` at the nodes `x = y_i`.
///
/// On geometric grids the mirrored points `y_i - y_j` sit at an index offset
/// that depends only on `i - j`, so their interpolation stencils are computed
/// once. On uniform grids they are nodes.
pub(crate) struct Plan<'a, T: Real> {
    grid: &'a Grid<T>,
    shifts: Vec<(isize, Loc<T>)>,
}

/// Quadrature row for one node `x`: grid points `z_j`, `j <= last`, with
/// weights, the mirrored locations of `x - z_j`, and the endpoint `c = x/2`.
pub(crate) struct Row<T> {
    pub x: T,
    pub pts: Vec<(usize, T, Loc<T>)>,
    pub c: T,
    pub wc: T,
    pub loc_c: Option<Loc<T>>,
}

impl<T: Real> Row<T> {
    pub fn new() -> Self {
        Self {
            x: T::zero(),
            pts: Vec::new(),
            c: T::zero(),
            wc: T::zero(),
            loc_c: None,
        }
    }
}

impl<'a, T: Real> Plan<'a, T> {
    pub fn new(grid: &'a Grid<T>) -> Self {
        let n = grid.len();
        let mut shifts = Vec::with_capacity(n);
        shifts.push((0, Loc::node(0)));
        if let crate::grid::GridKind::Geometric { ratio, .. } = grid.kind() {
            let ds = ratio.ln();
            let snap = lit::<T>(1e-9);
            for m in 1..n {
                let off = (T::one() - (-ds * from_usize::<T>(m)).exp()).ln() / ds;
                let fl = off.floor();
                let mut th = off - fl;
                let mut fl = fl.to_isize().expect("finite offset");
                if th < snap {
                    th = T::zero();
                } else if th > T::one() - snap {
                    th = T::zero();
                    fl += 1;
                }
                shifts.push((
                    fl,
                    if th == T::zero() {
                        Loc::node(0)
                    } else {
                        Loc::new(0, th)
                    },
                ));
            }
        }
        Self { grid, shifts }
    }

    /// Fills `row` for node `i`.
    pub fn row(&self, i: usize, row: &mut Row<T>) {
        let grid = self.grid;
        let y = grid.nodes();
        let x = y[i];
        let c = x * lit(0.5);
        row.x = x;
        row.c = c;
        row.pts.clear();
        row.wc = T::zero();
        row.loc_c = None;
        if c <= y[0] {
            return;
        }
        let tol = T::one() - lit::<T>(1e-12);
        // last node strictly below c
        let last = match y[..=i].iter().rposition(|&z| z < c * tol) {
            Some(j) => j,
            None => return,
        };
        let geometric = grid.is_geometric();
        let half = lit::<T>(0.5);
        let jac = |z: T| if geometric { z } else { T::one() };
        let len = |a: T, b: T| if geometric { (b / a).ln() } else { b - a };
        for j in 0..=last {
            let left = if j == 0 {
                T::zero()
            } else {
                len(y[j - 1], y[j])
            };
            let right = if j == last {
                len(y[j], c)
            } else {
                len(y[j], y[j + 1])
            };
            let w = jac(y[j]) * (left + right) * half;
            let m = i - j;
            let loc = if geometric {
                let (fl, l) = self.shifts[m];
                let cell = (i as isize + fl).max(0) as usize;
                Loc { cell, ..l }
            } else {
                Loc::node(m - 1)
            };
            row.pts.push((j, w, loc));
        }
        row.wc = jac(c) * len(y[last], c) * half;
        let (cell, th) = grid.locate(c).expect("midpoint inside grid");
        row.loc_c = Some(if th == T::zero() {
            Loc::node(cell)
        } else {
            Loc::new(cell, th)
        });
    }
}

#[inline]
fn same_sign<T: Real>(a: T, b: T) -> bool {
    (a > T::zero() && b > T::zero()) || (a < T::zero() && b < T::zero())
}

/// `(u * v)(x) = ∫_0^x u(z) v(x - z) dz` at a planned node, split at `x/2` so
/// the quadrature nodes always sit where each factor may be singular.
///
/// Heads below `y0` use product integration against the power-law
/// continuation; a non-integrable head is dropped.
pub(crate) fn convolve_at<T: Real>(u: &Sampled<'_, T>, v: &Sampled<'_, T>, row: &Row<T>) -> T {
    let x = row.x;
    let mut acc = T::zero();
    for (j, w, loc) in &row.pts {
        acc = acc + *w * (u.node(*j) * v.at_loc(loc) + v.node(*j) * u.at_loc(loc));
    }
    if let Some(lc) = &row.loc_c {
        acc = acc + row.wc * (u.at_loc(lc) * v.at_loc(lc)) * lit(2.0);
    }
    let ch = row.c.min(u.grid.y0());
    let hu = u
        .head_product(ch, v.at(x), v.at(x - ch))
        .unwrap_or(T::zero());
    let hv = v
        .head_product(ch, u.at(x), u.at(x - ch))
        .unwrap_or(T::zero());
    acc + hu + hv
}

/// Finite-part convolution `{u} * {v} = u * v - M0[v] u - M0[u] v` at node
/// `x = y_i`, assembled as
///
/// `∫_0^{x/2} u(z)[v(x-z) - v(x)] + v(z)[u(x-z) - u(x)] dz
///  - v(x) ∫_{x/2}^∞ u - u(x) ∫_{x/2}^∞ v`
///
/// which stays finite when `u` or `v` is not integrable at the origin.
pub(crate) fn finite_part_convolve_at<T: Real>(
    u: &Sampled<'_, T>,
    v: &Sampled<'_, T>,
    i: usize,
    row: &Row<T>,
) -> Option<T> {
    let x = row.x;
    let (ux, vx) = (u.node(i), v.node(i));
    let mut acc = T::zero();
    for (j, w, loc) in &row.pts {
        acc = acc + *w * (u.node(*j) * (v.at_loc(loc) - vx) + v.node(*j) * (u.at_loc(loc) - ux));
    }
    if let Some(lc) = &row.loc_c {
        let (uc, vc) = (u.at_loc(lc), v.at_loc(lc));
        acc = acc + row.wc * (uc * (vc - vx) + vc * (uc - ux));
    }
    let ch = row.c.min(u.grid.y0());
    let hu = u.head_product(ch, T::zero(), v.at(x - ch) - vx)?;
    let hv = v.head_product(ch, T::zero(), u.at(x - ch) - ux)?;
    let tails = vx * u.integral_from(row.c) + ux * v.integral_from(row.c);
    Some(acc + hu + hv - tails)
}
