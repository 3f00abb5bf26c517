//! Discrete domains over `(0, y_max]`, sampled functions and quadrature.
//!
//! Geometric grids carry profile work: their nodes are uniform in `ln y`, so
//! power-law behaviour at the origin is resolved with a constant number of
//! nodes per decade. Uniform grids carry the fractional-calculus operators.
//! The origin is never a node; a sampled function is read as zero to the left
//! of its first node unless an operator states otherwise.
//!
//! Quadrature is trapezoidal in the grid's natural coordinate: `y` for
//! uniform grids, `ln y` for geometric ones (so `∫ F dy = ∫ y F d(ln y)`).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::{from_usize, lit, pow, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind<T> {
    Geometric { y_min: T, y_max: T, ratio: T },
    Uniform { y_max: T, step: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    kind: GridKind<T>,
}

impl<T: Real> Grid<T> {
    /// Geometric grid `y_i = y_min r^i` with `r = (y_max/y_min)^{1/(n-1)}`.
    ///
    /// The last node is pinned to `y_max` exactly.
    pub fn geometric(y_min: T, y_max: T, n: usize) -> Result<Self> {
        if !(y_min > T::zero()) || !(y_max > y_min) || !y_max.is_finite() {
            return Err(Error::InvalidRange(format!(
                "need 0 < y_min < y_max, got y_min = {y_min}, y_max = {y_max}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidRange(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let log_step = (y_max / y_min).ln() / from_usize::<T>(n - 1);
        let mut nodes: Vec<T> = (0..n)
            .map(|i| y_min * (log_step * from_usize(i)).exp())
            .collect();
        nodes[n - 1] = y_max;
        let half = lit::<T>(0.5);
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let w = y * log_step;
                if i == 0 || i == n - 1 {
                    w * half
                } else {
                    w
                }
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::Geometric {
                y_min,
                y_max,
                ratio: log_step.exp(),
            },
        })
    }

    /// Uniform grid `y_i = (i + 1) h`, `h = y_max / n`; the origin is excluded.
    pub fn uniform(y_max: T, n: usize) -> Result<Self> {
        if !(y_max > T::zero()) || !y_max.is_finite() {
            return Err(Error::InvalidRange(format!("need y_max > 0, got {y_max}")));
        }
        if n < 2 {
            return Err(Error::InvalidRange(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let step = y_max / from_usize(n);
        let mut nodes: Vec<T> = (1..=n).map(|i| step * from_usize(i)).collect();
        nodes[n - 1] = y_max;
        let half = lit::<T>(0.5);
        let weights = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    step * half
                } else {
                    step
                }
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::Uniform { y_max, step },
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind<T> {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn y0(&self) -> T {
        self.nodes[0]
    }

    pub fn y_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self.kind, GridKind::Geometric { .. })
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, GridKind::Uniform { .. })
    }

    /// Interpolation coordinate: `ln y` on geometric grids, `y` on uniform ones.
    #[inline]
    pub fn coord(&self, y: T) -> T {
        match self.kind {
            GridKind::Geometric { .. } => y.ln(),
            GridKind::Uniform { .. } => y,
        }
    }

    /// Largest cell width `y_{i+1} - y_i`.
    pub fn max_cell_width(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    /// Locates `y` in `[y0, y_max]`: returns `(i, θ)` with `y` between nodes
    /// `i` and `i + 1` at fraction `θ` of the cell in the grid coordinate.
    /// Returns `None` outside the covered range.
    pub fn locate(&self, y: T) -> Option<(usize, T)> {
        let n = self.nodes.len();
        let y0 = self.nodes[0];
        let ymax = self.nodes[n - 1];
        if y < y0 || y > ymax || y.is_nan() {
            return None;
        }
        let guess = match self.kind {
            GridKind::Geometric { ratio, .. } => (y / y0).ln() / ratio.ln(),
            GridKind::Uniform { step, .. } => y / step - T::one(),
        };
        let mut i = guess.floor().to_usize().unwrap_or(0).min(n - 2);
        // the closed-form guess can be off by one through rounding
        while i > 0 && self.nodes[i] > y {
            i -= 1;
        }
        while i + 2 < n && self.nodes[i + 1] < y {
            i += 1;
        }
        let a = self.coord(self.nodes[i]);
        let b = self.coord(self.nodes[i + 1]);
        let theta = ((self.coord(y) - a) / (b - a)).max(T::zero()).min(T::one());
        Some((i, theta))
    }

    /// Trapezoidal integral of a single segment `[a, b]` in the grid coordinate.
    #[inline]
    pub fn segment(&self, a: T, fa: T, b: T, fb: T) -> T {
        let half = lit::<T>(0.5);
        match self.kind {
            GridKind::Geometric { .. } => (b / a).ln() * (a * fa + b * fb) * half,
            GridKind::Uniform { .. } => (b - a) * (fa + fb) * half,
        }
    }

    /// Integral of sampled values over `[y0, y_max]` with the grid weights.
    /// Summation runs left to right.
    pub fn integrate(&self, values: &[T]) -> T {
        self.weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }

    /// `[10 y0, y_max / 10]`, the interval where boundary effects are negligible.
    pub fn trusted_range(&self) -> (T, T) {
        let ten = lit::<T>(10.0);
        (self.y0() * ten, self.y_max() / ten)
    }

    /// Indices of nodes in the trusted range.
    pub fn trusted_indices(&self) -> std::ops::Range<usize> {
        let (lo, hi) = self.trusted_range();
        let start = self
            .nodes
            .iter()
            .position(|&y| y >= lo)
            .unwrap_or(self.len());
        let end = self
            .nodes
            .iter()
            .rposition(|&y| y <= hi)
            .map_or(start, |i| i + 1);
        start..end.max(start)
    }
}

/// Integral over `(0, y0)` of a function sampled as `f0` at `y0` and `f1` at
/// `y1`, assuming a local power law `f ≈ f0 (y/y0)^p`.
///
/// Returns `Err(p)` when the extrapolated power is not integrable (`p <= -1`).
pub fn power_law_head<T: Real>(y0: T, f0: T, y1: T, f1: T) -> std::result::Result<T, T> {
    if f0 == T::zero() {
        return Ok(T::zero());
    }
    let p = local_exponent(y0, f0, y1, f1);
    if p <= -T::one() {
        return Err(p);
    }
    Ok(y0 * f0 / (p + T::one()))
}

/// `d ln|f| / d ln y` between two samples; zero when the samples do not share a sign.
pub fn local_exponent<T: Real>(y0: T, f0: T, y1: T, f1: T) -> T {
    if f0 == T::zero() || f1 == T::zero() || (f0 > T::zero()) != (f1 > T::zero()) {
        return T::zero();
    }
    (f1 / f0).ln() / (y1 / y0).ln()
}

/// Integral over `(y_max, ∞)` assuming exponential decay fitted to the last
/// two samples; zero when the samples do not decay.
pub fn exponential_tail<T: Real>(ya: T, fa: T, yb: T, fb: T) -> T {
    if fa == T::zero() || fb == T::zero() || (fa > T::zero()) != (fb > T::zero()) {
        return T::zero();
    }
    let ratio = fb / fa;
    if !(ratio < T::one()) {
        return T::zero();
    }
    let rate = -ratio.ln() / (yb - ya);
    fb / rate
}

/// Quadrature value of a moment and the estimated truncated contribution
/// from `(0, y0)` and `(y_max, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment<T> {
    pub value: T,
    pub tail: T,
}

impl<T: Real> Moment<T> {
    pub fn total(&self) -> T {
        self.value + self.tail
    }
}

/// A real function sampled on the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidRange(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T) -> Self {
        let values = grid.nodes().iter().map(|&y| f(y)).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn nodes(&self) -> &[T] {
        self.grid.nodes()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Pointwise map `(y, v) -> w` onto the same grid.
    pub fn map(&self, f: impl Fn(T, T) -> T) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&y, &v)| f(y, v))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|_, v| s * v)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    /// Evaluates the piecewise-linear interpolant (in the grid coordinate).
    /// Zero left of `y0`; extrapolation past `y_max` is an error.
    pub fn eval(&self, y: T) -> Result<T> {
        let ymax = self.grid.y_max();
        if y > ymax * (T::one() + lit(1e-12)) {
            return Err(Error::Extrapolation {
                y: to_f64(y),
                y_max: to_f64(ymax),
            });
        }
        if y < self.grid.y0() {
            return Ok(T::zero());
        }
        let y = y.min(ymax);
        let (i, t) = self.grid.locate(y).expect("y within grid range");
        let nodes = self.grid.nodes();
        if y == nodes[i] || t == T::zero() {
            return Ok(self.values[i]);
        }
        if y == nodes[i + 1] {
            return Ok(self.values[i + 1]);
        }
        Ok(self.values[i] + t * (self.values[i + 1] - self.values[i]))
    }

    /// Resamples onto `target` by piecewise-linear interpolation.
    pub fn resample(&self, target: &Arc<Grid<T>>) -> Result<Self> {
        let values = target
            .nodes()
            .iter()
            .map(|&y| self.eval(y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: target.clone(),
            values,
        })
    }

    /// Truncated moment `∫_{y0}^{y_max} y^μ g(y) dy` (grid quadrature).
    pub fn moment(&self, mu: T) -> Result<T> {
        let integrand = self.moment_integrand(mu)?;
        Ok(self.grid.integrate(&integrand))
    }

    /// Truncated moment together with the power-law head and exponential
    /// tail estimates of the missing parts.
    pub fn moment_with_tail(&self, mu: T) -> Result<Moment<T>> {
        let integrand = self.moment_integrand(mu)?;
        let value = self.grid.integrate(&integrand);
        Ok(Moment {
            value,
            tail: self.head_and_tail(&integrand),
        })
    }

    /// Estimated integral of `F` over `(0, y0) ∪ (y_max, ∞)` for samples `F`.
    /// A non-integrable head contributes nothing.
    pub fn head_and_tail(&self, integrand: &[T]) -> T {
        let y = self.grid.nodes();
        let n = y.len();
        let head = power_law_head(y[0], integrand[0], y[1], integrand[1]).unwrap_or(T::zero());
        let tail = exponential_tail(y[n - 2], integrand[n - 2], y[n - 1], integrand[n - 1]);
        head + tail
    }

    fn moment_integrand(&self, mu: T) -> Result<Vec<T>> {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (&y, &v))| {
                let w = if v == T::zero() {
                    T::zero()
                } else {
                    pow(y, mu) * v
                };
                if w.is_finite() {
                    Ok(w)
                } else {
                    Err(Error::NonFiniteValue { node: i })
                }
            })
            .collect()
    }

    /// Tail primitive `G(y_i) = ∫_{y_i}^∞ g`, accumulated from the right and
    /// including the exponential tail estimate beyond `y_max`.
    pub fn tail_primitive(&self) -> Self {
        let y = self.grid.nodes();
        let v = &self.values;
        let n = y.len();
        let mut out = vec![T::zero(); n];
        out[n - 1] = exponential_tail(y[n - 2], v[n - 2], y[n - 1], v[n - 1]);
        for i in (0..n - 1).rev() {
            out[i] = out[i + 1] + self.grid.segment(y[i], v[i], y[i + 1], v[i + 1]);
        }
        Self {
            grid: self.grid.clone(),
            values: out,
        }
    }

    /// Weighted `L¹_1` norm `∫ y |g| dy` on the grid.
    pub fn l1_1_norm(&self) -> T {
        let w: Vec<T> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&y, &v)| y * v.abs())
            .collect();
        self.grid.integrate(&w)
    }

    /// `∫ y |self - other| dy`.
    pub fn l1_1_distance(&self, other: &Self) -> Result<T> {
        Ok(self.lin_comb(T::one(), other, -T::one())?.l1_1_norm())
    }

    /// Max-norm over the trusted range.
    pub fn trusted_sup(&self) -> T {
        self.values[self.grid.trusted_indices()]
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}
