//! Homogeneous product kernels `a(x,y) = Σ w (x^α y^β + x^β y^α)`.

use crate::error::{Error, Result};
use crate::real::{lit, pow, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm<T> {
    pub alpha: T,
    pub beta: T,
    pub weight: T,
}

impl<T: Real> KernelTerm<T> {
    /// Checks `-1 < α <= β < 1`, `α + β ∈ (-1, 1)` and a positive weight.
    pub fn validate(alpha: T, beta: T, weight: T) -> Result<Self> {
        let one = T::one();
        if !(alpha.is_finite() && beta.is_finite() && weight.is_finite()) {
            return Err(Error::ConstraintViolation(
                "non-finite kernel parameter".into(),
            ));
        }
        if !(alpha > -one) {
            return Err(Error::ConstraintViolation(format!(
                "-1 < alpha violated (alpha = {alpha})"
            )));
        }
        if alpha > beta {
            return Err(Error::ConstraintViolation(format!(
                "alpha <= beta violated (alpha = {alpha}, beta = {beta})"
            )));
        }
        if !(beta < one) {
            return Err(Error::ConstraintViolation(format!(
                "beta < 1 violated (beta = {beta})"
            )));
        }
        let lambda = alpha + beta;
        if !(lambda > -one && lambda < one) {
            return Err(Error::ConstraintViolation(format!(
                "lambda = alpha + beta in (-1, 1) violated (lambda = {lambda})"
            )));
        }
        if !(weight > T::zero()) {
            return Err(Error::ConstraintViolation(format!(
                "weight > 0 violated (weight = {weight})"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            weight,
        })
    }

    pub fn lambda(&self) -> T {
        self.alpha + self.beta
    }

    #[inline]
    fn eval(&self, x: T, y: T) -> T {
        self.weight
            * (pow(x, self.alpha) * pow(y, self.beta) + pow(x, self.beta) * pow(y, self.alpha))
    }
}

/// Behaviour class at the origin, from the smallest exponent over all terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelClass {
    AlphaNeg,
    AlphaZero,
    AlphaPos,
}

impl KernelClass {
    pub fn name(self) -> &'static str {
        match self {
            KernelClass::AlphaNeg => "alpha_neg",
            KernelClass::AlphaZero => "alpha_zero",
            KernelClass::AlphaPos => "alpha_pos",
        }
    }
}

impl std::fmt::Display for KernelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    terms: Vec<KernelTerm<T>>,
    lambda: T,
}

impl<T: Real> KernelSpec<T> {
    pub fn new(terms: Vec<KernelTerm<T>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::ConstraintViolation("kernel needs at least one term".into()))?;
        let lambda = first.lambda();
        let tol = lit::<T>(1e-12);
        for t in &terms {
            if (t.lambda() - lambda).abs() > tol {
                return Err(Error::ConstraintViolation(format!(
                    "all terms must share the homogeneity degree (found {} and {})",
                    lambda,
                    t.lambda()
                )));
            }
        }
        Ok(Self { terms, lambda })
    }

    /// Single validated term.
    pub fn single(alpha: T, beta: T, weight: T) -> Result<Self> {
        Self::new(vec![KernelTerm::validate(alpha, beta, weight)?])
    }

    /// `a ≡ 2`, i.e. `α = β = 0` with unit weight.
    pub fn constant() -> Self {
        Self::single(T::zero(), T::zero(), T::one()).expect("constant kernel is valid")
    }

    pub fn terms(&self) -> &[KernelTerm<T>] {
        &self.terms
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Smallest `α` over the terms.
    pub fn alpha_eff(&self) -> T {
        self.terms
            .iter()
            .map(|t| t.alpha)
            .fold(T::infinity(), T::min)
    }

    /// Largest `β` over the terms.
    pub fn beta_eff(&self) -> T {
        self.terms
            .iter()
            .map(|t| t.beta)
            .fold(T::neg_infinity(), T::max)
    }

    pub fn class(&self) -> KernelClass {
        let a = self.alpha_eff();
        if a < T::zero() {
            KernelClass::AlphaNeg
        } else if a == T::zero() {
            KernelClass::AlphaZero
        } else {
            KernelClass::AlphaPos
        }
    }

    /// Sum of the term weights.
    pub fn total_weight(&self) -> T {
        self.terms.iter().fold(T::zero(), |s, t| s + t.weight)
    }

    /// `a(x, y)` for `x, y > 0`.
    pub fn evaluate(&self, x: T, y: T) -> Result<T> {
        if !(x > T::zero() && y > T::zero()) {
            return Err(Error::Domain(format!(
                "kernel needs x, y > 0 (x = {x}, y = {y})"
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// `a(x, y)` without the domain check; callers guarantee positivity.
    #[inline]
    pub fn eval_unchecked(&self, x: T, y: T) -> T {
        self.terms.iter().fold(T::zero(), |s, t| s + t.eval(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_kernel_is_two() {
        let k = KernelSpec::<f64>::constant();
        for (x, y) in [(1e-3, 5.0), (2.0, 3.0), (100.0, 0.1)] {
            assert_eq!(k.evaluate(x, y).unwrap(), 2.0);
        }
        assert_eq!(k.class(), KernelClass::AlphaZero);
    }

    #[test]
    fn half_exponents_at_two_three() {
        let k = KernelSpec::single(-0.5, 0.5, 1.0).unwrap();
        let v = k.evaluate(2.0, 3.0).unwrap();
        let expect = (1.5f64).sqrt() + (2.0f64 / 3.0).sqrt();
        assert!((v - expect).abs() < 1e-14);
        assert!((v - 2.041241).abs() < 1e-6);
        assert_eq!(k.lambda(), 0.0);
        assert_eq!(k.class(), KernelClass::AlphaNeg);
    }

    #[test]
    fn origin_is_domain_error() {
        let k = KernelSpec::<f64>::constant();
        assert!(matches!(k.evaluate(0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn validation_names_the_inequality() {
        match KernelTerm::validate(0.6, 0.6, 1.0) {
            Err(Error::ConstraintViolation(m)) => assert!(m.contains("lambda"), "{m}"),
            other => panic!("{other:?}"),
        }
        match KernelTerm::validate(0.3, 0.1, 1.0) {
            Err(Error::ConstraintViolation(m)) => assert!(m.contains("alpha <= beta"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(KernelTerm::validate(-1.0, 0.5, 1.0).is_err());
        assert!(KernelTerm::validate(0.0, 1.0, 1.0).is_err());
        assert!(KernelTerm::validate(0.0, 0.5, 0.0).is_err());
        assert!(KernelTerm::validate(-0.5, 0.5, 1.0).is_ok());
    }

    #[test]
    fn mixed_homogeneity_rejected() {
        let a = KernelTerm::validate(0.0, 0.2, 1.0).unwrap();
        let b = KernelTerm::validate(0.0, 0.3, 1.0).unwrap();
        assert!(KernelSpec::new(vec![a, b]).is_err());
        let c = KernelTerm::validate(-0.1, 0.3, 2.0).unwrap();
        let k = KernelSpec::new(vec![a, c]).unwrap();
        assert_eq!(k.class(), KernelClass::AlphaNeg);
        assert_eq!(k.alpha_eff(), -0.1);
        assert_eq!(k.beta_eff(), 0.3);
    }

    fn kernel_strategy() -> impl Strategy<Value = KernelSpec<f64>> {
        (-0.9f64..0.9, 0.0f64..1.0, 0.1f64..3.0).prop_filter_map("valid term", |(a, frac, w)| {
            let b = a + frac * (0.99 - a);
            KernelSpec::single(a, b, w).ok()
        })
    }

    proptest! {
        #[test]
        fn symmetric(k in kernel_strategy(), x in 1e-3f64..1e3, y in 1e-3f64..1e3) {
            prop_assert_eq!(k.evaluate(x, y).unwrap(), k.evaluate(y, x).unwrap());
        }

        #[test]
        fn homogeneous(k in kernel_strategy(), x in 1e-3f64..1e3, y in 1e-3f64..1e3, h in 1e-3f64..1e3) {
            let lhs = k.evaluate(h * x, h * y).unwrap();
            let rhs = h.powf(k.lambda()) * k.evaluate(x, y).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }
    }
}
