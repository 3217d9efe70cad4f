use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::{AlgebraError, MultiIndex, QSqrt2};

/// Coefficient ring for [`Polynomial`]. Implemented for `f64` (solver side)
/// and [`QSqrt2`] (exact side).
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_i64(n: i64) -> Self;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
}

impl Scalar for QSqrt2 {
    fn from_i64(n: i64) -> Self {
        QSqrt2::from_int(n)
    }
}

/// Sparse multivariate polynomial `Σ c_α x^α` over `T`. Zero coefficients
/// are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<T: Scalar> {
    num_vars: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: T) -> Self {
        Self::monomial(MultiIndex::zero(num_vars), c)
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, T::one())
    }

    /// The coordinate polynomial `x_{var+1}`.
    pub fn var(num_vars: usize, var: usize) -> Self {
        Self::monomial(MultiIndex::unit(num_vars, var), T::one())
    }

    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let mut p = Polynomial::zero(alpha.num_vars());
        if !c.is_zero() {
            p.terms.insert(alpha, c);
        }
        p
    }

    /// Collects `(α, c)` pairs, summing repeated exponents.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = (MultiIndex, T)>,
    {
        let mut p = Polynomial::zero(num_vars);
        for (alpha, c) in terms {
            if alpha.num_vars() != num_vars {
                return Err(AlgebraError::DimensionMismatch {
                    expected: num_vars,
                    found: alpha.num_vars(),
                });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&alpha);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial, whose degree is
    /// undefined.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    fn check_dims(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.num_vars != other.num_vars {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.num_vars,
                found: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            out.add_term(alpha.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            out.add_term(alpha.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dims(other)?;
        let mut out = Polynomial::zero(self.num_vars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a + b, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Polynomial::zero(self.num_vars);
        for (alpha, coef) in &self.terms {
            out.add_term(alpha.clone(), c.clone() * coef.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Polynomial::one(self.num_vars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, point: &[T]) -> Result<T, AlgebraError> {
        if point.len() != self.num_vars {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.num_vars,
                found: point.len(),
            });
        }
        let mut total = T::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(alpha.exponents()) {
                for _ in 0..e {
                    term = term * x.clone();
                }
            }
            total = total + term;
        }
        Ok(total)
    }

    /// `∂p/∂x_{var+1}`.
    pub fn derivative(&self, var: usize) -> Result<Self, AlgebraError> {
        if var >= self.num_vars {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.num_vars,
                found: var + 1,
            });
        }
        let mut out = Polynomial::zero(self.num_vars);
        for (alpha, c) in &self.terms {
            let e = alpha.exponents()[var];
            if e == 0 {
                continue;
            }
            let mut lowered = alpha.exponents().to_vec();
            lowered[var] -= 1;
            out.add_term(MultiIndex::new(lowered), T::from_i64(e as i64) * c.clone());
        }
        Ok(out)
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        let mut out = Polynomial::zero(self.num_vars);
        for (alpha, c) in &self.terms {
            out.add_term(alpha.clone(), f(c));
        }
        out
    }

    /// `(x₁² + … + x_n²)^r`.
    pub fn sum_of_squares_power(num_vars: usize, r: u32) -> Self {
        let mut s = Polynomial::zero(num_vars);
        for v in 0..num_vars {
            s.add_term(MultiIndex::unit(num_vars, v).doubled(), T::one());
        }
        s.pow(r)
    }
}

impl Polynomial<QSqrt2> {
    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coeffs(QSqrt2::to_f64)
    }
}

impl Polynomial<f64> {
    /// Largest absolute coefficient; zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;

    /// Panics on mismatched variable counts; see [`Polynomial::try_add`].
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        self.try_add(rhs).expect("polynomial variable count mismatch")
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        self.try_sub(rhs).expect("polynomial variable count mismatch")
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        self.try_mul(rhs).expect("polynomial variable count mismatch")
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        self.map_coeffs(|c| -c.clone())
    }
}

impl<T: Scalar> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::text::render(self, None))
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::text::render(self, None))
    }
}
