//! Moment sequences, the Riesz functional, and moment/localizing matrices.

use std::collections::HashMap;

use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{monomials_up_to, AlgebraError, MultiIndex, Polynomial, QSqrt2, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("moment sequence has no entry for index {0}")]
    IncompleteSequence(MultiIndex),
    #[error("moment sequence of degree {available} is too short, degree {required} needed")]
    InsufficientDegree { required: u32, available: u32 },
    #[error("constraint polynomial is zero; its degree bound is undefined")]
    DegenerateConstraint,
}

/// Truncated moment sequence `(y_α)_{|α| ≤ max_degree}`, stored densely in
/// graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T: Scalar> {
    num_vars: usize,
    max_degree: u32,
    labels: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    values: Vec<T>,
}

impl<T: Scalar> MomentSequence<T> {
    pub fn from_fn(
        num_vars: usize,
        max_degree: u32,
        mut f: impl FnMut(&MultiIndex) -> T,
    ) -> Result<Self, MomentError> {
        let labels = monomials_up_to(num_vars, max_degree)?;
        let values = labels.iter().map(&mut f).collect();
        Ok(Self::assemble(num_vars, max_degree, labels, values))
    }

    /// Builds from values listed in graded-lex order.
    pub fn from_values(num_vars: usize, max_degree: u32, values: Vec<T>) -> Result<Self, MomentError> {
        let labels = monomials_up_to(num_vars, max_degree)?;
        if labels.len() != values.len() {
            return Err(MomentError::InsufficientDegree {
                required: max_degree,
                available: 0,
            });
        }
        Ok(Self::assemble(num_vars, max_degree, labels, values))
    }

    fn assemble(num_vars: usize, max_degree: u32, labels: Vec<MultiIndex>, values: Vec<T>) -> Self {
        let index = labels.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        MomentSequence { num_vars, max_degree, labels, index, values }
    }

    /// Moments of the point mass at `point`, `y_α = point^α`.
    pub fn dirac(point: &[T], max_degree: u32) -> Result<Self, MomentError> {
        Self::from_fn(point.len(), max_degree, |alpha| {
            let mut v = T::one();
            for (x, &e) in point.iter().zip(alpha.exponents()) {
                for _ in 0..e {
                    v = v * x.clone();
                }
            }
            v
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn labels(&self) -> &[MultiIndex] {
        &self.labels
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<&T, MomentError> {
        self.index
            .get(alpha)
            .map(|&i| &self.values[i])
            .ok_or_else(|| MomentError::IncompleteSequence(alpha.clone()))
    }

    pub fn set(&mut self, alpha: &MultiIndex, value: T) -> Result<(), MomentError> {
        let i = *self
            .index
            .get(alpha)
            .ok_or_else(|| MomentError::IncompleteSequence(alpha.clone()))?;
        self.values[i] = value;
        Ok(())
    }

    /// `y_0 = 1`.
    pub fn is_normalized(&self) -> bool {
        self.values.first().is_some_and(|v| *v == T::one())
    }

    fn require_degree(&self, required: u32) -> Result<(), MomentError> {
        if self.max_degree < required {
            return Err(MomentError::InsufficientDegree {
                required,
                available: self.max_degree,
            });
        }
        Ok(())
    }
}

/// Dense symmetric matrix with monomial row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    entries: Vec<T>,
    row_labels: Vec<MultiIndex>,
}

impl<T: Clone> SymMatrix<T> {
    /// Fills the upper triangle from `f(i, j)` and mirrors it.
    pub fn from_fn(row_labels: Vec<MultiIndex>, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let dim = row_labels.len();
        let mut entries: Vec<Option<T>> = vec![None; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                entries[j * dim + i] = Some(v.clone());
                entries[i * dim + j] = Some(v);
            }
        }
        SymMatrix {
            dim,
            entries: entries.into_iter().map(|v| v.expect("filled")).collect(),
            row_labels,
        }
    }

    pub fn try_from_fn<E>(
        row_labels: Vec<MultiIndex>,
        mut f: impl FnMut(usize, usize) -> Result<T, E>,
    ) -> Result<Self, E> {
        let dim = row_labels.len();
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                upper.push(f(i, j)?);
            }
        }
        let mut it = upper.into_iter();
        let mut cache = vec![vec![None; dim]; dim];
        for (i, row) in cache.iter_mut().enumerate() {
            for slot in row.iter_mut().skip(i) {
                *slot = it.next();
            }
        }
        Ok(Self::from_fn(row_labels, |i, j| cache[i][j].clone().expect("upper entry")))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.dim + j]
    }

    pub fn row_labels(&self) -> &[MultiIndex] {
        &self.row_labels
    }

    pub fn is_symmetric(&self) -> bool
    where
        T: PartialEq,
    {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> SymMatrix<U> {
        SymMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(f).collect(),
            row_labels: self.row_labels.clone(),
        }
    }
}

impl SymMatrix<f64> {
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| *self.get(i, j))
    }
}

/// Riesz functional `L_y(f) = Σ f_α y_α`.
pub fn riesz<T: Scalar>(f: &Polynomial<T>, y: &MomentSequence<T>) -> Result<T, MomentError> {
    let mut total = T::zero();
    for (alpha, c) in f.terms() {
        total = total + c.clone() * y.get(alpha)?.clone();
    }
    Ok(total)
}

/// `M_d(y)`, entry `(α, β) = y_{α+β}` over `|α|, |β| ≤ d`.
pub fn moment_matrix<T: Scalar>(y: &MomentSequence<T>, d: u32) -> Result<SymMatrix<T>, MomentError> {
    y.require_degree(2 * d)?;
    let rows = monomials_up_to(y.num_vars, d)?;
    let labels = rows.clone();
    SymMatrix::try_from_fn(labels, |i, j| y.get(&(&rows[i] + &rows[j])).cloned())
}

/// `M_e(g y)`, entry `(α, β) = Σ_γ g_γ y_{α+β+γ}` over `|α|, |β| ≤ e`.
pub fn localizing_matrix<T: Scalar>(
    g: &Polynomial<T>,
    y: &MomentSequence<T>,
    e: u32,
) -> Result<SymMatrix<T>, MomentError> {
    if g.num_vars() != y.num_vars {
        return Err(AlgebraError::DimensionMismatch {
            expected: y.num_vars,
            found: g.num_vars(),
        }
        .into());
    }
    y.require_degree(2 * e + g.degree().unwrap_or(0))?;
    let rows = monomials_up_to(y.num_vars, e)?;
    SymMatrix::try_from_fn(rows.clone(), |i, j| {
        let base = &rows[i] + &rows[j];
        let mut total = T::zero();
        for (gamma, c) in g.terms() {
            total = total + c.clone() * y.get(&(&base + gamma))?.clone();
        }
        Ok(total)
    })
}

/// `k = max ⌈|α|/2⌉` over the terms of `g`.
pub fn degree_bound<T: Scalar>(g: &Polynomial<T>) -> Result<u32, MomentError> {
    g.terms()
        .map(|(alpha, _)| alpha.degree().div_ceil(2))
        .max()
        .ok_or(MomentError::DegenerateConstraint)
}

/// Closed-form moment sequence that is feasible for every SDSOS relaxation
/// of the two-variable unit-disc problem:
///
/// `y_α = (1 + (−1)^α₁ + (−1)^α₂ − (−1)^(α₁+α₂)) / (2 √(2^|α|))`.
///
/// `|y_α| = 2^(−|α|/2)`, negative exactly when both exponents are odd.
pub fn counterexample_sequence(alpha: &MultiIndex) -> Result<QSqrt2, MomentError> {
    if alpha.num_vars() != 2 {
        return Err(AlgebraError::DimensionMismatch {
            expected: 2,
            found: alpha.num_vars(),
        }
        .into());
    }
    let sgn = |e: u32| if e.is_multiple_of(2) { 1 } else { -1 };
    let (a1, a2) = (alpha.exponents()[0], alpha.exponents()[1]);
    let numerator = 1 + sgn(a1) + sgn(a2) - sgn(a1 + a2);
    let denominator = QSqrt2::from_int(2) * QSqrt2::sqrt_pow2(a1 + a2);
    Ok(QSqrt2::from_int(numerator).checked_div(&denominator)?)
}

/// The counterexample sequence truncated at `max_degree`.
pub fn counterexample_moments(max_degree: u32) -> MomentSequence<QSqrt2> {
    MomentSequence::from_fn(2, max_degree, |a| {
        counterexample_sequence(a).expect("two-variable index")
    })
    .expect("two variables")
}

impl<T: Scalar> SymMatrix<T> {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn poly(s: &str) -> Polynomial<QSqrt2> {
        text::parse(s, &text::default_names(2)).unwrap()
    }

    fn objective() -> Polynomial<QSqrt2> {
        poly("(4) + (-4)*x1 + (-4)*x2 + (1)*x1^2 + (2)*x1*x2 + (1)*x2^2")
    }

    fn constraint() -> Polynomial<QSqrt2> {
        poly("(1) + (-1)*x1^2 + (-1)*x2^2")
    }

    #[test]
    fn sequence_values() {
        assert_eq!(counterexample_sequence(&mi(&[0, 0])).unwrap(), QSqrt2::from_int(1));
        assert_eq!(counterexample_sequence(&mi(&[1, 1])).unwrap(), QSqrt2::from_fracs(-1, 2, 0, 1));
        assert_eq!(counterexample_sequence(&mi(&[3, 1])).unwrap(), QSqrt2::from_fracs(-1, 4, 0, 1));
        assert_eq!(counterexample_sequence(&mi(&[1, 0])).unwrap(), QSqrt2::from_fracs(0, 1, 1, 2));
        assert!(counterexample_sequence(&mi(&[1, 0, 0])).is_err());
    }

    #[test]
    fn riesz_values() {
        let y = counterexample_moments(4);
        assert_eq!(riesz(&objective(), &y).unwrap(), QSqrt2::from_fracs(4, 1, -4, 1));
        assert!(riesz(&constraint(), &y).unwrap().is_zero());
        assert_eq!(riesz(&Polynomial::one(2), &y).unwrap(), QSqrt2::from_int(1));
    }

    #[test]
    fn riesz_incomplete() {
        let y = counterexample_moments(1);
        assert!(matches!(riesz(&objective(), &y), Err(MomentError::IncompleteSequence(_))));
    }

    #[test]
    fn order_one_moment_matrix() {
        let y = counterexample_moments(2);
        let m = moment_matrix(&y, 1).unwrap();
        let r = QSqrt2::from_fracs(0, 1, 1, 2);
        let h = QSqrt2::from_fracs(1, 2, 0, 1);
        let expected = [
            [QSqrt2::from_int(1), r.clone(), r.clone()],
            [r.clone(), h.clone(), -h.clone()],
            [r, -h.clone(), h],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), &expected[i][j]);
            }
        }
    }

    #[test]
    fn dirac_at_origin() {
        let y = MomentSequence::dirac(&[0.0, 0.0], 4).unwrap();
        let m = moment_matrix(&y, 2).unwrap();
        assert_eq!(m.dim(), 6);
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_eq!(*m.get(i, j), expected);
            }
        }
    }

    #[test]
    fn dirac_at_minimizer_is_rank_one() {
        let r = QSqrt2::from_fracs(0, 1, 1, 2);
        let y = MomentSequence::dirac(&[r.clone(), r.clone()], 2).unwrap();
        let m = moment_matrix(&y, 1).unwrap();
        let v = [QSqrt2::from_int(1), r.clone(), r];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(*m.get(i, j), &v[i] * &v[j]);
            }
        }
    }

    #[test]
    fn localizing_matrices_vanish() {
        let y = counterexample_moments(6);
        let l0 = localizing_matrix(&constraint(), &y, 0).unwrap();
        assert_eq!(l0.dim(), 1);
        assert!(l0.is_zero());
        let l1 = localizing_matrix(&constraint(), &y, 1).unwrap();
        assert_eq!(l1.dim(), 3);
        assert!(l1.is_zero());
    }

    #[test]
    fn unit_constraint_reproduces_moment_matrix() {
        let y = counterexample_moments(4);
        assert_eq!(
            localizing_matrix(&Polynomial::one(2), &y, 2).unwrap(),
            moment_matrix(&y, 2).unwrap()
        );
    }

    #[test]
    fn insufficient_degree() {
        let y = counterexample_moments(3);
        assert!(matches!(moment_matrix(&y, 2), Err(MomentError::InsufficientDegree { .. })));
        assert!(matches!(
            localizing_matrix(&constraint(), &y, 1),
            Err(MomentError::InsufficientDegree { .. })
        ));
    }

    #[test]
    fn degree_bounds() {
        assert_eq!(degree_bound(&constraint()).unwrap(), 1);
        assert_eq!(degree_bound(&poly("(1)*x1")).unwrap(), 1);
        assert_eq!(degree_bound(&poly("(1)*x1^3*x2")).unwrap(), 2);
        assert_eq!(
            degree_bound(&Polynomial::<QSqrt2>::zero(2)),
            Err(MomentError::DegenerateConstraint)
        );
    }
}
