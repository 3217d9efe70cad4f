use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::AlgebraError;

/// Exponent vector `α` of a monomial `x^α`.
///
/// Ordered graded-lexicographically: total degree first, then by the
/// exponent of `x1` (larger first), then `x2`, and so on. Under this order
/// the degree-2 monomials in two variables come out as `x1², x1x2, x2²`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(num_vars: usize) -> Self {
        MultiIndex(vec![0; num_vars])
    }

    /// The exponent of `x_{var+1}` alone.
    pub fn unit(num_vars: usize, var: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn num_vars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `|α|`, the total degree.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `2α`.
    pub fn doubled(&self) -> Self {
        MultiIndex(self.0.iter().map(|e| 2 * e).collect())
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex, AlgebraError> {
        if self.num_vars() != other.num_vars() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.num_vars(),
                found: other.num_vars(),
            });
        }
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Every exponent even, i.e. `x^α` is a square.
    pub fn is_even(&self) -> bool {
        self.0.iter().all(|e| e % 2 == 0)
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    /// Panics if the operands have different lengths; use
    /// [`MultiIndex::checked_add`] for untrusted input.
    fn add(self, other: &MultiIndex) -> MultiIndex {
        self.checked_add(other).expect("multi-index length mismatch")
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
            .then_with(|| self.0.len().cmp(&other.0.len()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Number of monomials of degree at most `d` in `n` variables,
/// `binomial(n + d, d)`.
pub fn count_monomials(n: usize, d: u32) -> usize {
    binomial(n as u64 + d as u64, d as u64) as usize
}

/// Binomial coefficient; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc as u64
}

/// All multi-indices in `n` variables with `|α| ≤ d`, in graded-lex order.
pub fn monomials_up_to(n: usize, d: u32) -> Result<Vec<MultiIndex>, AlgebraError> {
    if n == 0 {
        return Err(AlgebraError::InvalidDimension);
    }
    let mut out = Vec::with_capacity(count_monomials(n, d));
    for deg in 0..=d {
        let mut current = vec![0u32; n];
        push_of_degree(&mut out, &mut current, 0, deg);
    }
    Ok(out)
}

fn push_of_degree(out: &mut Vec<MultiIndex>, current: &mut [u32], var: usize, remaining: u32) {
    if var + 1 == current.len() {
        current[var] = remaining;
        out.push(MultiIndex(current.to_vec()));
        current[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e;
        push_of_degree(out, current, var + 1, remaining - e);
    }
    current[var] = 0;
}
