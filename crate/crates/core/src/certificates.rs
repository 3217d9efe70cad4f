//! Exact checks over Q(√2): Positivstellensatz identities, cone membership
//! of multiplier decompositions, moment-sequence feasibility, KKT residuals
//! and constant-Hessian convexity.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{text, AlgebraError, MultiIndex, Polynomial, QSqrt2};
use crate::moments::{localizing_matrix, moment_matrix, riesz, MomentError, MomentSequence};
use crate::relaxations::{build, HierarchyKind, PolyProblem, Relaxation, RelaxationError};
use crate::solver::{solve, SolveOptions, SolveStatus, SolverError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("certificate has {found} multipliers, problem needs {expected}")]
    MultiplierCount { expected: usize, found: usize },
    #[error("negative weight {0} in a sum-of-squares decomposition")]
    NegativeWeight(Box<QSqrt2>),
    #[error("KKT residuals are only defined here for single-constraint problems")]
    UnsupportedConstraintCount,
    #[error("Hessian is not constant (degree {0} > 2)")]
    UnsupportedDegree(u32),
    #[error("order {order}: {source}")]
    Relaxation { order: u32, source: Box<RelaxationError> },
    #[error("order {order}: {source}")]
    Solver { order: u32, source: Box<SolverError> },
}

/// Cone a multiplier belongs to, from most to least restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConeTag {
    Dsos,
    Sdsos,
    Sos,
}

impl fmt::Display for ConeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConeTag::Dsos => "DSOS",
            ConeTag::Sdsos => "SDSOS",
            ConeTag::Sos => "SOS",
        })
    }
}

/// `weight · poly²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSquare {
    pub weight: QSqrt2,
    pub poly: Polynomial<QSqrt2>,
}

/// A multiplier `σ = Σ w_k p_k²`, optionally declaring the cone it is
/// claimed to lie in.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub squares: Vec<WeightedSquare>,
    pub declared: Option<ConeTag>,
}

impl Multiplier {
    pub fn new(squares: Vec<WeightedSquare>) -> Self {
        Multiplier { squares, declared: None }
    }

    pub fn polynomial(&self, num_vars: usize) -> Result<Polynomial<QSqrt2>, CertificateError> {
        let mut sigma = Polynomial::zero(num_vars);
        for sq in &self.squares {
            sigma = sigma.try_add(&sq.poly.try_mul(&sq.poly)?.scale(&sq.weight))?;
        }
        Ok(sigma)
    }
}

/// `(Σ x_j²)^r (f − λ) = σ_0 + Σ σ_i g_i`; `multipliers[0]` is `σ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub lambda: QSqrt2,
    pub multipliers: Vec<Multiplier>,
    pub r: u32,
}

impl Certificate {
    /// Multi-line text form: `lambda`, `r`, then one `sigmaK = w*[p]^2 + …`
    /// line per multiplier.
    pub fn render(&self, names: &[String]) -> String {
        let mut out = format!("lambda = {}\nr = {}\n", self.lambda, self.r);
        for (k, m) in self.multipliers.iter().enumerate() {
            let terms: Vec<String> = m
                .squares
                .iter()
                .map(|sq| format!("({})*[{}]^2", sq.weight, text::render(&sq.poly, Some(names))))
                .collect();
            let body = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            out.push_str(&format!("sigma{k} = {body}\n"));
        }
        out
    }
}

/// Exact residual `(Σ x_j²)^r (f − λ) − σ_0 − Σ σ_i g_i`; the zero
/// polynomial certifies the identity.
pub fn verify_identity(p: &PolyProblem, cert: &Certificate) -> Result<Polynomial<QSqrt2>, CertificateError> {
    let n = p.num_vars();
    let expected = p.constraints().len() + 1;
    if cert.multipliers.len() != expected {
        return Err(CertificateError::MultiplierCount { expected, found: cert.multipliers.len() });
    }
    let shifted = p.objective().try_sub(&Polynomial::constant(n, cert.lambda.clone()))?;
    let mut residual = Polynomial::<QSqrt2>::sum_of_squares_power(n, cert.r).try_mul(&shifted)?;
    residual = residual.try_sub(&cert.multipliers[0].polynomial(n)?)?;
    for (g, m) in p.constraints().iter().zip(&cert.multipliers[1..]) {
        residual = residual.try_sub(&m.polynomial(n)?.try_mul(g)?)?;
    }
    Ok(residual)
}

/// Tightest cone the decomposition witnesses: SDSOS when every square has
/// at most two monomials, DSOS when additionally the Gram matrix it implies
/// is diagonally dominant, SOS otherwise.
pub fn classify_multiplier(squares: &[WeightedSquare]) -> Result<ConeTag, CertificateError> {
    if let Some(sq) = squares.iter().find(|sq| sq.weight.is_negative()) {
        return Err(CertificateError::NegativeWeight(Box::new(sq.weight.clone())));
    }
    if squares.iter().any(|sq| sq.poly.num_terms() > 2) {
        return Ok(ConeTag::Sos);
    }
    let mut gram: BTreeMap<(MultiIndex, MultiIndex), QSqrt2> = BTreeMap::new();
    let mut labels = std::collections::BTreeSet::new();
    for sq in squares {
        for (a, ca) in sq.poly.terms() {
            labels.insert(a.clone());
            for (b, cb) in sq.poly.terms() {
                *gram.entry((a.clone(), b.clone())).or_insert_with(QSqrt2::zero) += &(&sq.weight * &(ca * cb));
            }
        }
    }
    let get = |a: &MultiIndex, b: &MultiIndex| gram.get(&(a.clone(), b.clone())).cloned().unwrap_or_else(QSqrt2::zero);
    let dominant = labels.iter().all(|a| {
        let off: QSqrt2 = labels.iter().filter(|b| *b != a).map(|b| get(a, b).abs()).sum();
        get(a, a) >= off
    });
    Ok(if dominant { ConeTag::Dsos } else { ConeTag::Sdsos })
}

fn psd_2x2(a: &QSqrt2, b: &QSqrt2, c: &QSqrt2) -> bool {
    a.is_nonnegative() && c.is_nonnegative() && (a * c - b * b).is_nonnegative()
}

/// Exact PSD test by symmetric Gaussian elimination: a zero pivot demands a
/// zero row, a negative pivot refutes.
pub fn is_psd_exact(matrix: &[Vec<QSqrt2>]) -> bool {
    let n = matrix.len();
    let mut m: Vec<Vec<QSqrt2>> = matrix.to_vec();
    for k in 0..n {
        match m[k][k].signum() {
            Ordering::Less => return false,
            Ordering::Equal => {
                if (k + 1..n).any(|j| !m[k][j].is_zero() || !m[j][k].is_zero()) {
                    return false;
                }
            }
            Ordering::Greater => {
                let pivot = m[k][k].clone();
                for i in k + 1..n {
                    if m[i][k].is_zero() {
                        continue;
                    }
                    let factor = &m[i][k] / &pivot;
                    for j in k + 1..n {
                        let delta = &factor * &m[k][j];
                        m[i][j] -= &delta;
                    }
                }
            }
        }
    }
    true
}

/// First violated condition of: `y_0 = 1`; every 2×2 principal submatrix of
/// `M_d(y)` PSD; every diagonal entry and 2×2 principal submatrix of the
/// localizing matrices `M_d(g y)` PSD. `None` means all hold.
pub fn find_moment_violation(
    y: &MomentSequence<QSqrt2>,
    d: u32,
    constraints: &[Polynomial<QSqrt2>],
) -> Result<Option<String>, CertificateError> {
    let max_g = constraints.iter().filter_map(Polynomial::degree).max().unwrap_or(0);
    if y.max_degree() < 2 * d + max_g {
        return Err(MomentError::InsufficientDegree { required: 2 * d + max_g, available: y.max_degree() }.into());
    }
    if !y.is_normalized() {
        return Ok(Some(format!("y_0 = {} is not 1", y.values()[0])));
    }
    let m = moment_matrix(y, d)?;
    let mut mats = vec![("moment matrix".to_string(), m)];
    for (i, g) in constraints.iter().enumerate() {
        mats.push((format!("localizing matrix {}", i + 1), localizing_matrix(g, y, d)?));
    }
    for (name, mat) in &mats {
        let rows = mat.row_labels();
        for a in 0..mat.dim() {
            if mat.get(a, a).is_negative() {
                return Ok(Some(format!("{name}: diagonal entry {} is negative", rows[a])));
            }
            for b in a + 1..mat.dim() {
                if !psd_2x2(mat.get(a, a), mat.get(a, b), mat.get(b, b)) {
                    return Ok(Some(format!("{name}: 2x2 minor on rows {}, {} is not PSD", rows[a], rows[b])));
                }
            }
        }
    }
    Ok(None)
}

pub fn check_moment_feasibility(
    y: &MomentSequence<QSqrt2>,
    d: u32,
    constraints: &[Polynomial<QSqrt2>],
) -> Result<bool, CertificateError> {
    Ok(find_moment_violation(y, d, constraints)?.is_none())
}

/// Exact membership of `y` in the order-`d` relaxation of `kind` (including
/// the extra normalisation of the r-variants).
pub fn relaxation_feasible(
    y: &MomentSequence<QSqrt2>,
    p: &PolyProblem,
    kind: HierarchyKind,
    d: u32,
) -> Result<bool, CertificateError> {
    if !y.is_normalized() {
        return Ok(false);
    }
    if kind.r > 0 {
        let s = Polynomial::<QSqrt2>::sum_of_squares_power(p.num_vars(), kind.r);
        if !riesz(&s, y)?.is_one() {
            return Ok(false);
        }
    }
    let mut mats = vec![moment_matrix(y, d)?];
    for (g, k) in p.constraints().iter().zip(p.constraint_degree_bounds()) {
        mats.push(localizing_matrix(g, y, d - k)?);
    }
    for mat in &mats {
        let n = mat.dim();
        let ok = match kind.relaxation {
            Relaxation::Lasserre => {
                let dense: Vec<Vec<QSqrt2>> = (0..n).map(|i| (0..n).map(|j| mat.get(i, j).clone()).collect()).collect();
                is_psd_exact(&dense)
            }
            Relaxation::Sdsos => {
                (0..n).all(|a| mat.get(a, a).is_nonnegative())
                    && (0..n).all(|a| (a + 1..n).all(|b| psd_2x2(mat.get(a, a), mat.get(a, b), mat.get(b, b))))
            }
            Relaxation::Dsos => {
                let two = QSqrt2::from_int(2);
                (0..n).all(|a| mat.get(a, a).is_nonnegative())
                    && (0..n).all(|a| {
                        (a + 1..n).all(|b| {
                            let s = mat.get(a, a) + mat.get(b, b);
                            let cross = &two * mat.get(a, b);
                            (&s + &cross).is_nonnegative() && (&s - &cross).is_nonnegative()
                        })
                    })
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Residuals of the KKT system of `min f s.t. g ≥ 0` at `(x, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidual {
    /// `∇f(x) − λ ∇g(x)`
    pub stationarity: Vec<QSqrt2>,
    /// `min(λ, 0)`
    pub dual_feasibility: QSqrt2,
    /// `min(g(x), 0)`
    pub primal_feasibility: QSqrt2,
    /// `λ g(x)`
    pub complementarity: QSqrt2,
}

impl KktResidual {
    pub fn is_zero(&self) -> bool {
        self.stationarity.iter().all(Zero::is_zero)
            && self.dual_feasibility.is_zero()
            && self.primal_feasibility.is_zero()
            && self.complementarity.is_zero()
    }
}

pub fn kkt_residual(x: &[QSqrt2], lambda: &QSqrt2, p: &PolyProblem) -> Result<KktResidual, CertificateError> {
    let [g] = p.constraints() else {
        return Err(CertificateError::UnsupportedConstraintCount);
    };
    let f = p.objective();
    let mut stationarity = Vec::with_capacity(p.num_vars());
    for v in 0..p.num_vars() {
        let df = f.derivative(v)?.eval(x)?;
        let dg = g.derivative(v)?.eval(x)?;
        stationarity.push(df - lambda * &dg);
    }
    let gx = g.eval(x)?;
    let zero = QSqrt2::zero();
    Ok(KktResidual {
        stationarity,
        dual_feasibility: lambda.clone().min(zero.clone()),
        primal_feasibility: gx.clone().min(zero),
        complementarity: lambda * &gx,
    })
}

/// Constant Hessian of a polynomial of degree at most 2.
pub fn constant_hessian(p: &Polynomial<QSqrt2>) -> Result<Vec<Vec<QSqrt2>>, CertificateError> {
    let deg = p.degree().unwrap_or(0);
    if deg > 2 {
        return Err(CertificateError::UnsupportedDegree(deg));
    }
    let n = p.num_vars();
    let origin = vec![QSqrt2::zero(); n];
    let mut h = vec![vec![QSqrt2::zero(); n]; n];
    for i in 0..n {
        let di = p.derivative(i)?;
        for j in 0..n {
            h[i][j] = di.derivative(j)?.eval(&origin)?;
        }
    }
    Ok(h)
}

/// Exact PSD test of the constant Hessian of a quadratic.
pub fn check_hessian_psd_constant(p: &Polynomial<QSqrt2>) -> Result<bool, CertificateError> {
    Ok(is_psd_exact(&constant_hessian(p)?))
}

/// Float value together with the exact number it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactNumber {
    pub exact: String,
    pub value: f64,
}

impl From<&QSqrt2> for ExactNumber {
    fn from(q: &QSqrt2) -> Self {
        ExactNumber { exact: q.to_string(), value: q.to_f64() }
    }
}

/// Closed-form moment sequence offered as an exact primal witness.
pub struct MomentWitness<'a> {
    pub name: &'a str,
    pub generator: &'a (dyn Fn(&MultiIndex) -> QSqrt2 + Sync),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: u32,
    pub status: Option<SolveStatus>,
    pub bound: Option<f64>,
    pub error: Option<String>,
    /// `reference − bound`.
    pub gap_to_reference: Option<f64>,
    /// `L_y((Σx²)^r f)` at the witness, when the witness is exactly feasible
    /// for this order. Every dual bound at this order is at most this value.
    pub exact_cap: Option<ExactNumber>,
    pub within_cap: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub kind: HierarchyKind,
    pub reference: Option<ExactNumber>,
    pub witness: Option<String>,
    pub orders: Vec<OrderReport>,
}

impl NonexistenceReport {
    /// Largest exact cap over the orders where the witness is feasible; no
    /// certificate `λ` above it exists at those orders.
    pub fn overall_cap(&self) -> Option<f64> {
        self.orders
            .iter()
            .filter_map(|o| o.exact_cap.as_ref().map(|c| c.value))
            .reduce(f64::max)
    }
}

/// Slack allowed between a numerical bound and an exact cap.
pub const CAP_SLACK: f64 = 1e-6;

/// Solves `kind` at each order and, when `witness` is exactly feasible for
/// that order, records the exact cap it places on every dual bound.
pub fn certify_nonexistence_report(
    p: &PolyProblem,
    kind: HierarchyKind,
    orders: &[u32],
    reference: Option<&QSqrt2>,
    witness: Option<&MomentWitness<'_>>,
    opts: &SolveOptions,
) -> Result<NonexistenceReport, CertificateError> {
    let max_g = p.constraints().iter().filter_map(Polynomial::degree).max().unwrap_or(0);
    let s = Polynomial::<QSqrt2>::sum_of_squares_power(p.num_vars(), kind.r);
    let objective = s.try_mul(p.objective())?;
    let mut rows = Vec::with_capacity(orders.len());
    for &d in orders {
        let cp = build(p, kind, d).map_err(|source| CertificateError::Relaxation { order: d, source: Box::new(source) })?;
        let res = solve(&cp, opts).map_err(|source| CertificateError::Solver { order: d, source: Box::new(source) })?;
        let bound = res.bound();
        let exact_cap = match witness {
            Some(w) => {
                let y = MomentSequence::from_fn(p.num_vars(), 2 * d + max_g, |a| (w.generator)(a))?;
                if relaxation_feasible(&y, p, kind, d)? {
                    Some(riesz(&objective, &y)?)
                } else {
                    None
                }
            }
            None => None,
        };
        rows.push(OrderReport {
            order: d,
            status: Some(res.status),
            bound: Some(bound),
            error: None,
            gap_to_reference: reference.map(|r| r.to_f64() - bound),
            within_cap: exact_cap.as_ref().map(|c| bound <= c.to_f64() + CAP_SLACK),
            exact_cap: exact_cap.as_ref().map(ExactNumber::from),
        });
    }
    Ok(NonexistenceReport {
        kind,
        reference: reference.map(ExactNumber::from),
        witness: witness.map(|w| w.name.to_string()),
        orders: rows,
    })
}
