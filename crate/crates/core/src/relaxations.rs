//! Order-d moment relaxations of `min f(x) s.t. g_i(x) ≥ 0`.
//!
//! The Lasserre relaxation keeps every moment and localizing matrix as a PSD
//! block. The SDSOS relaxation replaces each such block by all of its 2×2
//! principal submatrices (second-order cone constraints), and the DSOS
//! relaxation by the linear inequalities `B(α,α) ≥ 0` and
//! `B(α,α) ± 2B(α,β) + B(β,β) ≥ 0`. The r-variants minimise
//! `L_y((Σ x_j²)^r f)` instead, normalised by `L_y((Σ x_j²)^r) = 1`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{binomial, count_monomials, monomials_up_to, AlgebraError, MultiIndex, Polynomial, QSqrt2};
use crate::moments::{degree_bound, MomentError, SymMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelaxationError {
    #[error("relaxation order {order} is too small; at least {required} is needed")]
    OrderTooSmall { order: u32, required: u32 },
    #[error("premultiplication power must be at least 1 for the r-variant builder")]
    InvalidPower,
    #[error("objective polynomial is zero")]
    ZeroObjective,
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relaxation {
    Lasserre,
    Sdsos,
    Dsos,
}

impl fmt::Display for Relaxation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relaxation::Lasserre => "lasserre",
            Relaxation::Sdsos => "sdsos",
            Relaxation::Dsos => "dsos",
        })
    }
}

/// Which hierarchy, and the power `r` of `(Σ x_j²)^r` premultiplying
/// `f − λ` (`r = 0` is the plain hierarchy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierarchyKind {
    pub relaxation: Relaxation,
    pub r: u32,
}

impl HierarchyKind {
    pub const LASSERRE: HierarchyKind = HierarchyKind { relaxation: Relaxation::Lasserre, r: 0 };
    pub const SDSOS: HierarchyKind = HierarchyKind { relaxation: Relaxation::Sdsos, r: 0 };
    pub const DSOS: HierarchyKind = HierarchyKind { relaxation: Relaxation::Dsos, r: 0 };

    pub fn with_r(self, r: u32) -> Self {
        HierarchyKind { r, ..self }
    }
}

impl fmt::Display for HierarchyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.r == 0 {
            write!(f, "{}", self.relaxation)
        } else {
            write!(f, "{}-{}", self.r, self.relaxation)
        }
    }
}

/// `min f(x) s.t. g_i(x) ≥ 0`, with exact data.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyProblem {
    variables: Vec<String>,
    objective: Polynomial<QSqrt2>,
    constraints: Vec<Polynomial<QSqrt2>>,
}

impl PolyProblem {
    pub fn new(
        variables: Vec<String>,
        objective: Polynomial<QSqrt2>,
        constraints: Vec<Polynomial<QSqrt2>>,
    ) -> Result<Self, RelaxationError> {
        let n = variables.len();
        if n == 0 {
            return Err(AlgebraError::InvalidDimension.into());
        }
        for p in std::iter::once(&objective).chain(&constraints) {
            if p.num_vars() != n {
                return Err(AlgebraError::DimensionMismatch { expected: n, found: p.num_vars() }.into());
            }
        }
        for g in &constraints {
            degree_bound(g)?;
        }
        Ok(PolyProblem { variables, objective, constraints })
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn objective(&self) -> &Polynomial<QSqrt2> {
        &self.objective
    }

    pub fn constraints(&self) -> &[Polynomial<QSqrt2>] {
        &self.constraints
    }

    /// `k_i` for every constraint.
    pub fn constraint_degree_bounds(&self) -> Vec<u32> {
        self.constraints
            .iter()
            .map(|g| degree_bound(g).expect("checked at construction"))
            .collect()
    }

    /// Smallest admissible relaxation order for `kind`.
    pub fn min_order(&self, kind: HierarchyKind) -> u32 {
        let obj = self.objective.degree().unwrap_or(0) + 2 * kind.r;
        let ks = self.constraint_degree_bounds();
        ks.into_iter().fold(obj.div_ceil(2), u32::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cone {
    /// Full positive semidefinite block.
    Psd,
    /// 2×2 principal submatrix constrained PSD.
    Soc2x2,
    /// Scalar inequality `v' B v ≥ 0`.
    Nonneg,
}

/// The moment matrix or the localizing matrix of constraint `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSource {
    Moment,
    Localizing(usize),
}

impl fmt::Display for BlockSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockSource::Moment => write!(f, "moment"),
            BlockSource::Localizing(i) => write!(f, "localizing[{}]", i + 1),
        }
    }
}

/// Row labels of one source matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMatrix {
    pub source: BlockSource,
    pub rows: Vec<MultiIndex>,
}

/// `Σ_j y_j F_j`, one symmetric coefficient matrix per moment it involves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub moment: usize,
    /// Row-major `dim × dim`.
    pub matrix: Vec<f64>,
}

/// One cone constraint `Pᵀ B(y) P ∈ K`, where `B` is the source matrix and
/// the columns of `P` are given as combinations of source rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub cone: Cone,
    pub source: BlockSource,
    pub columns: Vec<Vec<(MultiIndex, f64)>>,
    pub terms: Vec<BlockTerm>,
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Block value at a moment vector.
    pub fn evaluate(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim() * self.dim()];
        for t in &self.terms {
            for (o, m) in out.iter_mut().zip(&t.matrix) {
                *o += y[t.moment] * m;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `min c·y s.t. equalities, every block in its cone`, over the moments
/// `y_α`, `|α| ≤ 2d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub kind: HierarchyKind,
    pub order: u32,
    pub num_vars: usize,
    pub moments: Vec<MultiIndex>,
    pub objective: Vec<f64>,
    pub equalities: Vec<LinearEquality>,
    pub sources: Vec<SourceMatrix>,
    pub blocks: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn moment_index(&self, alpha: &MultiIndex) -> Option<usize> {
        self.moments.binary_search(alpha).ok()
    }

    pub fn count_blocks(&self, cone: Cone) -> usize {
        self.blocks.iter().filter(|b| b.cone == cone).count()
    }

    pub fn source_rows(&self, source: BlockSource) -> Option<&[MultiIndex]> {
        self.sources.iter().find(|s| s.source == source).map(|s| s.rows.as_slice())
    }

    /// Sums the per-block dual matrices back into the Gram matrix of the
    /// multiplier attached to `source`: `Σ_k P_k X_k P_kᵀ`.
    pub fn gram_matrix(&self, source: BlockSource, dual_blocks: &[Vec<f64>]) -> Option<SymMatrix<f64>> {
        let rows = self.source_rows(source)?.to_vec();
        let pos: HashMap<&MultiIndex, usize> = rows.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let n = rows.len();
        let mut gram = vec![0.0; n * n];
        for (block, x) in self.blocks.iter().zip(dual_blocks) {
            if block.source != source {
                continue;
            }
            let m = block.dim();
            for (ci, col_i) in block.columns.iter().enumerate() {
                for (cj, col_j) in block.columns.iter().enumerate() {
                    let w = x[ci * m + cj];
                    for (ri, wi) in col_i {
                        for (rj, wj) in col_j {
                            gram[pos[ri] * n + pos[rj]] += w * wi * wj;
                        }
                    }
                }
            }
        }
        Some(SymMatrix::from_fn(rows, |i, j| 0.5 * (gram[i * n + j] + gram[j * n + i])))
    }

    /// Checks that every affine map references declared moments with the
    /// right shape, that equalities are in range, and that no scalar
    /// inequality row is repeated.
    pub fn validate(&self) -> Result<(), String> {
        let n_mom = self.moments.len();
        if self.objective.len() != n_mom {
            return Err(format!("objective has {} entries for {} moments", self.objective.len(), n_mom));
        }
        if self.moments.windows(2).any(|w| w[0] >= w[1]) {
            return Err("moment labels are not strictly increasing".into());
        }
        for eq in &self.equalities {
            if eq.coeffs.iter().any(|&(i, _)| i >= n_mom) {
                return Err("equality references an undeclared moment".into());
            }
        }
        let mut seen_rows = HashSet::new();
        for (k, b) in self.blocks.iter().enumerate() {
            let dim = b.dim();
            let expected = match b.cone {
                Cone::Psd => dim,
                Cone::Soc2x2 => 2,
                Cone::Nonneg => 1,
            };
            if dim != expected || dim == 0 {
                return Err(format!("block {k} has dimension {dim}, expected {expected}"));
            }
            let rows = self
                .source_rows(b.source)
                .ok_or_else(|| format!("block {k} references unknown source {}", b.source))?;
            for col in &b.columns {
                if col.iter().any(|(r, _)| !rows.contains(r)) {
                    return Err(format!("block {k} references a row outside its source"));
                }
            }
            for t in &b.terms {
                if t.moment >= n_mom {
                    return Err(format!("block {k} references undeclared moment {}", t.moment));
                }
                if t.matrix.len() != dim * dim {
                    return Err(format!("block {k} has a malformed coefficient matrix"));
                }
                for i in 0..dim {
                    for j in 0..i {
                        if t.matrix[i * dim + j] != t.matrix[j * dim + i] {
                            return Err(format!("block {k} has an asymmetric coefficient matrix"));
                        }
                    }
                }
            }
            if b.cone == Cone::Nonneg {
                let key = (b.source, format!("{:?}", b.columns));
                if !seen_rows.insert(key) {
                    return Err(format!("block {k} repeats a linear inequality"));
                }
            }
        }
        Ok(())
    }
}

/// Coefficient matrices of a source matrix over its rows, keyed by moment.
fn source_coefficients(
    g: &Polynomial<f64>,
    rows: &[MultiIndex],
    index: &HashMap<MultiIndex, usize>,
) -> Result<BTreeMap<usize, Vec<f64>>, RelaxationError> {
    let n = rows.len();
    let mut out: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let base = &rows[i] + &rows[j];
            for (gamma, c) in g.terms() {
                let alpha = &base + gamma;
                let m = *index
                    .get(&alpha)
                    .ok_or_else(|| MomentError::IncompleteSequence(alpha.clone()))?;
                out.entry(m).or_insert_with(|| vec![0.0; n * n])[i * n + j] += c;
            }
        }
    }
    Ok(out)
}

struct SourceData {
    info: SourceMatrix,
    coeffs: BTreeMap<usize, Vec<f64>>,
}

impl SourceData {
    fn block(&self, cone: Cone, columns: Vec<Vec<(usize, f64)>>) -> ConeBlock {
        let n = self.info.rows.len();
        let m = columns.len();
        let mut terms = Vec::new();
        for (&moment, f) in &self.coeffs {
            let mut matrix = vec![0.0; m * m];
            for (a, ca) in columns.iter().enumerate() {
                for (b, cb) in columns.iter().enumerate() {
                    let mut v = 0.0;
                    for &(i, wi) in ca {
                        for &(j, wj) in cb {
                            v += wi * wj * f[i * n + j];
                        }
                    }
                    matrix[a * m + b] = v;
                }
            }
            if matrix.iter().any(|&v| v != 0.0) {
                terms.push(BlockTerm { moment, matrix });
            }
        }
        let columns = columns
            .into_iter()
            .map(|c| c.into_iter().map(|(i, w)| (self.info.rows[i].clone(), w)).collect())
            .collect();
        ConeBlock { cone, source: self.info.source, columns, terms }
    }
}

fn blocks_for(relaxation: Relaxation, src: &SourceData) -> Vec<ConeBlock> {
    let n = src.info.rows.len();
    let unit = |i: usize| vec![(i, 1.0)];
    let mut out = Vec::new();
    match relaxation {
        Relaxation::Lasserre => out.push(src.block(Cone::Psd, (0..n).map(unit).collect())),
        Relaxation::Sdsos => {
            if n == 1 {
                out.push(src.block(Cone::Nonneg, vec![unit(0)]));
            }
            for a in 0..n {
                for b in a + 1..n {
                    out.push(src.block(Cone::Soc2x2, vec![unit(a), unit(b)]));
                }
            }
        }
        Relaxation::Dsos => {
            for a in 0..n {
                out.push(src.block(Cone::Nonneg, vec![unit(a)]));
            }
            for a in 0..n {
                for b in a + 1..n {
                    out.push(src.block(Cone::Nonneg, vec![vec![(a, 1.0), (b, 1.0)]]));
                    out.push(src.block(Cone::Nonneg, vec![vec![(a, 1.0), (b, -1.0)]]));
                }
            }
        }
    }
    out
}

fn assemble(
    p: &PolyProblem,
    kind: HierarchyKind,
    d: u32,
    objective: &Polynomial<QSqrt2>,
) -> Result<ConicProgram, RelaxationError> {
    let n = p.num_vars();
    let required = p.min_order(kind);
    if d < required {
        return Err(RelaxationError::OrderTooSmall { order: d, required });
    }
    if p.objective().is_zero() {
        return Err(RelaxationError::ZeroObjective);
    }
    let moments = monomials_up_to(n, 2 * d)?;
    let index: HashMap<MultiIndex, usize> =
        moments.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();

    let mut objective_vec = vec![0.0; moments.len()];
    for (alpha, c) in objective.terms() {
        objective_vec[index[alpha]] = c.to_f64();
    }

    let mut equalities = vec![LinearEquality { coeffs: vec![(0, 1.0)], rhs: 1.0 }];
    if kind.r > 0 {
        let s = Polynomial::<f64>::sum_of_squares_power(n, kind.r);
        let coeffs = s.terms().map(|(a, &c)| (index[a], c)).collect();
        equalities.push(LinearEquality { coeffs, rhs: 1.0 });
    }

    let mut sources = Vec::new();
    let rows = monomials_up_to(n, d)?;
    sources.push(SourceData {
        coeffs: source_coefficients(&Polynomial::one(n), &rows, &index)?,
        info: SourceMatrix { source: BlockSource::Moment, rows },
    });
    for (i, (g, k)) in p.constraints().iter().zip(p.constraint_degree_bounds()).enumerate() {
        let rows = monomials_up_to(n, d - k)?;
        sources.push(SourceData {
            coeffs: source_coefficients(&g.to_f64(), &rows, &index)?,
            info: SourceMatrix { source: BlockSource::Localizing(i), rows },
        });
    }

    let blocks = sources.iter().flat_map(|s| blocks_for(kind.relaxation, s)).collect();
    Ok(ConicProgram {
        kind,
        order: d,
        num_vars: n,
        moments,
        objective: objective_vec,
        equalities,
        sources: sources.into_iter().map(|s| s.info).collect(),
        blocks,
    })
}

/// Lasserre (moment/SOS) relaxation of order `d`.
pub fn build_lasserre(p: &PolyProblem, d: u32) -> Result<ConicProgram, RelaxationError> {
    assemble(p, HierarchyKind::LASSERRE, d, p.objective())
}

/// SDSOS relaxation: every PSD block of the Lasserre relaxation replaced by
/// its 2×2 principal submatrices; single-row blocks become sign constraints.
pub fn build_sdsos(p: &PolyProblem, d: u32) -> Result<ConicProgram, RelaxationError> {
    assemble(p, HierarchyKind::SDSOS, d, p.objective())
}

/// DSOS relaxation: diagonal entries nonnegative (once each) and
/// `B(α,α) ± 2B(α,β) + B(β,β) ≥ 0` for every pair.
pub fn build_dsos(p: &PolyProblem, d: u32) -> Result<ConicProgram, RelaxationError> {
    assemble(p, HierarchyKind::DSOS, d, p.objective())
}

/// r-variant: minimise `L_y((Σ x_j²)^r f)` subject to `y_0 = 1`,
/// `L_y((Σ x_j²)^r) = 1` and the usual order-`d` cone constraints of `kind`.
pub fn build_r_variant(
    p: &PolyProblem,
    d: u32,
    r: u32,
    relaxation: Relaxation,
) -> Result<ConicProgram, RelaxationError> {
    if r == 0 {
        return Err(RelaxationError::InvalidPower);
    }
    let s = Polynomial::<QSqrt2>::sum_of_squares_power(p.num_vars(), r);
    let objective = &s * p.objective();
    assemble(p, HierarchyKind { relaxation, r }, d, &objective)
}

/// Dispatches on `kind.r`.
pub fn build(p: &PolyProblem, kind: HierarchyKind, d: u32) -> Result<ConicProgram, RelaxationError> {
    if kind.r == 0 {
        assemble(p, kind, d, p.objective())
    } else {
        build_r_variant(p, d, kind.r, kind.relaxation)
    }
}

/// Number of 2×2 cone constraints of the order-`d` SDSOS relaxation:
/// `C(C(n+d, d), 2) + Σ_i C(C(n+d−k_i, d−k_i), 2)`. Constraints with
/// `k_i > d` have no localizing block and contribute nothing.
pub fn count_soc_constraints(n: usize, d: u32, constraint_degrees: &[u32]) -> u64 {
    let pairs = |e: u32| binomial(count_monomials(n, e) as u64, 2);
    pairs(d)
        + constraint_degrees
            .iter()
            .filter(|&&k| k <= d)
            .map(|&k| pairs(d - k))
            .sum::<u64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text;

    fn problem(obj: &str, cons: &[&str], n: usize) -> PolyProblem {
        let names = text::default_names(n);
        PolyProblem::new(
            names.clone(),
            text::parse(obj, &names).unwrap(),
            cons.iter().map(|c| text::parse(c, &names).unwrap()).collect(),
        )
        .unwrap()
    }

    fn counterexample() -> PolyProblem {
        problem(
            "(4) + (-4)*x1 + (-4)*x2 + (1)*x1^2 + (2)*x1*x2 + (1)*x2^2",
            &["(1) + (-1)*x1^2 + (-1)*x2^2"],
            2,
        )
    }

    fn psd_dims(cp: &ConicProgram) -> Vec<usize> {
        cp.blocks.iter().filter(|b| b.cone == Cone::Psd).map(ConeBlock::dim).collect()
    }

    #[test]
    fn lasserre_block_shapes() {
        let p = counterexample();
        assert_eq!(psd_dims(&build_lasserre(&p, 1).unwrap()), vec![3, 1]);
        assert_eq!(psd_dims(&build_lasserre(&p, 2).unwrap()), vec![6, 3]);
        let unconstrained = problem("(1)*x1^2", &[], 1);
        assert_eq!(psd_dims(&build_lasserre(&unconstrained, 1).unwrap()), vec![2]);
    }

    #[test]
    fn lasserre_moment_block_is_hankel() {
        let cp = build_lasserre(&counterexample(), 1).unwrap();
        let y: Vec<f64> = (0..cp.moments.len()).map(|i| i as f64 + 1.0).collect();
        let m = cp.blocks[0].evaluate(&y);
        let idx = |e: &[u32]| cp.moment_index(&MultiIndex::new(e.to_vec())).unwrap() as f64 + 1.0;
        assert_eq!(m[5], idx(&[1, 1]));
        assert_eq!(m[0], idx(&[0, 0]));
        assert_eq!(m[4], idx(&[2, 0]));
        let loc = cp.blocks[1].evaluate(&y);
        assert_eq!(loc[0], idx(&[0, 0]) - idx(&[2, 0]) - idx(&[0, 2]));
    }

    #[test]
    fn sdsos_counts() {
        let cp = build_sdsos(&counterexample(), 1).unwrap();
        assert_eq!(cp.count_blocks(Cone::Soc2x2), 3);
        assert_eq!(cp.count_blocks(Cone::Nonneg), 1);
        assert_eq!(cp.count_blocks(Cone::Psd), 0);
        cp.validate().unwrap();
    }

    #[test]
    fn dsos_counts() {
        let cp = build_dsos(&counterexample(), 1).unwrap();
        let moment_rows = cp.blocks.iter().filter(|b| b.source == BlockSource::Moment).count();
        assert_eq!(moment_rows, 3 + 6);
        assert_eq!(cp.count_blocks(Cone::Nonneg), 10);
        assert_eq!(cp.blocks.len(), 10);
        cp.validate().unwrap();
    }

    #[test]
    fn order_too_small() {
        let p = counterexample();
        assert_eq!(
            build_lasserre(&p, 0).unwrap_err(),
            RelaxationError::OrderTooSmall { order: 0, required: 1 }
        );
        assert_eq!(
            build_r_variant(&p, 1, 1, Relaxation::Sdsos).unwrap_err(),
            RelaxationError::OrderTooSmall { order: 1, required: 2 }
        );
        assert_eq!(build_r_variant(&p, 2, 0, Relaxation::Sdsos).unwrap_err(), RelaxationError::InvalidPower);
    }

    #[test]
    fn r_variant_objective_and_normalisation() {
        let cp = build_r_variant(&counterexample(), 2, 1, Relaxation::Sdsos).unwrap();
        assert_eq!(cp.equalities.len(), 2);
        let s_coeffs: Vec<_> = cp.equalities[1].coeffs.iter().map(|&(i, c)| (cp.moments[i].clone(), c)).collect();
        assert_eq!(
            s_coeffs,
            vec![(MultiIndex::new(vec![2, 0]), 1.0), (MultiIndex::new(vec![0, 2]), 1.0)]
        );
        // (x1²+x2²)·f has degree 4 and constant term 0
        assert_eq!(cp.objective[0], 0.0);
        let x1_4 = cp.moment_index(&MultiIndex::new(vec![4, 0])).unwrap();
        assert_eq!(cp.objective[x1_4], 1.0);
        cp.validate().unwrap();
        build_r_variant(&counterexample(), 2, 1, Relaxation::Lasserre).unwrap().validate().unwrap();
        build_r_variant(&counterexample(), 3, 1, Relaxation::Dsos).unwrap().validate().unwrap();
    }

    #[test]
    fn soc_count_formula() {
        assert_eq!(count_soc_constraints(10, 2, &[]), 2145);
        assert_eq!(count_soc_constraints(2, 1, &[1]), 3);
        assert_eq!(count_soc_constraints(1, 1, &[]), 1);
    }

    #[test]
    fn emitted_soc_blocks_match_formula() {
        for n in 1..=4usize {
            for d in 1..=3u32 {
                let names = text::default_names(n);
                let mut ball = "(1)".to_string();
                for v in &names {
                    ball.push_str(&format!(" + (-1)*{v}^2"));
                }
                let p = problem(&format!("(1)*{}^2", names[0]), &[&ball, &format!("(1)*{}", names[n - 1])], n);
                let cp = build_sdsos(&p, d).unwrap();
                assert_eq!(cp.count_blocks(Cone::Soc2x2) as u64, count_soc_constraints(n, d, &[1, 1]), "n={n} d={d}");
            }
        }
    }

    #[test]
    fn dual_gram_assembly_inverts_projection() {
        let cp = build_dsos(&counterexample(), 1).unwrap();
        // unit weight on the (x1 + x2) row only
        let duals: Vec<Vec<f64>> = cp
            .blocks
            .iter()
            .map(|b| {
                let is_plus_pair = b.source == BlockSource::Moment
                    && b.columns[0].len() == 2
                    && b.columns[0][1].1 == 1.0
                    && b.columns[0][0].0 == MultiIndex::new(vec![1, 0]);
                vec![if is_plus_pair { 1.0 } else { 0.0 }]
            })
            .collect();
        let g = cp.gram_matrix(BlockSource::Moment, &duals).unwrap();
        assert_eq!(*g.get(1, 1), 1.0);
        assert_eq!(*g.get(1, 2), 1.0);
        assert_eq!(*g.get(2, 2), 1.0);
        assert_eq!(*g.get(0, 0), 0.0);
    }
}
