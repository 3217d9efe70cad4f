//! Interior-point solution of [`ConicProgram`]s and post-processing of the
//! optimal moments and Gram matrices.

pub mod sdp;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{MultiIndex, Polynomial};
use crate::moments::{MomentSequence, SymMatrix};
use crate::relaxations::{BlockSource, ConicProgram, PolyProblem};
use sdp::{solve_block_sdp, BlockSdp, SdpOptions};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
    InfeasibleDetected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: DEFAULT_TOLERANCE, max_iters: DEFAULT_MAX_ITERS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Relative infeasibility of the moment side.
    pub primal: f64,
    /// Relative infeasibility of the Gram (sum-of-squares) side.
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Moment-side objective `L_y(f)` at the returned `y`.
    pub primal_value: f64,
    /// Sum-of-squares bound `λ`.
    pub dual_value: f64,
    pub y: MomentSequence<f64>,
    /// One row-major Gram matrix per cone block, aligned with
    /// [`ConicProgram::blocks`].
    pub dual_blocks: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// The bound delivered by the relaxation; the midpoint of the two
    /// objective values.
    pub fn bound(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("conic program is malformed: {0}")]
    Malformed(String),
    #[error("equality constraints are inconsistent")]
    InconsistentEqualities,
    #[error("no dual block for {0}")]
    MissingDualBlock(BlockSource),
}

/// `(pivot moment, rhs, [(free position, coefficient)])`: pivot value is
/// `rhs − Σ coefficient · t_f`.
type Pivot = (usize, f64, Vec<(usize, f64)>);

/// `y = particular + Σ_f t_f · basis_f`, from reducing the equalities.
struct Reduction {
    particular: Vec<f64>,
    /// Free moment index for each `t_f`.
    free: Vec<usize>,
    pivots: Vec<Pivot>,
}

fn reduce_equalities(cp: &ConicProgram) -> Result<Reduction, SolverError> {
    let n = cp.moments.len();
    let mut rows: Vec<(Vec<f64>, f64)> = cp
        .equalities
        .iter()
        .map(|eq| {
            let mut r = vec![0.0; n];
            for &(i, c) in &eq.coeffs {
                r[i] += c;
            }
            (r, eq.rhs)
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        if rank == rows.len() {
            break;
        }
        let (best, val) = (rank..rows.len())
            .map(|r| (r, rows[r].0[col].abs()))
            .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val < 1e-12 {
            continue;
        }
        rows.swap(rank, best);
        let p = rows[rank].0[col];
        rows[rank].0.iter_mut().for_each(|v| *v /= p);
        rows[rank].1 /= p;
        let (pivot_row, pivot_rhs) = rows[rank].clone();
        for (r, (row, rhs)) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                *rhs -= f * pivot_rhs;
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    if rows[rank..].iter().any(|(_, rhs)| rhs.abs() > 1e-12) {
        return Err(SolverError::InconsistentEqualities);
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let free_pos: HashMap<usize, usize> = free.iter().enumerate().map(|(p, &c)| (c, p)).collect();
    let mut particular = vec![0.0; n];
    let pivots = pivot_cols
        .iter()
        .zip(&rows)
        .map(|(&col, (row, rhs))| {
            particular[col] = *rhs;
            let deps = row
                .iter()
                .enumerate()
                .filter(|&(c, v)| *v != 0.0 && c != col)
                .map(|(c, &v)| (free_pos[&c], v))
                .collect();
            (col, *rhs, deps)
        })
        .collect();
    Ok(Reduction { particular, free, pivots })
}

fn lower(cp: &ConicProgram, red: &Reduction) -> (BlockSdp, f64) {
    let nfree = red.free.len();
    let free_pos: HashMap<usize, usize> = red.free.iter().enumerate().map(|(p, &c)| (c, p)).collect();
    let pivot_of: HashMap<usize, usize> = red.pivots.iter().enumerate().map(|(k, p)| (p.0, k)).collect();

    let mut c_blocks = Vec::with_capacity(cp.blocks.len());
    let mut a: Vec<Vec<(usize, DMatrix<f64>)>> = vec![Vec::new(); nfree];
    for (bi, block) in cp.blocks.iter().enumerate() {
        let m = block.dim();
        let mut c0 = DMatrix::zeros(m, m);
        let mut per_var: HashMap<usize, DMatrix<f64>> = HashMap::new();
        for term in &block.terms {
            let f = DMatrix::from_row_slice(m, m, &term.matrix);
            if let Some(&p) = free_pos.get(&term.moment) {
                *per_var.entry(p).or_insert_with(|| DMatrix::zeros(m, m)) += &f;
            } else {
                let (_, rhs, deps) = &red.pivots[pivot_of[&term.moment]];
                c0 += &f * *rhs;
                for &(p, coef) in deps {
                    *per_var.entry(p).or_insert_with(|| DMatrix::zeros(m, m)) -= &f * coef;
                }
            }
        }
        c_blocks.push(c0);
        let mut vars: Vec<_> = per_var.into_iter().collect();
        vars.sort_by_key(|(p, _)| *p);
        for (p, bmat) in vars {
            if bmat.iter().any(|&v| v != 0.0) {
                a[p].push((bi, -bmat));
            }
        }
    }
    let mut b = DVector::zeros(nfree);
    for (p, &col) in red.free.iter().enumerate() {
        b[p] = -cp.objective[col];
    }
    let mut offset = 0.0;
    for (col, rhs, deps) in &red.pivots {
        let c = cp.objective[*col];
        offset += c * rhs;
        for &(p, coef) in deps {
            b[p] += c * coef;
        }
    }
    let sdp = BlockSdp {
        block_dims: cp.blocks.iter().map(|b| b.dim()).collect(),
        c: c_blocks,
        a,
        b,
    };
    (sdp, offset)
}

/// Solves the moment relaxation and its sum-of-squares dual.
pub fn solve(cp: &ConicProgram, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
    if !(opts.tolerance > 0.0) {
        return Err(SolverError::InvalidTolerance);
    }
    cp.validate().map_err(SolverError::Malformed)?;
    let red = reduce_equalities(cp)?;
    let (sdp, offset) = lower(cp, &red);
    let sol = solve_block_sdp(
        &sdp,
        offset,
        &SdpOptions { tolerance: opts.tolerance, max_iters: opts.max_iters },
    );

    let mut y = red.particular.clone();
    for (p, &col) in red.free.iter().enumerate() {
        y[col] = sol.t[p];
    }
    for (col, rhs, deps) in &red.pivots {
        y[*col] = rhs - deps.iter().map(|&(p, c)| c * sol.t[p]).sum::<f64>();
    }
    let primal_value: f64 = cp.objective.iter().zip(&y).map(|(c, v)| c * v).sum();
    let y = MomentSequence::from_values(cp.num_vars, 2 * cp.order, y)
        .map_err(|e| SolverError::Malformed(e.to_string()))?;
    Ok(SolveResult {
        status: sol.status,
        primal_value,
        dual_value: offset - sol.pobj,
        y,
        dual_blocks: sol.x.iter().map(|m| m.transpose().as_slice().to_vec()).collect(),
        iterations: sol.iterations,
        residuals: Residuals {
            primal: sol.dual_infeasibility,
            dual: sol.primal_infeasibility,
            gap: sol.gap,
        },
    })
}

/// Reads a minimiser off a numerically rank-one moment matrix: returns
/// `x_j = v(e_j) / v(0)` for the leading eigenvector `v` when
/// `λ₂ / λ₁ < tol`, and `None` otherwise.
pub fn extract_minimizer(m: &SymMatrix<f64>, tol: f64) -> Option<Vec<f64>> {
    let labels = m.row_labels();
    let num_vars = labels.first()?.num_vars();
    let eig = SymmetricEigen::new(m.to_nalgebra());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    if !(top > 0.0) {
        return None;
    }
    if let Some(&second) = order.get(1) {
        if eig.eigenvalues[second].abs() / top >= tol {
            return None;
        }
    }
    let v = eig.eigenvectors.column(order[0]);
    let origin = labels.iter().position(MultiIndex::is_zero)?;
    if v[origin].abs() < 1e-12 {
        return None;
    }
    (0..num_vars)
        .map(|j| {
            let row = labels.iter().position(|l| *l == MultiIndex::unit(num_vars, j))?;
            Some(v[row] / v[origin])
        })
        .collect()
}

/// Multiplier polynomial `σ = Σ G_αβ x^(α+β)` attached to `source`.
pub fn multiplier_polynomial(
    cp: &ConicProgram,
    dual_blocks: &[Vec<f64>],
    source: BlockSource,
) -> Result<Polynomial<f64>, SolverError> {
    let gram = cp
        .gram_matrix(source, dual_blocks)
        .ok_or(SolverError::MissingDualBlock(source))?;
    let rows = gram.row_labels();
    let terms = (0..rows.len())
        .flat_map(|i| (0..rows.len()).map(move |j| (i, j)))
        .map(|(i, j)| (&rows[i] + &rows[j], *gram.get(i, j)));
    Polynomial::from_terms(cp.num_vars, terms).map_err(|e| SolverError::Malformed(e.to_string()))
}

/// Value at `x` of the multiplier `σ_i` of constraint `constraint`; for an
/// optimal Lasserre solve this is the KKT multiplier of that constraint.
pub fn kkt_multiplier_from_dual(
    cp: &ConicProgram,
    dual_blocks: &[Vec<f64>],
    constraint: usize,
    x: &[f64],
) -> Result<f64, SolverError> {
    let sigma = multiplier_polynomial(cp, dual_blocks, BlockSource::Localizing(constraint))?;
    sigma.eval(x).map_err(|e| SolverError::Malformed(e.to_string()))
}

/// KKT multipliers of all constraints at `x`, read from the same dual
/// solution as [`kkt_multiplier_from_dual`] but insensitive to the part of
/// it that the bound does not determine: differentiating
/// `f − λ = σ_0 + Σ σ_i g_i` at `x` gives `∇f = ∇σ_0 + Σ (σ_i ∇g_i + g_i ∇σ_i)`,
/// and trading `σ_0` against `σ_i g_i` leaves `σ_i(x) + δ_i` unchanged, where
/// `Σ δ_i ∇g_i(x) = ∇σ_0(x)` over the active constraints (least squares).
/// Inactive constraints (`|g_i(x)| > active_tol`) keep `σ_i(x)`.
pub fn refined_kkt_multipliers(
    p: &PolyProblem,
    cp: &ConicProgram,
    dual_blocks: &[Vec<f64>],
    x: &[f64],
    active_tol: f64,
) -> Result<Vec<f64>, SolverError> {
    let malformed = |e: crate::algebra::AlgebraError| SolverError::Malformed(e.to_string());
    let n = p.num_vars();
    let m = p.constraints().len();
    let mut raw = Vec::with_capacity(m);
    for i in 0..m {
        raw.push(kkt_multiplier_from_dual(cp, dual_blocks, i, x)?);
    }
    let sigma0 = multiplier_polynomial(cp, dual_blocks, BlockSource::Moment)?;
    let g: Vec<Polynomial<f64>> = p.constraints().iter().map(Polynomial::to_f64).collect();
    let mut active = Vec::new();
    for (i, gi) in g.iter().enumerate() {
        if gi.eval(x).map_err(malformed)?.abs() <= active_tol {
            active.push(i);
        }
    }
    if active.is_empty() {
        return Ok(raw);
    }
    let grad = |q: &Polynomial<f64>| -> Result<DVector<f64>, SolverError> {
        let mut v = DVector::zeros(n);
        for j in 0..n {
            v[j] = q.derivative(j).map_err(malformed)?.eval(x).map_err(malformed)?;
        }
        Ok(v)
    };
    let mut jac = DMatrix::zeros(n, active.len());
    for (c, &i) in active.iter().enumerate() {
        jac.set_column(c, &grad(&g[i])?);
    }
    let rhs = grad(&sigma0)?;
    let delta = jac
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| SolverError::Malformed(e.to_string()))?;
    for (c, &i) in active.iter().enumerate() {
        raw[i] += delta[c];
    }
    Ok(raw)
}

/// Moment matrix `M_d(y)` of a solved program.
pub fn solved_moment_matrix(cp: &ConicProgram, result: &SolveResult) -> SymMatrix<f64> {
    crate::moments::moment_matrix(&result.y, cp.order).expect("solution carries moments up to 2d")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::monomials_up_to;

    #[test]
    fn rank_one_extraction() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let labels = monomials_up_to(2, 1).unwrap();
        let v = [1.0, r, r];
        let m = SymMatrix::from_fn(labels.clone(), |i, j| v[i] * v[j]);
        let x = extract_minimizer(&m, 1e-6).unwrap();
        assert!((x[0] - r).abs() < 1e-12 && (x[1] - r).abs() < 1e-12);

        let id = SymMatrix::from_fn(labels.clone(), |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(extract_minimizer(&id, 1e-6), None);

        // moment matrix of the SDSOS optimum: eigenvalues 1.618, 1, −0.618
        let sd = [[1.0, r, r], [r, 0.5, -0.5], [r, -0.5, 0.5]];
        let m = SymMatrix::from_fn(labels, |i, j| sd[i][j]);
        assert_eq!(extract_minimizer(&m, 1e-6), None);
    }
}
