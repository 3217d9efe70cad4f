//! Dense primal-dual path-following method for block-diagonal SDPs
//!
//! ```text
//! (P)  min ⟨C, X⟩   s.t. ⟨A_j, X⟩ = b_j,  X ⪰ 0
//! (D)  max bᵀt      s.t. Σ t_j A_j + Z = C,  Z ⪰ 0
//! ```
//!
//! Search directions are HKM (`ΔX` from `ΔX Z + X ΔZ = R_c`, then
//! symmetrised) with a Mehrotra predictor-corrector. LP constraints are
//! 1×1 blocks and 2×2 cone constraints are 2×2 blocks; everything goes
//! through the same code path.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::SolveStatus;

/// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.99;
/// Objective magnitude treated as divergence.
const DIVERGENCE: f64 = 1e8;
const REFINEMENT_STEPS: usize = 2;
const STAGNATION_LIMIT: usize = 30;

#[derive(Debug, Clone)]
pub struct BlockSdp {
    pub block_dims: Vec<usize>,
    pub c: Vec<DMatrix<f64>>,
    /// For each `t_j`, its nonzero `(block, A_jb)` pieces.
    pub a: Vec<Vec<(usize, DMatrix<f64>)>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<DMatrix<f64>>,
    pub t: DVector<f64>,
    /// `⟨C, X⟩`
    pub pobj: f64,
    /// `bᵀt`
    pub dobj: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl BlockSdp {
    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// `A(K)_j = Σ_b ⟨A_jb, K_b⟩`.
    fn apply_a(&self, k: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|pieces| pieces.iter().map(|(blk, m)| m.dot(&k[*blk])).sum::<f64>()),
        )
    }

    /// `Σ_j t_j A_j`, block by block.
    fn apply_at(&self, t: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (j, pieces) in self.a.iter().enumerate() {
            for (blk, m) in pieces {
                out[*blk] += m * t[j];
            }
        }
        out
    }

    fn pieces_by_block(&self) -> Vec<Vec<(usize, &DMatrix<f64>)>> {
        let mut by_block = vec![Vec::new(); self.block_dims.len()];
        for (j, pieces) in self.a.iter().enumerate() {
            for (blk, m) in pieces {
                by_block[*blk].push((j, m));
            }
        }
        by_block
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `α` with `X + α ΔX ⪰ 0`, or infinity.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n == 1 {
        return if dx[(0, 0)] < 0.0 { -x[(0, 0)] / dx[(0, 0)] } else { f64::INFINITY };
    }
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let w = symmetrize(&(&linv * dx * linv.transpose()));
    let lmin = if n == 2 {
        let (a, b, c) = (w[(0, 0)], w[(0, 1)], w[(1, 1)]);
        0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
    } else {
        SymmetricEigen::new(w).eigenvalues.min()
    };
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 1 {
        let v = m[(0, 0)];
        return (v > 0.0).then(|| DMatrix::from_element(1, 1, 1.0 / v));
    }
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Iterate with the smallest worst residual seen so far.
struct Snapshot {
    merit: f64,
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    t: DVector<f64>,
    pinf: f64,
    dinf: f64,
    gap: f64,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    dt: DVector<f64>,
}

struct Iterate<'a> {
    sdp: &'a BlockSdp,
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    t: DVector<f64>,
}

impl Iterate<'_> {
    fn newton(
        &self,
        zinv: &[DMatrix<f64>],
        schur: &SchurSystem,
        rp: &DVector<f64>,
        rd: &[DMatrix<f64>],
        rc: &[DMatrix<f64>],
    ) -> Direction {
        let sdp = self.sdp;
        // rc excludes the −XZ term: (−XZ)Z⁻¹ is taken as −X exactly.
        let k: Vec<DMatrix<f64>> = (0..self.x.len())
            .map(|b| (&rc[b] - &self.x[b] * &rd[b]) * &zinv[b] - &self.x[b])
            .collect();
        let rhs = rp - sdp.apply_a(&k);
        let dt = schur.solve(&rhs);
        let at = sdp.apply_at(&dt);
        let dz: Vec<DMatrix<f64>> = rd.iter().zip(&at).map(|(r, a)| r - a).collect();
        let dx = (0..self.x.len())
            .map(|b| symmetrize(&((&rc[b] - &self.x[b] * &dz[b]) * &zinv[b] - &self.x[b])))
            .collect();
        Direction { dx, dz, dt }
    }

    fn step_lengths(&self, d: &Direction) -> (f64, f64) {
        let ap = self.x.iter().zip(&d.dx).map(|(x, dx)| max_step(x, dx)).fold(f64::INFINITY, f64::min);
        let ad = self.z.iter().zip(&d.dz).map(|(z, dz)| max_step(z, dz)).fold(f64::INFINITY, f64::min);
        (ap, ad)
    }
}

fn schur_complement(
    sdp: &BlockSdp,
    by_block: &[Vec<(usize, &DMatrix<f64>)>],
    x: &[DMatrix<f64>],
    zinv: &[DMatrix<f64>],
) -> DMatrix<f64> {
    let m = sdp.num_constraints();
    let mut schur = DMatrix::zeros(m, m);
    for (blk, pieces) in by_block.iter().enumerate() {
        for (pj, (j, aj)) in pieces.iter().enumerate() {
            let p = &x[blk] * *aj * &zinv[blk];
            let pt = p.transpose();
            for (i, ai) in pieces.iter().take(pj + 1) {
                let v = ai.dot(&pt);
                schur[(*i, *j)] += v;
                if i != j {
                    schur[(*j, *i)] += v;
                }
            }
        }
    }
    schur
}

/// Schur complement with its (possibly regularised) Cholesky factor;
/// solves are refined against the unregularised matrix.
struct SchurSystem {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl SchurSystem {
    fn new(matrix: DMatrix<f64>) -> Option<Self> {
        let chol = factor(matrix.clone())?;
        Some(SchurSystem { matrix, chol })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        for _ in 0..REFINEMENT_STEPS {
            let r = rhs - &self.matrix * &x;
            x += self.chol.solve(&r);
        }
        x
    }
}

fn factor(mut schur: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = schur.diagonal().amax().max(1.0);
    let mut reg = 0.0;
    for _ in 0..6 {
        if let Some(c) = Cholesky::new(schur.clone()) {
            return Some(c);
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        for i in 0..schur.nrows() {
            schur[(i, i)] += reg;
        }
    }
    None
}

/// Runs the interior-point method from `X = Z = I`, `t = 0`. The objective
/// values are reported relative to `offset` only for the gap test:
/// convergence requires `max(|pobj − dobj|, ⟨X,Z⟩) ≤ tol·(1 + |offset − dobj|)`.
/// A run that ends without converging returns the iterate with the smallest
/// worst residual.
pub fn solve_block_sdp(sdp: &BlockSdp, offset: f64, opts: &SdpOptions) -> SdpSolution {
    let by_block = sdp.pieces_by_block();
    let nblocks = sdp.block_dims.len();
    let total_dim: usize = sdp.block_dims.iter().sum();
    let b_norm = sdp.b.norm();
    let c_norm = frob(&sdp.c);
    let mut it = Iterate {
        sdp,
        x: sdp.block_dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        z: sdp.block_dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        t: DVector::zeros(sdp.num_constraints()),
    };

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let (mut pinf, mut dinf, mut gap);
    let mut stalls = 0;
    let mut best: Option<Snapshot> = None;
    let mut since_best = 0;
    loop {
        let rp = &sdp.b - sdp.apply_a(&it.x);
        let at = sdp.apply_at(&it.t);
        let rd: Vec<DMatrix<f64>> = (0..nblocks).map(|b| &sdp.c[b] - &at[b] - &it.z[b]).collect();
        let pobj = inner(&sdp.c, &it.x);
        let dobj = sdp.b.dot(&it.t);
        let xz = inner(&it.x, &it.z);
        pinf = rp.norm() / (1.0 + b_norm);
        dinf = frob(&rd) / (1.0 + c_norm);
        gap = (pobj - dobj).abs().max(xz) / (1.0 + (offset - dobj).abs());

        if !(pobj.is_finite() && dobj.is_finite()) {
            status = SolveStatus::NumericalFailure;
            break;
        }
        let merit = pinf.max(dinf).max(gap);
        if best.as_ref().is_none_or(|b| merit < b.merit) {
            best = Some(Snapshot { merit, x: it.x.clone(), z: it.z.clone(), t: it.t.clone(), pinf, dinf, gap });
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION_LIMIT {
                status = SolveStatus::NumericalFailure;
                break;
            }
        }
        if pinf <= opts.tolerance && dinf <= opts.tolerance && gap <= opts.tolerance {
            status = SolveStatus::Optimal;
            break;
        }
        if (pobj.abs() > DIVERGENCE || dobj.abs() > DIVERGENCE) && pinf.min(dinf) < 1e-4 {
            status = SolveStatus::InfeasibleDetected;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }
        iterations += 1;

        let Some(zinv) = it.z.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let Some(schur) = SchurSystem::new(schur_complement(sdp, &by_block, &it.x, &zinv)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let mu = xz / total_dim as f64;

        // predictor
        let rc_aff: Vec<DMatrix<f64>> = sdp.block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let aff = it.newton(&zinv, &schur, &rp, &rd, &rc_aff);
        let (ap, ad) = it.step_lengths(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let xz_aff: f64 = (0..nblocks)
            .map(|b| (&it.x[b] + &aff.dx[b] * ap).dot(&(&it.z[b] + &aff.dz[b] * ad)))
            .sum();
        let sigma = (xz_aff / xz).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<DMatrix<f64>> = (0..nblocks)
            .map(|b| {
                let n = sdp.block_dims[b];
                DMatrix::identity(n, n) * (sigma * mu) - &aff.dx[b] * &aff.dz[b]
            })
            .collect();
        let dir = it.newton(&zinv, &schur, &rp, &rd, &rc);
        let (ap, ad) = it.step_lengths(&dir);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            stalls += 1;
            if stalls >= 3 {
                status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
        for b in 0..nblocks {
            it.x[b] += &dir.dx[b] * ap;
            it.z[b] += &dir.dz[b] * ad;
        }
        it.t += &dir.dt * ad;
    }

    if status != SolveStatus::Optimal {
        if let Some(b) = best.filter(|b| !(b.merit >= pinf.max(dinf).max(gap))) {
            it.x = b.x;
            it.z = b.z;
            it.t = b.t;
            (pinf, dinf, gap) = (b.pinf, b.dinf, b.gap);
        }
    }
    SdpSolution {
        status,
        pobj: inner(&sdp.c, &it.x),
        dobj: sdp.b.dot(&it.t),
        x: it.x,
        z: it.z,
        t: it.t,
        iterations,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        gap,
    }
}
