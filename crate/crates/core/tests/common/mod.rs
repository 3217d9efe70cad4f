#![allow(dead_code)]

use hierarchy_lab::algebra::{text, MultiIndex, Polynomial, QSqrt2};
use hierarchy_lab::relaxations::PolyProblem;
use hierarchy_lab::solver::sdp::BlockSdp;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn names(n: usize) -> Vec<String> {
    text::default_names(n)
}

pub fn q(s: &str) -> QSqrt2 {
    s.parse().unwrap()
}

pub fn poly(s: &str, n: usize) -> Polynomial<QSqrt2> {
    text::parse(s, &names(n)).unwrap()
}

/// `(x1 + x2 − 2)²` on the unit disk, written out by hand.
pub fn disk_problem() -> PolyProblem {
    PolyProblem::new(
        names(2),
        poly("(4) + (-4)*x1 + (-4)*x2 + (1)*x1^2 + (2)*x1*x2 + (1)*x2^2", 2),
        vec![poly("(1) + (-1)*x1^2 + (-1)*x2^2", 2)],
    )
    .unwrap()
}

pub fn ball(n: usize) -> Polynomial<QSqrt2> {
    let mut g = Polynomial::constant(n, QSqrt2::from_int(1));
    for j in 0..n {
        let xj = Polynomial::var(n, j);
        g = &g - &(&xj * &xj);
    }
    g
}

/// Random quadratic with half-integer coefficients in [-2, 2] over the unit
/// ball.
pub fn random_ball_quadratic(rng: &mut impl Rng, n: usize) -> PolyProblem {
    let mut terms = Vec::new();
    for a in 0..=n {
        for b in a..=n {
            let mut e = vec![0u32; n];
            if a > 0 {
                e[a - 1] += 1;
            }
            if b > 0 {
                e[b - 1] += 1;
            }
            let c: i64 = rng.gen_range(-4..=4);
            terms.push((MultiIndex::new(e), QSqrt2::from_fracs(c, 2, 0, 1)));
        }
    }
    let f = Polynomial::from_terms(n, terms).unwrap();
    PolyProblem::new(names(n), f, vec![ball(n)]).unwrap()
}

/// Smallest objective value over random points of the unit ball; an upper
/// bound on the true minimum.
pub fn sampled_min(p: &PolyProblem, rng: &mut impl Rng, samples: usize) -> f64 {
    let f = p.objective().to_f64();
    let n = p.num_vars();
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > 1.0 {
            // project onto the sphere; the minimum may sit on the boundary
            let r = r2.sqrt();
            x.iter_mut().for_each(|v| *v /= r);
        }
        best = best.min(f.eval(&x).unwrap());
    }
    best
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                if a[p][r].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akr) = (a[k][p], a[k][r]);
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for k in 0..n {
                    let (apk, ark) = (a[p][k], a[r][k]);
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j])
}

/// `min ⟨C, X⟩ s.t. tr X = 1, X ⪰ 0`, optimum `λ_min(C)`.
pub fn lambda_min_sdp(c: &[Vec<f64>]) -> BlockSdp {
    let n = c.len();
    BlockSdp {
        block_dims: vec![n],
        c: vec![to_dmatrix(c)],
        a: vec![vec![(0, DMatrix::identity(n, n))]],
        b: DVector::from_element(1, 1.0),
    }
}

/// `max −c·t s.t. [[1, tᵀ], [t, I]] ⪰ 0`, i.e. `min c·t` over the unit
/// ball, optimum `−‖c‖`. Returned as the dual of a block SDP.
pub fn soc_ball_sdp(c: &[f64]) -> BlockSdp {
    let k = c.len();
    let a = (0..k)
        .map(|j| {
            let mut m = DMatrix::zeros(k + 1, k + 1);
            m[(0, j + 1)] = -1.0;
            m[(j + 1, 0)] = -1.0;
            vec![(0, m)]
        })
        .collect();
    BlockSdp {
        block_dims: vec![k + 1],
        c: vec![DMatrix::identity(k + 1, k + 1)],
        a,
        b: DVector::from_iterator(k, c.iter().map(|v| -v)),
    }
}

/// `min c·x s.t. Σ x = 1, x ≥ 0`, optimum `min_i c_i`.
pub fn simplex_lp(c: &[f64]) -> BlockSdp {
    let n = c.len();
    BlockSdp {
        block_dims: vec![1; n],
        c: c.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
        a: vec![(0..n).map(|i| (i, DMatrix::from_element(1, 1, 1.0))).collect()],
        b: DVector::from_element(1, 1.0),
    }
}

/// Number of exponent vectors in `n` variables of degree at most `d`, by
/// enumeration.
pub fn enumerate_monomials(n: usize, d: u32) -> usize {
    fn rec(n: usize, left: u32) -> usize {
        if n == 0 {
            return 1;
        }
        (0..=left).map(|e| rec(n - 1, left - e)).sum()
    }
    rec(n, d)
}
