//! SDPA sparse (`.dat-s`) export.
//!
//! Variables are the moments `y_α`, `α ≠ 0`, numbered as in the program;
//! `y_0 = 1` is folded into `F_0`. Every PSD and 2×2 block becomes one SDPA
//! block; all scalar inequality rows, plus both directions of any further
//! equality, share one trailing diagonal block.

use std::fmt::Write;

use crate::relaxations::{Cone, ConeBlock, ConicProgram, LinearEquality};

fn describe_column(col: &[(crate::algebra::MultiIndex, f64)]) -> String {
    let mut out = String::new();
    for (k, (row, w)) in col.iter().enumerate() {
        let sign = if *w < 0.0 { "-" } else if k > 0 { "+" } else { "" };
        let mag = w.abs();
        if mag == 1.0 {
            let _ = write!(out, "{sign}{row}");
        } else {
            let _ = write!(out, "{sign}{mag}*{row}");
        }
    }
    out
}

fn is_normalization(eq: &LinearEquality) -> bool {
    eq.coeffs.len() == 1 && eq.coeffs[0] == (0, 1.0) && eq.rhs == 1.0
}

/// One scalar row `a·y + a_0 ≥ 0` of the diagonal block.
struct DiagRow {
    coeffs: Vec<(usize, f64)>,
    label: String,
}

/// Renders the program in SDPA sparse format.
pub fn write_sdpa(cp: &ConicProgram) -> String {
    let m = cp.moments.len() - 1;
    let matrix_blocks: Vec<&ConeBlock> = cp.blocks.iter().filter(|b| b.cone != Cone::Nonneg).collect();
    let mut diag: Vec<DiagRow> = cp
        .blocks
        .iter()
        .filter(|b| b.cone == Cone::Nonneg)
        .map(|b| DiagRow {
            coeffs: b.terms.iter().map(|t| (t.moment, t.matrix[0])).collect(),
            label: format!("nonneg {} {}", b.source, describe_column(&b.columns[0])),
        })
        .collect();
    for eq in cp.equalities.iter().filter(|e| !is_normalization(e)) {
        // a·y = rhs as a·y − rhs ≥ 0 and rhs − a·y ≥ 0
        let mut up = eq.coeffs.clone();
        up.push((0, -eq.rhs));
        let down = up.iter().map(|&(i, v)| (i, -v)).collect();
        diag.push(DiagRow { coeffs: up, label: "equality (>=)".into() });
        diag.push(DiagRow { coeffs: down, label: "equality (<=)".into() });
    }

    let mut out = String::new();
    let _ = writeln!(out, "* kind {} order {} variables {}", cp.kind, cp.order, cp.num_vars);
    let _ = writeln!(out, "* objective constant {} (y_0 = 1 substituted)", cp.objective[0]);
    for (i, alpha) in cp.moments.iter().enumerate().skip(1) {
        let _ = writeln!(out, "* x{i} = y{alpha}");
    }
    for (k, b) in matrix_blocks.iter().enumerate() {
        let cols: Vec<String> = b.columns.iter().map(|c| describe_column(c)).collect();
        let cone = match b.cone {
            Cone::Psd => "psd",
            _ => "soc2x2",
        };
        let _ = writeln!(out, "* block {} {} {} rows {}", k + 1, cone, b.source, cols.join(" "));
    }
    if !diag.is_empty() {
        let _ = writeln!(out, "* block {} diagonal:", matrix_blocks.len() + 1);
        for (r, row) in diag.iter().enumerate() {
            let _ = writeln!(out, "*   row {} {}", r + 1, row.label);
        }
    }

    let nblocks = matrix_blocks.len() + usize::from(!diag.is_empty());
    let mut sizes: Vec<String> = matrix_blocks.iter().map(|b| b.dim().to_string()).collect();
    if !diag.is_empty() {
        sizes.push(format!("-{}", diag.len()));
    }
    let _ = writeln!(out, "{m}");
    let _ = writeln!(out, "{nblocks}");
    let _ = writeln!(out, "{}", sizes.join(" "));
    let costs: Vec<String> = cp.objective[1..].iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "{}", costs.join(" "));

    // F_0 carries the negated constant part
    let emit = |out: &mut String, moment: usize, blk: usize, i: usize, j: usize, v: f64| {
        if v != 0.0 {
            let v = if moment == 0 { -v } else { v };
            let _ = writeln!(out, "{moment} {blk} {} {} {v}", i + 1, j + 1);
        }
    };
    for (k, b) in matrix_blocks.iter().enumerate() {
        let n = b.dim();
        for t in &b.terms {
            for i in 0..n {
                for j in i..n {
                    emit(&mut out, t.moment, k + 1, i, j, t.matrix[i * n + j]);
                }
            }
        }
    }
    let blk = matrix_blocks.len() + 1;
    for (r, row) in diag.iter().enumerate() {
        for &(moment, v) in &row.coeffs {
            emit(&mut out, moment, blk, r, r, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{text, Polynomial};
    use crate::relaxations::{build, HierarchyKind, PolyProblem};

    fn structure(s: &str) -> (usize, Vec<i64>) {
        let mut lines = s.lines().filter(|l| !l.starts_with('*'));
        let m = lines.next().unwrap().parse().unwrap();
        lines.next();
        let sizes = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
        (m, sizes)
    }

    fn counterexample() -> PolyProblem {
        let names = text::default_names(2);
        PolyProblem::new(
            names.clone(),
            text::parse("(4) + (-4)*x1 + (-4)*x2 + (1)*x1^2 + (2)*x1*x2 + (1)*x2^2", &names).unwrap(),
            vec![text::parse("(1) + (-1)*x1^2 + (-1)*x2^2", &names).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn lasserre_blocks() {
        let s = write_sdpa(&build(&counterexample(), HierarchyKind::LASSERRE, 1).unwrap());
        assert_eq!(structure(&s), (5, vec![3, 1]));
        assert!(s.contains("* objective constant 4"));
    }

    #[test]
    fn sdsos_blocks() {
        let s = write_sdpa(&build(&counterexample(), HierarchyKind::SDSOS, 1).unwrap());
        assert_eq!(structure(&s), (5, vec![2, 2, 2, -1]));
    }

    #[test]
    fn r_variant_equality_goes_diagonal() {
        let cp = build(&counterexample(), HierarchyKind::SDSOS.with_r(1), 2).unwrap();
        let s = write_sdpa(&cp);
        let (_, sizes) = structure(&s);
        let nonneg = cp.count_blocks(Cone::Nonneg) as i64;
        assert_eq!(*sizes.last().unwrap(), -(nonneg + 2));
        assert!(s.contains("equality (>=)") && s.contains("equality (<=)"));
    }

    #[test]
    fn pure_lp_is_diagonal() {
        let names = text::default_names(1);
        let f: Polynomial<_> = text::parse("(1)*x1^2 + (-1)*x1", &names).unwrap();
        let p = PolyProblem::new(names, f, vec![]).unwrap();
        let s = write_sdpa(&build(&p, HierarchyKind::DSOS, 1).unwrap());
        let (m, sizes) = structure(&s);
        assert_eq!(m, 2);
        // two diagonals and the ± rows of the single pair
        assert_eq!(sizes, vec![-4]);
    }
}
