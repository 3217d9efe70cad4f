mod common;

use hierarchy_lab::algebra::{MultiIndex, Polynomial, QSqrt2};
use hierarchy_lab::certificates::{certify_nonexistence_report, kkt_residual, verify_identity, MomentWitness};
use hierarchy_lab::counterexample::{lasserre_certificate, problem, reproduce, sdsos_certificate, ReferenceData};
use hierarchy_lab::moments::counterexample_sequence;
use hierarchy_lab::relaxations::{build, BlockSource, ConicProgram, HierarchyKind};
use hierarchy_lab::solver::{multiplier_polynomial, solve, SolveOptions, SolveResult};

use common::q;

fn solved(kind: HierarchyKind, d: u32, tolerance: f64) -> (ConicProgram, SolveResult) {
    let cp = build(&problem(), kind, d).unwrap();
    let res = solve(&cp, &SolveOptions { tolerance, ..SolveOptions::default() }).unwrap();
    assert!(res.is_optimal(), "{kind} d={d}: {:?}", res.status);
    (cp, res)
}

/// `f − λ − σ0 − σ1 g` for the numerical dual solution.
fn dual_identity_residual(cp: &ConicProgram, res: &SolveResult) -> f64 {
    let p = problem();
    let f = p.objective().to_f64();
    let g = p.constraints()[0].to_f64();
    let s0 = multiplier_polynomial(cp, &res.dual_blocks, BlockSource::Moment).unwrap();
    let s1 = multiplier_polynomial(cp, &res.dual_blocks, BlockSource::Localizing(0)).unwrap();
    let lambda = Polynomial::constant(2, res.dual_value);
    let r = &(&(&f - &lambda) - &s0) - &(&s1 * &g);
    r.max_abs_coeff()
}

fn witness(alpha: &MultiIndex) -> QSqrt2 {
    counterexample_sequence(alpha).unwrap()
}

#[test]
fn reference_data_is_consistent() {
    ReferenceData::default().check().unwrap();
    let p = problem();
    let r = ReferenceData::default();
    assert!(kkt_residual(&r.minimizer, &r.multiplier, &p).unwrap().is_zero());
    assert!(!kkt_residual(&r.minimizer, &(&r.multiplier + &q("1/100")), &p).unwrap().is_zero());
    assert!(verify_identity(&p, &lasserre_certificate()).unwrap().is_zero());
    assert!(verify_identity(&p, &sdsos_certificate()).unwrap().is_zero());
}

#[test]
fn sdsos_bounds_are_capped_by_the_witness() {
    let w = MomentWitness { name: "counterexample", generator: &witness };
    let global = q("6-4*sqrt2");
    let report = certify_nonexistence_report(
        &problem(),
        HierarchyKind::SDSOS,
        &[1, 2, 3],
        Some(&global),
        Some(&w),
        &SolveOptions::default(),
    )
    .unwrap();
    let cap = 4.0 * (1.0 - 2f64.sqrt());
    for o in &report.orders {
        assert_eq!(o.within_cap, Some(true), "order {}", o.order);
        assert_eq!(o.exact_cap.as_ref().unwrap().exact, "4-4*sqrt2");
        assert!((o.gap_to_reference.unwrap() - 2.0).abs() < 2e-6);
    }
    assert!((report.overall_cap().unwrap() - cap).abs() < 1e-12);
}

#[test]
fn lasserre_closes_the_gap_and_r_variant_stays_capped() {
    let global = q("6-4*sqrt2");
    let las = certify_nonexistence_report(&problem(), HierarchyKind::LASSERRE, &[1, 2], Some(&global), None, &SolveOptions::default())
        .unwrap();
    for o in &las.orders {
        assert!(o.gap_to_reference.unwrap().abs() < 1e-6, "order {}: {:?}", o.order, o.gap_to_reference);
    }
    // the witness is not a measure, so no Lasserre order accepts it
    let w = MomentWitness { name: "counterexample", generator: &witness };
    let las = certify_nonexistence_report(&problem(), HierarchyKind::LASSERRE, &[1], None, Some(&w), &SolveOptions::default())
        .unwrap();
    assert!(las.orders[0].exact_cap.is_none());

    let r1 = certify_nonexistence_report(&problem(), HierarchyKind::SDSOS.with_r(1), &[2], None, Some(&w), &SolveOptions::default())
        .unwrap();
    let o = &r1.orders[0];
    assert_eq!(o.exact_cap.as_ref().unwrap().exact, "4-4*sqrt2");
    assert_eq!(o.within_cap, Some(true));
    assert!(o.bound.unwrap() <= 1e-6);
}

#[test]
fn numerical_dual_certificates_satisfy_the_identity() {
    for kind in [HierarchyKind::LASSERRE, HierarchyKind::SDSOS, HierarchyKind::DSOS] {
        for d in 1..=2 {
            let (cp, res) = solved(kind, d, 1e-8);
            let r = dual_identity_residual(&cp, &res);
            assert!(r <= 1e-5, "{kind} d={d}: residual {r}");
        }
    }
}

#[test]
fn sdsos_dual_matches_exact_certificate() {
    let (cp, res) = solved(HierarchyKind::SDSOS, 1, 1e-11);
    let cert = sdsos_certificate();
    let n = 2;
    for (i, source) in [BlockSource::Moment, BlockSource::Localizing(0)].into_iter().enumerate() {
        let numeric = multiplier_polynomial(&cp, &res.dual_blocks, source).unwrap();
        let exact = cert.multipliers[i].polynomial(n).unwrap().to_f64();
        let diff = (&numeric - &exact).max_abs_coeff();
        assert!(diff <= 1e-5, "sigma{i}: {numeric} vs {exact}");
    }
    assert!((res.dual_value - cert.lambda.to_f64()).abs() <= 1e-8);
}

#[test]
fn sdsos_bounds_dominate_the_exact_certificate() {
    let lambda = sdsos_certificate().lambda.to_f64();
    for d in 1..=3 {
        let (_, res) = solved(HierarchyKind::SDSOS, d, 1e-8);
        assert!(res.bound() >= lambda - 1e-6, "d={d}: {}", res.bound());
    }
}

#[test]
fn reproduce_default_orders_pass() {
    let report = reproduce(&[1, 2, 3], 1e-6).unwrap();
    let failures: Vec<_> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    assert!(report.passed, "{failures:#?}");
    // r = 1 needs order 2, so two cells are absent at order 1
    assert_eq!(report.cells.len(), 13);
}
