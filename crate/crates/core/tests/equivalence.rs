use cartan_core::equivalence::*;
use cartan_core::jet::transform_operator;
use cartan_core::syntax::parse_to_expr;
use cartan_core::{ConcreteOperator, FiberTransformation, Problem};

fn sample_op() -> ConcreteOperator {
    ConcreteOperator::from_polys([&[1, 2], &[0, 1], &[3], &[2, 0, 1]]).unwrap()
}

fn symbolic(op: &ConcreteOperator, mode: Problem, name: &str) -> cartan_core::Expr {
    let map = SignatureMap::new(mode, false).unwrap();
    let inv = substituted_invariants(&map, op).expect("polynomial coefficients substitute exactly");
    inv.into_iter().find(|(n, _)| n == name).unwrap().1
}

#[test]
fn d3_direct_i1() {
    let got = symbolic(&ConcreteOperator::d3(), Problem::Direct, "I1");
    assert_eq!(got, parse_to_expr("-2*p*u^(-2/3)").unwrap());
}

#[test]
fn d3_gauge_i2() {
    let got = symbolic(&ConcreteOperator::d3(), Problem::Gauge, "I2");
    assert_eq!(got, parse_to_expr("-3*p/u").unwrap());
}

#[test]
fn direct_operator_invariant_has_unit_theta5_derivative() {
    let rr = cartan_core::cartan::cached_reduction(Problem::Direct).unwrap();
    let i = cartan_core::jet::operator_invariant(Problem::Direct);
    assert_eq!(rr.derivative_table.apply(5, &i).unwrap(), parse_to_expr("1").unwrap());
}

#[test]
fn symbolic_signature_is_reported_for_polynomial_coefficients() {
    let s = invariant_signature(&ConcreteOperator::d3(), Problem::Direct, &SignatureConfig::default()).unwrap();
    let names: Vec<&str> = s.symbolic.as_ref().unwrap().iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["I", "I1", "I2"]);
    assert_eq!(s.cloud.len(), 5usize.pow(5));
    assert!(s.cloud.iter().all(|c| c.tuple.iter().all(|v| v.is_finite())));
}

#[test]
fn signature_is_invariant_under_generated_maps() {
    let op = sample_op();
    for mode in [Problem::Direct, Problem::Gauge] {
        let map = SignatureMap::new(mode, mode == Problem::Gauge).unwrap();
        for seed in 1..=4 {
            let (op2, t) = generate_equivalent_pair(&op, mode, seed).unwrap();
            let prolonged = t.prolong();
            for pt in GridConfig::with_points(3).points(&op, map.max_order()).unwrap() {
                let Ok(image) = prolonged.apply(&pt) else { continue };
                let Ok(b) = map.tuple(&op2, &image) else { continue };
                let a = map.tuple(&op, &pt).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{mode} seed {seed}: {a:?} vs {b:?}");
                }
            }
        }
    }
}

#[test]
fn identical_operators_are_compatible() {
    let op = sample_op();
    let r = check_necessary(&op, &op, Problem::Direct, &NecessaryConfig::default()).unwrap();
    assert!(r.verdict.is_compatible());
    assert_eq!(r.matched_by_search, 0);
}

#[test]
fn rescaled_d3_is_compatible() {
    let t = FiberTransformation::parse("xi = 2*x; xi_inv = x/2").unwrap();
    for mode in [Problem::Direct, Problem::Gauge] {
        let d3 = ConcreteOperator::d3();
        let image = transform_operator(&d3, &t, mode).unwrap();
        let r = check_necessary(&d3, &image, mode, &NecessaryConfig::default()).unwrap();
        assert!(r.verdict.is_compatible(), "{mode}: {:?}", r.verdict);
    }
}

#[test]
fn generated_pairs_are_compatible() {
    let op = sample_op();
    for mode in [Problem::Direct, Problem::Gauge] {
        for seed in [1, 2] {
            let (op2, _) = generate_equivalent_pair(&op, mode, seed).unwrap();
            let r = check_necessary(&op, &op2, mode, &NecessaryConfig::default()).unwrap();
            assert!(r.verdict.is_compatible(), "{mode} seed {seed}: {:?}", r.verdict);
        }
    }
}

#[test]
fn direct_mode_separates_d3_from_d3_plus_x_d() {
    let d3x = ConcreteOperator::from_polys([&[], &[0, 1], &[], &[1]]).unwrap();
    let r = check_necessary(&ConcreteOperator::d3(), &d3x, Problem::Direct, &NecessaryConfig::default()).unwrap();
    let Verdict::Incompatible(w) = r.verdict else { panic!("expected a witness") };
    assert!(w.best_residual > 1e-6);
}

#[test]
fn gauge_verdict_for_d3_plus_x_d_is_grid_stable() {
    let d3x = ConcreteOperator::from_polys([&[], &[0, 1], &[], &[1]]).unwrap();
    let verdict = |grid: GridConfig| {
        let cfg = NecessaryConfig { signature: SignatureConfig { grid, ..Default::default() }, ..Default::default() };
        check_necessary(&ConcreteOperator::d3(), &d3x, Problem::Gauge, &cfg).unwrap().verdict.is_compatible()
    };
    let base = GridConfig::default();
    assert_eq!(verdict(base.clone()), verdict(base.offset(1, 3)));
}

#[test]
fn candidate_identity_and_generated_pairs() {
    let op = sample_op();
    for mode in [Problem::Direct, Problem::Gauge] {
        let id = verify_candidate(&op, &op, &FiberTransformation::identity(), mode).unwrap();
        assert!(id.equivalent && id.residuals.is_empty());
        for seed in 1..=3 {
            let (op2, t) = generate_equivalent_pair(&op, mode, seed).unwrap();
            let fwd = verify_candidate(&op, &op2, &t, mode).unwrap();
            assert!(fwd.equivalent);
            assert!(fwd.orbit_max_residual < 1e-9, "{}", fwd.orbit_max_residual);
            assert!(!fwd.orbit.is_empty());
            let back = verify_candidate(&op2, &op, &t.inverse(), mode).unwrap();
            assert_eq!(fwd.equivalent, back.equivalent);
        }
    }
}

#[test]
fn candidate_symmetry_holds_for_wrong_maps() {
    let op = sample_op();
    let (op2, _) = generate_equivalent_pair(&op, Problem::Direct, 5).unwrap();
    let (_, wrong) = generate_equivalent_pair(&op, Problem::Direct, 6).unwrap();
    let fwd = verify_candidate(&op, &op2, &wrong, Problem::Direct).unwrap();
    let back = verify_candidate(&op2, &op, &wrong.inverse(), Problem::Direct).unwrap();
    assert!(!fwd.equivalent);
    assert!(!back.equivalent);
}

#[test]
fn shifted_f0_fails_under_identity() {
    let shifted = ConcreteOperator::from_polys([&[1], &[], &[], &[1]]).unwrap();
    let r = verify_candidate(&ConcreteOperator::d3(), &shifted, &FiberTransformation::identity(), Problem::Direct).unwrap();
    assert!(!r.equivalent);
    assert_eq!(r.residuals.len(), 1);
    assert_eq!(r.residuals[0].coefficient, "f0");
    assert_eq!(r.residuals[0].difference, "-1");
}

#[test]
fn generator_is_deterministic_and_seed_zero_is_identity() {
    let op = sample_op();
    let (same, t0) = generate_equivalent_pair(&op, Problem::Gauge, 0).unwrap();
    assert_eq!(same, op);
    assert_eq!(t0, FiberTransformation::identity());
    let a = generate_equivalent_pair(&op, Problem::Gauge, 11).unwrap();
    let b = generate_equivalent_pair(&op, Problem::Gauge, 11).unwrap();
    assert_eq!(a, b);
    let ts: std::collections::BTreeSet<String> =
        (1..=40).map(|s| generate_equivalent_pair(&op, Problem::Direct, s).unwrap().1.to_string()).collect();
    assert_eq!(ts.len(), 40);
}
