mod common;

use proptest::prelude::*;

use cartan_core::equivalence::{generate_equivalent_pair, verify_candidate};
use cartan_core::jet::transform_operator;
use cartan_core::{ConcreteOperator, FiberTransformation, Problem};

const CASES: u32 = 256;

#[test]
fn ring_laws() {
    common::ring_laws(CASES).unwrap();
}

#[test]
fn canonical_form_is_unique() {
    common::canonical_form(CASES).unwrap();
}

#[test]
fn division_by_a_term_inverts_multiplication() {
    common::div_mul_round_trip(CASES).unwrap();
}

#[test]
fn exterior_derivative_squares_to_zero() {
    common::d_squared_zero(CASES).unwrap();
}

#[test]
fn leibniz_rules() {
    common::leibniz(CASES).unwrap();
}

#[test]
fn exact_and_float_evaluation_agree() {
    common::numeric_consistency(CASES).unwrap();
}

fn arb_operator() -> impl Strategy<Value = ConcreteOperator> {
    let poly = || prop::collection::vec(-4i64..=4, 0..3);
    (poly(), poly(), poly(), 1i64..=4, 0i64..=3).prop_map(|(f0, f1, f2, a, b)| {
        ConcreteOperator::from_polys([&f0, &f1, &f2, &[a, 0, b]]).unwrap()
    })
}

fn arb_mode() -> impl Strategy<Value = Problem> {
    prop_oneof![Just(Problem::Direct), Just(Problem::Gauge)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn candidate_check_is_symmetric(op in arb_operator(), mode in arb_mode(), s1 in 1u64..1000, s2 in 1u64..1000) {
        let (op2, t) = generate_equivalent_pair(&op, mode, s1).unwrap();
        let (_, other) = generate_equivalent_pair(&op, mode, s2).unwrap();
        for cand in [&t, &other] {
            let fwd = verify_candidate(&op, &op2, cand, mode).unwrap().equivalent;
            let back = verify_candidate(&op2, &op, &cand.inverse(), mode).unwrap().equivalent;
            prop_assert_eq!(fwd, back);
        }
        prop_assert!(verify_candidate(&op, &op2, &t, mode).unwrap().equivalent);
    }

    #[test]
    fn transformations_compose(op in arb_operator(), mode in arb_mode(), s1 in 1u64..1000, s2 in 1u64..1000) {
        let (_, t1) = generate_equivalent_pair(&op, mode, s1).unwrap();
        let (_, t2) = generate_equivalent_pair(&op, mode, s2).unwrap();
        let step = transform_operator(&transform_operator(&op, &t1, mode).unwrap(), &t2, mode).unwrap();
        let direct = transform_operator(&op, &t1.then(&t2), mode).unwrap();
        prop_assert_eq!(step, direct);
        let back = transform_operator(&transform_operator(&op, &t1, mode).unwrap(), &t1.inverse(), mode).unwrap();
        prop_assert_eq!(back, op.clone());
        prop_assert_eq!(transform_operator(&op, &FiberTransformation::identity(), mode).unwrap(), op);
    }
}
