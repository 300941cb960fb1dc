//! Randomized kernel properties shared by the property suite and the
//! acceptance report. Each check runs `cases` proptest cases and returns the
//! failure message, if any.

#![allow(dead_code, clippy::eq_op)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use cartan_core::forms::differential;
use cartan_core::numeric::evaluate_expr;
use cartan_core::syntax::parse_to_expr;
use cartan_core::{Atom, DForm, Expr, Monomial, Term};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn arb_atom() -> BoxedStrategy<Atom> {
    prop_oneof![
        Just(Atom::X),
        Just(Atom::U),
        Just(Atom::P),
        Just(Atom::Q),
        Just(Atom::R),
        (0u8..4, 0u8..3).prop_map(|(i, k)| Atom::coef(i, k)),
        (1u8..7).prop_map(Atom::group),
    ]
    .boxed()
}

/// Jet coordinates and coefficient atoms only, so that `d` stays within the
/// supported derivative orders.
pub fn arb_jet_atom() -> BoxedStrategy<Atom> {
    prop_oneof![
        Just(Atom::X),
        Just(Atom::U),
        Just(Atom::P),
        Just(Atom::Q),
        Just(Atom::R),
        (0u8..4, 0u8..2).prop_map(|(i, k)| Atom::coef(i, k)),
        (1u8..7).prop_map(Atom::group),
    ]
    .boxed()
}

pub fn arb_exponent() -> impl Strategy<Value = Rational64> {
    prop_oneof![
        3 => (-3i64..=3).prop_filter("nonzero", |n| *n != 0).prop_map(Rational64::from_integer),
        1 => (-4i64..=4).prop_filter("nonzero", |n| *n != 0).prop_map(|n| Rational64::new(n, 3)),
    ]
}

pub fn arb_coeff() -> impl Strategy<Value = BigRational> {
    (-9i64..=9, 1i64..=6).prop_map(|(n, d)| q(n, d))
}

pub fn arb_monomial_from(atoms: BoxedStrategy<Atom>) -> impl Strategy<Value = Monomial> {
    prop::collection::vec((atoms, arb_exponent()), 0..3).prop_map(Monomial::from_factors)
}

pub fn arb_expr_from(atoms: BoxedStrategy<Atom>) -> BoxedStrategy<Expr> {
    prop::collection::vec((arb_coeff(), arb_monomial_from(atoms)), 0..5)
        .prop_map(|ts| Expr::from_terms(ts.into_iter().map(|(coeff, mono)| Term { coeff, mono })))
        .boxed()
}

pub fn arb_expr() -> BoxedStrategy<Expr> {
    arb_expr_from(arb_atom())
}

pub fn arb_jet_expr() -> BoxedStrategy<Expr> {
    arb_expr_from(arb_jet_atom())
}

/// Integer-exponent polynomial-like expressions in the jet coordinates.
pub fn arb_integral_expr() -> BoxedStrategy<Expr> {
    let atom = prop_oneof![Just(Atom::X), Just(Atom::U), Just(Atom::P), Just(Atom::Q), Just(Atom::R)];
    prop::collection::vec((arb_coeff(), prop::collection::vec((atom, -2i64..=3), 0..3)), 0..5)
        .prop_map(|ts| {
            Expr::from_terms(ts.into_iter().map(|(coeff, fs)| Term {
                coeff,
                mono: Monomial::from_factors(fs.into_iter().filter(|(_, e)| *e != 0).map(|(a, e)| (a, Rational64::from_integer(e)))),
            }))
        })
        .boxed()
}

pub fn arb_one_form() -> impl Strategy<Value = DForm> {
    prop::collection::vec((0usize..11, arb_jet_expr()), 0..3).prop_map(DForm::one_form)
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn outcome<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn ring_laws(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(arb_expr(), arb_expr(), arb_expr()), |(a, b, c)| {
        let zero = Expr::zero();
        let one = Expr::one();
        ensure(&a + &b == &b + &a, || "a + b != b + a".into())?;
        ensure(&a * &b == &b * &a, || "a b != b a".into())?;
        ensure(&(&a + &b) + &c == &a + &(&b + &c), || "addition not associative".into())?;
        ensure(&(&a * &b) * &c == &a * &(&b * &c), || "multiplication not associative".into())?;
        ensure(&a * &(&b + &c) == &(&a * &b) + &(&a * &c), || "not distributive".into())?;
        ensure(&a + &zero == a && &a * &one == a, || "identities".into())?;
        ensure((&a - &a).is_zero() && (&a + &(-&a)).is_zero(), || "additive inverse".into())?;
        ensure((&a * &zero).is_zero(), || "zero annihilates".into())?;
        Ok(())
    }))
}

pub fn canonical_form(cases: u32) -> Result<(), String> {
    let terms = prop::collection::vec((arb_coeff(), arb_monomial_from(arb_atom())), 0..6);
    outcome(runner(cases).run(&(terms, any::<u64>()), |(ts, seed)| {
        let build = |v: &[(BigRational, Monomial)]| {
            Expr::from_terms(v.iter().map(|(c, m)| Term { coeff: c.clone(), mono: m.clone() }))
        };
        let a = build(&ts);
        let mut shuffled = ts.clone();
        let n = shuffled.len().max(1);
        shuffled.rotate_left(seed as usize % n);
        if seed % 2 == 1 {
            shuffled.reverse();
        }
        let b = build(&shuffled);
        let summed: Expr = ts.iter().map(|(c, m)| Expr::term(c.clone(), m.clone())).sum();
        ensure(a == b && a == summed, || format!("{a} / {b} / {summed}"))?;
        ensure(a.to_string() == b.to_string(), || "renderings differ".into())?;
        ensure(a.terms().iter().all(|t| t.coeff != q(0, 1)), || "zero coefficient kept".into())?;
        ensure(a.terms().windows(2).all(|w| w[0].mono < w[1].mono), || "terms not strictly sorted".into())?;
        let reparsed = parse_to_expr(&a.to_string()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(reparsed == a, || format!("reparse of {a} gave {reparsed}"))?;
        Ok(())
    }))
}

pub fn div_mul_round_trip(cases: u32) -> Result<(), String> {
    let divisor = (arb_coeff().prop_filter("nonzero", |c| *c != q(0, 1)), arb_monomial_from(arb_atom()));
    outcome(runner(cases).run(&(arb_expr(), divisor), |(a, (c, m))| {
        let t = Expr::term(c, m);
        let back = (&a * &t).div_by_term(&t).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(back == a, || format!("({a})*({t})/({t}) = {back}"))?;
        let inv = Expr::one().div_by_term(&t).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure((&t * &inv).is_one(), || format!("{t} * {inv} != 1"))?;
        Ok(())
    }))
}

pub fn d_squared_zero(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(arb_jet_expr(), arb_one_form()), |(f, w)| {
        let fail = |e: cartan_core::FormsError| TestCaseError::fail(e.to_string());
        let df = differential(&f).map_err(fail)?;
        ensure(df.exterior_derivative().map_err(fail)?.is_zero(), || format!("d d ({f}) != 0"))?;
        let dw = w.exterior_derivative().map_err(fail)?;
        ensure(dw.exterior_derivative().map_err(fail)?.is_zero(), || "d d w != 0".into())?;
        Ok(())
    }))
}

pub fn leibniz(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(arb_jet_expr(), arb_jet_expr(), arb_one_form(), arb_one_form()), |(f, g, a, b)| {
        let fail = |e: cartan_core::FormsError| TestCaseError::fail(e.to_string());
        let lhs = differential(&(&f * &g)).map_err(fail)?;
        let rhs = differential(&g).map_err(fail)?.scale(&f).add(&differential(&f).map_err(fail)?.scale(&g));
        ensure(lhs == rhs, || format!("d(fg) for f = {f}, g = {g}"))?;
        let lhs = a.wedge(&b).exterior_derivative().map_err(fail)?;
        let rhs = a.exterior_derivative().map_err(fail)?.wedge(&b).sub(&a.wedge(&b.exterior_derivative().map_err(fail)?));
        ensure(lhs == rhs, || "d(a^b) != da^b - a^db".into())?;
        Ok(())
    }))
}

/// Exact rational evaluation agrees with `f64` evaluation, and exactly with
/// itself after ring operations.
pub fn numeric_consistency(cases: u32) -> Result<(), String> {
    let point = prop::collection::vec((1i64..=40, 1i64..=12), 5);
    outcome(runner(cases).run(&(arb_integral_expr(), arb_integral_expr(), point), |(a, b, pt)| {
        let vals: BTreeMap<Atom, BigRational> = [Atom::X, Atom::U, Atom::P, Atom::Q, Atom::R]
            .into_iter()
            .zip(pt.iter().map(|&(n, d)| q(n, d)))
            .collect();
        let exact = |e: &Expr| evaluate_expr(e, &|x| vals.get(&x).cloned()).map_err(|e| TestCaseError::fail(e.to_string()));
        let fl = |e: &Expr| e.eval_f64(&|x| vals.get(&x).and_then(|v| v.to_f64())).unwrap();
        let va = exact(&a)?;
        let vb = exact(&b)?;
        let (ea, eb) = (va.as_exact().unwrap().clone(), vb.as_exact().unwrap().clone());
        let prod = exact(&(&a * &b))?;
        ensure(prod.as_exact() == Some(&(&ea * &eb)), || "exact product".into())?;
        let sum = exact(&(&a + &b))?;
        ensure(sum.as_exact() == Some(&(&ea + &eb)), || "exact sum".into())?;
        let f = fl(&a);
        let scale = a.terms().iter().map(|t| {
            let mut v = t.coeff.to_f64().unwrap().abs();
            for &(x, e) in t.mono.factors() {
                v *= vals[&x].to_f64().unwrap().powi(e.to_integer() as i32);
            }
            v
        }).sum::<f64>().max(1e-300);
        ensure((f - va.to_f64()).abs() <= 1e-12 * scale, || format!("{f} vs {}", va.to_f64()))?;
        Ok(())
    }))
}
