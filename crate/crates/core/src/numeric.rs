//! High-precision numeric evaluation of exact expressions.
//!
//! Integer-exponent expressions evaluate to exact rationals. Anything with a
//! fractional exponent is evaluated in double-double arithmetic (about 106
//! mantissa bits), using the real odd-root convention `sign(v)*|v|^(1/d)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;
use twofloat::TwoFloat;

use crate::algebra::{Atom, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("atom `{0}` has no value")]
    UnboundAtom(Atom),
    #[error("even root of a negative number")]
    EvenRootOfNegative,
    #[error("division by zero while evaluating")]
    ZeroDivisor,
}

/// Result of evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(TwoFloat),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(t) => t.hi() + t.lo(),
        }
    }

    pub fn to_real(&self) -> TwoFloat {
        match self {
            Value::Exact(r) => rational_to_real(r),
            Value::Approx(t) => *t,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(t) => write!(f, "{:.17e}", t.hi() + t.lo()),
        }
    }
}

fn bigint_to_real(n: &BigInt) -> TwoFloat {
    let hi = n.to_f64().unwrap_or(f64::INFINITY);
    if !hi.is_finite() {
        return TwoFloat::from(hi);
    }
    let rem = n - BigInt::from_f64_exact(hi);
    TwoFloat::new_add(hi, rem.to_f64().unwrap_or(0.0))
}

trait FromF64Exact {
    fn from_f64_exact(v: f64) -> BigInt;
}

impl FromF64Exact for BigInt {
    fn from_f64_exact(v: f64) -> BigInt {
        num_traits::FromPrimitive::from_f64(v).unwrap_or_default()
    }
}

pub fn rational_to_real(r: &BigRational) -> TwoFloat {
    if r.denom().is_one() {
        return bigint_to_real(r.numer());
    }
    div(bigint_to_real(r.numer()), bigint_to_real(r.denom()))
}

/// Double-double quotient by long division on the leading words; the
/// `TwoFloat / TwoFloat` operator of the `twofloat` crate drops the low word.
pub fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    if !q1.is_finite() {
        return TwoFloat::from(q1);
    }
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// Real `d`-th root with the odd-root sign convention; `d` must be odd when
/// `x < 0`.
pub fn real_root(x: TwoFloat, d: u32) -> TwoFloat {
    if d == 1 || x == TwoFloat::from(0.0) {
        return x;
    }
    let neg = x < TwoFloat::from(0.0);
    let a = if neg { -x } else { x };
    let ahi = a.hi();
    let mut r = TwoFloat::from(ahi.powf(1.0 / d as f64));
    // Newton on r^d = a, twice, to lift the f64 seed to double-double accuracy.
    for _ in 0..3 {
        let rd1 = r.powi(d as i32 - 1);
        r -= div(rd1 * r - a, rd1 * TwoFloat::from(d as f64));
    }
    if neg {
        -r
    } else {
        r
    }
}

/// Evaluates `e` with atom values supplied by `lookup`.
pub fn evaluate_expr(
    e: &Expr,
    lookup: &impl Fn(Atom) -> Option<BigRational>,
) -> Result<Value, EvalError> {
    let mut exact = BigRational::zero();
    let mut approx = TwoFloat::from(0.0);
    let mut any_approx = false;
    for t in e.terms() {
        let mut rational_part = t.coeff.clone();
        // Factors sharing a root index are combined before taking the root.
        let mut radicands: BTreeMap<i64, BigRational> = BTreeMap::new();
        for &(a, ex) in t.mono.factors() {
            let v = lookup(a).ok_or(EvalError::UnboundAtom(a))?;
            let (n, d) = (*ex.numer(), *ex.denom());
            let vn = if n >= 0 {
                num_traits::pow(v, n as usize)
            } else {
                if v.is_zero() {
                    return Err(EvalError::ZeroDivisor);
                }
                num_traits::pow(v.recip(), (-n) as usize)
            };
            if d == 1 {
                rational_part *= vn;
            } else {
                *radicands.entry(d).or_insert_with(BigRational::one) *= vn;
            }
        }
        if radicands.is_empty() {
            exact += rational_part;
            continue;
        }
        any_approx = true;
        let mut v = rational_to_real(&rational_part);
        for (d, rad) in radicands {
            if rad.is_negative() && d % 2 == 0 {
                return Err(EvalError::EvenRootOfNegative);
            }
            v *= real_root(rational_to_real(&rad), d as u32);
        }
        approx += v;
    }
    if any_approx {
        Ok(Value::Approx(approx + rational_to_real(&exact)))
    } else {
        Ok(Value::Exact(exact))
    }
}

/// Relative error `|a-b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    #[test]
    fn perfect_cube_root_is_accurate() {
        let third = div(TwoFloat::from(1.0), TwoFloat::from(3.0));
        assert!((third * 3.0 - TwoFloat::from(1.0)).abs() < TwoFloat::from(1e-31));
        let q = rational_to_real(&BigRational::new(1.into(), 7.into()));
        assert!((q * 7.0 - TwoFloat::from(1.0)).abs() < TwoFloat::from(1e-31));
        let r = real_root(TwoFloat::from(27.0), 3);
        assert!((r - TwoFloat::from(3.0)).abs() < TwoFloat::from(1e-30));
        let r = real_root(TwoFloat::from(-8.0), 3);
        assert!((r + TwoFloat::from(2.0)).abs() < TwoFloat::from(1e-30));
    }

    #[test]
    fn cube_root_of_two_beyond_double_precision() {
        let r = real_root(TwoFloat::from(2.0), 3);
        let back = r * r * r - TwoFloat::from(2.0);
        assert!(back.abs() < TwoFloat::from(1e-30));
    }

    #[test]
    fn exact_and_approx_paths() {
        let e = Expr::atom(Atom::U) * Expr::atom(Atom::U) + Expr::ratio(1, 2);
        let v = evaluate_expr(&e, &|_| Some(rat(3, 1))).unwrap();
        assert_eq!(v, Value::Exact(rat(19, 2)));

        let e = Expr::atom_pow(Atom::coef(3, 0), -1, 3) * Expr::atom_pow(Atom::U, -1, 3);
        let v = evaluate_expr(&e, &|a| match a {
            Atom::U => Some(rat(8, 1)),
            _ => Some(rat(1, 1)),
        })
        .unwrap();
        assert!((v.to_f64() - 0.5).abs() < 1e-16);
    }

    #[test]
    fn unbound_and_even_root_errors() {
        let e = Expr::atom(Atom::group(2));
        assert_eq!(evaluate_expr(&e, &|_| None), Err(EvalError::UnboundAtom(Atom::group(2))));
        let e = Expr::atom_pow(Atom::U, 1, 2);
        assert_eq!(evaluate_expr(&e, &|_| Some(rat(-1, 1))), Err(EvalError::EvenRootOfNegative));
    }
}
