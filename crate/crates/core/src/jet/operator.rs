use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::ratfun::{Poly, RationalFunction1D};
use super::JetError;
use crate::algebra::{Atom, Expr};
use crate::forms::DEFAULT_MAX_DERIV_ORDER;
use crate::syntax::{self, Ast, ConvertError, ParseError};

/// Which transformation rule relates two operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// `D~ = D . (1/phi)`
    Direct,
    /// `D~ = phi . D . (1/phi)`
    Gauge,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Direct => "direct",
            Problem::Gauge => "gauge",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Third-order operator `f3 D^3 + f2 D^2 + f1 D + f0` with concrete
/// rational-function coefficients.
///
/// Derivatives of the coefficients are computed on first use, up to the
/// global derivative-order limit.
#[derive(Clone, Debug)]
pub struct ConcreteOperator {
    coeffs: [RationalFunction1D; 4],
    derivs: [Vec<OnceLock<RationalFunction1D>>; 4],
}

const DERIV_SLOTS: usize = DEFAULT_MAX_DERIV_ORDER as usize + 2;

impl PartialEq for ConcreteOperator {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for ConcreteOperator {}

impl ConcreteOperator {
    /// Coefficients ordered `[f0, f1, f2, f3]`.
    pub fn new(f: [RationalFunction1D; 4]) -> Result<ConcreteOperator, JetError> {
        if f[3].is_zero() {
            return Err(JetError::DegenerateOperator);
        }
        let derivs = std::array::from_fn(|_| (0..DERIV_SLOTS).map(|_| OnceLock::new()).collect());
        Ok(ConcreteOperator { coeffs: f, derivs })
    }

    /// Polynomial coefficients given lowest degree first, ordered `[f0, f1, f2, f3]`.
    pub fn from_polys(f: [&[i64]; 4]) -> Result<ConcreteOperator, JetError> {
        ConcreteOperator::new(f.map(|c| RationalFunction1D::poly(Poly::from_ints(c))))
    }

    /// The operator `D^3`.
    pub fn d3() -> ConcreteOperator {
        ConcreteOperator::from_polys([&[], &[], &[], &[1]]).expect("nondegenerate")
    }

    pub fn coefficient(&self, i: usize) -> &RationalFunction1D {
        &self.coeffs[i]
    }

    pub fn coefficients(&self) -> [RationalFunction1D; 4] {
        self.coeffs.clone()
    }

    /// `f_i^(k)` as a rational function.
    pub fn derivative(&self, i: usize, k: usize) -> Result<&RationalFunction1D, JetError> {
        if k >= DERIV_SLOTS {
            return Err(JetError::DerivOrderOverflow(k));
        }
        if k == 0 {
            return Ok(&self.coeffs[i]);
        }
        Ok(self.derivs[i][k].get_or_init(|| {
            self.derivative(i, k - 1).expect("lower orders are in range").derivative()
        }))
    }

    /// `f_i^(k)(x)`.
    pub fn value(&self, i: usize, k: usize, x: &BigRational) -> Result<BigRational, JetError> {
        self.derivative(i, k)?.eval(x).ok_or_else(|| JetError::PoleAtPoint { x: x.to_string() })
    }

    /// Binding of every coefficient atom `f_i^(k)` to an exact expression in `x`,
    /// or `None` if some coefficient has a denominator that is not a power of `x`.
    pub fn symbolic_bindings(&self, max_order: usize) -> Option<BTreeMap<Atom, Expr>> {
        let mut b = BTreeMap::new();
        for i in 0..4 {
            for k in 0..=max_order.min(DERIV_SLOTS - 1) {
                b.insert(Atom::coef(i as u8, k as u8), self.derivative(i, k).ok()?.to_expr()?);
            }
        }
        Some(b)
    }

    /// `D[u] = sum f_i(x) u^(i)` at a jet point given as `x` and `(u, p, q, r)`.
    pub fn apply_at(&self, x: &BigRational, w: &[BigRational; 4]) -> Result<BigRational, JetError> {
        let mut acc = BigRational::from_integer(0.into());
        for (i, wi) in w.iter().enumerate() {
            acc += self.value(i, 0, x)? * wi;
        }
        Ok(acc)
    }

    pub fn parse(src: &str) -> Result<ConcreteOperator, JetError> {
        let stmts = syntax::parse_assignments(src)?;
        let mut coeffs: [Option<RationalFunction1D>; 4] = Default::default();
        for (name, pos, ast) in stmts {
            let i = match name.as_str() {
                "f0" => 0,
                "f1" => 1,
                "f2" => 2,
                "f3" => 3,
                _ => {
                    return Err(ParseError { pos, message: format!("unknown coefficient `{name}`") }.into());
                }
            };
            if coeffs[i].is_some() {
                return Err(ParseError { pos, message: format!("`{name}` given twice") }.into());
            }
            coeffs[i] = Some(ratfun_from_ast(&ast)?);
        }
        let f3 = coeffs[3].take().ok_or_else(|| ParseError {
            pos: syntax::Pos { line: 1, col: 1 },
            message: "missing `f3`".into(),
        })?;
        let [f0, f1, f2, _] = coeffs;
        ConcreteOperator::new([f0.unwrap_or_default(), f1.unwrap_or_default(), f2.unwrap_or_default(), f3])
    }

    /// Text form `f3 = ...; f2 = ...; f1 = ...; f0 = ...`, one per line.
    pub fn to_text(&self) -> String {
        (0..4)
            .rev()
            .map(|i| format!("f{i} = {}\n", self.coefficient(i)))
            .collect()
    }
}

impl fmt::Display for ConcreteOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..4).rev().map(|i| format!("f{i} = {}", self.coefficient(i))).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Operator with symbolic coefficient atoms, or a concrete one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operator {
    Abstract,
    Concrete(ConcreteOperator),
}

/// Converts a parsed expression in `x` to a rational function.
pub fn ratfun_from_ast(ast: &Ast) -> Result<RationalFunction1D, ConvertError> {
    Ok(match ast {
        Ast::Int(n, _) => RationalFunction1D::constant(BigRational::from_integer(n.clone())),
        Ast::Ident(s, pos) => {
            if s == "x" {
                RationalFunction1D::x()
            } else {
                return Err(ConvertError::UnknownSymbol(*pos, s.clone()));
            }
        }
        Ast::Neg(a) => ratfun_from_ast(a)?.neg(),
        Ast::Add(a, b) => ratfun_from_ast(a)?.add(&ratfun_from_ast(b)?),
        Ast::Sub(a, b) => ratfun_from_ast(a)?.sub(&ratfun_from_ast(b)?),
        Ast::Mul(a, b) => ratfun_from_ast(a)?.mul(&ratfun_from_ast(b)?),
        Ast::Div(a, b, pos) => ratfun_from_ast(a)?
            .div(&ratfun_from_ast(b)?)
            .ok_or(ConvertError::Algebra(*pos, crate::algebra::AlgebraError::ZeroDivisor))?,
        Ast::Pow(a, e, pos) => {
            let c = syntax::constant_value(e).ok_or(ConvertError::NonConstantExponent(*pos))?;
            if !c.is_integer() {
                return Err(ConvertError::NonConstantExponent(*pos));
            }
            let n: i64 = num_traits::ToPrimitive::to_i64(c.numer()).ok_or(ConvertError::NonConstantExponent(*pos))?;
            let base = ratfun_from_ast(a)?;
            if n >= 0 {
                base.powi(n as u32)
            } else {
                base.recip()
                    .ok_or(ConvertError::Algebra(*pos, crate::algebra::AlgebraError::ZeroDivisor))?
                    .powi((-n) as u32)
            }
        }
    })
}

pub fn parse_ratfun(src: &str) -> Result<RationalFunction1D, ConvertError> {
    ratfun_from_ast(&syntax::parse_expr(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_operator_file() {
        let op = ConcreteOperator::parse("f3 = x^2 + 1\nf1 = 1/2*x; f0 = 1/(x - 2)").unwrap();
        assert_eq!(op.coefficient(3).to_string(), "x^2 + 1");
        assert_eq!(op.coefficient(2).to_string(), "0");
        assert_eq!(op.value(0, 1, &crate::algebra::rat(3, 1)).unwrap(), crate::algebra::rat(-1, 1));
        assert!(matches!(
            op.value(0, 0, &crate::algebra::rat(2, 1)),
            Err(JetError::PoleAtPoint { .. })
        ));
        let reparsed = ConcreteOperator::parse(&op.to_text()).unwrap();
        assert_eq!(reparsed, op);
    }

    #[test]
    fn parse_errors_carry_locations() {
        let err = ConcreteOperator::parse("f3 = 1\nf2 = x +").unwrap_err();
        assert!(err.to_string().contains("2:"), "{err}");
        let err = ConcreteOperator::parse("f3 = 1; g = 2").unwrap_err();
        assert!(err.to_string().contains("unknown coefficient"), "{err}");
        assert!(matches!(ConcreteOperator::parse("f2 = 1"), Err(JetError::Parse(_))));
        assert!(matches!(ConcreteOperator::parse("f3 = 0"), Err(JetError::DegenerateOperator)));
        let err = ConcreteOperator::parse("f3 = u").unwrap_err();
        assert!(err.to_string().contains("unknown symbol"), "{err}");
    }
}
