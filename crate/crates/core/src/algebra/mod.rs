//! Exact arithmetic on generalized polynomials over a fixed atom vocabulary.
//!
//! Every scalar quantity in the reduction (coframe coefficients, torsion,
//! group normalizations, invariants) is an [`Expr`]: a sum of rational
//! multiples of monomials whose exponents are rational numbers. Fractional
//! exponents only ever attach to atoms, never to sums, so cube roots such as
//! `(f3*u)^(1/3)` are stored as `f3^1/3*u^1/3`. This identity is valid on the
//! chamber `u > 0, f3 > 0`, which is the standing assumption of the symbolic
//! layer.

mod atom;
mod expr;

pub use atom::{Atom, Coord};
pub use expr::{real_power_f64, Exponent, Expr, Monomial, Term};
pub(crate) use expr::rat;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by zero")]
    ZeroDivisor,
    #[error("divisor `{0}` is not a single term")]
    NonMonomialDivisor(String),
    #[error("fractional or negative power of the sum `{0}`")]
    NonMonomialBase(String),
    #[error("`{0}` has no exact rational value")]
    IrrationalCoefficient(String),
    #[error("fractional power of the non-positive coefficient {0}")]
    NonPositiveCoefficient(String),
}
