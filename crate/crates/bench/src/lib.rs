//! Fixtures shared by the benchmarks.

use cartan_core::ConcreteOperator;

/// `(x^2 + 2) D^3 + 3 D^2 + x D + (2x + 1)`, positive leading coefficient everywhere.
pub fn sample_operator() -> ConcreteOperator {
    ConcreteOperator::from_polys([&[1, 2], &[0, 1], &[3], &[2, 0, 1]]).expect("valid operator")
}
