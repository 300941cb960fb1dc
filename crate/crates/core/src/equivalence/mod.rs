//! Equivalence toolkit over concrete operators: invariant signatures, a
//! sampled necessary-condition test, an exact certificate checker for a
//! proposed transformation, and a generator of equivalent pairs.
//!
//! `Compatible` from [`check_necessary`] is not a proof of equivalence; only
//! [`verify_candidate`] certifies a specific transformation.

mod candidate;
mod fast;
mod generate;
mod necessary;
mod signature;

use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

pub use candidate::{verify_candidate, CandidateReport, CoefficientResidual, OrbitSample};
pub use generate::generate_equivalent_pair;
pub use necessary::{check_necessary, NecessaryConfig, NecessaryReport, Verdict, Witness};
pub use signature::{invariant_signature, substituted_invariants, CloudPoint, InvariantSignature, SignatureConfig, SignatureMap};

use crate::algebra::rat;
use crate::cartan::CartanError;
use crate::jet::{ConcreteOperator, JetError, JetPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Cartan(#[from] CartanError),
}

/// Rational sampling box in `(x, u, p, q, r)` with `n` points per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub points_per_axis: usize,
    pub lower: [BigRational; 5],
    pub upper: [BigRational; 5],
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::with_points(5)
    }
}

impl GridConfig {
    /// The default box `x in [0, 1]`, `u in [1, 2]`, `p, q, r in [-1, 1]`.
    pub fn with_points(n: usize) -> GridConfig {
        GridConfig {
            points_per_axis: n.max(1),
            lower: [rat(0, 1), rat(1, 1), rat(-1, 1), rat(-1, 1), rat(-1, 1)],
            upper: [rat(1, 1), rat(2, 1), rat(1, 1), rat(1, 1), rat(1, 1)],
        }
    }

    /// The same box shifted by a fraction of a grid step in every coordinate.
    pub fn offset(&self, num: i64, den: i64) -> GridConfig {
        let mut g = self.clone();
        for i in 0..5 {
            let step = self.step(i);
            let shift = if step == rat(0, 1) { rat(num, den) } else { step * rat(num, den) };
            g.lower[i] += &shift;
            g.upper[i] += &shift;
        }
        g
    }

    fn step(&self, axis: usize) -> BigRational {
        if self.points_per_axis <= 1 {
            return rat(0, 1);
        }
        (&self.upper[axis] - &self.lower[axis]) / rat(self.points_per_axis as i64 - 1, 1)
    }

    fn axis(&self, axis: usize) -> Vec<BigRational> {
        let step = self.step(axis);
        (0..self.points_per_axis)
            .map(|i| &self.lower[axis] + &step * rat(i as i64, 1))
            .collect()
    }

    /// Grid points at which `op` is regular and `f3` is nonzero. An `x` value
    /// hitting a pole or a zero of `f3` is nudged a few times before giving up.
    pub fn points(&self, op: &ConcreteOperator, max_order: usize) -> Result<Vec<JetPoint>, JetError> {
        let mut xs = Vec::new();
        for x in self.axis(0) {
            xs.push(regular_x(op, x, max_order)?);
        }
        let axes: Vec<Vec<BigRational>> = (1..5).map(|i| self.axis(i)).collect();
        let mut out = Vec::with_capacity(xs.len() * axes.iter().map(Vec::len).product::<usize>());
        for x in &xs {
            for u in &axes[0] {
                for p in &axes[1] {
                    for q in &axes[2] {
                        for r in &axes[3] {
                            out.push(JetPoint::new(x.clone(), u.clone(), p.clone(), q.clone(), r.clone()));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for GridConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["x", "u", "p", "q", "r"];
        let parts: Vec<String> = (0..5)
            .map(|i| format!("{} in [{}, {}]", names[i], self.lower[i], self.upper[i]))
            .collect();
        write!(f, "{}^5 points, {}", self.points_per_axis, parts.join(", "))
    }
}

fn regular_x(op: &ConcreteOperator, x: BigRational, max_order: usize) -> Result<BigRational, JetError> {
    let ok = |x: &BigRational| -> bool {
        (0..4).all(|i| (0..=max_order).all(|k| op.value(i, k, x).is_ok()))
            && op.value(3, 0, x).map(|v| v != rat(0, 1)).unwrap_or(false)
    };
    for attempt in 0..4 {
        let candidate = &x + rat(attempt, 97);
        if ok(&candidate) {
            return Ok(candidate);
        }
    }
    match op.value(3, 0, &x) {
        Err(e) => Err(e),
        Ok(_) => Err(JetError::DegenerateOperator),
    }
}
