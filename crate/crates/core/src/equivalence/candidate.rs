use nalgebra::Matrix5;
use serde::Serialize;

use crate::cartan::cached_reduction;
use crate::jet::{pullback_covector, transform_operator, ConcreteOperator, FiberTransformation, JetPoint, PointValues, Problem};

use super::{EquivalenceError, GridConfig};

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientResidual {
    pub coefficient: String,
    pub expected: String,
    pub actual: String,
    pub difference: String,
}

/// `Phi^* omega~ = M omega` at one point; `residual` measures how far `M` is
/// from the structure-group pattern.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSample {
    pub point: [String; 5],
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateReport {
    pub mode: Problem,
    pub equivalent: bool,
    pub residuals: Vec<CoefficientResidual>,
    pub orbit: Vec<OrbitSample>,
    pub orbit_max_residual: f64,
}

/// Entries of `M` fixed by the group: `(row, col, value)`.
const PATTERN: [(usize, usize, f64); 19] = [
    (0, 1, 0.0),
    (0, 2, 0.0),
    (0, 3, 0.0),
    (0, 4, 0.0),
    (1, 0, 0.0),
    (1, 1, 1.0),
    (1, 2, 0.0),
    (1, 3, 0.0),
    (1, 4, 0.0),
    (2, 0, 0.0),
    (2, 3, 0.0),
    (2, 4, 0.0),
    (3, 0, 0.0),
    (3, 4, 0.0),
    (4, 0, 0.0),
    (4, 1, 0.0),
    (4, 2, 0.0),
    (4, 3, 0.0),
    (4, 4, 1.0),
];

fn dense(rows: impl Iterator<Item = [f64; 5]>) -> Matrix5<f64> {
    let rows: Vec<[f64; 5]> = rows.collect();
    Matrix5::from_fn(|i, j| rows[i][j])
}

fn orbit_residual(
    op1: &ConcreteOperator,
    op2: &ConcreteOperator,
    t: &FiberTransformation,
    mode: Problem,
    pt: &JetPoint,
) -> Option<f64> {
    let base = &cached_reduction(mode).ok()?.base;
    let map = t.prolong();
    let image = map.apply(pt).ok()?;
    let jac = map.jacobian(pt).ok()?;
    let here = PointValues::new(pt, op1, 1).ok()?;
    let there = PointValues::new(&image, op2, 1).ok()?;
    let w = dense(base.forms().iter().map(|f| {
        let v = here.eval_form(f).expect("base forms evaluate at regular points").dense(5);
        std::array::from_fn(|i| v[i].hi() + v[i].lo())
    }));
    let pulled = dense(base.forms().iter().map(|f| {
        let v = there.eval_form(f).expect("base forms evaluate at regular points").dense(5);
        pullback_covector(&v, &jac).map(|c| c.hi() + c.lo())
    }));
    let m = pulled * w.try_inverse()?;
    let free = [(0, 0), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3)];
    let scale = free.iter().fold(1.0f64, |s, &(i, j)| s.max(m[(i, j)].abs()));
    let dev = PATTERN.iter().fold(0.0f64, |d, &(i, j, v)| d.max((m[(i, j)] - v).abs()));
    let degenerate = [(0, 0), (2, 2), (3, 3)].iter().any(|&(i, j)| m[(i, j)].abs() < 1e-12 * scale);
    Some(if degenerate { f64::INFINITY } else { dev / scale })
}

/// Exact certificate check: `transform_operator(op1, t, mode) == op2`
/// coefficient by coefficient. The report also samples the coframe condition
/// `Phi^* omega~ = g omega` numerically.
pub fn verify_candidate(
    op1: &ConcreteOperator,
    op2: &ConcreteOperator,
    t: &FiberTransformation,
    mode: Problem,
) -> Result<CandidateReport, EquivalenceError> {
    let image = transform_operator(op1, t, mode)?;
    let residuals: Vec<CoefficientResidual> = (0..4)
        .rev()
        .filter(|&i| image.coefficient(i) != op2.coefficient(i))
        .map(|i| CoefficientResidual {
            coefficient: format!("f{i}"),
            expected: image.coefficient(i).to_string(),
            actual: op2.coefficient(i).to_string(),
            difference: image.coefficient(i).sub(op2.coefficient(i)).to_string(),
        })
        .collect();
    let grid = GridConfig::with_points(2);
    let points = grid.points(op1, 1).unwrap_or_default();
    let orbit: Vec<OrbitSample> = points
        .iter()
        .filter_map(|pt| {
            let residual = orbit_residual(op1, op2, t, mode, pt)?;
            Some(OrbitSample { point: pt.coords().map(|c| c.to_string()), residual })
        })
        .take(8)
        .collect();
    let orbit_max_residual = orbit.iter().fold(0.0f64, |m, s| m.max(s.residual));
    Ok(CandidateReport { mode, equivalent: residuals.is_empty(), residuals, orbit, orbit_max_residual })
}
