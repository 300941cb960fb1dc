use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_rational::BigRational;

use crate::algebra::{Atom, Coord, Expr};
use crate::forms::{differential, Coframe, DForm};
use crate::jet::{base_coframe, Operator, Problem};

use super::lift::{lift, theta_labels, LiftedCoframe};
use super::normalize::{default_plan, normalize, PlanStep};
use super::structure::{structure_constants, structure_equations, Slot, StructureConstants, StructureEquations};
use super::CartanError;

/// One pass of structure equations followed by normalization.
#[derive(Clone, Debug)]
pub struct LoopRecord {
    pub lifted: LiftedCoframe,
    pub structure: StructureEquations,
    pub essential: BTreeSet<Slot>,
    pub plan: Vec<PlanStep>,
    pub solved: BTreeMap<Atom, Expr>,
}

/// A structure coefficient given a name, `value = scale * c^row_jk`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantName {
    pub name: &'static str,
    pub slot: Slot,
    pub scale: i64,
}

/// Which final structure coefficients carry the named invariants.
pub fn invariant_names(problem: Problem) -> Vec<InvariantName> {
    let n = |name, j, k, scale| InvariantName { name, slot: Slot::new(4, j, k), scale };
    match problem {
        Problem::Direct => vec![n("I", 1, 2, -1), n("I1", 1, 4, 1), n("I2", 1, 3, 9)],
        Problem::Gauge => vec![n("I1", 1, 3, 1), n("I2", 1, 4, 1)],
    }
}

/// Coframe derivatives as first-order operators:
/// `dF/dtheta^j = sum_v rows[j][v] dF/dv` over `v = x, u, p, q, r`, where the
/// `x`-derivative is total in the operator coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeTable {
    pub rows: Vec<[Expr; 5]>,
}

impl DerivativeTable {
    /// Reads the table off the coframe derivatives of the generic function `F`.
    pub fn from_coframe(frame: &Coframe) -> Result<DerivativeTable, CartanError> {
        let derivs = frame.dual_derivatives(&Expr::atom(Atom::Func))?;
        let mut rows = Vec::with_capacity(derivs.len());
        for d in derivs {
            let groups: BTreeMap<Atom, Expr> = Coord::ALL
                .iter()
                .map(|&v| (Atom::FuncPartial(v), d.partial_derivative(Atom::FuncPartial(v))))
                .collect();
            let row = Coord::ALL.map(|v| groups[&Atom::FuncPartial(v)].clone());
            rows.push(row);
        }
        Ok(DerivativeTable { rows })
    }

    /// `dF/dtheta^j` for `j` 1-based.
    pub fn apply(&self, j: usize, f: &Expr) -> Result<Expr, CartanError> {
        let df = differential(f)?;
        Ok(self.rows[j - 1]
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| c * &df.coefficient(&[v]))
            .sum())
    }

    /// Splits row 1 as `s * (d/dx + p d/du + q d/dp + r d/dq + R d/dr)`,
    /// returning `(s, R)` when the first four ratios are exactly `1, p, q, r`.
    pub fn total_derivative(&self) -> Option<(Expr, Expr)> {
        let row = &self.rows[0];
        let s = row[0].clone();
        s.as_single_term()?;
        let ratio = |c: &Expr| c.div_by_term(&s).ok();
        let expected = [Atom::P, Atom::Q, Atom::R].map(Expr::atom);
        for (c, e) in row[1..4].iter().zip(&expected) {
            if ratio(c)? != *e {
                return None;
            }
        }
        Some((s.clone(), ratio(&row[4])?))
    }

    pub fn render_row(&self, j: usize) -> String {
        let parts: Vec<String> = Coord::ALL
            .iter()
            .zip(&self.rows[j - 1])
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| format!("({c}) d/d{}", v.name()))
            .collect();
        let body = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        format!("d/dtheta{j} = {body}")
    }
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    pub problem: Problem,
    pub base: Coframe,
    pub loops: Vec<LoopRecord>,
    /// Group parameters as functions on `J3`.
    pub normalizations: BTreeMap<Atom, Expr>,
    pub final_coframe: Coframe,
    pub constants: StructureConstants,
    pub invariants: Vec<(String, Expr)>,
    pub derivative_table: DerivativeTable,
}

impl ReductionResult {
    pub fn invariant(&self, name: &str) -> Option<&Expr> {
        self.invariants.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    /// `dF/dtheta^j` for all `j` by the dual-frame solve.
    pub fn coframe_derivatives(&self, f: &Expr) -> Result<Vec<Expr>, CartanError> {
        Ok(self.final_coframe.dual_derivatives(f)?)
    }
}

pub fn run_reduction(problem: Problem) -> Result<ReductionResult, CartanError> {
    run_reduction_with_plan(problem, &default_plan())
}

/// The default-plan reduction, computed once per process.
pub fn cached_reduction(problem: Problem) -> Result<&'static ReductionResult, CartanError> {
    static DIRECT: OnceLock<Result<ReductionResult, CartanError>> = OnceLock::new();
    static GAUGE: OnceLock<Result<ReductionResult, CartanError>> = OnceLock::new();
    let cell = match problem {
        Problem::Direct => &DIRECT,
        Problem::Gauge => &GAUGE,
    };
    cell.get_or_init(|| run_reduction(problem)).as_ref().map_err(Clone::clone)
}

pub fn run_reduction_with_plan(problem: Problem, plan: &[Vec<PlanStep>]) -> Result<ReductionResult, CartanError> {
    let base = base_coframe(problem, &Operator::Abstract)?;
    let mut lifted = lift(&base)?;
    let mut loops = Vec::new();
    let mut normalizations: BTreeMap<Atom, Expr> = BTreeMap::new();
    for steps in plan {
        let structure = structure_equations(&lifted)?;
        let essential = structure.essential_torsion();
        let solved = normalize(&structure, steps, &normalizations)?;
        for v in normalizations.values_mut() {
            *v = v.substitute(&solved)?;
        }
        normalizations.extend(solved.clone());
        let next = lifted.relift(&solved)?;
        loops.push(LoopRecord { lifted, structure, essential, plan: steps.clone(), solved });
        lifted = next;
    }
    if lifted.has_group_atoms() {
        let left: Vec<String> = lifted.group.iter().map(|a| a.to_string()).collect();
        return Err(CartanError::ResidualGroupParameter(left.join(", ")));
    }
    let final_coframe = Coframe::new(lifted.thetas, theta_labels())?;
    let constants = structure_constants(&final_coframe)?;
    if constants.rows.iter().flat_map(|r| r.values()).any(Expr::has_group_atoms) {
        return Err(CartanError::ResidualGroupParameter("structure constants".into()));
    }
    let invariants = invariant_names(problem)
        .into_iter()
        .map(|n| {
            let c = constants.get(n.slot.row, n.slot.j, n.slot.k);
            (n.name.to_string(), c.scale(&BigRational::from_integer(n.scale.into())))
        })
        .collect();
    let derivative_table = DerivativeTable::from_coframe(&final_coframe)?;
    Ok(ReductionResult {
        problem,
        base,
        loops,
        normalizations,
        final_coframe,
        constants,
        invariants,
        derivative_table,
    })
}

/// `d(d theta^i)` computed inside the frame algebra from the structure
/// constants and coframe derivatives; zero iff the Jacobi identity holds.
pub fn jacobi_residual(rr: &ReductionResult, i: usize) -> Result<DForm, CartanError> {
    let c = &rr.constants;
    let mut acc = DForm::zero(3);
    for (&(j, k), cjk) in &c.rows[i - 1] {
        let dc = rr.coframe_derivatives(cjk)?;
        let dc_form = DForm::one_form(dc.into_iter().enumerate());
        let tj = DForm::generator(j - 1, Expr::one());
        let tk = DForm::generator(k - 1, Expr::one());
        let tjk = tj.wedge(&tk);
        acc = acc.add(&dc_form.wedge(&tjk));
        let inner = c.frame_form(j).wedge(&tk).sub(&tj.wedge(&c.frame_form(k)));
        acc = acc.add(&inner.scale(cjk));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_to_expr;

    fn e(s: &str) -> Expr {
        parse_to_expr(s).unwrap()
    }

    #[test]
    fn direct_reduction_eliminates_the_group() {
        let rr = run_reduction(Problem::Direct).unwrap();
        assert_eq!(rr.normalizations.len(), 6);
        assert_eq!(rr.normalizations[&Atom::group(1)], e("(f3*u)^(-1/3)"));
        assert!(rr.final_coframe.forms().iter().all(|f| !f.any_atom(Atom::is_group)));
        assert_eq!(rr.constants.get(1, 1, 2), Expr::ratio(1, 3));
        assert_eq!(rr.constants.get(4, 1, 5), Expr::one());
        for i in 1..=5 {
            assert!(jacobi_residual(&rr, i).unwrap().is_zero(), "row {i}");
        }
    }

    #[test]
    fn gauge_reduction_structure() {
        let rr = run_reduction(Problem::Gauge).unwrap();
        assert!(rr.constants.rows[0].is_empty());
        assert_eq!(rr.constants.get(2, 1, 3), Expr::one());
        let (s, _) = rr.derivative_table.total_derivative().unwrap();
        assert_eq!(s, e("f3^(1/3)"));
    }
}
