use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::algebra::{Atom, Exponent, Expr};

use super::structure::{Slot, StructureEquations};
use super::CartanError;

/// Normalize `slot` to `target` by solving for `solve_for`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanStep {
    pub slot: Slot,
    pub target: i64,
    #[serde(serialize_with = "ser_atom")]
    pub solve_for: Atom,
}

fn ser_atom<S: serde::Serializer>(a: &Atom, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(a)
}

const fn step(row: usize, j: usize, k: usize, target: i64, a: u8) -> PlanStep {
    PlanStep { slot: Slot::new(row, j, k), target, solve_for: Atom::Group(a) }
}

/// Normalization choices for the two loops, shared by both problems. They
/// are fixed by inspection of the torsion, not discovered.
pub fn default_plan() -> [Vec<PlanStep>; 2] {
    [
        vec![step(2, 1, 2, 0, 2), step(3, 1, 4, 1, 3), step(4, 1, 5, 1, 6), step(2, 1, 3, 1, 1)],
        vec![step(3, 1, 2, 0, 4), step(3, 1, 3, 0, 5)],
    ]
}

/// Solves `expr = target` for `a`, where `expr = C a^e + Rest` with `C` a
/// single term and `Rest` free of `a`.
pub fn solve_for(expr: &Expr, target: &BigRational, a: Atom) -> Result<Expr, String> {
    let groups = expr.collect_by(a);
    let mut powers = groups.iter().filter(|(e, c)| !e.is_zero() && !c.is_zero());
    let (e, coeff) = match (powers.next(), powers.next()) {
        (Some(p), None) => p,
        (None, _) => return Err(format!("`{expr}` does not contain {a}")),
        (Some(_), Some(_)) => return Err(format!("{a} appears with several exponents in `{expr}`")),
    };
    if coeff.as_single_term().is_none() {
        return Err(format!("coefficient of {a}^{e} is not a single term: `{coeff}`"));
    }
    if coeff.contains_atom(a) {
        return Err(format!("coefficient of {a} still contains {a}"));
    }
    let rest = groups.get(&Exponent::zero()).cloned().unwrap_or_default();
    let rhs = (Expr::constant(target.clone()) - rest)
        .div_by_term(coeff)
        .map_err(|err| err.to_string())?;
    if e.is_one() {
        return Ok(rhs);
    }
    rhs.pow_rational(e.recip()).map_err(|err| format!("cannot take {a} = ({rhs})^(1/{e}): {err}"))
}

/// Runs one loop of normalization steps against the given structure equations.
///
/// Each step sees the torsion after the previous solutions have been
/// substituted; every new solution is back-substituted into the earlier ones
/// so the returned values only mention parameters the loop did not solve.
pub fn normalize(
    se: &StructureEquations,
    plan: &[PlanStep],
    already: &BTreeMap<Atom, Expr>,
) -> Result<BTreeMap<Atom, Expr>, CartanError> {
    let essential = se.essential_torsion();
    let mut solved: BTreeMap<Atom, Expr> = BTreeMap::new();
    for st in plan {
        if !essential.contains(&st.slot) {
            return Err(CartanError::NotEssential(st.slot));
        }
        let target = BigRational::from_integer(st.target.into());
        let t = se.torsion(st.slot).substitute(&solved)?;
        if let Some(prev) = solved.get(&st.solve_for).or_else(|| already.get(&st.solve_for)) {
            if t.substitute_one(st.solve_for, prev)? != Expr::constant(target) {
                return Err(CartanError::InconsistentPlan { atom: st.solve_for, slot: st.slot });
            }
            continue;
        }
        let value = solve_for(&t, &target, st.solve_for)
            .map_err(|reason| CartanError::UnsolvableNormalization { slot: st.slot, reason })?;
        let one = BTreeMap::from([(st.solve_for, value.clone())]);
        for v in solved.values_mut() {
            *v = v.substitute(&one)?;
        }
        solved.insert(st.solve_for, value);
    }
    for st in plan {
        let t = se.torsion(st.slot).substitute(&solved)?;
        if t != Expr::int(st.target) {
            return Err(CartanError::UnsolvableNormalization {
                slot: st.slot,
                reason: format!("normalized value is `{t}`, not {}", st.target),
            });
        }
    }
    Ok(solved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_to_expr;

    fn e(s: &str) -> Expr {
        parse_to_expr(s).unwrap()
    }

    #[test]
    fn solves_linear_and_power_shapes() {
        let zero = BigRational::zero();
        let one = BigRational::one();
        let a2 = solve_for(&e("-(a2 + a3*p)/(a1*a3*u)"), &zero, Atom::group(2)).unwrap();
        assert_eq!(a2, e("-a3*p"));
        let a1 = solve_for(&e("1/(a1^3*f3*u)"), &one, Atom::group(1)).unwrap();
        assert_eq!(a1, e("(f3*u)^(-1/3)"));
    }

    #[test]
    fn rejects_unsupported_shapes() {
        let zero = BigRational::zero();
        assert!(solve_for(&e("a1^2 + a1"), &zero, Atom::group(1)).is_err());
        assert!(solve_for(&e("(u + p)*a1 + 1"), &zero, Atom::group(1)).is_err());
        assert!(solve_for(&e("u + p"), &zero, Atom::group(1)).is_err());
    }
}
