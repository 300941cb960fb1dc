use std::collections::BTreeMap;

use crate::algebra::{Atom, Expr};
use crate::forms::{differential, Coframe, DForm};

use super::CartanError;

/// Entries of the structure group matrix `g`, acting by `theta = g omega`.
pub fn group_matrix() -> [[Expr; 5]; 5] {
    let a = |j| Expr::atom(Atom::group(j));
    let z = Expr::zero;
    [
        [a(1), z(), z(), z(), z()],
        [z(), Expr::one(), z(), z(), z()],
        [z(), a(2), a(3), z(), z()],
        [z(), a(4), a(5), a(6), z()],
        [z(), z(), z(), z(), Expr::one()],
    ]
}

/// Inverse of a lower-triangular matrix whose diagonal entries are single terms.
pub fn lower_triangular_inverse<const N: usize>(m: &[[Expr; N]; N]) -> Result<[[Expr; N]; N], CartanError> {
    let mut inv: [[Expr; N]; N] = std::array::from_fn(|_| std::array::from_fn(|_| Expr::zero()));
    for i in 0..N {
        let d = &m[i][i];
        inv[i][i] = Expr::one().div_by_term(d)?;
        for j in 0..i {
            let mut s = Expr::zero();
            for k in j..i {
                if !m[i][k].is_zero() && !inv[k][j].is_zero() {
                    s += &m[i][k] * &inv[k][j];
                }
            }
            inv[i][j] = (-s).div_by_term(d)?;
        }
    }
    Ok(inv)
}

/// Value of a group parameter at the identity element.
pub fn identity_value(a: Atom) -> Expr {
    match a {
        Atom::Group(1 | 3 | 6) => Expr::one(),
        _ => Expr::zero(),
    }
}

/// Right-invariant Maurer–Cartan forms `dg g^-1` of the full group, one per
/// nonzero entry of the Lie algebra pattern, in row-major order.
pub fn maurer_cartan_forms() -> Result<Vec<DForm>, CartanError> {
    maurer_cartan_forms_of(&group_matrix())
}

pub fn maurer_cartan_forms_of(g: &[[Expr; 5]; 5]) -> Result<Vec<DForm>, CartanError> {
    let inv = lower_triangular_inverse(g)?;
    let mut out = Vec::new();
    for (i, row) in g.iter().enumerate() {
        for j in 0..5 {
            let mut acc = DForm::zero(1);
            for (k, gik) in row.iter().enumerate() {
                if inv[k][j].is_zero() {
                    continue;
                }
                acc = acc.add(&differential(gik)?.scale(&inv[k][j]));
            }
            if !acc.is_zero() {
                out.push((i, j, acc));
            }
        }
    }
    Ok(out.into_iter().map(|(_, _, f)| f).collect())
}

/// Lifted coframe on `J3 x G` together with the Maurer–Cartan-type forms of
/// the group parameters still present.
#[derive(Clone, Debug)]
pub struct LiftedCoframe {
    pub thetas: Vec<DForm>,
    /// Group atoms not yet normalized.
    pub group: Vec<Atom>,
    pub alphas: Vec<DForm>,
}

fn apply_matrix(g: &[[Expr; 5]; 5], forms: &[DForm]) -> Vec<DForm> {
    g.iter()
        .map(|row| {
            row.iter()
                .zip(forms)
                .filter(|(c, _)| !c.is_zero())
                .fold(DForm::zero(1), |acc, (c, w)| acc.add(&w.scale(c)))
        })
        .collect()
}

pub fn theta_labels() -> Vec<String> {
    (1..=5).map(|i| format!("theta{i}")).collect()
}

pub fn alpha_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("alpha{i}")).collect()
}

/// `theta = g omega` with the full six-parameter group.
pub fn lift(base: &Coframe) -> Result<LiftedCoframe, CartanError> {
    Ok(LiftedCoframe {
        thetas: apply_matrix(&group_matrix(), base.forms()),
        group: (1..=6).map(Atom::group).collect(),
        alphas: maurer_cartan_forms()?,
    })
}

impl LiftedCoframe {
    /// Substitutes the normalized parameters and lifts the resulting coframe
    /// again by the residual subgroup: the unsolved parameters are set to the
    /// identity and then act on the partially normalized forms through the
    /// group matrix with every solved parameter at the identity.
    pub fn relift(&self, solved: &BTreeMap<Atom, Expr>) -> Result<LiftedCoframe, CartanError> {
        let group: Vec<Atom> = self.group.iter().copied().filter(|a| !solved.contains_key(a)).collect();
        let mut at_base = solved.clone();
        at_base.extend(group.iter().map(|&a| (a, identity_value(a))));
        let partial = self
            .thetas
            .iter()
            .map(|t| t.substitute(&at_base))
            .collect::<Result<Vec<_>, _>>()?;
        let fixed: BTreeMap<Atom, Expr> = (1..=6)
            .map(Atom::group)
            .filter(|a| !group.contains(a))
            .map(|a| (a, identity_value(a)))
            .collect();
        let residual = group_matrix().map(|row| row.map(|c| c.substitute(&fixed).expect("monomial entries")));
        Ok(LiftedCoframe {
            thetas: apply_matrix(&residual, &partial),
            group,
            alphas: maurer_cartan_forms_of(&residual)?,
        })
    }

    /// The `{theta, alpha}` frame of `J3 x G`.
    pub fn extended_frame(&self) -> Result<Coframe, CartanError> {
        let mut forms = self.thetas.clone();
        forms.extend(self.alphas.iter().cloned());
        let mut labels = theta_labels();
        labels.extend(alpha_labels(self.alphas.len()));
        Ok(Coframe::new(forms, labels)?)
    }

    pub fn has_group_atoms(&self) -> bool {
        self.thetas.iter().any(|t| t.any_atom(Atom::is_group))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Basis1Form;
    use crate::jet::{base_coframe, Operator, Problem};
    use crate::syntax::parse_to_expr;

    fn e(s: &str) -> Expr {
        parse_to_expr(s).unwrap()
    }

    #[test]
    fn maurer_cartan_forms_are_right_invariant_pattern() {
        let mc = maurer_cartan_forms().unwrap();
        assert_eq!(mc.len(), 6);
        let da = |j: u8| Basis1Form::da(j).index();
        assert_eq!(mc[0].coefficient(&[da(1)]), e("1/a1"));
        assert_eq!(mc[1].coefficient(&[da(2)]), Expr::one());
        assert_eq!(mc[1].coefficient(&[da(3)]), e("-a2/a3"));
        assert_eq!(mc[3].coefficient(&[da(6)]), e("(a2*a5 - a3*a4)/(a3*a6)"));
        assert_eq!(mc[4].coefficient(&[da(5)]), e("1/a3"));
        assert_eq!(mc[4].coefficient(&[da(6)]), e("-a5/(a3*a6)"));
        assert_eq!(mc[5].coefficient(&[da(6)]), e("1/a6"));
    }

    #[test]
    fn lifted_coframe_shape() {
        let base = base_coframe(Problem::Direct, &Operator::Abstract).unwrap();
        let lc = lift(&base).unwrap();
        assert_eq!(lc.thetas[1], base.forms()[1]);
        assert_eq!(lc.thetas[4], base.forms()[4]);
        assert!(!lc.thetas[1].any_atom(Atom::is_group));
        assert_eq!(lc.thetas[0], DForm::basis(Basis1Form::DX).scale(&e("a1")));
        let diag = [(0, 0, "a1"), (1, 1, "1/u"), (2, 2, "a3"), (3, 3, "a6"), (4, 4, "f3")];
        for (row, col, v) in diag {
            assert_eq!(lc.thetas[row].coefficient(&[col]), e(v));
            for c in col + 1..5 {
                assert!(lc.thetas[row].coefficient(&[c]).is_zero());
            }
        }
    }

    #[test]
    fn identity_element_recovers_base() {
        let base = base_coframe(Problem::Gauge, &Operator::Abstract).unwrap();
        let lc = lift(&base).unwrap();
        let id: BTreeMap<Atom, Expr> = [(1, 1), (2, 0), (3, 1), (4, 0), (5, 0), (6, 1)]
            .into_iter()
            .map(|(j, v)| (Atom::group(j), Expr::int(v)))
            .collect();
        let at_id = lc.relift(&id).unwrap();
        assert_eq!(at_id.thetas, base.forms());
        assert!(at_id.group.is_empty() && at_id.alphas.is_empty());
    }
}
