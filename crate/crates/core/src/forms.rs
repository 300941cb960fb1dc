//! Exterior algebra on the chart `J3 x G`.
//!
//! Forms are stored as maps from strictly increasing multi-indices (bitmasks
//! over at most 16 generators) to [`Expr`] coefficients. In coordinate form
//! the generators are the eleven differentials `dx, du, dp, dq, dr, da1..da6`
//! in that order. A [`Coframe`] re-expresses coordinate forms in its own
//! basis; the result is again a [`DForm`] whose generators are the coframe
//! elements.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{AlgebraError, Atom, Coord, Expr, Term};

/// Highest coefficient derivative order `d` will produce before failing.
pub const DEFAULT_MAX_DERIV_ORDER: u8 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormsError {
    #[error("derivative order of f{index} exceeds {limit}")]
    DerivOrderOverflow { index: u8, limit: u8 },
    #[error("no differential rule for atom `{0}`")]
    UnsupportedAtom(Atom),
    #[error("coframe pivot `{0}` is not a single term")]
    NonTriangularCoframe(String),
    #[error("coframe is singular")]
    SingularCoframe,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// One of the eleven coordinate one-forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Basis1Form(u8);

impl Basis1Form {
    pub const COUNT: usize = 11;
    pub const DX: Basis1Form = Basis1Form(0);
    pub const DU: Basis1Form = Basis1Form(1);
    pub const DP: Basis1Form = Basis1Form(2);
    pub const DQ: Basis1Form = Basis1Form(3);
    pub const DR: Basis1Form = Basis1Form(4);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn da(j: u8) -> Basis1Form {
        assert!((1..=6).contains(&j));
        Basis1Form(4 + j)
    }

    pub fn of_coord(c: Coord) -> Basis1Form {
        Basis1Form(c.index() as u8)
    }

    /// The coordinate whose differential this is.
    pub fn atom(self) -> Atom {
        match self.0 {
            0 => Atom::X,
            1 => Atom::U,
            2 => Atom::P,
            3 => Atom::Q,
            4 => Atom::R,
            j => Atom::Group(j - 4),
        }
    }

    pub fn of_atom(a: Atom) -> Option<Basis1Form> {
        match a {
            Atom::X => Some(Basis1Form(0)),
            Atom::U => Some(Basis1Form(1)),
            Atom::P => Some(Basis1Form(2)),
            Atom::Q => Some(Basis1Form(3)),
            Atom::R => Some(Basis1Form(4)),
            Atom::Group(j) => Some(Basis1Form(4 + j)),
            _ => None,
        }
    }

    pub fn name(self) -> String {
        format!("d{}", self.atom())
    }
}

pub fn coordinate_names() -> Vec<String> {
    (0..Basis1Form::COUNT as u8).map(|i| Basis1Form(i).name()).collect()
}

/// Multi-index as a bitmask; bit `i` set means generator `i` is present.
pub type Mask = u16;

fn mask_indices(m: Mask) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| m & (1 << i) != 0)
}

/// Sign of `e_a ^ e_b` relative to the sorted multi-index `a | b`.
fn wedge_sign(a: Mask, b: Mask) -> bool {
    let mut swaps = 0u32;
    for j in mask_indices(b) {
        swaps += (a >> (j + 1)).count_ones();
    }
    swaps % 2 == 1
}

/// A homogeneous differential form.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DForm {
    degree: usize,
    comps: BTreeMap<Mask, Expr>,
}

impl DForm {
    pub fn zero(degree: usize) -> DForm {
        DForm { degree, comps: BTreeMap::new() }
    }

    pub fn scalar(e: Expr) -> DForm {
        let mut f = DForm::zero(0);
        f.insert(0, e);
        f
    }

    /// The one-form `c * e_i` on generator `i`.
    pub fn generator(i: usize, c: Expr) -> DForm {
        let mut f = DForm::zero(1);
        f.insert(1 << i, c);
        f
    }

    pub fn basis(b: Basis1Form) -> DForm {
        DForm::generator(b.index(), Expr::one())
    }

    /// Builds a one-form from `(generator, coefficient)` pairs.
    pub fn one_form<I: IntoIterator<Item = (usize, Expr)>>(parts: I) -> DForm {
        let mut f = DForm::zero(1);
        for (i, c) in parts {
            f.add_component(1 << i, c);
        }
        f
    }

    /// Builds a form from explicit multi-indices (each given sorted).
    pub fn from_components<I: IntoIterator<Item = (Vec<usize>, Expr)>>(degree: usize, parts: I) -> DForm {
        let mut f = DForm::zero(degree);
        for (idx, c) in parts {
            assert_eq!(idx.len(), degree);
            assert!(idx.windows(2).all(|w| w[0] < w[1]), "multi-index must be increasing");
            let m = idx.iter().fold(0, |m, &i| m | (1 << i));
            f.add_component(m, c);
        }
        f
    }

    fn insert(&mut self, m: Mask, e: Expr) {
        if !e.is_zero() {
            self.comps.insert(m, e);
        }
    }

    fn add_component(&mut self, m: Mask, e: Expr) {
        if e.is_zero() {
            return;
        }
        debug_assert_eq!(m.count_ones() as usize, self.degree);
        match self.comps.get_mut(&m) {
            Some(c) => {
                *c += e;
                if c.is_zero() {
                    self.comps.remove(&m);
                }
            }
            None => {
                self.comps.insert(m, e);
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, &Expr)> {
        self.comps.iter().map(|(m, e)| (mask_indices(*m).collect(), e))
    }

    pub fn component_count(&self) -> usize {
        self.comps.len()
    }

    /// Coefficient on the sorted multi-index `idx` (zero if absent).
    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        let m = idx.iter().fold(0, |m, &i| m | (1 << i));
        self.comps.get(&m).cloned().unwrap_or_default()
    }

    pub fn coefficient_mask(&self, m: Mask) -> Option<&Expr> {
        self.comps.get(&m)
    }

    pub fn scale(&self, c: &Expr) -> DForm {
        let mut out = DForm::zero(self.degree);
        for (m, e) in &self.comps {
            out.insert(*m, e * c);
        }
        out
    }

    pub fn add(&self, other: &DForm) -> DForm {
        assert!(self.is_zero() || other.is_zero() || self.degree == other.degree, "degree mismatch");
        let mut out = if self.is_zero() { DForm::zero(other.degree) } else { self.clone() };
        for (m, e) in &other.comps {
            out.add_component(*m, e.clone());
        }
        out
    }

    pub fn sub(&self, other: &DForm) -> DForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DForm {
        DForm { degree: self.degree, comps: self.comps.iter().map(|(m, e)| (*m, -e)).collect() }
    }

    pub fn wedge(&self, other: &DForm) -> DForm {
        let mut acc: BTreeMap<Mask, Vec<Term>> = BTreeMap::new();
        for (ma, ca) in &self.comps {
            for (mb, cb) in &other.comps {
                if ma & mb != 0 {
                    continue;
                }
                let mut prod = ca * cb;
                if wedge_sign(*ma, *mb) {
                    prod = -prod;
                }
                acc.entry(ma | mb).or_default().extend(prod.terms().iter().cloned());
            }
        }
        let mut out = DForm::zero(self.degree + other.degree);
        for (m, ts) in acc {
            out.insert(m, Expr::from_terms(ts));
        }
        out
    }

    /// Substitutes atoms in every coefficient.
    pub fn substitute(&self, b: &BTreeMap<Atom, Expr>) -> Result<DForm, AlgebraError> {
        let mut out = DForm::zero(self.degree);
        for (m, e) in &self.comps {
            out.insert(*m, e.substitute(b)?);
        }
        Ok(out)
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> DForm {
        let mut out = DForm::zero(self.degree);
        for (m, e) in &self.comps {
            out.insert(*m, f(e));
        }
        out
    }

    pub fn any_atom(&self, pred: impl Fn(Atom) -> bool + Copy) -> bool {
        self.comps.values().any(|e| e.any_atom(pred))
    }

    /// Exterior derivative of a coordinate form.
    pub fn exterior_derivative(&self) -> Result<DForm, FormsError> {
        self.exterior_derivative_with_limit(DEFAULT_MAX_DERIV_ORDER)
    }

    pub fn exterior_derivative_with_limit(&self, max_order: u8) -> Result<DForm, FormsError> {
        let mut out = DForm::zero(self.degree + 1);
        for (m, c) in &self.comps {
            let dc = differential_with_limit(c, max_order)?;
            let mut basis = DForm::zero(self.degree);
            basis.insert(*m, Expr::one());
            out = out.add(&dc.wedge(&basis));
        }
        Ok(out)
    }

    /// Renders with the given generator names, e.g. `(u^-1)*dx^dp`.
    pub fn render(&self, names: &[String]) -> String {
        if self.comps.is_empty() {
            return "0".into();
        }
        let mut items: Vec<(Vec<usize>, &Expr)> = self.components().collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        items
            .into_iter()
            .map(|(idx, e)| {
                let w: Vec<&str> = idx.iter().map(|&i| names[i].as_str()).collect();
                if w.is_empty() {
                    format!("({e})")
                } else {
                    format!("({e})*{}", w.join("^"))
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Display for DForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&coordinate_names()))
    }
}

/// `d` of a scalar: `dF = sum_v (dF/dv) dv`, with `d f_i^(k) = f_i^(k+1) dx`
/// and `dF = sum F_v dv` for the generic function atom.
pub fn differential(c: &Expr) -> Result<DForm, FormsError> {
    differential_with_limit(c, DEFAULT_MAX_DERIV_ORDER)
}

fn differential_with_limit(c: &Expr, max_order: u8) -> Result<DForm, FormsError> {
    let mut parts: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
    for t in c.terms() {
        for &(a, e) in t.mono.factors() {
            let (_, rest) = t.mono.split_off(a);
            let coeff = &t.coeff * crate::algebra::rat(*e.numer(), *e.denom());
            let reduced = rest.mul(&crate::algebra::Monomial::power(a, e - 1));
            match a {
                Atom::Coef { index, order } => {
                    if order >= max_order {
                        return Err(FormsError::DerivOrderOverflow { index, limit: max_order });
                    }
                    let mono = reduced.mul(&crate::algebra::Monomial::atom(Atom::coef(index, order + 1)));
                    parts.entry(0).or_default().push(Term { coeff, mono });
                }
                Atom::Func => {
                    for v in Coord::ALL {
                        let mono = reduced.mul(&crate::algebra::Monomial::atom(Atom::FuncPartial(v)));
                        parts.entry(v.index()).or_default().push(Term { coeff: coeff.clone(), mono });
                    }
                }
                Atom::FuncPartial(_) => return Err(FormsError::UnsupportedAtom(a)),
                _ => {
                    let b = Basis1Form::of_atom(a).expect("coordinate atom");
                    parts.entry(b.index()).or_default().push(Term { coeff, mono: reduced });
                }
            }
        }
    }
    Ok(DForm::one_form(parts.into_iter().map(|(i, ts)| (i, Expr::from_terms(ts)))))
}

/// Ordered list of pointwise independent one-forms together with the inverse
/// of their coefficient matrix.
///
/// The inverse is found by peeling: repeatedly pick a coordinate column in
/// which exactly one not-yet-pivoted element has a nonzero entry. Every
/// coframe used by the reduction is triangular in this sense with
/// single-term pivots; anything else is rejected rather than eliminated.
#[derive(Clone, Debug)]
pub struct Coframe {
    forms: Vec<DForm>,
    labels: Vec<String>,
    /// Coordinate generator indices spanned by the coframe.
    columns: Vec<usize>,
    /// `inverse[k]` expresses coordinate generator `columns[k]` in the frame.
    inverse: Vec<DForm>,
}

impl Coframe {
    pub fn new(forms: Vec<DForm>, labels: Vec<String>) -> Result<Coframe, FormsError> {
        assert_eq!(forms.len(), labels.len());
        assert!(forms.iter().all(|f| f.degree() == 1 || f.is_zero()));
        let n = forms.len();
        let mut columns: Vec<usize> = forms
            .iter()
            .flat_map(|f| f.comps.keys().map(|m| m.trailing_zeros() as usize))
            .collect();
        columns.sort_unstable();
        columns.dedup();
        if columns.len() != n {
            return Err(FormsError::SingularCoframe);
        }
        // entry(row, col)
        let entry = |j: usize, c: usize| forms[j].comps.get(&(1 << c));

        // Pivot order: (column, row).
        let mut pivots: Vec<(usize, usize)> = Vec::with_capacity(n);
        let mut row_done = vec![false; n];
        let mut col_done = vec![false; n];
        while pivots.len() < n {
            let mut found = None;
            for (k, &c) in columns.iter().enumerate() {
                if col_done[k] {
                    continue;
                }
                let rows: Vec<usize> = (0..n).filter(|&j| !row_done[j] && entry(j, c).is_some()).collect();
                if rows.len() == 1 {
                    found = Some((k, rows[0]));
                    break;
                }
            }
            let Some((k, j)) = found else {
                return Err(FormsError::SingularCoframe);
            };
            let piv = entry(j, columns[k]).expect("pivot");
            if piv.as_single_term().is_none() {
                return Err(FormsError::NonTriangularCoframe(piv.to_string()));
            }
            row_done[j] = true;
            col_done[k] = true;
            pivots.push((k, j));
        }

        // Solve c^T A = e_col for each coordinate column.
        let mut inverse = Vec::with_capacity(n);
        for target in 0..n {
            let mut coeffs: Vec<Expr> = vec![Expr::zero(); n];
            for &(k, j) in &pivots {
                let c = columns[k];
                let mut rhs = if k == target { Expr::one() } else { Expr::zero() };
                for (jj, cj) in coeffs.iter().enumerate() {
                    if jj != j && !cj.is_zero() {
                        if let Some(a) = entry(jj, c) {
                            rhs -= &(cj * a);
                        }
                    }
                }
                coeffs[j] = rhs.div_by_term(entry(j, c).expect("pivot"))?;
            }
            inverse.push(DForm::one_form(coeffs.into_iter().enumerate()));
        }
        Ok(Coframe { forms, labels, columns, inverse })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn forms(&self) -> &[DForm] {
        &self.forms
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// Coordinate generator `columns()[k]` written in the frame.
    pub fn inverse_row(&self, k: usize) -> &DForm {
        &self.inverse[k]
    }

    /// Rewrites a coordinate form in the frame basis.
    pub fn express(&self, form: &DForm) -> Result<DForm, FormsError> {
        let mut acc: BTreeMap<Mask, Vec<Term>> = BTreeMap::new();
        for (idx, c) in form.components() {
            let mut w = DForm::scalar(c.clone());
            for i in idx {
                let k = self.columns.binary_search(&i).map_err(|_| FormsError::SingularCoframe)?;
                w = w.wedge(&self.inverse[k]);
                if w.is_zero() {
                    break;
                }
            }
            for (m, e) in w.comps {
                acc.entry(m).or_default().extend(e.terms().iter().cloned());
            }
        }
        let mut out = DForm::zero(form.degree());
        for (m, ts) in acc {
            out.insert(m, Expr::from_terms(ts));
        }
        Ok(out)
    }

    /// Inverse of [`Coframe::express`]: frame form back to coordinates.
    pub fn reconstruct(&self, frame_form: &DForm) -> DForm {
        let mut out = DForm::zero(frame_form.degree());
        for (idx, c) in frame_form.components() {
            let mut w = DForm::scalar(c.clone());
            for j in idx {
                w = w.wedge(&self.forms[j]);
            }
            out = out.add(&w);
        }
        out
    }

    /// Coframe derivatives `dF/dtheta^j`, so that `dF = sum_j (dF/dtheta^j) theta^j`.
    pub fn dual_derivatives(&self, f: &Expr) -> Result<Vec<Expr>, FormsError> {
        let framed = self.express(&differential(f)?)?;
        Ok((0..self.len()).map(|j| framed.coefficient(&[j])).collect())
    }

    pub fn render_frame_form(&self, f: &DForm) -> String {
        f.render(&self.labels)
    }
}

/// Convenience: `d` of a scalar expressed as coefficients in a coframe.
pub fn coframe_dual_derivatives(f: &Expr, c: &Coframe) -> Result<Vec<Expr>, FormsError> {
    c.dual_derivatives(f)
}

pub fn wedge(a: &DForm, b: &DForm) -> DForm {
    a.wedge(b)
}

pub fn exterior_derivative(a: &DForm) -> Result<DForm, FormsError> {
    a.exterior_derivative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> Expr {
        Expr::atom(Atom::U)
    }
    fn p() -> Expr {
        Expr::atom(Atom::P)
    }

    fn dx() -> DForm {
        DForm::basis(Basis1Form::DX)
    }
    fn du() -> DForm {
        DForm::basis(Basis1Form::DU)
    }

    #[test]
    fn wedge_basics() {
        assert!(dx().wedge(&dx()).is_zero());
        assert_eq!(dx().wedge(&du()), du().wedge(&dx()).neg());
        let a = dx().scale(&u());
        let b = du().scale(&p());
        assert_eq!(a.wedge(&b), DForm::from_components(2, [(vec![0, 1], u() * p())]));
    }

    #[test]
    fn d_of_f3_dx_vanishes() {
        let f = dx().scale(&Expr::atom(Atom::coef(3, 0)));
        assert!(f.exterior_derivative().unwrap().is_zero());
    }

    #[test]
    fn d_of_omega2() {
        let uinv = Expr::atom_pow(Atom::U, -1, 1);
        let w2 = du().scale(&uinv).sub(&dx().scale(&(p() * &uinv)));
        let d = w2.exterior_derivative().unwrap();
        let expected = DForm::from_components(
            2,
            [
                (vec![0, 2], uinv.clone()),
                (vec![0, 1], -(p() * Expr::atom_pow(Atom::U, -2, 1))),
            ],
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_order_limit() {
        let f = DForm::scalar(Expr::atom(Atom::coef(2, 6)));
        assert_eq!(
            f.exterior_derivative().unwrap_err(),
            FormsError::DerivOrderOverflow { index: 2, limit: 6 }
        );
        assert!(f.exterior_derivative_with_limit(8).is_ok());
    }

    #[test]
    fn express_in_base_like_coframe() {
        let uinv = Expr::atom_pow(Atom::U, -1, 1);
        let w1 = dx();
        let w2 = du().scale(&uinv).sub(&dx().scale(&(p() * &uinv)));
        let cf = Coframe::new(vec![w1, w2], vec!["w1".into(), "w2".into()]).unwrap();
        let e = cf.express(&du()).unwrap();
        assert_eq!(e, DForm::one_form([(0, p()), (1, u())]));
        assert_eq!(cf.express(&dx()).unwrap(), DForm::one_form([(0, Expr::one())]));
        assert_eq!(cf.reconstruct(&e), du());
    }

    #[test]
    fn non_triangular_pivot_is_rejected() {
        let a = dx().add(&du());
        let b = dx().sub(&du());
        assert_eq!(
            Coframe::new(vec![a, b], vec!["a".into(), "b".into()]).unwrap_err(),
            FormsError::SingularCoframe
        );
        let a = dx().scale(&(u() + p()));
        let err = Coframe::new(vec![a], vec!["a".into()]).unwrap_err();
        assert!(matches!(err, FormsError::NonTriangularCoframe(_)));
    }

    #[test]
    fn constant_has_zero_coframe_derivatives() {
        let cf = Coframe::new(vec![dx(), du()], vec!["a".into(), "b".into()]).unwrap();
        let d = cf.dual_derivatives(&Expr::int(7)).unwrap();
        assert!(d.iter().all(Expr::is_zero));
    }

    #[test]
    fn generic_function_differential() {
        let d = differential(&Expr::atom(Atom::Func)).unwrap();
        assert_eq!(d.component_count(), 5);
        assert_eq!(d.coefficient(&[2]), Expr::atom(Atom::FuncPartial(Coord::P)));
    }
}
