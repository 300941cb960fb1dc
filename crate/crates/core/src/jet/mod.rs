//! The third jet space `J3` with coordinates `(x, u, p, q, r)`: operators,
//! fiber-preserving transformations and their prolongations, the contact
//! ideal, the two base coframes, and numeric evaluation at jet points.

mod operator;
mod ratfun;
mod transform;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;
use twofloat::TwoFloat;

pub use operator::{parse_ratfun, ratfun_from_ast, ConcreteOperator, Operator, Problem};
pub use ratfun::{Poly, RationalFunction1D};
pub use transform::{parse_transformation, transform_operator, FiberTransformation, ProlongedMap};

use crate::algebra::{rat, AlgebraError, Atom, Expr};
use crate::forms::{differential, Basis1Form, Coframe, DForm, FormsError};
use crate::numeric::{evaluate_expr, EvalError, Value};
use crate::syntax::{ConvertError, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("degenerate operator: f3 vanishes identically")]
    DegenerateOperator,
    #[error("transformation is singular at x = {x}")]
    SingularAtPoint { x: String },
    #[error("transformation is not invertible: {0}")]
    NonInvertibleTransformation(String),
    #[error("an operator coefficient has a pole at x = {x}")]
    PoleAtPoint { x: String },
    #[error("derivative order {0} is beyond the precomputed range")]
    DerivOrderOverflow(usize),
    #[error("coefficients cannot be written as exact expressions in x (denominator is not a power of x)")]
    NotRepresentable,
    #[error("parse error: {0}")]
    Parse(#[from] ConvertError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Forms(#[from] FormsError),
}

impl From<ParseError> for JetError {
    fn from(e: ParseError) -> Self {
        JetError::Parse(e.into())
    }
}

/// A point `(x, u, p, q, r)` of `J3` with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct JetPoint {
    pub x: BigRational,
    pub u: BigRational,
    pub p: BigRational,
    pub q: BigRational,
    pub r: BigRational,
}

impl JetPoint {
    pub fn new(x: BigRational, u: BigRational, p: BigRational, q: BigRational, r: BigRational) -> JetPoint {
        JetPoint { x, u, p, q, r }
    }

    pub fn from_ints(v: [i64; 5]) -> JetPoint {
        let [x, u, p, q, r] = v.map(|n| rat(n, 1));
        JetPoint { x, u, p, q, r }
    }

    /// `(u, p, q, r)`.
    pub fn fiber(&self) -> [BigRational; 4] {
        [self.u.clone(), self.p.clone(), self.q.clone(), self.r.clone()]
    }

    pub fn coords(&self) -> [BigRational; 5] {
        [self.x.clone(), self.u.clone(), self.p.clone(), self.q.clone(), self.r.clone()]
    }

    pub fn from_coords(c: [BigRational; 5]) -> JetPoint {
        let [x, u, p, q, r] = c;
        JetPoint { x, u, p, q, r }
    }

    /// `u != 0` and `f3(x) != 0`.
    pub fn on_omega(&self, op: &ConcreteOperator) -> Result<bool, JetError> {
        Ok(!self.u.is_zero() && !op.value(3, 0, &self.x)?.is_zero())
    }

    /// The validated chamber `u > 0`, `f3(x) > 0`.
    pub fn in_chamber(&self, op: &ConcreteOperator) -> Result<bool, JetError> {
        Ok(self.u.is_positive() && op.value(3, 0, &self.x)?.is_positive())
    }
}

impl fmt::Display for JetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {}, {})", self.x, self.u, self.p, self.q, self.r)
    }
}

/// Generators `du - p dx`, `dp - q dx`, `dq - r dx` of the contact ideal.
pub fn contact_ideal() -> [DForm; 3] {
    let dx = |c: Atom| (Basis1Form::DX.index(), -Expr::atom(c));
    [
        DForm::one_form([(Basis1Form::DU.index(), Expr::one()), dx(Atom::P)]),
        DForm::one_form([(Basis1Form::DP.index(), Expr::one()), dx(Atom::Q)]),
        DForm::one_form([(Basis1Form::DQ.index(), Expr::one()), dx(Atom::R)]),
    ]
}

fn f(i: u8) -> Expr {
    Expr::atom(Atom::coef(i, 0))
}

/// The scalar invariant of the problem: `D[u]` (direct) or `D[u]/u` (gauge).
pub fn operator_invariant(problem: Problem) -> Expr {
    let top = f(3) * Expr::atom(Atom::R) + f(2) * Expr::atom(Atom::Q) + f(1) * Expr::atom(Atom::P);
    match problem {
        Problem::Direct => top + f(0) * Expr::atom(Atom::U),
        Problem::Gauge => top * Expr::atom_pow(Atom::U, -1, 1) + f(0),
    }
}

/// The four one-forms shared by both problems: `dx`, `(du - p dx)/u`,
/// `dp - q dx`, `dq - r dx`.
pub fn common_base_forms() -> [DForm; 4] {
    let [c1, c2, c3] = contact_ideal();
    [DForm::basis(Basis1Form::DX), c1.scale(&Expr::atom_pow(Atom::U, -1, 1)), c2, c3]
}

pub fn omega_labels() -> Vec<String> {
    (1..=5).map(|i| format!("w{i}")).collect()
}

/// Base coframe `w1..w5` on `J3`; `w5 = dI` for the problem's invariant `I`.
pub fn base_coframe(problem: Problem, op: &Operator) -> Result<Coframe, JetError> {
    let [w1, w2, w3, w4] = common_base_forms();
    let w5 = differential(&operator_invariant(problem))?;
    let mut forms = vec![w1, w2, w3, w4, w5];
    if let Operator::Concrete(c) = op {
        let b = c.symbolic_bindings(2).ok_or(JetError::NotRepresentable)?;
        forms = forms.iter().map(|w| w.substitute(&b)).collect::<Result<_, _>>()?;
    }
    Ok(Coframe::new(forms, omega_labels())?)
}

/// Exact values of the jet coordinates and of every coefficient derivative
/// `f_i^(k)` (`k <= max_order`) at one point, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct PointValues {
    values: BTreeMap<Atom, BigRational>,
    params: Option<[BigRational; 6]>,
}

impl PointValues {
    pub fn new(pt: &JetPoint, op: &ConcreteOperator, max_order: usize) -> Result<PointValues, JetError> {
        let mut values = BTreeMap::new();
        values.insert(Atom::X, pt.x.clone());
        values.insert(Atom::U, pt.u.clone());
        values.insert(Atom::P, pt.p.clone());
        values.insert(Atom::Q, pt.q.clone());
        values.insert(Atom::R, pt.r.clone());
        for i in 0..4 {
            for k in 0..=max_order {
                values.insert(Atom::coef(i as u8, k as u8), op.value(i, k, &pt.x)?);
            }
        }
        Ok(PointValues { values, params: None })
    }

    pub fn with_params(mut self, params: [BigRational; 6]) -> PointValues {
        self.params = Some(params);
        self
    }

    pub fn get(&self, a: Atom) -> Option<BigRational> {
        match a {
            Atom::Group(j) => self.params.as_ref().map(|p| p[j as usize - 1].clone()),
            _ => self.values.get(&a).cloned(),
        }
    }

    pub fn eval(&self, e: &Expr) -> Result<Value, JetError> {
        Ok(evaluate_expr(e, &|a| self.get(a))?)
    }

    pub fn eval_f64(&self, e: &Expr) -> Result<f64, JetError> {
        Ok(self.eval(e)?.to_f64())
    }

    pub fn eval_form(&self, form: &DForm) -> Result<NumericForm, JetError> {
        let comps = form
            .components()
            .map(|(idx, e)| Ok((idx, self.eval(e)?)))
            .collect::<Result<_, JetError>>()?;
        Ok(NumericForm { degree: form.degree(), comps })
    }
}

/// Evaluates an expression at a jet point, binding `f_i^(k)` from `op` and
/// group parameters from `params`.
pub fn evaluate(
    e: &Expr,
    pt: &JetPoint,
    op: &ConcreteOperator,
    params: Option<&[BigRational; 6]>,
) -> Result<Value, JetError> {
    let mut values: BTreeMap<Atom, BigRational> = BTreeMap::new();
    for a in e.atoms() {
        let v = match a {
            Atom::X => pt.x.clone(),
            Atom::U => pt.u.clone(),
            Atom::P => pt.p.clone(),
            Atom::Q => pt.q.clone(),
            Atom::R => pt.r.clone(),
            Atom::Coef { index, order } => op.value(index as usize, order as usize, &pt.x)?,
            Atom::Group(j) => match params {
                Some(p) => p[j as usize - 1].clone(),
                None => return Err(EvalError::UnboundAtom(a).into()),
            },
            Atom::Func | Atom::FuncPartial(_) => return Err(EvalError::UnboundAtom(a).into()),
        };
        values.insert(a, v);
    }
    Ok(evaluate_expr(e, &|a| values.get(&a).cloned())?)
}

pub fn evaluate_form(
    form: &DForm,
    pt: &JetPoint,
    op: &ConcreteOperator,
    params: Option<&[BigRational; 6]>,
) -> Result<NumericForm, JetError> {
    let comps = form
        .components()
        .map(|(idx, e)| Ok((idx, evaluate(e, pt, op, params)?)))
        .collect::<Result<_, JetError>>()?;
    Ok(NumericForm { degree: form.degree(), comps })
}

/// A form with numeric coefficients at a single point.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericForm {
    pub degree: usize,
    pub comps: Vec<(Vec<usize>, Value)>,
}

impl NumericForm {
    /// Dense coefficient vector of a one-form over `n` generators.
    pub fn dense(&self, n: usize) -> Vec<TwoFloat> {
        assert_eq!(self.degree, 1);
        let mut v = vec![TwoFloat::from(0.0); n];
        for (idx, val) in &self.comps {
            v[idx[0]] = val.to_real();
        }
        v
    }

    /// Contracts a one-form with a tangent vector given over the same generators.
    pub fn contract(&self, vector: &[BigRational]) -> Value {
        assert_eq!(self.degree, 1);
        let mut exact = BigRational::zero();
        let mut approx = TwoFloat::from(0.0);
        let mut any_approx = false;
        for (idx, val) in &self.comps {
            let c = &vector[idx[0]];
            match val {
                Value::Exact(r) => exact += r * c,
                Value::Approx(t) => {
                    any_approx = true;
                    approx += *t * crate::numeric::rational_to_real(c);
                }
            }
        }
        if any_approx {
            Value::Approx(approx + crate::numeric::rational_to_real(&exact))
        } else {
            Value::Exact(exact)
        }
    }
}

/// Pulls back a one-form given by dense coefficients `c~` at the image point
/// through a Jacobian: `(J^T c~)_l = sum_k c~_k dy~_k/dy_l`.
pub fn pullback_covector(coeffs: &[TwoFloat], jac: &[[BigRational; 5]; 5]) -> [TwoFloat; 5] {
    let mut out = [TwoFloat::from(0.0); 5];
    for (l, o) in out.iter_mut().enumerate() {
        for (k, c) in coeffs.iter().enumerate().take(5) {
            if !jac[k][l].is_zero() {
                *o += *c * crate::numeric::rational_to_real(&jac[k][l]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_generators() {
        let [c1, _, _] = contact_ideal();
        assert_eq!(c1.to_string(), "(-p)*dx + (1)*du");
        // Independent: dx ^ c1 ^ c2 ^ c3 ^ dr is nonzero.
        let all = contact_ideal()
            .iter()
            .fold(DForm::basis(Basis1Form::DX), |acc, c| acc.wedge(c))
            .wedge(&DForm::basis(Basis1Form::DR));
        assert!(!all.is_zero());
    }

    #[test]
    fn contact_forms_vanish_on_holonomic_curve() {
        // u(x) = x^3 at x = 2: tangent (1, u', u'', u''', u'''') = (1, 12, 12, 6, 0)
        let pt = JetPoint::from_ints([2, 8, 12, 12, 6]);
        let op = ConcreteOperator::d3();
        let tangent: Vec<BigRational> = [1, 12, 12, 6, 0].iter().map(|&n| rat(n, 1)).collect();
        for g in contact_ideal() {
            let v = evaluate_form(&g, &pt, &op, None).unwrap().contract(&tangent);
            assert_eq!(v, Value::Exact(rat(0, 1)));
        }
    }

    #[test]
    fn base_coframes() {
        let direct = base_coframe(Problem::Direct, &Operator::Abstract).unwrap();
        let w5 = &direct.forms()[4];
        assert_eq!(w5.coefficient(&[4]), f(3));
        assert_eq!(
            w5.coefficient(&[0]).to_string(),
            crate::syntax::parse_to_expr("f3'*r + f2'*q + f1'*p + f0'*u").unwrap().to_string()
        );
        let gauge = base_coframe(Problem::Gauge, &Operator::Abstract).unwrap();
        let du = gauge.forms()[4].coefficient(&[1]);
        let expected = crate::syntax::parse_to_expr("-(f3*r + f2*q + f1*p)/u^2").unwrap();
        assert_eq!(du, expected);
        for cf in [&direct, &gauge] {
            assert!(cf.forms()[4].exterior_derivative().unwrap().is_zero());
        }
    }

    #[test]
    fn concrete_base_coframe_substitutes_coefficients() {
        let op = ConcreteOperator::from_polys([&[0, 1], &[], &[], &[1]]).unwrap();
        let cf = base_coframe(Problem::Direct, &Operator::Concrete(op)).unwrap();
        // w5 = dr + x du + u dx
        assert_eq!(cf.forms()[4].coefficient(&[0]), Expr::atom(Atom::U));
        assert_eq!(cf.forms()[4].coefficient(&[1]), Expr::atom(Atom::X));
    }

    #[test]
    fn evaluation_examples() {
        let op = ConcreteOperator::d3();
        let pt = JetPoint::from_ints([0, 1, 0, 0, 5]);
        let i = operator_invariant(Problem::Direct);
        assert_eq!(evaluate(&i, &pt, &op, None).unwrap(), Value::Exact(rat(5, 1)));

        let e = crate::syntax::parse_to_expr("(f3*u)^(-1/3)").unwrap();
        let v = evaluate(&e, &JetPoint::from_ints([0, 8, 0, 0, 0]), &op, None).unwrap();
        assert!((v.to_f64() - 0.5).abs() < 1e-15);

        let [_, w2, _, _] = common_base_forms();
        let nf = evaluate_form(&w2, &JetPoint::from_ints([0, 2, 3, 0, 0]), &op, None).unwrap();
        let d_du: Vec<BigRational> = [0, 1, 0, 0, 0].iter().map(|&n| rat(n, 1)).collect();
        assert_eq!(nf.contract(&d_du), Value::Exact(rat(1, 2)));
    }

    #[test]
    fn evaluation_errors() {
        let op = ConcreteOperator::parse("f3 = 1/x").unwrap();
        let pt = JetPoint::from_ints([0, 1, 0, 0, 0]);
        assert!(matches!(
            evaluate(&Expr::atom(Atom::coef(3, 0)), &pt, &op, None),
            Err(JetError::PoleAtPoint { .. })
        ));
        assert!(matches!(
            evaluate(&Expr::atom(Atom::group(1)), &pt, &ConcreteOperator::d3(), None),
            Err(JetError::Eval(EvalError::UnboundAtom(_)))
        ));
        let neg = JetPoint::from_ints([0, -1, 0, 0, 0]);
        assert!(matches!(
            evaluate(&Expr::atom_pow(Atom::U, 1, 2), &neg, &ConcreteOperator::d3(), None),
            Err(JetError::Eval(EvalError::EvenRootOfNegative))
        ));
    }
}
