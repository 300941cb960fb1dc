use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use super::atom::Atom;
use super::AlgebraError;

/// Rational exponent attached to an atom inside a monomial.
pub type Exponent = Rational64;

/// Product of atoms raised to nonzero rational exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(SmallVec<[(Atom, Exponent); 4]>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(SmallVec::new())
    }

    pub fn atom(a: Atom) -> Monomial {
        Monomial::power(a, Exponent::one())
    }

    pub fn power(a: Atom, e: Exponent) -> Monomial {
        let mut v = SmallVec::new();
        if !e.is_zero() {
            v.push((a, e));
        }
        Monomial(v)
    }

    /// Builds a monomial from arbitrary factors, merging repeated atoms.
    pub fn from_factors<I: IntoIterator<Item = (Atom, Exponent)>>(factors: I) -> Monomial {
        let mut acc: BTreeMap<Atom, Exponent> = BTreeMap::new();
        for (a, e) in factors {
            *acc.entry(a).or_insert_with(Exponent::zero) += e;
        }
        Monomial(acc.into_iter().filter(|(_, e)| !e.is_zero()).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    pub fn exponent_of(&self, a: Atom) -> Exponent {
        match self.0.binary_search_by(|(b, _)| b.cmp(&a)) {
            Ok(i) => self.0[i].1,
            Err(_) => Exponent::zero(),
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if !e.is_zero() {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn pow(&self, e: Exponent) -> Monomial {
        if e.is_zero() {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|&(a, x)| (a, x * e)).collect())
    }

    pub fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|&(a, x)| (a, -x)).collect())
    }

    /// Removes one atom, returning its exponent and the remaining monomial.
    pub fn split_off(&self, a: Atom) -> (Exponent, Monomial) {
        let e = self.exponent_of(a);
        let rest = Monomial(self.0.iter().copied().filter(|(b, _)| *b != a).collect());
        (e, rest)
    }
}

/// A single coefficient-times-monomial term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigRational,
    pub mono: Monomial,
}

/// Exact generalized polynomial: a finite sum of rational multiples of monomials
/// with rational exponents.
///
/// The term list is always canonical (sorted by monomial, no zero coefficients,
/// no repeated monomials), so structural equality is mathematical equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Expr {
    terms: Vec<Term>,
}

pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    pub fn zero() -> Expr {
        Expr { terms: Vec::new() }
    }

    pub fn one() -> Expr {
        Expr::constant(BigRational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(BigRational::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(rat(n, d))
    }

    pub fn constant(c: BigRational) -> Expr {
        Expr::term(c, Monomial::one())
    }

    pub fn atom(a: Atom) -> Expr {
        Expr::term(BigRational::one(), Monomial::atom(a))
    }

    pub fn atom_pow(a: Atom, n: i64, d: i64) -> Expr {
        Expr::term(BigRational::one(), Monomial::power(a, Exponent::new(n, d)))
    }

    pub fn term(coeff: BigRational, mono: Monomial) -> Expr {
        if coeff.is_zero() {
            Expr::zero()
        } else {
            Expr { terms: vec![Term { coeff, mono }] }
        }
    }

    /// Canonicalizes an arbitrary bag of terms.
    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Expr {
        let mut v: Vec<Term> = terms.into_iter().collect();
        v.sort_by(|a, b| a.mono.cmp(&b.mono));
        let mut out: Vec<Term> = Vec::with_capacity(v.len());
        for t in v {
            match out.last_mut() {
                Some(last) if last.mono == t.mono => last.coeff += t.coeff,
                _ => {
                    if let Some(last) = out.last() {
                        if last.coeff.is_zero() {
                            out.pop();
                        }
                    }
                    out.push(t);
                }
            }
        }
        if out.last().is_some_and(|t| t.coeff.is_zero()) {
            out.pop();
        }
        Expr { terms: out }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    /// `Some(c)` iff the expression is the constant `c` (including zero).
    pub fn constant_value(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [t] if t.mono.is_one() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.constant_value().is_some()
    }

    pub fn as_single_term(&self) -> Option<&Term> {
        match self.terms.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .iter()
            .flat_map(|t| t.mono.factors().iter().map(|(a, _)| *a))
            .collect()
    }

    pub fn contains_atom(&self, a: Atom) -> bool {
        self.terms.iter().any(|t| !t.mono.exponent_of(a).is_zero())
    }

    pub fn any_atom(&self, pred: impl Fn(Atom) -> bool) -> bool {
        self.terms
            .iter()
            .any(|t| t.mono.factors().iter().any(|(a, _)| pred(*a)))
    }

    pub fn has_group_atoms(&self) -> bool {
        self.any_atom(Atom::is_group)
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * c, mono: t.mono.clone() })
                .collect(),
        }
    }

    pub fn mul_monomial(&self, c: &BigRational, m: &Monomial) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        // Multiplying by a monomial may reorder terms, so re-canonicalize.
        Expr::from_terms(
            self.terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * c, mono: t.mono.mul(m) }),
        )
    }

    /// Exact division by a single-term expression.
    pub fn div_by_term(&self, d: &Expr) -> Result<Expr, AlgebraError> {
        match d.terms.as_slice() {
            [] => Err(AlgebraError::ZeroDivisor),
            [t] => Ok(self.mul_monomial(&t.coeff.recip(), &t.mono.inverse())),
            _ => Err(AlgebraError::NonMonomialDivisor(d.to_string())),
        }
    }

    /// Raises to a rational power.
    ///
    /// Single terms take any exponent (the coefficient must then have an exact
    /// rational root); sums only take nonnegative integer exponents.
    pub fn pow_rational(&self, e: Exponent) -> Result<Expr, AlgebraError> {
        if e.is_zero() {
            return Ok(Expr::one());
        }
        if let [t] = self.terms.as_slice() {
            let coeff = rational_power(&t.coeff, e)?;
            return Ok(Expr::term(coeff, t.mono.pow(e)));
        }
        if self.is_zero() {
            return if e > Exponent::zero() {
                Ok(Expr::zero())
            } else {
                Err(AlgebraError::ZeroDivisor)
            };
        }
        if !e.is_integer() || e < Exponent::zero() {
            return Err(AlgebraError::NonMonomialBase(self.to_string()));
        }
        let mut n = *e.numer() as u64;
        let mut base = self.clone();
        let mut acc = Expr::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub fn powi(&self, n: i64) -> Result<Expr, AlgebraError> {
        self.pow_rational(Exponent::from_integer(n))
    }

    /// Formal partial derivative treating every atom as independent.
    pub fn partial_derivative(&self, v: Atom) -> Expr {
        Expr::from_terms(self.terms.iter().filter_map(|t| {
            let (e, rest) = t.mono.split_off(v);
            if e.is_zero() {
                return None;
            }
            let coeff = &t.coeff * BigRational::new((*e.numer()).into(), (*e.denom()).into());
            let mono = rest.mul(&Monomial::power(v, e - Exponent::one()));
            Some(Term { coeff, mono })
        }))
    }

    /// Simultaneous substitution of atoms by expressions.
    ///
    /// An atom carrying a fractional or negative exponent must be bound to a
    /// single term, otherwise the result would leave the ring.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr, AlgebraError> {
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut cache: BTreeMap<(Atom, Exponent), Expr> = BTreeMap::new();
        let mut acc: Vec<Term> = Vec::new();
        for t in &self.terms {
            let mut kept: Vec<(Atom, Exponent)> = Vec::new();
            let mut product = Expr::constant(t.coeff.clone());
            for &(a, e) in t.mono.factors() {
                match bindings.get(&a) {
                    None => kept.push((a, e)),
                    Some(b) => {
                        let p = match cache.get(&(a, e)) {
                            Some(p) => p.clone(),
                            None => {
                                let p = b.pow_rational(e).map_err(|err| match err {
                                    AlgebraError::NonMonomialBase(s) if e.is_integer() => {
                                        AlgebraError::NonMonomialDivisor(s)
                                    }
                                    other => other,
                                })?;
                                cache.insert((a, e), p.clone());
                                p
                            }
                        };
                        product = &product * &p;
                    }
                }
                if product.is_zero() {
                    break;
                }
            }
            let m = Monomial(kept.into_iter().collect());
            acc.extend(
                product
                    .terms
                    .into_iter()
                    .map(|pt| Term { coeff: pt.coeff, mono: pt.mono.mul(&m) }),
            );
        }
        Ok(Expr::from_terms(acc))
    }

    pub fn substitute_one(&self, a: Atom, value: &Expr) -> Result<Expr, AlgebraError> {
        let mut b = BTreeMap::new();
        b.insert(a, value.clone());
        self.substitute(&b)
    }

    /// Groups terms by the exponent of `a`, removing `a` from each group.
    pub fn collect_by(&self, a: Atom) -> BTreeMap<Exponent, Expr> {
        let mut groups: BTreeMap<Exponent, Vec<Term>> = BTreeMap::new();
        for t in &self.terms {
            let (e, rest) = t.mono.split_off(a);
            groups.entry(e).or_default().push(Term { coeff: t.coeff.clone(), mono: rest });
        }
        groups.into_iter().map(|(e, ts)| (e, Expr::from_terms(ts))).collect()
    }

    /// Numeric evaluation in `f64` with the real odd-root convention.
    ///
    /// Returns `None` if an atom is unbound or an even root of a negative
    /// number is requested.
    pub fn eval_f64(&self, value: &impl Fn(Atom) -> Option<f64>) -> Option<f64> {
        let mut sum = 0.0;
        for t in &self.terms {
            let mut v = t.coeff.to_f64()?;
            for &(a, e) in t.mono.factors() {
                v *= real_power_f64(value(a)?, e)?;
            }
            sum += v;
        }
        Some(sum)
    }
}

/// `base^e` for real `base`, using `sign(b)*|b|^e` when the exponent's
/// denominator is odd.
pub fn real_power_f64(base: f64, e: Exponent) -> Option<f64> {
    let (n, d) = (*e.numer(), *e.denom());
    if d == 1 {
        return Some(base.powi(n as i32));
    }
    if base < 0.0 && d % 2 == 0 {
        return None;
    }
    let root = if d == 3 { base.cbrt() } else { base.signum() * base.abs().powf(1.0 / d as f64) };
    Some(root.powi(n as i32))
}

fn rational_power(c: &BigRational, e: Exponent) -> Result<BigRational, AlgebraError> {
    let (n, d) = (*e.numer(), *e.denom());
    let base = if d == 1 {
        c.clone()
    } else {
        if !c.is_positive() {
            return Err(AlgebraError::NonPositiveCoefficient(c.to_string()));
        }
        let d32 = d as u32;
        let rn = c.numer().nth_root(d32);
        let rd = c.denom().nth_root(d32);
        if num_traits::pow(rn.clone(), d as usize) != *c.numer()
            || num_traits::pow(rd.clone(), d as usize) != *c.denom()
        {
            return Err(AlgebraError::IrrationalCoefficient(format!("{c}^{}", fmt_exponent(e))));
        }
        BigRational::new(rn, rd)
    };
    if n >= 0 {
        Ok(num_traits::pow(base, n as usize))
    } else if base.is_zero() {
        Err(AlgebraError::ZeroDivisor)
    } else {
        Ok(num_traits::pow(base.recip(), (-n) as usize))
    }
}

pub(crate) fn fmt_exponent(e: Exponent) -> String {
    if e.is_integer() {
        e.numer().to_string()
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let (a, b) = (&self.terms, &rhs.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].mono.cmp(&b[j].mono) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].coeff + &b[j].coeff;
                    if !c.is_zero() {
                        out.push(Term { coeff: c, mono: a[i].mono.clone() });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr { terms: out }
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if let [t] = rhs.terms.as_slice() {
            return self.mul_monomial(&t.coeff, &t.mono);
        }
        if let [t] = self.terms.as_slice() {
            return rhs.mul_monomial(&t.coeff, &t.mono);
        }
        let mut v = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                v.push(Term { coeff: &a.coeff * &b.coeff, mono: a.mono.mul(&b.mono) });
            }
        }
        Expr::from_terms(v)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: -&t.coeff, mono: t.mono.clone() })
                .collect(),
        }
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl AddAssign<&Expr> for Expr {
    fn add_assign(&mut self, rhs: &Expr) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Expr> for Expr {
    fn add_assign(&mut self, rhs: Expr) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Expr> for Expr {
    fn sub_assign(&mut self, rhs: &Expr) {
        *self = &*self - rhs;
    }
}

impl From<Atom> for Expr {
    fn from(a: Atom) -> Expr {
        Expr::atom(a)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::from_terms(iter.flat_map(|e| e.terms))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if e.is_one() {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a}^{}", fmt_exponent(*e))?;
            }
        }
        Ok(())
    }
}

/// Renders as a signed sum, e.g. `1/3*u^1/3*f3^-2/3*f3' - 5/3*u^-2/3*p*f3^1/3`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let c = t.coeff.abs();
            if t.mono.is_one() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", t.mono)?;
            } else {
                write!(f, "{c}*{}", t.mono)?;
            }
        }
        Ok(())
    }
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
    fn f3() -> Expr {
        Expr::atom(Atom::coef(3, 0))
    }

    #[test]
    fn inverse_monomials_cancel() {
        let a = Expr::int(2) * u();
        let b = Expr::ratio(1, 2) * Expr::atom_pow(Atom::U, -1, 1);
        assert_eq!(a * b, Expr::one());
    }

    #[test]
    fn fractional_exponents_add() {
        let a = Expr::atom_pow(Atom::coef(3, 0), 1, 3);
        let b = Expr::atom_pow(Atom::coef(3, 0), 2, 3);
        assert_eq!(a * b, f3());
    }

    #[test]
    fn difference_of_squares() {
        let prod = (u() + p()) * (u() - p());
        assert_eq!(prod, u() * u() - p() * p());
        assert_eq!(prod.len(), 2);
    }

    #[test]
    fn division_by_monomial() {
        let f3p = Expr::atom(Atom::coef(3, 1));
        let num = &f3p * &u() - Expr::int(5) * f3() * p();
        let den = Expr::int(3) * Expr::atom_pow(Atom::coef(3, 0), 2, 3) * Expr::atom_pow(Atom::U, 2, 3);
        let q = num.div_by_term(&den).unwrap();
        let expected = Expr::ratio(1, 3)
            * f3p
            * Expr::atom_pow(Atom::coef(3, 0), -2, 3)
            * Expr::atom_pow(Atom::U, 1, 3)
            - Expr::ratio(5, 3) * Expr::atom_pow(Atom::coef(3, 0), 1, 3) * p() * Expr::atom_pow(Atom::U, -2, 3);
        assert_eq!(q, expected);
        assert_eq!(&q * &den, num);
        assert_eq!(u().div_by_term(&u()).unwrap(), Expr::one());
    }

    #[test]
    fn division_errors() {
        assert_eq!(Expr::one().div_by_term(&Expr::zero()), Err(AlgebraError::ZeroDivisor));
        assert!(matches!(
            Expr::one().div_by_term(&(u() + p())),
            Err(AlgebraError::NonMonomialDivisor(_))
        ));
    }

    #[test]
    fn rational_powers() {
        let base = f3() * u();
        assert_eq!(
            base.pow_rational(Exponent::new(-1, 3)).unwrap(),
            Expr::atom_pow(Atom::coef(3, 0), -1, 3) * Expr::atom_pow(Atom::U, -1, 3)
        );
        let cube = Expr::int(8) * u().powi(3).unwrap();
        assert_eq!(cube.pow_rational(Exponent::new(1, 3)).unwrap(), Expr::int(2) * u());
        assert!(matches!(
            (u() + p()).pow_rational(Exponent::new(1, 3)),
            Err(AlgebraError::NonMonomialBase(_))
        ));
        assert!(matches!(
            Expr::int(2).pow_rational(Exponent::new(1, 3)),
            Err(AlgebraError::IrrationalCoefficient(_))
        ));
        assert_eq!((u() + p()).powi(2).unwrap(), u() * u() + Expr::int(2) * u() * p() + p() * p());
    }

    #[test]
    fn power_rule() {
        let d = Expr::atom_pow(Atom::U, 1, 3).partial_derivative(Atom::U);
        assert_eq!(d, Expr::ratio(1, 3) * Expr::atom_pow(Atom::U, -2, 3));
        let i = f3() * Expr::atom(Atom::R)
            + Expr::atom(Atom::coef(2, 0)) * Expr::atom(Atom::Q)
            + Expr::atom(Atom::coef(1, 0)) * p()
            + Expr::atom(Atom::coef(0, 0)) * u();
        assert_eq!(i.partial_derivative(Atom::P), Expr::atom(Atom::coef(1, 0)));
        assert!((f3() * u()).partial_derivative(Atom::X).is_zero());
    }

    #[test]
    fn substitution() {
        let a1 = Atom::group(1);
        let a2 = Atom::group(2);
        let a3 = Atom::group(3);
        let mut b = BTreeMap::new();
        b.insert(a1, Expr::atom_pow(Atom::coef(3, 0), -1, 3) * Expr::atom_pow(Atom::U, -1, 3));
        b.insert(a3, Expr::atom_pow(Atom::coef(3, 0), 1, 3) * Expr::atom_pow(Atom::U, -2, 3));
        let e = Expr::atom(a1) * Expr::atom(a3);
        assert_eq!(e.substitute(&b).unwrap(), Expr::atom_pow(Atom::U, -1, 1));

        let e = Expr::atom(a2) + Expr::atom(a3) * p();
        let s = e.substitute_one(a2, &(-(Expr::atom(a3) * p()))).unwrap();
        assert!(s.is_zero());
        assert_eq!(u().substitute(&BTreeMap::new()).unwrap(), u());
    }

    #[test]
    fn fractional_power_of_sum_binding_is_rejected() {
        let e = Expr::atom_pow(Atom::group(1), 1, 3);
        let err = e.substitute_one(Atom::group(1), &(u() + p())).unwrap_err();
        assert!(matches!(err, AlgebraError::NonMonomialBase(_)));
        let e = Expr::atom_pow(Atom::group(1), -1, 1);
        let err = e.substitute_one(Atom::group(1), &(u() + p())).unwrap_err();
        assert!(matches!(err, AlgebraError::NonMonomialDivisor(_)));
    }

    #[test]
    fn rendering_is_deterministic() {
        let e = Expr::ratio(1, 3) * Expr::atom_pow(Atom::U, 1, 3) * Expr::atom_pow(Atom::coef(3, 0), -2, 3)
            - Expr::ratio(5, 3) * p();
        assert_eq!(e.to_string(), "1/3*u^1/3*f3^-2/3 - 5/3*p");
        assert_eq!(Expr::zero().to_string(), "0");
        assert_eq!((-u()).to_string(), "-u");
    }
}
