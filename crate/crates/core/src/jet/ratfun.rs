use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::{Atom, Expr, Monomial};

/// Dense univariate polynomial in `x` over the rationals, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly(Vec<BigRational>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(Vec::new())
    }

    pub fn constant(c: BigRational) -> Poly {
        Poly::from_coeffs(vec![c])
    }

    pub fn x() -> Poly {
        Poly::from_coeffs(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn from_coeffs(mut c: Vec<BigRational>) -> Poly {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Poly(c)
    }

    pub fn from_ints(c: &[i64]) -> Poly {
        Poly::from_coeffs(c.iter().map(|&n| BigRational::from_integer(n.into())).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.0.last()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        Poly::from_coeffs(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        Poly::from_coeffs(self.0.iter().map(|a| a * c).collect())
    }

    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        let dl = d.leading().expect("division by zero polynomial").clone();
        let dd = d.0.len() - 1;
        let mut rem = self.0.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &dl;
            if !c.is_zero() {
                for (i, b) in d.0.iter().enumerate() {
                    rem[k + i] -= &c * b;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => Poly::zero(),
        }
    }

    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.monic(), o.monic());
        while !b.is_zero() {
            let r = a.divrem(&b).1.monic();
            a = b;
            b = r;
        }
        a
    }

    pub fn derivative(&self) -> Poly {
        Poly::from_coeffs(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        use num_traits::ToPrimitive;
        let mut acc = 0.0;
        for c in self.0.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// `Some((c, m))` if the polynomial is the single term `c*x^m`.
    pub fn as_monomial(&self) -> Option<(BigRational, usize)> {
        let nz: Vec<usize> = (0..self.0.len()).filter(|&i| !self.0[i].is_zero()).collect();
        match nz.as_slice() {
            [m] => Some((self.0[*m].clone(), *m)),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::from_terms(self.0.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| {
            crate::algebra::Term { coeff: c.clone(), mono: Monomial::power(Atom::X, (i as i64).into()) }
        }))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in (0..self.0.len()).rev() {
            let c = &self.0[i];
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let a = c.abs();
            match (i, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => f.write_str("x")?,
                (1, false) => write!(f, "{a}*x")?,
                (_, true) => write!(f, "x^{i}")?,
                (_, false) => write!(f, "{a}*x^{i}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Reduced quotient of two polynomials in `x`; the denominator is monic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction1D {
    num: Poly,
    den: Poly,
}

impl Default for RationalFunction1D {
    fn default() -> Self {
        RationalFunction1D::zero()
    }
}

impl RationalFunction1D {
    pub fn new(num: Poly, den: Poly) -> RationalFunction1D {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RationalFunction1D::zero();
        }
        let g = num.gcd(&den);
        let (n, _) = num.divrem(&g);
        let (d, _) = den.divrem(&g);
        let l = d.leading().expect("nonzero").recip();
        RationalFunction1D { num: n.scale(&l), den: d.scale(&l) }
    }

    pub fn zero() -> RationalFunction1D {
        RationalFunction1D { num: Poly::zero(), den: Poly::constant(BigRational::one()) }
    }

    pub fn one() -> RationalFunction1D {
        RationalFunction1D::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> RationalFunction1D {
        RationalFunction1D::poly(Poly::constant(c))
    }

    pub fn int(n: i64) -> RationalFunction1D {
        RationalFunction1D::constant(BigRational::from_integer(n.into()))
    }

    pub fn x() -> RationalFunction1D {
        RationalFunction1D::poly(Poly::x())
    }

    pub fn poly(p: Poly) -> RationalFunction1D {
        RationalFunction1D { num: p, den: Poly::constant(BigRational::one()) }
    }

    /// `a*x + b`.
    pub fn affine(a: BigRational, b: BigRational) -> RationalFunction1D {
        RationalFunction1D::poly(Poly::from_coeffs(vec![b, a]))
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.num.is_zero() {
            return Some(BigRational::zero());
        }
        (self.num.degree() == Some(0) && self.is_polynomial()).then(|| self.num.0[0].clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return RationalFunction1D::new(self.num.add(&o.num), self.den.clone());
        }
        RationalFunction1D::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        RationalFunction1D { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        RationalFunction1D::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return RationalFunction1D::zero();
        }
        RationalFunction1D { num: self.num.scale(c), den: self.den.clone() }
    }

    /// `None` when dividing by the zero function.
    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        Some(RationalFunction1D::new(self.num.mul(&o.den), self.den.mul(&o.num)))
    }

    pub fn recip(&self) -> Option<Self> {
        RationalFunction1D::one().div(self)
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(RationalFunction1D::one(), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Self {
        // (n/d)' = (n' (d/g) - n (d'/g)) / (d (d/g)) with g = gcd(d, d')
        let dd = self.den.derivative();
        let g = self.den.gcd(&dd);
        let (d_g, _) = self.den.divrem(&g);
        let (dd_g, _) = dd.divrem(&g);
        let n = self.num.derivative().mul(&d_g).sub(&self.num.mul(&dd_g));
        RationalFunction1D::new(n, self.den.mul(&d_g))
    }

    /// Value at `x`, or `None` at a pole.
    pub fn eval(&self, x: &BigRational) -> Option<BigRational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(x) / d)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    /// `self(g(x))`.
    pub fn compose(&self, g: &RationalFunction1D) -> RationalFunction1D {
        let horner = |p: &Poly| {
            let mut acc = RationalFunction1D::zero();
            for c in p.0.iter().rev() {
                acc = acc.mul(g).add(&RationalFunction1D::constant(c.clone()));
            }
            acc
        };
        horner(&self.num).div(&horner(&self.den)).expect("composition produced a zero denominator")
    }

    /// Exact [`Expr`] in the atom `x` when the denominator is a single power of `x`.
    pub fn to_expr(&self) -> Option<Expr> {
        let (c, m) = self.den.as_monomial()?;
        let d = Expr::term(c, Monomial::power(Atom::X, (m as i64).into()));
        self.num.to_expr().div_by_term(&d).ok()
    }
}

impl fmt::Display for RationalFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            let d = &self.den.0[0];
            if d.is_one() {
                return write!(f, "{}", self.num);
            }
            return write!(f, "{}", self.num.scale(&d.recip()));
        }
        write!(f, "({})/({})", self.num, self.den)
    }
}
