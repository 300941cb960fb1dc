use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use super::operator::{ConcreteOperator, Problem};
use super::ratfun::RationalFunction1D;
use super::{JetError, JetPoint};
use crate::syntax::{self, ParseError, Pos};

/// Fiber-preserving change of variables `x~ = xi(x)`, `u~ = phi(x) u`, with an
/// explicit rational inverse of `xi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberTransformation {
    xi: RationalFunction1D,
    xi_inv: RationalFunction1D,
    phi: RationalFunction1D,
}

impl FiberTransformation {
    pub fn new(
        xi: RationalFunction1D,
        xi_inv: RationalFunction1D,
        phi: RationalFunction1D,
    ) -> Result<FiberTransformation, JetError> {
        if phi.is_zero() || xi.derivative().is_zero() {
            return Err(JetError::NonInvertibleTransformation("phi or xi' vanishes identically".into()));
        }
        if xi.compose(&xi_inv) != RationalFunction1D::x() || xi_inv.compose(&xi) != RationalFunction1D::x() {
            return Err(JetError::NonInvertibleTransformation(format!(
                "xi_inv = {xi_inv} is not the inverse of xi = {xi}"
            )));
        }
        Ok(FiberTransformation { xi, xi_inv, phi })
    }

    pub fn identity() -> FiberTransformation {
        FiberTransformation {
            xi: RationalFunction1D::x(),
            xi_inv: RationalFunction1D::x(),
            phi: RationalFunction1D::one(),
        }
    }

    /// `x~ = a x + b`, `u~ = phi(x) u`.
    pub fn affine(a: BigRational, b: BigRational, phi: RationalFunction1D) -> Result<FiberTransformation, JetError> {
        if a.is_zero() {
            return Err(JetError::NonInvertibleTransformation("zero slope".into()));
        }
        let inv_a = a.recip();
        let xi_inv = RationalFunction1D::affine(inv_a.clone(), -(b.clone() * inv_a));
        FiberTransformation::new(RationalFunction1D::affine(a, b), xi_inv, phi)
    }

    pub fn xi(&self) -> &RationalFunction1D {
        &self.xi
    }

    pub fn xi_inv(&self) -> &RationalFunction1D {
        &self.xi_inv
    }

    pub fn phi(&self) -> &RationalFunction1D {
        &self.phi
    }

    /// `alpha = xi'`.
    pub fn alpha(&self) -> RationalFunction1D {
        self.xi.derivative()
    }

    /// `beta = phi'/phi`.
    pub fn beta(&self) -> RationalFunction1D {
        self.phi.derivative().div(&self.phi).expect("phi is nonzero")
    }

    pub fn inverse(&self) -> FiberTransformation {
        let phi = self.phi.compose(&self.xi_inv).recip().expect("phi is nonzero");
        FiberTransformation { xi: self.xi_inv.clone(), xi_inv: self.xi.clone(), phi }
    }

    /// `other . self`: apply `self` first.
    pub fn then(&self, other: &FiberTransformation) -> FiberTransformation {
        FiberTransformation {
            xi: other.xi.compose(&self.xi),
            xi_inv: self.xi_inv.compose(&other.xi_inv),
            phi: other.phi.compose(&self.xi).mul(&self.phi),
        }
    }

    pub fn parse(src: &str) -> Result<FiberTransformation, JetError> {
        let mut xi = None;
        let mut xi_inv = None;
        let mut phi = None;
        for (name, pos, ast) in syntax::parse_assignments(src)? {
            let slot = match name.as_str() {
                "xi" => &mut xi,
                "xi_inv" => &mut xi_inv,
                "phi" => &mut phi,
                _ => return Err(ParseError { pos, message: format!("unknown field `{name}`") }.into()),
            };
            if slot.is_some() {
                return Err(ParseError { pos, message: format!("`{name}` given twice") }.into());
            }
            *slot = Some(super::operator::ratfun_from_ast(&ast)?);
        }
        let missing = |n: &str| -> JetError {
            ParseError { pos: Pos { line: 1, col: 1 }, message: format!("missing `{n}`") }.into()
        };
        FiberTransformation::new(
            xi.ok_or_else(|| missing("xi"))?,
            xi_inv.ok_or_else(|| missing("xi_inv"))?,
            phi.unwrap_or_else(RationalFunction1D::one),
        )
    }

    pub fn to_text(&self) -> String {
        format!("xi = {}\nxi_inv = {}\nphi = {}\n", self.xi, self.xi_inv, self.phi)
    }

    /// Third-order prolongation: `u~^(k) = sum_j m_kj(x) u^(j)` with
    /// `m_(k+1) = (1/xi') D m_k` from the chain rule `D~ = (1/xi') D`.
    pub fn prolong(&self) -> ProlongedMap {
        let one_over_alpha = self.alpha().recip().expect("xi' is nonzero");
        let z = RationalFunction1D::zero;
        let mut rows: [[RationalFunction1D; 4]; 4] = Default::default();
        rows[0] = [self.phi.clone(), z(), z(), z()];
        for k in 0..3 {
            let mut next: [RationalFunction1D; 4] = Default::default();
            for j in 0..4 {
                let m = &rows[k][j];
                if m.is_zero() {
                    continue;
                }
                next[j] = next[j].add(&m.derivative().mul(&one_over_alpha));
                next[j + 1] = next[j + 1].add(&m.mul(&one_over_alpha));
            }
            rows[k + 1] = next;
        }
        ProlongedMap { xi: self.xi.clone(), rows }
    }
}

impl fmt::Display for FiberTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xi = {}; xi_inv = {}; phi = {}", self.xi, self.xi_inv, self.phi)
    }
}

/// Prolonged fiber-preserving map on `J3`: `x~ = xi(x)` and
/// `(u~, p~, q~, r~) = M(x) (u, p, q, r)` with `M` lower triangular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProlongedMap {
    xi: RationalFunction1D,
    rows: [[RationalFunction1D; 4]; 4],
}

impl ProlongedMap {
    pub fn xi(&self) -> &RationalFunction1D {
        &self.xi
    }

    pub fn matrix(&self) -> &[[RationalFunction1D; 4]; 4] {
        &self.rows
    }

    pub fn apply(&self, pt: &JetPoint) -> Result<JetPoint, JetError> {
        let x = &pt.x;
        let sing = || JetError::SingularAtPoint { x: x.to_string() };
        let w = pt.fiber();
        let xb = self.xi.eval(x).ok_or_else(sing)?;
        let mut out: [BigRational; 4] = Default::default();
        for k in 0..4 {
            for j in 0..=k {
                if !self.rows[k][j].is_zero() {
                    out[k] += self.rows[k][j].eval(x).ok_or_else(sing)? * &w[j];
                }
            }
        }
        let [u, p, q, r] = out;
        Ok(JetPoint { x: xb, u, p, q, r })
    }

    /// Exact Jacobian `d(x~, u~, p~, q~, r~)/d(x, u, p, q, r)` at `pt`.
    pub fn jacobian(&self, pt: &JetPoint) -> Result<[[BigRational; 5]; 5], JetError> {
        let x = &pt.x;
        let sing = || JetError::SingularAtPoint { x: x.to_string() };
        let w = pt.fiber();
        let mut jac: [[BigRational; 5]; 5] = Default::default();
        jac[0][0] = self.xi.derivative().eval(x).ok_or_else(sing)?;
        for k in 0..4 {
            for j in 0..=k {
                let m = &self.rows[k][j];
                if m.is_zero() {
                    continue;
                }
                jac[k + 1][j + 1] = m.eval(x).ok_or_else(sing)?;
                jac[k + 1][0] += m.derivative().eval(x).ok_or_else(sing)? * &w[j];
            }
        }
        Ok(jac)
    }

    /// `self` after `first`.
    pub fn compose_after(&self, first: &ProlongedMap) -> ProlongedMap {
        let mut rows: [[RationalFunction1D; 4]; 4] = Default::default();
        for (k, row) in rows.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut acc = RationalFunction1D::zero();
                for l in 0..4 {
                    let a = &self.rows[k][l];
                    let b = &first.rows[l][j];
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.compose(&first.xi).mul(b));
                    }
                }
                *slot = acc;
            }
        }
        ProlongedMap { xi: self.xi.compose(&first.xi), rows }
    }

    /// Renders the five components as rational expressions in `(x, u, p, q, r)`.
    pub fn render(&self) -> [String; 5] {
        let vars = ["u", "p", "q", "r"];
        let mut out: [String; 5] = Default::default();
        out[0] = self.xi.to_string();
        for k in 0..4 {
            let parts: Vec<String> = (0..4)
                .filter(|&j| !self.rows[k][j].is_zero())
                .map(|j| format!("({})*{}", self.rows[k][j], vars[j]))
                .collect();
            out[k + 1] = if parts.is_empty() { "0".into() } else { parts.join(" + ") };
        }
        out
    }
}

/// Coefficients `c[k][m]` with `D^k = sum_m c[k][m](x) D~^m` under `D = xi' D~`.
fn chain_rule_table(xi: &RationalFunction1D) -> [[RationalFunction1D; 4]; 4] {
    let alpha = xi.derivative();
    let mut c: [[RationalFunction1D; 4]; 4] = Default::default();
    c[0][0] = RationalFunction1D::one();
    for k in 0..3 {
        let mut next: [RationalFunction1D; 4] = Default::default();
        for m in 0..4 {
            let e = &c[k][m];
            if e.is_zero() {
                continue;
            }
            // D (e D~^m) = e' D~^m + e xi' D~^(m+1)
            next[m] = next[m].add(&e.derivative());
            next[m + 1] = next[m + 1].add(&e.mul(&alpha));
        }
        c[k + 1] = next;
    }
    c
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Transforms `op` by `t` according to the direct or gauge rule, returning the
/// operator in the new variable `x~`.
pub fn transform_operator(
    op: &ConcreteOperator,
    t: &FiberTransformation,
    problem: Problem,
) -> Result<ConcreteOperator, JetError> {
    let psi = t.phi.recip().ok_or_else(|| JetError::NonInvertibleTransformation("phi = 0".into()))?;
    // psi^(j) for j = 0..3
    let mut psi_d = vec![psi];
    for _ in 0..3 {
        let d = psi_d.last().expect("nonempty").derivative();
        psi_d.push(d);
    }
    let chain = chain_rule_table(&t.xi);
    // D[u~/phi] = sum_i f_i sum_k C(i,k) psi^(i-k) D^k u~
    let mut g: [RationalFunction1D; 4] = Default::default();
    for i in 0..4 {
        let fi = op.coefficient(i);
        if fi.is_zero() {
            continue;
        }
        for k in 0..=i {
            let w = fi.mul(&psi_d[i - k]).scale(&BigRational::from_integer(binomial(i, k).into()));
            if w.is_zero() {
                continue;
            }
            for m in 0..=k {
                if !chain[k][m].is_zero() {
                    g[m] = g[m].add(&w.mul(&chain[k][m]));
                }
            }
        }
    }
    if problem == Problem::Gauge {
        g = g.map(|c| c.mul(&t.phi));
    }
    let f = g.map(|c| c.compose(&t.xi_inv));
    ConcreteOperator::new(f)
}

pub fn parse_transformation(src: &str) -> Result<FiberTransformation, JetError> {
    FiberTransformation::parse(src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use crate::jet::ratfun::Poly;

    fn pt(v: [i64; 5]) -> JetPoint {
        JetPoint::from_ints(v)
    }

    #[test]
    fn identity_prolongation() {
        let m = FiberTransformation::identity().prolong();
        let p = pt([1, 2, 3, 4, 5]);
        assert_eq!(m.apply(&p).unwrap(), p);
    }

    #[test]
    fn pure_scaling() {
        let t = FiberTransformation::affine(rat(2, 1), rat(0, 1), RationalFunction1D::one()).unwrap();
        let img = t.prolong().apply(&pt([3, 1, 1, 1, 1])).unwrap();
        assert_eq!(img, JetPoint::new(rat(6, 1), rat(1, 1), rat(1, 2), rat(1, 4), rat(1, 8)));
    }

    #[test]
    fn phi_equal_to_x() {
        // u~ = x u, p~ = u + x p, q~ = 2p + x q, r~ = 3q + x r
        let t = FiberTransformation::new(RationalFunction1D::x(), RationalFunction1D::x(), RationalFunction1D::x())
            .unwrap();
        let m = t.prolong();
        let x = RationalFunction1D::x;
        let c = |n: i64| RationalFunction1D::int(n);
        let z = RationalFunction1D::zero;
        let expected = [
            [x(), z(), z(), z()],
            [c(1), x(), z(), z()],
            [z(), c(2), x(), z()],
            [z(), z(), c(3), x()],
        ];
        assert_eq!(m.matrix(), &expected);
    }

    #[test]
    fn d3_under_doubling() {
        let op = ConcreteOperator::d3();
        let t = FiberTransformation::affine(rat(2, 1), rat(0, 1), RationalFunction1D::one()).unwrap();
        let out = transform_operator(&op, &t, Problem::Direct).unwrap();
        assert_eq!(out.coefficient(3), &RationalFunction1D::int(8));
        for i in 0..3 {
            assert!(out.coefficient(i).is_zero());
        }
    }

    #[test]
    fn gauge_by_constant_is_trivial() {
        let op = ConcreteOperator::from_polys([&[1, 2], &[0, 1], &[3], &[1, 0, 1]]).unwrap();
        let t = FiberTransformation::new(
            RationalFunction1D::x(),
            RationalFunction1D::x(),
            RationalFunction1D::int(5),
        )
        .unwrap();
        assert_eq!(transform_operator(&op, &t, Problem::Gauge).unwrap(), op);
        assert_eq!(transform_operator(&op, &FiberTransformation::identity(), Problem::Direct).unwrap(), op);
    }

    #[test]
    fn rejects_bad_inverse() {
        let r = FiberTransformation::new(
            RationalFunction1D::affine(rat(2, 1), rat(0, 1)),
            RationalFunction1D::x(),
            RationalFunction1D::one(),
        );
        assert!(matches!(r, Err(JetError::NonInvertibleTransformation(_))));
    }

    #[test]
    fn singular_points() {
        let t = FiberTransformation::new(
            RationalFunction1D::x(),
            RationalFunction1D::x(),
            RationalFunction1D::new(Poly::from_ints(&[1]), Poly::from_ints(&[-1, 1])),
        )
        .unwrap();
        assert!(matches!(t.prolong().apply(&pt([1, 1, 0, 0, 0])), Err(JetError::SingularAtPoint { .. })));
    }

    #[test]
    fn parse_transformation_file() {
        let t = FiberTransformation::parse("xi = 2*x + 1; xi_inv = (x - 1)/2\nphi = x^2 + 1").unwrap();
        assert_eq!(FiberTransformation::parse(&t.to_text()).unwrap(), t);
        assert!(FiberTransformation::parse("xi = 2*x; xi_inv = x").is_err());
        assert!(FiberTransformation::parse("xi = x; psi = 1").is_err());
    }
}
