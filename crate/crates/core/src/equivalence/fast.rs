use nalgebra::{Matrix5, Vector5};
use num_traits::{ToPrimitive, Zero};
use twofloat::TwoFloat;

use crate::algebra::{real_power_f64, Atom, Exponent, Expr};
use crate::forms::differential;
use crate::jet::ConcreteOperator;
use crate::numeric::{div, rational_to_real};

use super::signature::SignatureMap;

const COORDS: usize = 5;

/// Flattened `f64` evaluator for an expression over the jet coordinates and
/// coefficient values `f_i^(k)`.
#[derive(Clone, Debug)]
struct Compiled {
    terms: Vec<(f64, Vec<(usize, Exponent)>)>,
}

fn slot(a: Atom, max_order: usize) -> usize {
    match a {
        Atom::Coef { index, order } => COORDS + index as usize * (max_order + 1) + order as usize,
        other => other.coord().expect("signature atoms are jet coordinates or coefficients").index(),
    }
}

impl Compiled {
    fn new(e: &Expr, max_order: usize) -> Compiled {
        let terms = e
            .terms()
            .iter()
            .map(|t| {
                let c = t.coeff.to_f64().unwrap_or(f64::NAN);
                (c, t.mono.factors().iter().map(|&(a, ex)| (slot(a, max_order), ex)).collect())
            })
            .collect();
        Compiled { terms }
    }

    fn eval(&self, vals: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (c, factors) in &self.terms {
            let mut v = *c;
            for &(s, e) in factors {
                v *= real_power_f64(vals[s], e).unwrap_or(f64::NAN);
            }
            sum += v;
        }
        sum
    }
}

/// Polynomial coefficients of `f_i^(k)`, numerator and denominator, in
/// double-double: expanded transformed coefficients cancel heavily away from
/// the origin.
struct CoefficientTable {
    entries: Vec<(Vec<TwoFloat>, Vec<TwoFloat>)>,
}

fn horner(c: &[TwoFloat], x: f64) -> TwoFloat {
    c.iter().rev().fold(TwoFloat::from(0.0), |acc, a| acc * x + *a)
}

impl CoefficientTable {
    fn new(op: &ConcreteOperator, max_order: usize) -> CoefficientTable {
        let conv = |p: &crate::jet::Poly| p.coeffs().iter().map(rational_to_real).collect();
        let mut entries = Vec::new();
        for i in 0..4 {
            for k in 0..=max_order {
                entries.push(match op.derivative(i, k) {
                    Ok(f) => (conv(f.numerator()), conv(f.denominator())),
                    Err(_) => (vec![TwoFloat::from(f64::NAN)], vec![TwoFloat::from(1.0)]),
                });
            }
        }
        CoefficientTable { entries }
    }

    fn fill(&self, x: f64, out: &mut Vec<f64>) {
        out.extend(self.entries.iter().map(|(n, d)| f64::from(div(horner(n, x), horner(d, x)))));
    }
}

/// Solves for one fiber coordinate from a component that is affine in it:
/// `component = a0 + a1 * v`, with `a0, a1` free of `v` and of every later
/// eliminated coordinate.
struct Elimination {
    coord: usize,
    component: usize,
    a0: Compiled,
    a1: Compiled,
}

/// The signature map with its gradient, compiled for repeated evaluation
/// during the preimage search.
pub(crate) struct FastSignature {
    max_order: usize,
    table: CoefficientTable,
    values: Vec<Compiled>,
    grads: Vec<[Compiled; 5]>,
    eliminations: Vec<Elimination>,
}

/// Finds, for `p`, `q`, `r` in turn, a component affine in that coordinate
/// whose remaining dependence is on `x`, `u` and coordinates already solved.
fn plan_eliminations(components: &[Expr], max_order: usize) -> Vec<Elimination> {
    let mut known = vec![Atom::X, Atom::U];
    let mut used = Vec::new();
    let mut out = Vec::new();
    for v in [Atom::P, Atom::Q, Atom::R] {
        let found = components.iter().enumerate().find_map(|(c, e)| {
            if used.contains(&c) {
                return None;
            }
            let groups = e.collect_by(v);
            let one = Exponent::from_integer(1);
            if !groups.contains_key(&one) || groups.keys().any(|k| !k.is_zero() && *k != one) {
                return None;
            }
            let free_of_later = groups.values().all(|g| {
                g.atoms().into_iter().all(|a| known.contains(&a) || matches!(a, Atom::Coef { .. }))
            });
            free_of_later.then(|| {
                let a0 = groups.get(&Exponent::zero()).cloned().unwrap_or_default();
                (c, Compiled::new(&a0, max_order), Compiled::new(&groups[&one], max_order))
            })
        });
        let Some((c, a0, a1)) = found else {
            return Vec::new();
        };
        used.push(c);
        known.push(v);
        out.push(Elimination { coord: v.coord().expect("jet coordinate").index(), component: c, a0, a1 });
    }
    out
}

impl FastSignature {
    pub fn new(map: &SignatureMap, op: &ConcreteOperator) -> FastSignature {
        let max_order = map.max_order() + 1;
        let values = map.components.iter().map(|c| Compiled::new(c, max_order)).collect();
        let grads = map
            .components
            .iter()
            .map(|c| {
                let d = differential(c).expect("coefficient orders stay within the limit");
                std::array::from_fn(|v| Compiled::new(&d.coefficient(&[v]), max_order))
            })
            .collect();
        let eliminations = plan_eliminations(&map.components, max_order);
        FastSignature { max_order, table: CoefficientTable::new(op, max_order), values, grads, eliminations }
    }

    fn slots(&self, z: &[f64; 5]) -> Vec<f64> {
        let mut vals = Vec::with_capacity(COORDS + 4 * (self.max_order + 1));
        vals.extend_from_slice(z);
        self.table.fill(z[0], &mut vals);
        vals
    }

    #[cfg(test)]
    pub fn eval(&self, z: &[f64; 5]) -> Vec<f64> {
        let vals = self.slots(z);
        self.values.iter().map(|c| c.eval(&vals)).collect()
    }

    fn eval_with_jacobian(&self, z: &[f64; 5]) -> (Vec<f64>, Vec<[f64; 5]>) {
        let vals = self.slots(z);
        let f = self.values.iter().map(|c| c.eval(&vals)).collect();
        let j = self.grads.iter().map(|g| std::array::from_fn(|v| g[v].eval(&vals))).collect();
        (f, j)
    }

    /// Completes `(x, u)` to a point whose eliminating components equal the
    /// target exactly, or `None` if no elimination plan exists.
    fn complete(&self, x: f64, u: f64, target: &[f64]) -> Option<[f64; 5]> {
        if self.eliminations.is_empty() {
            return None;
        }
        let mut z = [x, u, 0.0, 0.0, 0.0];
        let mut vals = self.slots(&z);
        for el in &self.eliminations {
            let v = (target[el.component] - el.a0.eval(&vals)) / el.a1.eval(&vals);
            z[el.coord] = v;
            vals[el.coord] = v;
        }
        z.iter().all(|c| c.is_finite()).then_some(z)
    }

    /// Largest scaled residual at `z`.
    fn residual(&self, z: &[f64; 5], target: &[f64]) -> f64 {
        let vals = self.slots(z);
        self.values.iter().zip(target).fold(0.0f64, |m, (c, t)| {
            let r = ((c.eval(&vals) - t) / t.abs().max(1.0)).abs();
            if r.is_finite() {
                m.max(r)
            } else {
                f64::INFINITY
            }
        })
    }

    /// Starting point for a target near a known preimage: keep its `(x, u)`
    /// and solve the fiber coordinates exactly.
    pub fn warm_start(&self, z: [f64; 5], target: &[f64]) -> [f64; 5] {
        self.complete(z[0], z[1], target).unwrap_or(z)
    }

    /// Coarse scan of `(x, u)` over `|x| <= x_max` and `u = +-2^k`,
    /// `|k| <= octaves`, with the fiber coordinates eliminated. Returns up to
    /// `keep` grid cells that are local minima of the residual, best first.
    pub fn scan(&self, target: &[f64], x_max: f64, x_steps: usize, octaves: i32, keep: usize) -> Vec<[f64; 5]> {
        let us: Vec<f64> = (-octaves..=octaves).map(|k| 2f64.powi(k)).collect();
        let mut grid = vec![vec![[(f64::INFINITY, [f64::NAN; 5]); 2]; us.len()]; x_steps + 1];
        for (i, row) in grid.iter_mut().enumerate() {
            let x = -x_max + 2.0 * x_max * i as f64 / x_steps as f64;
            for (j, &u) in us.iter().enumerate() {
                for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                    if let Some(z) = self.complete(x, sign * u, target) {
                        row[j][s] = (self.residual(&z, target), z);
                    }
                }
            }
        }
        let mut minima = Vec::new();
        for i in 0..=x_steps {
            for j in 0..us.len() {
                for (s, &cell) in grid[i][j].iter().enumerate() {
                    let r = cell.0;
                    if !r.is_finite() {
                        continue;
                    }
                    let lower = (i.saturating_sub(1)..=(i + 1).min(x_steps))
                        .flat_map(|a| (j.saturating_sub(1)..=(j + 1).min(us.len() - 1)).map(move |b| (a, b)))
                        .any(|(a, b)| (a, b) != (i, j) && grid[a][b][s].0 < r);
                    if !lower {
                        minima.push(cell);
                    }
                }
            }
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        minima.truncate(keep);
        minima.into_iter().map(|(_, z)| z).collect()
    }

    /// Gauss–Newton refinement over `(x, log |u|)` only, with the fiber
    /// coordinates eliminated at every step.
    pub fn refine(&self, target: &[f64], start: [f64; 5], max_iter: usize) -> [f64; 5] {
        if self.eliminations.is_empty() || start[1] == 0.0 {
            return start;
        }
        let sign = start[1].signum();
        let scale: Vec<f64> = target.iter().map(|t| t.abs().max(1.0)).collect();
        let eval = |w: [f64; 2]| -> Option<Vec<f64>> {
            let z = self.complete(w[0], sign * w[1].exp(), target)?;
            let vals = self.slots(&z);
            let r: Vec<f64> = self.values.iter().zip(target).zip(&scale).map(|((c, t), s)| (c.eval(&vals) - t) / s).collect();
            r.iter().all(|v| v.is_finite()).then_some(r)
        };
        let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
        let mut w = [start[0], start[1].abs().ln()];
        let Some(mut r) = eval(w) else {
            return start;
        };
        let mut lambda = 1e-3;
        for _ in 0..max_iter {
            let c = cost(&r);
            if c < 1e-30 {
                break;
            }
            let mut jac = [vec![0.0; r.len()], vec![0.0; r.len()]];
            for (k, col) in jac.iter_mut().enumerate() {
                let h = 1e-7 * w[k].abs().max(1.0);
                let mut wp = w;
                wp[k] += h;
                let Some(rp) = eval(wp) else {
                    return self.complete(w[0], sign * w[1].exp(), target).unwrap_or(start);
                };
                for (c, (a, b)) in col.iter_mut().zip(rp.iter().zip(&r)) {
                    *c = (a - b) / h;
                }
            }
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let (a00, a01, a11) = (dot(&jac[0], &jac[0]), dot(&jac[0], &jac[1]), dot(&jac[1], &jac[1]));
            let (g0, g1) = (dot(&jac[0], &r), dot(&jac[1], &r));
            let mut improved = false;
            while lambda < 1e12 {
                let (d00, d11) = (a00 * (1.0 + lambda) + 1e-300, a11 * (1.0 + lambda) + 1e-300);
                let det = d00 * d11 - a01 * a01;
                let step = [-(d11 * g0 - a01 * g1) / det, -(d00 * g1 - a01 * g0) / det];
                let trial = [w[0] + step[0], w[1] + step[1]];
                if let Some(rt) = eval(trial).filter(|rt| cost(rt) < c) {
                    w = trial;
                    r = rt;
                    lambda = (lambda / 10.0).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        self.complete(w[0], sign * w[1].exp(), target).unwrap_or(start)
    }

    /// Levenberg–Marquardt search for `z` with `S(z) = target`, measuring each
    /// component relative to `max(1, |target|)`. Returns the point and the
    /// largest scaled residual reached.
    pub fn solve(&self, target: &[f64], start: [f64; 5], max_iter: usize, tol: f64) -> ([f64; 5], f64) {
        let scale: Vec<f64> = target.iter().map(|t| t.abs().max(1.0)).collect();
        let residual = |f: &[f64]| -> Vec<f64> { f.iter().zip(target).zip(&scale).map(|((a, b), s)| (a - b) / s).collect() };
        let cost = |r: &[f64]| -> f64 {
            let c: f64 = r.iter().map(|x| x * x).sum();
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        };
        let max_abs = |r: &[f64]| r.iter().fold(0.0f64, |m, x| if x.is_finite() { m.max(x.abs()) } else { f64::INFINITY });
        let mut z = start;
        let (f, mut jac) = self.eval_with_jacobian(&z);
        let mut r = residual(&f);
        let mut c = cost(&r);
        let mut lambda = 1e-3;
        for _ in 0..max_iter {
            if max_abs(&r) <= tol || !c.is_finite() {
                break;
            }
            let mut a = Matrix5::<f64>::zeros();
            let mut g = Vector5::<f64>::zeros();
            for (row, (ri, s)) in jac.iter().zip(r.iter().zip(&scale)) {
                let jr = Vector5::from_fn(|i, _| row[i] / s);
                a += jr * jr.transpose();
                g += jr * *ri;
            }
            let mut improved = false;
            while lambda < 1e12 {
                let mut damped = a;
                for i in 0..5 {
                    damped[(i, i)] += lambda * (a[(i, i)] + 1e-12);
                }
                let Some(step) = damped.lu().solve(&(-g)) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial: [f64; 5] = std::array::from_fn(|i| z[i] + step[i]);
                let (ft, jt) = self.eval_with_jacobian(&trial);
                let rt = residual(&ft);
                let ct = cost(&rt);
                if ct < c {
                    z = trial;
                    jac = jt;
                    r = rt;
                    c = ct;
                    lambda = (lambda / 10.0).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (z, max_abs(&r))
    }
}
