use serde::Serialize;

use crate::algebra::{Atom, Expr};
use crate::cartan::{cached_reduction, CartanError};
use crate::jet::{operator_invariant, ConcreteOperator, JetError, JetPoint, PointValues, Problem};

use super::{EquivalenceError, GridConfig};

/// Invariants of one problem together with their `theta1`-derivatives, as
/// generic expressions in the coefficient atoms.
#[derive(Clone, Debug)]
pub struct SignatureMap {
    pub mode: Problem,
    /// Names of the tuple components, invariants first.
    pub names: Vec<String>,
    pub components: Vec<Expr>,
    /// The invariants alone.
    pub invariants: Vec<(String, Expr)>,
    max_order: usize,
}

impl SignatureMap {
    /// Direct mode uses `I, I1, I2`; gauge mode uses `I1, I2` and optionally
    /// the operator invariant `I`.
    pub fn new(mode: Problem, include_operator_invariant: bool) -> Result<SignatureMap, CartanError> {
        let rr = cached_reduction(mode)?;
        let mut invariants = Vec::new();
        if mode == Problem::Gauge && include_operator_invariant {
            invariants.push(("I".to_string(), operator_invariant(mode)));
        }
        invariants.extend(rr.invariants.iter().cloned());
        let mut names: Vec<String> = invariants.iter().map(|(n, _)| n.clone()).collect();
        let mut components: Vec<Expr> = invariants.iter().map(|(_, e)| e.clone()).collect();
        for (n, e) in &invariants {
            names.push(format!("d{n}/dtheta1"));
            components.push(rr.derivative_table.apply(1, e)?);
        }
        let max_order = components.iter().map(coefficient_order).max().unwrap_or(0);
        Ok(SignatureMap { mode, names, components, invariants, max_order })
    }

    /// Highest derivative order of a coefficient appearing in the components.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Tuple at one point, evaluated exactly where possible and in
    /// double-double precision otherwise.
    pub fn tuple(&self, op: &ConcreteOperator, pt: &JetPoint) -> Result<Vec<f64>, JetError> {
        let pv = PointValues::new(pt, op, self.max_order)?;
        self.components.iter().map(|c| pv.eval_f64(c)).collect()
    }
}

pub(crate) fn coefficient_order(e: &Expr) -> usize {
    e.atoms()
        .into_iter()
        .filter_map(|a| match a {
            Atom::Coef { order, .. } => Some(order as usize),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, Default)]
pub struct SignatureConfig {
    pub grid: GridConfig,
    /// Adds the operator invariant `I` to the gauge signature.
    pub include_operator_invariant: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CloudPoint {
    pub point: [String; 5],
    pub tuple: Vec<f64>,
    #[serde(skip)]
    pub jet: JetPoint,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantSignature {
    pub mode: Problem,
    pub names: Vec<String>,
    /// Invariants with the operator's coefficients substituted, when every
    /// coefficient is a Laurent polynomial in `x` and the fractional powers
    /// stay single-term.
    pub symbolic: Option<Vec<(String, String)>>,
    pub cloud: Vec<CloudPoint>,
}

/// Substitutes the operator's coefficients into the invariants, or `None`
/// when the result is not an exact generalized Laurent polynomial.
pub fn substituted_invariants(map: &SignatureMap, op: &ConcreteOperator) -> Option<Vec<(String, Expr)>> {
    let order = map.invariants.iter().map(|(_, e)| coefficient_order(e)).max().unwrap_or(0);
    let bindings = op.symbolic_bindings(order)?;
    map.invariants
        .iter()
        .map(|(n, e)| Some((n.clone(), e.substitute(&bindings).ok()?)))
        .collect()
}

pub fn invariant_signature(
    op: &ConcreteOperator,
    mode: Problem,
    config: &SignatureConfig,
) -> Result<InvariantSignature, EquivalenceError> {
    let map = SignatureMap::new(mode, config.include_operator_invariant)?;
    let symbolic = substituted_invariants(&map, op)
        .map(|v| v.into_iter().map(|(n, e)| (n, e.to_string())).collect());
    let cloud = config
        .grid
        .points(op, map.max_order())?
        .into_iter()
        .map(|jet| {
            let tuple = map.tuple(op, &jet)?;
            let point = jet.coords().map(|c| c.to_string());
            Ok(CloudPoint { point, tuple, jet })
        })
        .collect::<Result<Vec<_>, JetError>>()?;
    Ok(InvariantSignature { mode, names: map.names, symbolic, cloud })
}
