use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::algebra::Expr;
use crate::forms::{Coframe, DForm};

use super::lift::LiftedCoframe;
use super::CartanError;

/// A torsion slot `T^i_jk`, 1-based, `j < k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Slot {
    pub row: usize,
    pub j: usize,
    pub k: usize,
}

impl Slot {
    pub const fn new(row: usize, j: usize, k: usize) -> Slot {
        assert!(j < k);
        Slot { row, j, k }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}_{}{}", self.row, self.j, self.k)
    }
}

/// One row `d theta^i = sum alpha^a ^ theta^j + sum T_jk theta^j ^ theta^k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StructureRow {
    /// Coefficient of `alpha^a ^ theta^j`, keyed `(a, j)`, both 1-based.
    pub mc: BTreeMap<(usize, usize), Expr>,
    /// `T^i_jk`, keyed `(j, k)`, 1-based.
    pub torsion: BTreeMap<(usize, usize), Expr>,
    /// Coefficient of `alpha^a ^ alpha^b`; empty for a lifted coframe.
    pub quadratic: BTreeMap<(usize, usize), Expr>,
}

impl StructureRow {
    pub fn torsion_at(&self, j: usize, k: usize) -> Expr {
        self.torsion.get(&(j, k)).cloned().unwrap_or_default()
    }

    /// Indices `j` such that some `alpha ^ theta^j` is present.
    pub fn absorbing_thetas(&self) -> BTreeSet<usize> {
        self.mc.keys().map(|&(_, j)| j).collect()
    }
}

#[derive(Clone, Debug)]
pub struct StructureEquations {
    pub rows: Vec<StructureRow>,
    pub n_alpha: usize,
    frame: Coframe,
    differentials: Vec<DForm>,
}

impl StructureEquations {
    pub fn torsion(&self, s: Slot) -> Expr {
        self.rows[s.row - 1].torsion_at(s.j, s.k)
    }

    pub fn frame(&self) -> &Coframe {
        &self.frame
    }

    /// `d theta^i` in coordinates.
    pub fn differential(&self, i: usize) -> &DForm {
        &self.differentials[i - 1]
    }

    /// Row `i` rebuilt as a frame two-form.
    pub fn frame_form(&self, i: usize) -> DForm {
        let n = 5;
        let row = &self.rows[i - 1];
        let mut parts: Vec<(Vec<usize>, Expr)> = Vec::new();
        // alpha^a ^ theta^j = -(theta^j ^ alpha^a)
        for (&(a, j), c) in &row.mc {
            parts.push((vec![j - 1, n + a - 1], -c.clone()));
        }
        for (&(j, k), c) in &row.torsion {
            parts.push((vec![j - 1, k - 1], c.clone()));
        }
        for (&(a, b), c) in &row.quadratic {
            parts.push((vec![n + a - 1, n + b - 1], c.clone()));
        }
        DForm::from_components(2, parts)
    }

    /// Reassembles every row in coordinates and compares with `d theta^i`.
    pub fn reconstructs(&self) -> bool {
        (1..=self.rows.len()).all(|i| self.frame.reconstruct(&self.frame_form(i)) == self.differentials[i - 1])
    }

    /// Slots whose coefficient cannot be changed by `alpha -> alpha + z theta`:
    /// neither `theta^j` nor `theta^k` is wedged with a Maurer–Cartan form in
    /// that row. Only nonzero slots are listed.
    pub fn essential_torsion(&self) -> BTreeSet<Slot> {
        let mut out = BTreeSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            let covered = row.absorbing_thetas();
            for (&(j, k), c) in &row.torsion {
                if !c.is_zero() && !covered.contains(&j) && !covered.contains(&k) {
                    out.insert(Slot::new(i + 1, j, k));
                }
            }
        }
        out
    }
}

/// Decomposes each `d theta^i` over the `{theta, alpha}` frame.
pub fn structure_equations(lc: &LiftedCoframe) -> Result<StructureEquations, CartanError> {
    let frame = lc.extended_frame()?;
    let n = lc.thetas.len();
    let mut rows = Vec::with_capacity(n);
    let mut differentials = Vec::with_capacity(n);
    for theta in &lc.thetas {
        let d = theta.exterior_derivative()?;
        let framed = frame.express(&d)?;
        let mut row = StructureRow::default();
        for (idx, c) in framed.components() {
            let (a, b) = (idx[0], idx[1]);
            match (a < n, b < n) {
                (true, true) => {
                    row.torsion.insert((a + 1, b + 1), c.clone());
                }
                (true, false) => {
                    row.mc.insert((b - n + 1, a + 1), -c.clone());
                }
                (false, false) => {
                    row.quadratic.insert((a - n + 1, b - n + 1), c.clone());
                }
                (false, true) => unreachable!("multi-indices are sorted"),
            }
        }
        rows.push(row);
        differentials.push(d);
    }
    Ok(StructureEquations { rows, n_alpha: lc.alphas.len(), frame, differentials })
}

/// Structure constants of an `{e}`-structure: `d theta^i = sum c^i_jk theta^j ^ theta^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    /// `rows[i-1][(j, k)]`, 1-based, nonzero entries only.
    pub rows: Vec<BTreeMap<(usize, usize), Expr>>,
}

impl StructureConstants {
    pub fn get(&self, i: usize, j: usize, k: usize) -> Expr {
        self.rows[i - 1].get(&(j, k)).cloned().unwrap_or_default()
    }

    /// `d theta^i` as a two-form over the frame generators (0-based).
    pub fn frame_form(&self, i: usize) -> DForm {
        DForm::from_components(2, self.rows[i - 1].iter().map(|(&(j, k), c)| (vec![j - 1, k - 1], c.clone())))
    }

    pub fn render_row(&self, i: usize) -> String {
        if self.rows[i - 1].is_empty() {
            return format!("d theta{i} = 0");
        }
        let parts: Vec<String> = self.rows[i - 1]
            .iter()
            .map(|(&(j, k), c)| format!("({c}) theta{j}^theta{k}"))
            .collect();
        format!("d theta{i} = {}", parts.join(" + "))
    }
}

pub fn structure_constants(frame: &Coframe) -> Result<StructureConstants, CartanError> {
    let mut rows = Vec::with_capacity(frame.len());
    for theta in frame.forms() {
        let framed = frame.express(&theta.exterior_derivative()?)?;
        rows.push(framed.components().map(|(idx, c)| ((idx[0] + 1, idx[1] + 1), c.clone())).collect());
    }
    Ok(StructureConstants { rows })
}
