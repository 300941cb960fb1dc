use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{Atom, Expr};
use crate::forms::{Basis1Form, DForm};
use crate::jet::{operator_invariant, Problem};
use crate::syntax::{atom_from_name, parse_expr, to_expr};

use super::lift::{alpha_labels, theta_labels};
use super::reduction::{jacobi_residual, ReductionResult};
use super::structure::Slot;
use super::CartanError;

const REFERENCE: &str = include_str!("../../data/reference.toml");
const KNOWN_DISCREPANCIES: &str = include_str!("../../data/known_discrepancies.toml");

/// One published item to compare against the recomputation.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    BaseForm { index: usize, paper: BTreeMap<String, String> },
    OperatorInvariant { paper: String },
    MaurerCartan { index: usize, paper: BTreeMap<String, String> },
    McPattern { stage: usize, row: usize, pairs: Vec<[usize; 2]> },
    Support { stage: usize, row: usize, slots: Vec<String> },
    Torsion { stage: usize, slot: String, paper: String },
    Essential { stage: usize, slots: Vec<String> },
    Normalization { param: String, paper: String },
    FinalForm { index: usize, paper: BTreeMap<String, String> },
    Structure { row: usize, paper: BTreeMap<String, String> },
    Invariant { name: String, paper: String },
    TotalDerivative { scale: String, r: Option<String> },
    DerivativeRow { row: usize, paper: BTreeMap<String, String> },
    Syzygy { invariant: String, theta: usize, paper: String },
    Jacobi { rows: Vec<usize> },
    OutOfScope { reason: String },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEquation {
    pub label: String,
    pub problem: Option<Problem>,
    pub checks: Vec<Check>,
}

#[derive(Deserialize)]
struct ReferenceFile {
    equation: Vec<ReferenceEquation>,
}

/// The shipped table of published formulas.
pub fn reference_equations() -> Vec<ReferenceEquation> {
    toml::from_str::<ReferenceFile>(REFERENCE).expect("shipped reference table parses").equation
}

/// A mismatch accepted in advance: both renderings must match exactly.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KnownDiscrepancy {
    pub label: String,
    pub item: String,
    pub paper: String,
    pub recomputed: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
pub struct Whitelist {
    #[serde(default)]
    pub known: Vec<KnownDiscrepancy>,
}

impl Whitelist {
    pub fn shipped() -> Whitelist {
        Whitelist::parse(KNOWN_DISCREPANCIES).expect("shipped whitelist parses")
    }

    pub fn parse(src: &str) -> Result<Whitelist, toml::de::Error> {
        toml::from_str(src)
    }

    fn lookup(&self, label: &str, item: &ItemReport) -> Option<&KnownDiscrepancy> {
        self.known
            .iter()
            .find(|k| k.label == label && k.item == item.item && k.paper == item.paper && k.recomputed == item.recomputed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Verified,
    KnownDiscrepancy,
    Discrepancy,
    OutOfScope,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Verified => "VERIFIED",
            Status::KnownDiscrepancy => "KNOWN-DISCREPANCY",
            Status::Discrepancy => "DISCREPANCY",
            Status::OutOfScope => "OUT-OF-SCOPE",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ItemReport {
    pub item: String,
    pub status: Status,
    pub paper: String,
    pub recomputed: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationReport {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<Problem>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub items: Vec<ItemReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub verified: usize,
    pub known_discrepancies: usize,
    pub discrepancies: usize,
    pub out_of_scope: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub equations: Vec<EquationReport>,
    pub summary: Summary,
}

impl VerificationReport {
    fn new(equations: Vec<EquationReport>) -> VerificationReport {
        let count = |s| equations.iter().flat_map(|e| &e.items).filter(|i| i.status == s).count();
        let summary = Summary {
            verified: count(Status::Verified),
            known_discrepancies: count(Status::KnownDiscrepancy),
            discrepancies: count(Status::Discrepancy),
            out_of_scope: equations.iter().filter(|e| e.status == Status::OutOfScope).count(),
        };
        VerificationReport { equations, summary }
    }

    /// True iff every item is verified or a whitelisted discrepancy.
    pub fn passed(&self) -> bool {
        self.summary.discrepancies == 0
    }

    /// Keeps the equations of one problem, recomputing the summary.
    pub fn restrict(self, problem: Problem) -> VerificationReport {
        VerificationReport::new(self.equations.into_iter().filter(|e| e.problem == Some(problem)).collect())
    }

    pub fn equation(&self, label: &str) -> Option<&EquationReport> {
        self.equations.iter().find(|e| e.label == label)
    }

    pub fn items(&self) -> impl Iterator<Item = (&str, &ItemReport)> {
        self.equations.iter().flat_map(|e| e.items.iter().map(move |i| (e.label.as_str(), i)))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for eq in &self.equations {
            out.push_str(&format!("{}: {}", eq.label, eq.status));
            if let Some(p) = eq.problem {
                out.push_str(&format!(" [{}]", p.name()));
            }
            if let Some(r) = &eq.reason {
                out.push_str(&format!(" ({r})"));
            }
            out.push('\n');
            for it in &eq.items {
                match it.status {
                    Status::Verified => out.push_str(&format!("  {}: {}\n", it.item, it.paper)),
                    _ => {
                        out.push_str(&format!("  {}: {}", it.item, it.status));
                        if let Some(r) = &it.reason {
                            out.push_str(&format!(" ({r})"));
                        }
                        out.push_str(&format!("\n    published:  {}\n    recomputed: {}\n", it.paper, it.recomputed));
                    }
                }
            }
        }
        let s = &self.summary;
        out.push_str(&format!(
            "summary: {} verified, {} known discrepancies, {} discrepancies, {} out of scope\n",
            s.verified, s.known_discrepancies, s.discrepancies, s.out_of_scope
        ));
        out
    }
}

/// Parses a published formula; names `I`, `I1`, `I2` bind to recomputed invariants.
fn parse_published(src: &str, names: &BTreeMap<String, Expr>) -> Result<Expr, String> {
    let ast = parse_expr(src).map_err(|e| e.to_string())?;
    to_expr(&ast, names).map_err(|e| e.to_string())
}

struct Side {
    text: String,
    value: Option<Expr>,
}

fn published(src: &str, names: &BTreeMap<String, Expr>) -> Side {
    match parse_published(src, names) {
        Ok(e) => Side { text: e.to_string(), value: Some(e) },
        Err(err) => Side { text: format!("{src}  [not well-formed: {err}]"), value: None },
    }
}

fn compare_expr(item: String, paper: &str, engine: &Expr, names: &BTreeMap<String, Expr>) -> ItemReport {
    let side = published(paper, names);
    let ok = side.value.as_ref() == Some(engine);
    outcome(item, ok, side.text, engine.to_string())
}

fn outcome(item: String, ok: bool, paper: String, recomputed: String) -> ItemReport {
    ItemReport {
        item,
        status: if ok { Status::Verified } else { Status::Discrepancy },
        paper,
        recomputed,
        reason: None,
    }
}

fn basis_index(name: &str) -> Result<usize, String> {
    name.strip_prefix('d')
        .and_then(atom_from_name)
        .and_then(Basis1Form::of_atom)
        .map(Basis1Form::index)
        .ok_or_else(|| format!("unknown differential `{name}`"))
}

fn published_form(components: &BTreeMap<String, String>, names: &BTreeMap<String, Expr>) -> Result<DForm, String> {
    let mut parts = Vec::new();
    for (k, src) in components {
        let parsed = basis_index(k).and_then(|i| Ok((i, parse_published(src, names)?)));
        match parsed {
            Ok(p) => parts.push(p),
            Err(err) => {
                let raw: Vec<String> = components.iter().map(|(k, v)| format!("{k}: {v}")).collect();
                return Err(format!("{}  [not well-formed: {err}]", raw.join(", ")));
            }
        }
    }
    Ok(DForm::one_form(parts))
}

fn compare_form(item: String, components: &BTreeMap<String, String>, engine: &DForm, names: &BTreeMap<String, Expr>) -> ItemReport {
    let recomputed = engine.to_string();
    match published_form(components, names) {
        Ok(form) => outcome(item, &form == engine, form.to_string(), recomputed),
        Err(text) => outcome(item, false, text, recomputed),
    }
}

fn parse_slot(s: &str) -> Result<Slot, CartanError> {
    let bad = || CartanError::Reference(format!("malformed slot `{s}`"));
    let rest = s.strip_prefix('T').ok_or_else(bad)?;
    let (row, jk) = rest.split_once('_').ok_or_else(bad)?;
    let row: usize = row.parse().map_err(|_| bad())?;
    let (j, k) = parse_pair(jk).ok_or_else(bad)?;
    Ok(Slot { row, j, k })
}

fn parse_pair(jk: &str) -> Option<(usize, usize)> {
    let mut digits = jk.chars().map(|c| c.to_digit(10).map(|d| d as usize));
    let j = digits.next()??;
    let k = digits.next()??;
    (digits.next().is_none() && j < k).then_some((j, k))
}

fn render_set<T: fmt::Display>(set: &BTreeSet<T>) -> String {
    let v: Vec<String> = set.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

fn render_row(row: usize, entries: &BTreeMap<(usize, usize), String>) -> String {
    if entries.is_empty() {
        return format!("d theta{row} = 0");
    }
    let parts: Vec<String> = entries.iter().map(|(&(j, k), c)| format!("({c}) theta{j}^theta{k}")).collect();
    format!("d theta{row} = {}", parts.join(" + "))
}

fn coord_index(name: &str) -> Option<usize> {
    atom_from_name(name).and_then(Atom::coord).map(|c| c.index())
}

struct Context<'a> {
    rr: &'a ReductionResult,
    names: BTreeMap<String, Expr>,
}

impl Context<'_> {
    fn check(&self, check: &Check) -> Result<Vec<ItemReport>, CartanError> {
        let rr = self.rr;
        let names = &self.names;
        let stage = |s: usize| {
            rr.loops
                .get(s.wrapping_sub(1))
                .ok_or_else(|| CartanError::Reference(format!("no reduction loop {s}")))
        };
        Ok(match check {
            Check::BaseForm { index, paper } => {
                vec![compare_form(format!("omega{index}"), paper, &rr.base.forms()[index - 1], names)]
            }
            Check::OperatorInvariant { paper } => {
                vec![compare_expr("I".into(), paper, &operator_invariant(rr.problem), names)]
            }
            Check::MaurerCartan { index, paper } => {
                let alphas = &stage(1)?.lifted.alphas;
                let label = &alpha_labels(alphas.len())[index - 1];
                vec![compare_form(label.clone(), paper, &alphas[index - 1], names)]
            }
            Check::McPattern { stage: s, row, pairs } => {
                let mc = &stage(*s)?.structure.rows[row - 1].mc;
                let render = |set: BTreeSet<(usize, usize)>| {
                    render_set(&set.into_iter().map(|(a, j)| format!("alpha{a}^theta{j}")).collect())
                };
                let engine: BTreeSet<(usize, usize)> = mc.keys().copied().collect();
                let paper: BTreeSet<(usize, usize)> = pairs.iter().map(|&[a, j]| (a, j)).collect();
                let ok = engine == paper;
                vec![outcome(format!("d theta{row} group terms (loop {s})"), ok, render(paper), render(engine))]
            }
            Check::Support { stage: s, row, slots } => {
                let torsion = &stage(*s)?.structure.rows[row - 1].torsion;
                let engine: BTreeSet<Slot> = torsion.keys().map(|&(j, k)| Slot { row: *row, j, k }).collect();
                let paper = slots
                    .iter()
                    .map(|jk| {
                        parse_pair(jk)
                            .map(|(j, k)| Slot { row: *row, j, k })
                            .ok_or_else(|| CartanError::Reference(format!("malformed pair `{jk}`")))
                    })
                    .collect::<Result<BTreeSet<_>, _>>()?;
                let ok = engine == paper;
                vec![outcome(format!("d theta{row} torsion terms (loop {s})"), ok, render_set(&paper), render_set(&engine))]
            }
            Check::Torsion { stage: s, slot, paper } => {
                let slot = parse_slot(slot)?;
                let engine = stage(*s)?.structure.torsion(slot);
                vec![compare_expr(format!("{slot} (loop {s})"), paper, &engine, names)]
            }
            Check::Essential { stage: s, slots } => {
                let rec = stage(*s)?;
                let engine: BTreeSet<Slot> = rec
                    .essential
                    .iter()
                    .copied()
                    .filter(|&sl| rec.structure.torsion(sl).has_group_atoms())
                    .collect();
                let paper = slots.iter().map(|s| parse_slot(s)).collect::<Result<BTreeSet<_>, _>>()?;
                let ok = engine == paper;
                vec![outcome(format!("essential torsion (loop {s})"), ok, render_set(&paper), render_set(&engine))]
            }
            Check::Normalization { param, paper } => {
                let atom = atom_from_name(param)
                    .filter(|a| a.is_group())
                    .ok_or_else(|| CartanError::Reference(format!("`{param}` is not a group parameter")))?;
                let engine = rr.normalizations.get(&atom).cloned().unwrap_or_default();
                vec![compare_expr(param.clone(), paper, &engine, names)]
            }
            Check::FinalForm { index, paper } => {
                let label = &theta_labels()[index - 1];
                vec![compare_form(label.clone(), paper, &rr.final_coframe.forms()[index - 1], names)]
            }
            Check::Structure { row, paper } => {
                let mut parsed = BTreeMap::new();
                let mut sources = BTreeMap::new();
                let mut well_formed = true;
                for (jk, src) in paper {
                    let key = parse_pair(jk).ok_or_else(|| CartanError::Reference(format!("malformed pair `{jk}`")))?;
                    sources.insert(key, src.clone());
                    match parse_published(src, names) {
                        Ok(e) => {
                            parsed.insert(key, e);
                        }
                        Err(err) => {
                            well_formed = false;
                            sources.insert(key, format!("{src}  [not well-formed: {err}]"));
                        }
                    }
                }
                let engine = &rr.constants.rows[row - 1];
                let ok = well_formed && parsed.iter().all(|(k, v)| !v.is_zero() && engine.get(k) == Some(v)) && parsed.len() == engine.len();
                let recomputed: BTreeMap<(usize, usize), String> = engine.iter().map(|(&k, c)| (k, c.to_string())).collect();
                vec![outcome(format!("d theta{row}"), ok, render_row(*row, &sources), render_row(*row, &recomputed))]
            }
            Check::Invariant { name, paper } => {
                let engine = rr
                    .invariant(name)
                    .ok_or_else(|| CartanError::Reference(format!("no invariant named `{name}`")))?;
                vec![compare_expr(name.clone(), paper, engine, &BTreeMap::new())]
            }
            Check::TotalDerivative { scale, r } => {
                let (s_engine, r_engine) = match rr.derivative_table.total_derivative() {
                    Some((s, r)) => (s.to_string(), Some((s, r))),
                    None => (format!("not a multiple of the total derivative: {}", rr.derivative_table.render_row(1)), None),
                };
                let mut items = Vec::new();
                match &r_engine {
                    Some((s, _)) => items.push(compare_expr("d/dtheta1 scale".into(), scale, s, names)),
                    None => items.push(outcome("d/dtheta1 scale".into(), false, published(scale, names).text, s_engine.clone())),
                }
                if let Some(r) = r {
                    match &r_engine {
                        Some((_, re)) => items.push(compare_expr("R".into(), r, re, names)),
                        None => items.push(outcome("R".into(), false, published(r, names).text, s_engine)),
                    }
                }
                items
            }
            Check::DerivativeRow { row, paper } => {
                let mut cols: Vec<Expr> = vec![Expr::zero(); 5];
                let mut text = Vec::new();
                let mut well_formed = true;
                for (v, src) in paper {
                    let i = coord_index(v).ok_or_else(|| CartanError::Reference(format!("unknown coordinate `{v}`")))?;
                    match parse_published(src, names) {
                        Ok(e) => {
                            text.push(format!("({e}) d/d{v}"));
                            cols[i] = e;
                        }
                        Err(err) => {
                            well_formed = false;
                            text.push(format!("({src}  [not well-formed: {err}]) d/d{v}"));
                        }
                    }
                }
                let engine = &rr.derivative_table.rows[row - 1];
                let ok = well_formed && cols.iter().zip(engine).all(|(a, b)| a == b);
                let paper_text = format!("d/dtheta{row} = {}", if text.is_empty() { "0".into() } else { text.join(" + ") });
                vec![outcome(format!("d/dtheta{row}"), ok, paper_text, rr.derivative_table.render_row(*row))]
            }
            Check::Syzygy { invariant, theta, paper } => {
                let inv = rr
                    .invariant(invariant)
                    .ok_or_else(|| CartanError::Reference(format!("no invariant named `{invariant}`")))?;
                let engine = rr.derivative_table.apply(*theta, inv)?;
                vec![compare_expr(format!("d{invariant}/dtheta{theta}"), paper, &engine, names)]
            }
            Check::Jacobi { rows } => rows
                .iter()
                .map(|&i| {
                    let res = jacobi_residual(rr, i)?;
                    Ok(outcome(format!("d^2 theta{i}"), res.is_zero(), "0".into(), res.render(&theta_labels())))
                })
                .collect::<Result<Vec<_>, CartanError>>()?,
            Check::OutOfScope { .. } => Vec::new(),
        })
    }
}

fn bindings(rr: &ReductionResult) -> BTreeMap<String, Expr> {
    rr.invariants.iter().cloned().collect()
}

/// Compares every published formula with the two recomputed reductions.
pub fn verify_paper(
    direct: &ReductionResult,
    gauge: &ReductionResult,
    whitelist: &Whitelist,
) -> Result<VerificationReport, CartanError> {
    let mut equations = Vec::new();
    for eq in reference_equations() {
        if let [Check::OutOfScope { reason }] = eq.checks.as_slice() {
            equations.push(EquationReport {
                label: eq.label,
                problem: None,
                status: Status::OutOfScope,
                reason: Some(reason.clone()),
                items: Vec::new(),
            });
            continue;
        }
        let rr = match eq.problem {
            Some(Problem::Gauge) => gauge,
            _ => direct,
        };
        equations.push(check_equation(&eq, rr, whitelist)?);
    }
    Ok(VerificationReport::new(equations))
}

fn check_equation(eq: &ReferenceEquation, rr: &ReductionResult, whitelist: &Whitelist) -> Result<EquationReport, CartanError> {
    let ctx = Context { rr, names: bindings(rr) };
    let mut items = Vec::new();
    for c in &eq.checks {
        items.extend(ctx.check(c)?);
    }
    for it in &mut items {
        if it.status == Status::Discrepancy {
            if let Some(k) = whitelist.lookup(&eq.label, it) {
                it.status = Status::KnownDiscrepancy;
                it.reason = Some(k.reason.clone());
            }
        }
    }
    let status = if items.iter().any(|i| i.status == Status::Discrepancy) {
        Status::Discrepancy
    } else if items.iter().any(|i| i.status == Status::KnownDiscrepancy) {
        Status::KnownDiscrepancy
    } else {
        Status::Verified
    };
    Ok(EquationReport { label: eq.label.clone(), problem: eq.problem, status, reason: None, items })
}

/// Checks the published syzygies and `d^2 theta = 0` for one reduction.
pub fn verify_syzygies(rr: &ReductionResult, whitelist: &Whitelist) -> Result<VerificationReport, CartanError> {
    let mut equations = Vec::new();
    for eq in reference_equations() {
        if eq.problem != Some(rr.problem) {
            continue;
        }
        let checks: Vec<Check> = eq
            .checks
            .iter()
            .filter(|c| matches!(c, Check::Syzygy { .. } | Check::Jacobi { .. }))
            .cloned()
            .collect();
        if checks.is_empty() {
            continue;
        }
        let eq = ReferenceEquation { checks, ..eq };
        equations.push(check_equation(&eq, rr, whitelist)?);
    }
    Ok(VerificationReport::new(equations))
}
