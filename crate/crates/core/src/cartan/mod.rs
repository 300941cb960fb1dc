//! Cartan's equivalence method for both problems: lift the base coframe by
//! the structure group, decompose the structure equations, normalize the
//! essential torsion, and read off the invariant coframe, its structure
//! functions and coframe derivatives.

mod lift;
mod normalize;
mod reduction;
mod report;
mod structure;

use thiserror::Error;

pub use lift::{
    alpha_labels, group_matrix, identity_value, lift, lower_triangular_inverse, maurer_cartan_forms, maurer_cartan_forms_of,
    theta_labels, LiftedCoframe,
};
pub use normalize::{default_plan, normalize, solve_for, PlanStep};
pub use reduction::{
    cached_reduction, invariant_names, jacobi_residual, run_reduction, run_reduction_with_plan, DerivativeTable, InvariantName,
    LoopRecord, ReductionResult,
};
pub use report::{
    reference_equations, verify_paper, verify_syzygies, Check, EquationReport, ItemReport, KnownDiscrepancy,
    ReferenceEquation, Status, Summary, VerificationReport, Whitelist,
};
pub use structure::{structure_constants, structure_equations, Slot, StructureConstants, StructureEquations, StructureRow};

use crate::algebra::{AlgebraError, Atom};
use crate::forms::FormsError;
use crate::jet::JetError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CartanError {
    #[error("cannot normalize {slot}: {reason}")]
    UnsolvableNormalization { slot: Slot, reason: String },
    #[error("{slot} would solve {atom} differently from an earlier step")]
    InconsistentPlan { atom: Atom, slot: Slot },
    #[error("{0} is not an essential torsion slot")]
    NotEssential(Slot),
    #[error("group parameters survive the reduction: {0}")]
    ResidualGroupParameter(String),
    #[error("malformed reference entry: {0}")]
    Reference(String),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Jet(#[from] JetError),
}
