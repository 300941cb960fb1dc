//! Exact symbolic engine for Cartan's equivalence method applied to linear
//! third-order ordinary differential operators under fiber-preserving
//! transformations `x~ = xi(x)`, `u~ = phi(x) u`.

pub mod algebra;
pub mod cartan;
pub mod equivalence;
pub mod forms;
pub mod jet;
pub mod numeric;
pub mod syntax;

pub use algebra::{AlgebraError, Atom, Coord, Exponent, Expr, Monomial, Term};
pub use forms::{Basis1Form, Coframe, DForm, FormsError};
pub use jet::{
    ConcreteOperator, FiberTransformation, JetError, JetPoint, Operator, Problem, RationalFunction1D,
};
pub use numeric::{EvalError, Value};
