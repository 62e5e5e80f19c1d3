//! Calculus of variations on finite time scales.
//!
//! * [`timescale`], [`grid`], [`calculus`]: exact delta/nabla calculus on
//!   finite point sets.
//! * [`expr`]: the integrand expression language with dual-number partials.
//! * [`variational`]: single-integrand delta and nabla problems.
//! * [`composition`]: functionals `H(F_1, ..., F_{k+n})` of delta and nabla
//!   integrals, with optional isoperimetric constraints.
//! * [`inverse`]: Lagrangian synthesis and the Helmholtz self-adjointness test.

pub mod calculus;
pub mod composition;
pub mod error;
pub mod expr;
pub mod functional;
pub mod grid;
pub mod integrand;
pub mod inverse;
pub mod linalg;
pub mod newton;
pub mod timescale;
pub mod variational;

pub use error::{Error, EvalError, ParseError, Result};
pub use expr::Expr;
pub use grid::GridFunction;
pub use integrand::{ExprIntegrand, Flavor, Integrand, LocalPartials};
pub use timescale::{JumpData, PointClass, ScaleKind, ScaleProperties, ScaleSpec, TimeScale};
