//! Convex-program intermediate representation and the linearization atoms
//! shared by the power, blocklength and trajectory subproblems.

mod program;
mod tangent;

pub use program::{
    Constraint, ConstraintAtom, ConvexProgram, LinExpr, LogTerm, Sense, VarInfo, VarRef,
};
pub use tangent::{a0, a1, f_lb, f_lb_coefficients, tangent_of_concave, ConcaveFn, Tangent};
