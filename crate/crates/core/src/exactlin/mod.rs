//! Scalars, dense linear algebra and nilpotent generators.

mod field;
mod generator;
mod matrix;
mod quadratic;
mod scalar;

pub use field::{rational_approx, rational_sqrt, Field, DEFAULT_PIVOT_TOL, F64_EPS};
pub use generator::{AnyGenerator, NilpotentGenerator};
pub use matrix::{dot, lin_comb, Matrix};
pub use quadratic::{is_squarefree, QuadraticNumber};
pub use scalar::{parse_rational, MatrixInput, Scalar, ScalarMode};
