//! Mixed-precision MRRR eigensolver for real symmetric tridiagonal matrices.
//!
//! Input and output live in a narrow format (`f32` or `f64`); representations,
//! shifts and eigenvector solves run in a wide one (`f64` or double-double).

pub mod bisect;
pub mod harness;
pub mod mrrr;
pub mod precision;
pub mod transforms;
pub mod tridiag;
pub mod verify;

pub use mrrr::{solve, ConfigError, EigenResult, SolverConfig, SolverStats};
pub use precision::{DoubleDouble, DoubleQuad, Precision, PrecisionMode, SingleDouble};
pub use tridiag::{EigenPair, SymTridiag};
