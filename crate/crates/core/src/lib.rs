//! Optimal control of quantum gates in open systems with reduced sets of
//! density matrices.

pub mod error;
pub mod functionals;
pub mod krotov;
pub mod lindblad;
pub mod models;
pub mod numeric;
pub mod operator;
pub mod random;
pub mod states;
pub mod superop;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
pub use operator::{CMatrix, CVector, DensityMatrix, Operator, SubspaceEmbedding, C64};
