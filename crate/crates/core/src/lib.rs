//! Cross ratios, triple ratios and flag reconstructions for the PSL(n,ℝ)
//! Hitchin component, together with the degeneration functionals K and L,
//! curve-length lower bounds and entropy upper bounds built on them.

pub mod combinatorics;
pub mod degeneration;
pub mod error;
pub mod flags;
pub mod hyperbolic;
pub mod invariants;
pub mod linalg;
pub mod params;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{Flag, Matrix, Subspace, Vector, WeylChamberPoint};
pub use scalar::{Backend, Extended, Scalar};
