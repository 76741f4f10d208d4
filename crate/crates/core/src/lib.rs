//! Truncated power-series construction of local isometric embeddings,
//! including metrics with an admissible isolated singularity, and the
//! characteristic analysis at the singular point.

pub mod characteristics;
pub mod ck;
pub mod embedding;
pub mod error;
pub mod io;
pub mod jet;
pub mod metric;
pub mod par;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use jet::{Jet, JetMatrix, MultiIndex};
pub use par::ExecPolicy;
pub use scalar::{Mode, Rational, Scalar};
