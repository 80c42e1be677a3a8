//! Optimal restricted dual frames and optimal near-unitary frame perturbations.
//!
//! The optimizers reduce to water-filling problems on spectra whose solutions
//! are minimal for (log-)submajorization; every constructed optimum comes with
//! a certificate that re-checks it from scratch.

pub mod dualopt;
pub mod error;
pub mod frames;
pub mod hermat;
pub mod lidskii;
pub mod perturbopt;
pub mod random;
pub mod specvec;
pub mod verify;
pub mod waterfill;

pub use error::{Error, Result};
pub use frames::{DualPairReport, Frame};
pub use hermat::{ComplexMatrix, EigenSystem, HermitianMatrix, ScalarFn, C64};
pub use specvec::{OrderTolerance, Spectrum};
pub use waterfill::WaterfillResult;
