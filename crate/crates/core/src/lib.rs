//! Diamond norms, optimal guessing probabilities and deficiencies of quantum
//! channels and statistical experiments, computed by semidefinite programming.

pub mod deficiency;
pub mod discrimination;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod maps;
pub mod norms;
pub mod random;
pub mod sdp;

pub use error::{Error, Result};
pub use linalg::{CMatrix, DimPair, C64};
pub use maps::HermitianMap;
