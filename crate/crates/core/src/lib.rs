//! Three-level quantum absorption refrigerator: Liouvillian construction,
//! exceptional-point spectra, Jordan-chain dynamics, heat currents, damping
//! ratios and initial-state optimization.

pub mod damping;
pub mod dynamics;
pub mod error;
pub mod jordan;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
pub use model::{BasisTag, Bath, CouplingCase, DensityMatrix3, HSVector, Rates, Superoperator, SystemParams, C64};

/// Library version, recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
