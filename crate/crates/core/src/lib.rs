//! Two harmonic detectors at finite separation in a common scalar-field bath:
//! delay dynamics, late-time covariances, entanglement and critical separations.

pub mod analysis;
pub mod covariance;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod model;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{Branch, ModeView, SystemParams};
