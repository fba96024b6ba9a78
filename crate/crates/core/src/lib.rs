//! Exact verification of local-causality properties for finite local theories.
//!
//! The crate models the double-cone covering of two dimensional Minkowski
//! spacetime by unit diamonds, the ±1 field configurations living on it, the
//! stationary causal stochastic dynamics driven by eight local transition
//! probabilities, and finite dimensional matrix-algebra nets. On top of those
//! it provides verifiers for screening-off, no-signaling, common cause systems
//! and the Clauser–Horne inequality.
//!
//! Everything is computed by exhaustive enumeration or small dense linear
//! algebra; the intended scale is a handful of lattice sites.

pub mod checks;
pub mod dynamics;
pub mod error;
pub mod events;
pub mod geometry;
pub mod qnet;

pub use error::{Error, Result};
pub use events::{ClassicalState, Configuration, CylinderEvent, Spin};
pub use geometry::{CauchySegment, DoubleCone, MinimalCone, Region, ShieldingVariant, Translate, Translation};

/// Tolerance for equality of probabilities.
pub const PROB_TOL: f64 = 1e-9;
/// Tolerance for normalization of states.
pub const NORM_TOL: f64 = 1e-12;
