//! Numerical realization of the separated Teukolsky problem on non-extreme Kerr:
//! angular spectral projectors, radial Jost solutions and Green's kernels, a
//! resolvent contour propagator, a finite-difference cross-check, and invariant-disk
//! enclosures for complex Riccati flows.

pub mod error;
pub mod kerr_geometry;
pub mod numerics;

pub use error::{Error, Result};
pub use kerr_geometry::KerrParams;
pub mod angular_spectral;
pub mod radial_ode;
pub mod registry;
pub mod riccati_certify;
pub mod propagator;
pub mod timedomain_oracle;
