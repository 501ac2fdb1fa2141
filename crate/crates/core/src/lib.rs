//! Semiclassical construction of the Dirichlet-to-Neumann map for the
//! time-harmonic Maxwell system near a smooth boundary, with exact
//! spherical references and a quantization harness.

pub mod crosssys;
pub mod eikonal;
pub mod error;
pub mod geometry;
pub mod mie;
pub mod spectral;
pub mod suite;
pub mod transmission;
pub mod transport;
pub mod numerics;
pub mod quantizer;

pub use error::{Error, Result};
pub use numerics::{sqrt_upper, C3Matrix, C3Vector, Jet, Layout};
