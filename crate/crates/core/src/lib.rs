//! Generalized shearlet dilation groups built from nilpotent associative algebras.
//!
//! The crate is organized bottom-up:
//! - [`algebra`]: structure constants, canonical bases and shearing subgroups (exact).
//! - [`scaling`]: compatible diagonal scalings via an exact linear system.
//! - [`group`]: the dilation group chart, dual action, Haar weights and admissibility.
//! - [`transform`]: the continuous transform sampled on grids, with approximate inversion.
//! - [`wavefront`]: cone geometry certificates and decay-based singularity detection.
//! - [`symplectic`]: embedding into the symplectic group and the metaplectic intertwining check.
//! - [`io`]: the binary coefficient dump format.

// Guards like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod grid;
pub mod group;
pub mod io;
pub mod rational;
pub mod scaling;
pub mod spectral;
pub mod symplectic;
pub mod transform;
pub mod wavefront;
pub mod window;
