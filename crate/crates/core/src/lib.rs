//! Counting primitive lattice points in thickened parabolas and rational
//! points near hypersurfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`exactlin`]: scalar fields (`ℚ`, `ℚ(√d)`, `f64`), matrices and
//!   validated nilpotent generators with the exact unipotent exponential.
//! - [`quadforms`]: quadratic forms, the space of forms invariant under a
//!   generator and rational-member detection.
//! - [`parabolas`]: the solid swept by a box of base points under a
//!   unipotent flow, its volume and lattice-point enumeration.
//! - [`quadric_patches`]: generators attached to a quadric, scaled patch
//!   sets and a constrained value search for indefinite forms.
//! - [`surfaces`]: Monge-form hypersurfaces, jets, osculating quadrics and
//!   counts of rational points close to a surface.

pub mod error;
pub mod exactlin;
pub mod fixtures;
pub mod numeric;
pub mod parabolas;
pub mod quadforms;
pub mod quadric_patches;
pub mod report;
pub mod surfaces;

pub use error::{Error, Result};
