//! Generators attached to a quadric, scaled patch sets near the quadric's
//! cone, and the search for integer vectors with constrained form values.

mod datum;
mod oppenheim;
mod patch;

pub use datum::{plane_discriminant, quadric_generator, QuadricDatum};
pub use oppenheim::{oppenheim_search, OppenheimResult, OppenheimWitness};
pub use patch::{patch_count, QuadricPatchSpec, VolumeMethod, DEFAULT_SEED};
