//! Monge-form hypersurfaces: expression parsing and jets, osculating
//! quadrics, parallel patch decompositions and rational points nearby.

mod expr;
mod jet;
mod monge;
mod near;
mod patches;

pub use expr::{Expr, Num};
pub use jet::{Jet, JetShape};
pub use monge::{
    conic_contact_order, derivative_conditions, lifted_residual, osculating_quadric, ContactOrder, MongeSurface,
    OsculatingQuadric, CONTACT_JET_ORDER, FRAME_TOL,
};
pub use near::{
    count_rational_near, count_rational_near_with, delta_statistic, detect_hemisphere, is_rational_quadric, surface_volume, DeltaResult,
    DistanceMode, Hemisphere, NearOptions,
};
pub use patches::{audit_decomposition, patch_decomposition, ParallelPatch, PatchAudit, PatchDecomposition, PatchShell};

/// Parses a surface expression in `x1, …, x9`.
pub fn parse_surface(text: &str) -> crate::Result<Expr> {
    Expr::parse(text)
}
