//! Thickened parabolas: the solid swept by a box of base points under the
//! unipotent flow during a time window, its volume and its primitive points.

mod average;
mod enumerate;
mod region;

pub use average::{ellipsoid_points, orbit_sum, time_average, LipschitzBump};
pub use enumerate::{enumerate_bruteforce, enumerate_sliced, growth_axis, BRUTE_FORCE_LIMIT};
pub use region::{abs_linear_box_integral, ThickenedParabolaRegion, Volume};

use crate::exactlin::Field;
use crate::numeric::zeta;
use crate::report::CountReport;

/// Sliced count against `ζ(n)⁻¹·vol`.
pub fn count_ratio<F: Field>(r: &ThickenedParabolaRegion<F>) -> CountReport {
    let points = enumerate_sliced(r);
    let vol = r.volume();
    let predicted = vol.value / zeta(r.dim() as u32);
    let mut rep = CountReport::new(points.len() as u64, vol.value, predicted, r.params());
    rep.volume_exact = vol.exact.as_ref().map(Field::to_scalar);
    rep.with_extra("normalization", "full box volume")
}
