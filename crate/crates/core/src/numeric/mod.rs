//! Floating-point utilities with rigorous error tracking, integer search
//! helpers and quadrature.

mod ball;
mod quadrature;
mod search;
mod zeta;

pub use ball::{Ball, BallPoly, LinearBall};
pub use quadrature::{adaptive_simpson, gauss_legendre, integrate_gl};
pub use search::{gcd_i64, is_primitive, solve_line, subdivide_boxes};
pub use zeta::zeta;
