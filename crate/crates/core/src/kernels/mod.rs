//! Low-level filters shared by the decomposition and fusion stages.
//!
//! Every filter uses replicate (clamp-to-edge) padding and computes each
//! output pixel with a fixed summation order.

mod bilateral;
mod fractional;
mod gaussian;
mod local_stats;

pub use self::bilateral::bilateral;
pub use self::fractional::{frac_filter, gl_coefficients, FractionalKernel, DEFAULT_DIRECTIONS, DEFAULT_TAPS};
pub use self::gaussian::gaussian_blur;
pub use self::local_stats::{local_stats, LocalStatsMaps};
pub(crate) use self::local_stats::local_mean_std;

/// Window radius used by the Gaussian and bilateral filters: `ceil(3 sigma)`.
pub fn window_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}
