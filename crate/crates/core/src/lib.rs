//! De-hazing and underwater image enhancement by probabilistic
//! illumination/reflectance estimation combined with multi-scale
//! fractional-order detail fusion, plus the moment, HSV and histogram
//! statistics used to evaluate the results.
//!
//! All processing happens on planar `f64` images normalized to `[0, 1]`.
//! The main entry point is [`pipeline::dehaze`]:
//!
//! ```no_run
//! use fracfuse::{load_image, save_image, pipeline};
//!
//! let hazy = load_image("hazy.png")?;
//! let params = pipeline::estimate_params(&hazy)?;
//! let clear = pipeline::dehaze(&hazy, &params)?;
//! save_image(&clear, "hazy_pa.png")?;
//! # Ok::<(), fracfuse::Error>(())
//! ```
//!
//! With the default `parallel` feature, per-row filter loops run on the
//! rayon thread pool. Every output pixel is computed with a fixed summation
//! order, so results are bit-identical for any thread count and identical to
//! a build without the feature.

pub mod decompose;
mod error;
pub mod imstats;
pub mod kernels;
mod par;
pub mod pipeline;
pub mod raster;

pub use error::{Error, Result};
pub use raster::{hsv_to_rgb, load_image, rgb_to_hsv, save_image, HsvImage, Plane, RasterImage};

/// Floor applied to illumination estimates so that reflectance ratios stay bounded.
pub const ILLUMINATION_FLOOR: f64 = 1.0 / 255.0;
