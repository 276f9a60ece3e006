//! Planar image containers, HSV conversion and PNG/PNM file I/O.

mod color;
mod image;
mod io;

pub use self::color::{hsv_to_rgb, rgb_to_hsv};
pub use self::image::{HsvImage, Plane, RasterImage};
pub use self::io::{load_image, save_image};
