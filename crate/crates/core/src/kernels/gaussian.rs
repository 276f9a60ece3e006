use super::window_radius;
use crate::error::{Error, Result};
use crate::par;
use crate::raster::Plane;

pub(crate) fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = window_radius(sigma) as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / denom).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable Gaussian blur with a normalized kernel of radius `ceil(3 sigma)`.
pub fn gaussian_blur(plane: &Plane, sigma: f64) -> Result<Plane> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::contract(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let taps = gaussian_taps(sigma);
    let r = (taps.len() / 2) as isize;
    let (w, h) = (plane.width(), plane.height());
    let horizontal = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                acc += t * plane.get_clamped(x as isize + i as isize - r, y as isize);
            }
            *out = acc;
        }
    });
    let horizontal = Plane::from_vec(w, h, horizontal);
    let vertical = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                acc += t * horizontal.get_clamped(x as isize, y as isize + i as isize - r);
            }
            *out = acc;
        }
    });
    Ok(Plane::from_vec(w, h, vertical))
}
