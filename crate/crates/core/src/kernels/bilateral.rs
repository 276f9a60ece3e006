use super::window_radius;
use crate::error::{Error, Result};
use crate::par;
use crate::raster::Plane;

/// Brute-force bilateral filter over a `(2r+1)^2` window, `r = ceil(3 sigma_s)`:
///
/// `out(p) = sum_q w(p,q) plane(q) / sum_q w(p,q)` with
/// `w = exp(-|p-q|^2 / 2 sigma_s^2) * exp(-(plane(p) - plane(q))^2 / 2 sigma_r^2)`.
///
/// No grid or LUT approximation is used; rows are split across threads.
/// The result is clamped to the window's `[min, max]` so rounding in the
/// normalization can never leave the range of the inputs.
pub fn bilateral(plane: &Plane, sigma_s: f64, sigma_r: f64) -> Result<Plane> {
    for (name, s) in [("spatial", sigma_s), ("range", sigma_r)] {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::contract(format!("bilateral {name} sigma must be positive, got {s}")));
        }
    }
    let (w, h) = (plane.width(), plane.height());
    let r = window_radius(sigma_s);
    let side = 2 * r + 1;
    let spatial_denom = 2.0 * sigma_s * sigma_s;
    let range_denom = 2.0 * sigma_r * sigma_r;
    let spatial: Vec<f64> = (0..side * side)
        .map(|i| {
            let dy = (i / side) as f64 - r as f64;
            let dx = (i % side) as f64 - r as f64;
            (-(dx * dx + dy * dy) / spatial_denom).exp()
        })
        .collect();
    let src = plane.as_slice();

    let data = par::fill_rows(w, h, |y, row| {
        let interior_y = y >= r && y + r < h;
        for (x, out) in row.iter_mut().enumerate() {
            let center = src[y * w + x];
            let (mut num, mut den) = (0.0, 0.0);
            let (mut lo, mut hi) = (center, center);
            let mut tap = |q: f64, ws: f64| {
                let d = center - q;
                let wgt = ws * (-(d * d) / range_denom).exp();
                num += wgt * q;
                den += wgt;
                lo = lo.min(q);
                hi = hi.max(q);
            };
            if interior_y && x >= r && x + r < w {
                for dy in 0..side {
                    let start = (y + dy - r) * w + x - r;
                    let window_row = &src[start..start + side];
                    let weights = &spatial[dy * side..(dy + 1) * side];
                    for (&q, &ws) in window_row.iter().zip(weights) {
                        tap(q, ws);
                    }
                }
            } else {
                for dy in 0..side {
                    let yy = y as isize + dy as isize - r as isize;
                    for dx in 0..side {
                        let xx = x as isize + dx as isize - r as isize;
                        tap(plane.get_clamped(xx, yy), spatial[dy * side + dx]);
                    }
                }
            }
            *out = (num / den).clamp(lo, hi);
        }
    });
    Ok(Plane::from_vec(w, h, data))
}
