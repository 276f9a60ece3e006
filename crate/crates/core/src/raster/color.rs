use super::image::{HsvImage, Plane, RasterImage};
use crate::error::Result;

/// Hexcone RGB to HSV. Hue is scaled to `[0, 1)` and is 0 for achromatic
/// pixels; saturation is 0 where the value is 0. Inputs are clamped to `[0, 1]`.
pub fn rgb_to_hsv(img: &RasterImage) -> Result<HsvImage> {
    img.require_rgb("rgb_to_hsv")?;
    let (w, h) = (img.width(), img.height());
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let n = w * h;
    let (mut hp, mut sp, mut vp) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (hh, ss, vv) = pixel_to_hsv(
            r.as_slice()[i].clamp(0.0, 1.0),
            g.as_slice()[i].clamp(0.0, 1.0),
            b.as_slice()[i].clamp(0.0, 1.0),
        );
        hp.push(hh);
        sp.push(ss);
        vp.push(vv);
    }
    HsvImage::new(
        Plane::from_vec(w, h, hp),
        Plane::from_vec(w, h, sp),
        Plane::from_vec(w, h, vp),
    )
}

/// Inverse of [`rgb_to_hsv`].
pub fn hsv_to_rgb(hsv: &HsvImage) -> Result<RasterImage> {
    let (w, h) = (hsv.width(), hsv.height());
    let n = w * h;
    let (mut rp, mut gp, mut bp) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let [r, g, b] = pixel_to_rgb(hsv.h.as_slice()[i], hsv.s.as_slice()[i], hsv.v.as_slice()[i]);
        rp.push(r);
        gp.push(g);
        bp.push(b);
    }
    RasterImage::rgb(
        Plane::from_vec(w, h, rp),
        Plane::from_vec(w, h, gp),
        Plane::from_vec(w, h, bp),
    )
}

pub(crate) fn pixel_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta <= 0.0 {
        return (0.0, s, max);
    }
    let sector = if max == r {
        (g - b) / delta
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut hue = sector / 6.0;
    if hue < 0.0 {
        hue += 1.0;
    }
    if hue >= 1.0 {
        hue -= 1.0;
    }
    (hue, s, max)
}

pub(crate) fn pixel_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [v, v, v];
    }
    let h6 = h * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as i64 {
        0 | 6 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}
