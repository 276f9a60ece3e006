//! Deterministic synthetic scenes shared by the integration and acceptance suites.
#![allow(dead_code)]

use fracfuse::{Plane, RasterImage};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Smooth value noise with `octaves` octaves on a lattice of `cell` pixels.
pub struct ValueNoise {
    lattices: Vec<(usize, Vec<f64>)>,
}

impl ValueNoise {
    pub fn new(seed: u64, cell: usize, octaves: usize) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let lattices = (0..octaves)
            .map(|o| {
                let c = (cell >> o).max(2);
                (c, (0..64 * 64).map(|_| rng.random::<f64>()).collect())
            })
            .collect();
        Self { lattices }
    }

    /// Value in [0, 1].
    pub fn at(&self, x: usize, y: usize) -> f64 {
        let mut total = 0.0;
        let mut norm = 0.0;
        let mut amp = 1.0;
        for (cell, grid) in &self.lattices {
            let fx = x as f64 / *cell as f64;
            let fy = y as f64 / *cell as f64;
            let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (smooth(fx.fract()), smooth(fy.fract()));
            let g = |i: usize, j: usize| grid[(j % 64) * 64 + (i % 64)];
            let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
            let bottom = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
            total += amp * (top * (1.0 - ty) + bottom * ty);
            norm += amp;
            amp *= 0.5;
        }
        total / norm
    }
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i] * (1.0 - t) + b[i] * t)
}

fn clamp3(c: [f64; 3]) -> [f64; 3] {
    c.map(|v| v.clamp(0.0, 1.0))
}

/// Sky gradient over textured hills.
pub fn valley(w: usize, h: usize, seed: u64) -> RasterImage {
    let hills = ValueNoise::new(seed, 32, 5);
    let ridge = ValueNoise::new(seed + 1, 48, 2);
    RasterImage::rgb_from_fn(w, h, |x, y| {
        let horizon = h as f64 * (0.3 + 0.2 * ridge.at(x, 0));
        let yf = y as f64;
        if yf < horizon {
            let t = yf / horizon;
            mix([0.45, 0.65, 0.95], [0.8, 0.85, 0.95], t)
        } else {
            let n = hills.at(x, y);
            let depth = (yf - horizon) / (h as f64 - horizon);
            clamp3(mix([0.15, 0.35, 0.1], [0.5, 0.4, 0.25], n) .map(|c| c * (0.6 + 0.6 * n) * (0.7 + 0.3 * depth)))
        }
    })
    .unwrap()
}

/// Random coloured rectangles with fine grain.
pub fn blocks(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut rng = StdRng::seed_from_u64(seed);
    let rects: Vec<([usize; 4], [f64; 3])> = (0..24)
        .map(|_| {
            let x0 = rng.random_range(0..w);
            let y0 = rng.random_range(0..h);
            let rw = rng.random_range(w / 10..w / 2);
            let rh = rng.random_range(h / 10..h / 2);
            let colour = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            ([x0, y0, x0 + rw, y0 + rh], colour)
        })
        .collect();
    let grain = ValueNoise::new(seed + 7, 3, 1);
    RasterImage::rgb_from_fn(w, h, |x, y| {
        let mut c = [0.5, 0.5, 0.5];
        for ([x0, y0, x1, y1], colour) in &rects {
            if x >= *x0 && x < *x1 && y >= *y0 && y < *y1 {
                c = *colour;
            }
        }
        let g = 0.9 + 0.2 * grain.at(x, y);
        clamp3(c.map(|v| v * g))
    })
    .unwrap()
}

/// Concentric rings over a colour gradient.
pub fn rings(w: usize, h: usize, _seed: u64) -> RasterImage {
    RasterImage::rgb_from_fn(w, h, |x, y| {
        let dx = x as f64 - w as f64 * 0.4;
        let dy = y as f64 - h as f64 * 0.55;
        let r = (dx * dx + dy * dy).sqrt();
        let ring = 0.5 + 0.5 * (r / 5.0).sin();
        let t = x as f64 / w as f64;
        clamp3(mix([0.7, 0.3, 0.2], [0.2, 0.4, 0.7], t).map(|c| c * (0.5 + 0.5 * ring)))
    })
    .unwrap()
}

/// Multi-octave foliage texture.
pub fn foliage(w: usize, h: usize, seed: u64) -> RasterImage {
    let n = ValueNoise::new(seed, 16, 5);
    let m = ValueNoise::new(seed + 3, 40, 3);
    RasterImage::rgb_from_fn(w, h, |x, y| {
        let a = n.at(x, y);
        let b = m.at(x, y);
        clamp3(mix([0.05, 0.25, 0.05], [0.55, 0.7, 0.2], a).map(|c| c * (0.5 + b)))
    })
    .unwrap()
}

/// Building facades with window grids below a sky band.
pub fn city(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut heights = Vec::new();
    let mut x = 0;
    while x < w {
        let bw = rng.random_range(10..30);
        let top = rng.random_range(h / 5..h / 2);
        let shade = rng.random_range(0.25..0.6);
        heights.push((x, x + bw, top, shade));
        x += bw;
    }
    RasterImage::rgb_from_fn(w, h, |x, y| {
        for &(x0, x1, top, shade) in &heights {
            if x >= x0 && x < x1 && y >= top {
                let lit = (x - x0) % 6 < 3 && (y - top) % 8 < 4 && x + 1 < x1;
                let v: f64 = if lit { shade + 0.3 } else { shade };
                return [v * 0.9, v * 0.85, v * 0.8];
            }
        }
        let t = y as f64 / h as f64;
        mix([0.6, 0.75, 0.95], [0.9, 0.9, 0.9], t)
    })
    .unwrap()
}

pub type Scene = fn(usize, usize, u64) -> RasterImage;

pub const SCENES: [(&str, Scene); 5] = [
    ("valley", valley),
    ("blocks", blocks),
    ("rings", rings),
    ("foliage", foliage),
    ("city", city),
];

/// Left half flat and bright, right half textured.
pub fn flat_and_textured(w: usize, h: usize, seed: u64) -> RasterImage {
    let n = ValueNoise::new(seed, 8, 4);
    RasterImage::rgb_from_fn(w, h, |x, y| {
        if x < w / 2 {
            [0.85, 0.87, 0.9]
        } else {
            let v = 0.2 + 0.4 * n.at(x, y);
            [v, v * 0.95, v * 0.9]
        }
    })
    .unwrap()
}

/// Standard deviation over a rectangle of a plane.
pub fn region_std(p: &Plane, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
    let vals: Vec<f64> = (y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y))).map(|(x, y)| p.get(x, y)).collect();
    let n = vals.len() as f64;
    let m = vals.iter().sum::<f64>() / n;
    (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Value channel max(R, G, B).
pub fn value_of(img: &RasterImage) -> Plane {
    Plane::from_fn(img.width(), img.height(), |x, y| {
        img.plane(0).get(x, y).max(img.plane(1).get(x, y)).max(img.plane(2).get(x, y))
    })
}
