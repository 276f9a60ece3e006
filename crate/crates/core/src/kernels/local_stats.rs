use crate::imstats::{entropy_from_counts, quantize_level, LEVELS};
use crate::par;
use crate::raster::Plane;

/// Per-pixel statistics over a `(2r+1)^2` replicate-padded window.
#[derive(Clone, Debug)]
pub struct LocalStatsMaps {
    pub mean: Plane,
    pub std: Plane,
    /// Shannon entropy in bits of the window's 256-level quantization.
    pub entropy: Plane,
    pub radius: usize,
}

/// Windowed mean, population standard deviation and entropy maps.
pub fn local_stats(plane: &Plane, radius: usize) -> LocalStatsMaps {
    let (mean, std) = local_mean_std(plane, radius);
    let entropy = local_entropy(plane, radius);
    LocalStatsMaps {
        mean,
        std,
        entropy,
        radius,
    }
}

/// Windowed mean and standard deviation only (the entropy map is the expensive part).
pub(crate) fn local_mean_std(plane: &Plane, radius: usize) -> (Plane, Plane) {
    let (w, h) = (plane.width(), plane.height());
    let r = radius as isize;
    let count = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    // vertical box sums of x and x^2, then horizontal
    let col_sum = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for dy in -r..=r {
                s += plane.get_clamped(x as isize, y as isize + dy);
            }
            *out = s;
        }
    });
    let col_sq = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for dy in -r..=r {
                let v = plane.get_clamped(x as isize, y as isize + dy);
                s += v * v;
            }
            *out = s;
        }
    });
    let col_sum = Plane::from_vec(w, h, col_sum);
    let col_sq = Plane::from_vec(w, h, col_sq);
    let mean = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for dx in -r..=r {
                s += col_sum.get_clamped(x as isize + dx, y as isize);
            }
            *out = s / count;
        }
    });
    let mean = Plane::from_vec(w, h, mean);
    let std = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for dx in -r..=r {
                s += col_sq.get_clamped(x as isize + dx, y as isize);
            }
            let m = mean.get(x, y);
            *out = (s / count - m * m).max(0.0).sqrt();
        }
    });
    (mean, Plane::from_vec(w, h, std))
}

fn local_entropy(plane: &Plane, radius: usize) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let r = radius as isize;
    let levels: Vec<usize> = plane.as_slice().iter().map(|&v| quantize_level(v)).collect();
    let level_at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        levels[yc * w + xc]
    };
    let data = par::fill_rows(w, h, |y, row| {
        let y = y as isize;
        // sliding histogram along the row
        let mut counts = [0u32; LEVELS];
        for dx in -r..=r {
            for dy in -r..=r {
                counts[level_at(dx, y + dy)] += 1;
            }
        }
        for (x, out) in row.iter_mut().enumerate() {
            let x = x as isize;
            if x > 0 {
                for dy in -r..=r {
                    counts[level_at(x - r - 1, y + dy)] -= 1;
                    counts[level_at(x + r, y + dy)] += 1;
                }
            }
            *out = entropy_from_counts(&counts);
        }
    });
    Plane::from_vec(w, h, data)
}
