use crate::error::{Error, Result};
use crate::par;
use crate::raster::Plane;

/// Default mask truncation: coefficients `c_0..=c_3`.
pub const DEFAULT_TAPS: usize = 3;
/// Default number of stencil directions (the eight compass directions).
pub const DEFAULT_DIRECTIONS: usize = 8;

const AXES: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const DIAGONALS: [(isize, isize); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Truncated Grünwald–Letnikov mask of fractional order `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalKernel {
    order: f64,
    coefficients: Vec<f64>,
}

impl FractionalKernel {
    pub fn order(&self) -> f64 {
        self.order
    }

    /// `c_0..=c_K`, with `c_0 = 1` and `c_1 = -nu`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Truncation length `K`.
    pub fn taps(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn is_identity(&self) -> bool {
        self.coefficients[1..].iter().all(|&c| c == 0.0)
    }
}

/// Builds the mask `c_k = (-1)^k binom(nu, k)` for `k = 0..=taps` using the
/// recurrence `c_k = c_{k-1} (k - 1 - nu) / k`.
pub fn gl_coefficients(nu: f64, taps: usize) -> Result<FractionalKernel> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::contract(format!("fractional order {nu} outside [0, 1]")));
    }
    if taps < 2 {
        return Err(Error::contract(format!("mask truncation {taps} must be at least 2")));
    }
    let mut coefficients = Vec::with_capacity(taps + 1);
    coefficients.push(1.0);
    for k in 1..=taps {
        let prev = coefficients[k - 1];
        coefficients.push(prev * ((k - 1) as f64 - nu) / k as f64);
    }
    Ok(FractionalKernel {
        order: nu,
        coefficients,
    })
}

/// Averages the one-sided fractional difference over 4 or 8 directions:
/// `out(p) = (1/D) sum_d sum_k c_k plane(p - k d)`.
///
/// The `k = 0` term is the same for every direction and is added once, so a
/// zero-order mask returns the input bit for bit. The result is not clamped.
pub fn frac_filter(plane: &Plane, kernel: &FractionalKernel, directions: usize) -> Result<Plane> {
    let dirs: Vec<(isize, isize)> = match directions {
        4 => AXES.to_vec(),
        8 => AXES.iter().chain(DIAGONALS.iter()).copied().collect(),
        other => {
            return Err(Error::contract(format!(
                "fractional stencil needs 4 or 8 directions, got {other}"
            )))
        }
    };
    let (w, h) = (plane.width(), plane.height());
    if kernel.is_identity() {
        return Ok(plane.clone());
    }
    let c = kernel.coefficients();
    let c0 = c[0];
    let inv_d = 1.0 / dirs.len() as f64;
    let data = par::fill_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(dx, dy) in &dirs {
                for (k, &ck) in c.iter().enumerate().skip(1) {
                    let k = k as isize;
                    acc += ck * plane.get_clamped(x as isize - k * dx, y as isize - k * dy);
                }
            }
            *out = c0 * plane.get(x, y) + acc * inv_d;
        }
    });
    Ok(Plane::from_vec(w, h, data))
}
