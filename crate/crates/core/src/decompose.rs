//! Illumination/reflectance estimation on the value channel.
//!
//! The value plane `V` is factored as `V ~ L * R` by minimizing
//!
//! ```text
//! E(L, R) = |L*R - V|^2 + alpha |grad L|^2 + beta |grad R|^2
//! ```
//!
//! with forward differences (no term across the image border). Each
//! iteration is a red-black Gauss-Seidel sweep over `L` subject to
//! `L >= max(V, eps)`, followed by one over `R` subject to `0 <= R <= 1`.
//! Every pixel update is the exact minimizer of a convex quadratic restricted
//! to an interval, so `E` never increases. On return `R` is projected to
//! `clamp(V / L, 0, 1)`, which makes `L * R` reproduce `V`.

use crate::error::{Error, Result};
use crate::kernels::bilateral;
use crate::par;
use crate::raster::Plane;
use crate::ILLUMINATION_FLOOR;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Illumination smoothness weight.
    pub alpha: f64,
    /// Reflectance smoothness weight.
    pub beta: f64,
    pub max_iterations: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.01,
            max_iterations: 20,
            tolerance: 1e-4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.alpha.is_finite()
            && self.beta >= 0.0
            && self.beta.is_finite()
            && self.max_iterations >= 1
            && self.tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("invalid solver options {self:?}")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Illumination, `>= V` and `>= 1/255` everywhere.
    pub illumination: Plane,
    /// Reflectance `clamp(V / L, 0, 1)`.
    pub reflectance: Plane,
    pub iterations_used: usize,
    /// Objective of the returned pair.
    pub final_objective: f64,
    /// Objective after initialization (index 0) and after each accepted iteration.
    pub objective_history: Vec<f64>,
}

/// Evaluates `E(L, R)` for the given weights.
pub fn objective(v: &Plane, l: &Plane, r: &Plane, alpha: f64, beta: f64) -> f64 {
    let (w, h) = (v.width(), v.height());
    let grad_sq = |p: &Plane| {
        let mut s = 0.0;
        for y in 0..h {
            for x in 0..w {
                let c = p.get(x, y);
                if x + 1 < w {
                    let d = p.get(x + 1, y) - c;
                    s += d * d;
                }
                if y + 1 < h {
                    let d = p.get(x, y + 1) - c;
                    s += d * d;
                }
            }
        }
        s
    };
    let data: f64 = v
        .as_slice()
        .iter()
        .zip(l.as_slice().iter().zip(r.as_slice()))
        .map(|(&vv, (&ll, &rr))| {
            let d = ll * rr - vv;
            d * d
        })
        .sum();
    data + alpha * grad_sq(l) + beta * grad_sq(r)
}

/// Sum and count of the 4-neighbours inside the image.
#[inline]
fn neighbours(p: &[f64], w: usize, h: usize, x: usize, y: usize) -> (f64, f64) {
    let i = y * w + x;
    let (mut s, mut n) = (0.0, 0.0);
    if x > 0 {
        s += p[i - 1];
        n += 1.0;
    }
    if x + 1 < w {
        s += p[i + 1];
        n += 1.0;
    }
    if y > 0 {
        s += p[i - w];
        n += 1.0;
    }
    if y + 1 < h {
        s += p[i + w];
        n += 1.0;
    }
    (s, n)
}

/// One red-black sweep. `update(i, neighbour_sum, neighbour_count, current)`
/// returns the new value for pixel `i`. Pixels of one colour only read
/// pixels of the other, so each half-sweep is computed from a snapshot.
fn red_black_sweep<F>(p: &[f64], w: usize, h: usize, update: F) -> Vec<f64>
where
    F: Fn(usize, f64, f64, f64) -> f64 + Send + Sync,
{
    let mut cur = p.to_vec();
    for colour in 0..2 {
        let snapshot = cur;
        cur = par::fill_rows(w, h, |y, row| {
            for (x, out) in row.iter_mut().enumerate() {
                let i = y * w + x;
                *out = if (x + y) % 2 == colour {
                    let (s, n) = neighbours(&snapshot, w, h, x, y);
                    update(i, s, n, snapshot[i])
                } else {
                    snapshot[i]
                };
            }
        });
    }
    cur
}

/// Factors `v` into illumination and reflectance; see the module docs.
pub fn estimate_illum_reflect(v: &Plane, opts: &SolverOptions) -> Result<Decomposition> {
    estimate_illum_reflect_observed(v, opts, |_, _, _| {})
}

/// As [`estimate_illum_reflect`], calling `observe(iteration, L, R)` with the
/// initial pair (iteration 0) and after each accepted iteration.
pub fn estimate_illum_reflect_observed<F>(
    v: &Plane,
    opts: &SolverOptions,
    mut observe: F,
) -> Result<Decomposition>
where
    F: FnMut(usize, &Plane, &Plane),
{
    opts.validate()?;
    if v.is_empty() {
        return Err(Error::contract("empty value plane"));
    }
    if v.as_slice().iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::contract("value plane outside [0, 1]"));
    }
    if v.max() <= 0.0 {
        return Err(Error::Degenerate("value plane is entirely zero".into()));
    }
    let (w, h) = (v.width(), v.height());
    let vs = v.as_slice();
    let lower: Vec<f64> = vs.iter().map(|&x| x.max(ILLUMINATION_FLOOR)).collect();

    let mut l = Plane::from_vec(w, h, lower.clone());
    let mut r = Plane::from_vec(
        w,
        h,
        vs.iter().zip(&lower).map(|(&x, &lo)| (x / lo).clamp(0.0, 1.0)).collect(),
    );
    let mut energy = objective(v, &l, &r, opts.alpha, opts.beta);
    let mut history = vec![energy];
    let mut iterations_used = 0;
    observe(0, &l, &r);

    for it in 1..=opts.max_iterations {
        if energy == 0.0 {
            break;
        }
        let (rs, alpha, beta) = (r.as_slice(), opts.alpha, opts.beta);
        let l_next = red_black_sweep(l.as_slice(), w, h, |i, s, n, cur| {
            let denom = rs[i] * rs[i] + alpha * n;
            let free = if denom > 0.0 {
                (rs[i] * vs[i] + alpha * s) / denom
            } else {
                cur
            };
            free.max(lower[i])
        });
        let l_next = Plane::from_vec(w, h, l_next);
        let ls = l_next.as_slice();
        let r_next = red_black_sweep(rs, w, h, |i, s, n, _| {
            ((ls[i] * vs[i] + beta * s) / (ls[i] * ls[i] + beta * n)).clamp(0.0, 1.0)
        });
        let r_next = Plane::from_vec(w, h, r_next);
        let next_energy = objective(v, &l_next, &r_next, opts.alpha, opts.beta);
        if next_energy > energy {
            break; // only reachable through rounding; keep the previous pair
        }
        l = l_next;
        r = r_next;
        iterations_used = it;
        history.push(next_energy);
        observe(it, &l, &r);
        let converged = energy == 0.0 || (energy - next_energy) / energy < opts.tolerance;
        energy = next_energy;
        if converged {
            break;
        }
    }

    let reflectance = Plane::from_vec(
        w,
        h,
        vs.iter()
            .zip(l.as_slice())
            .map(|(&x, &ll)| (x / ll).clamp(0.0, 1.0))
            .collect(),
    );
    let final_objective = objective(v, &l, &reflectance, opts.alpha, opts.beta);
    Ok(Decomposition {
        illumination: l,
        reflectance,
        iterations_used,
        final_objective,
        objective_history: history,
    })
}

/// Bilateral illumination estimates at each spatial scale, floored at 1/255.
pub fn multiscale_illumination(v: &Plane, sigmas: &[f64], sigma_r: f64) -> Result<Vec<Plane>> {
    if sigmas.is_empty() {
        return Err(Error::contract("at least one illumination scale is required"));
    }
    if sigmas.iter().any(|&s| !(s > 0.0)) || sigmas.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::contract(format!(
            "scales must be positive and ascending, got {sigmas:?}"
        )));
    }
    sigmas
        .iter()
        .map(|&s| Ok(bilateral(v, s, sigma_r)?.map(|x| x.max(ILLUMINATION_FLOOR))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TonalMode {
    /// Exponent derived from the mean illumination, see [`auto_gamma`].
    Auto,
    Fixed(f64),
}

/// `gamma = ln(mean) / ln(0.5)` clamped to `[1, 3]`: the exponent that would
/// carry a dark mean illumination to 0.5. Means at or above 0.5 give 1.
pub fn auto_gamma(l: &Plane) -> f64 {
    let mean = l.mean();
    if !(mean > 0.0) || mean >= 0.5 {
        return 1.0;
    }
    (mean.ln() / 0.5f64.ln()).clamp(1.0, 3.0)
}

/// Gamma tone curve `L^(1/gamma)` on a strictly positive illumination plane.
pub fn tonal_correct(l: &Plane, mode: TonalMode) -> Result<Plane> {
    if l.as_slice().iter().any(|&x| x <= 0.0) {
        return Err(Error::contract("tonal correction needs strictly positive illumination"));
    }
    let gamma = match mode {
        TonalMode::Auto => auto_gamma(l),
        TonalMode::Fixed(g) if g > 0.0 && g.is_finite() => g,
        TonalMode::Fixed(g) => {
            return Err(Error::contract(format!("gamma must be positive, got {g}")))
        }
    };
    if gamma == 1.0 {
        return Ok(l.clone());
    }
    let exponent = 1.0 / gamma;
    Ok(l.map(|x| x.powf(exponent)))
}

/// `clamp(L * R, 0, 1)`.
pub fn recombine(l: &Plane, r: &Plane) -> Result<Plane> {
    l.zip_map(r, |a, b| (a * b).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gaussian_blur;

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        Plane::from_fn(w, h, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64).clamp(0.0, 1.0)
        })
    }

    #[test]
    fn constant_value_is_fixed_point() {
        let v = Plane::filled(8, 8, 0.6);
        let d = estimate_illum_reflect(&v, &SolverOptions::default()).unwrap();
        assert!(d.illumination.as_slice().iter().all(|&x| x == 0.6));
        assert!(d.reflectance.as_slice().iter().all(|&x| x == 1.0));
        assert_eq!(d.final_objective, 0.0);
    }

    #[test]
    fn objective_never_increases() {
        let v = random_plane(16, 16, 3);
        let opts = SolverOptions {
            alpha: 0.01,
            beta: 0.01,
            ..SolverOptions::default()
        };
        let mut seen = Vec::new();
        let d = estimate_illum_reflect_observed(&v, &opts, |_, l, r| {
            seen.push(objective(&v, l, r, opts.alpha, opts.beta));
        })
        .unwrap();
        assert!(seen.len() >= 2);
        for pair in seen.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{pair:?}");
        }
        assert_eq!(seen, d.objective_history);
    }

    #[test]
    fn illumination_dominates_value() {
        let v = random_plane(12, 9, 11);
        let d = estimate_illum_reflect(&v, &SolverOptions::default()).unwrap();
        for ((&l, &x), &r) in d
            .illumination
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .zip(d.reflectance.as_slice())
        {
            assert!(l >= x - 1e-9 && l >= ILLUMINATION_FLOOR);
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn ramp_is_reconstructed() {
        let v = Plane::from_fn(32, 16, |x, _| 0.1 + 0.8 * x as f64 / 31.0);
        let d = estimate_illum_reflect(&v, &SolverOptions::default()).unwrap();
        let recon = recombine(&d.illumination, &d.reflectance).unwrap();
        let worst = recon
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.05, "{worst}");
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let opts = SolverOptions::default();
        assert!(matches!(
            estimate_illum_reflect(&Plane::filled(4, 4, 0.0), &opts),
            Err(Error::Degenerate(_))
        ));
        assert!(estimate_illum_reflect(&Plane::filled(4, 4, 1.5), &opts).is_err());
        let bad = SolverOptions {
            max_iterations: 0,
            ..opts
        };
        assert!(estimate_illum_reflect(&Plane::filled(4, 4, 0.5), &bad).is_err());
    }

    #[test]
    fn multiscale_constant_and_floor() {
        let out = multiscale_illumination(&Plane::filled(6, 6, 0.3), &[1.0, 2.0], 0.1).unwrap();
        assert!(out.iter().all(|p| p.as_slice().iter().all(|&x| x == 0.3)));
        let dark = multiscale_illumination(&Plane::filled(6, 6, 0.0), &[1.0], 0.1).unwrap();
        assert!(dark[0].as_slice().iter().all(|&x| x == ILLUMINATION_FLOOR));
        assert!(multiscale_illumination(&Plane::filled(2, 2, 0.5), &[], 0.1).is_err());
        assert!(multiscale_illumination(&Plane::filled(2, 2, 0.5), &[4.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn multiscale_gaussian_limit() {
        let v = random_plane(20, 14, 5);
        let out = multiscale_illumination(&v, &[1.0], 1e6).unwrap();
        let g = gaussian_blur(&v, 1.0).unwrap();
        for (a, b) in out[0].as_slice().iter().zip(g.as_slice()) {
            assert!((a - b.max(ILLUMINATION_FLOOR)).abs() < 1e-6);
        }
    }

    #[test]
    fn larger_scales_never_sharpen_a_step() {
        let tv = |p: &Plane| {
            let mut s = 0.0;
            for y in 0..p.height() {
                for x in 0..p.width() {
                    if x + 1 < p.width() {
                        s += (p.get(x + 1, y) - p.get(x, y)).abs();
                    }
                    if y + 1 < p.height() {
                        s += (p.get(x, y + 1) - p.get(x, y)).abs();
                    }
                }
            }
            s
        };
        let step = Plane::from_fn(24, 24, |x, _| if x < 12 { 0.2 } else { 0.8 });
        let out = multiscale_illumination(&step, &[1.0, 2.0, 4.0], 0.1).unwrap();
        for pair in out.windows(2) {
            assert!(tv(&pair[1]) <= tv(&pair[0]) + 1e-9);
        }
    }

    #[test]
    fn tonal_curve() {
        let half = Plane::from_fn(4, 1, |x, _| [0.2, 0.4, 0.6, 0.8][x]);
        assert_eq!(auto_gamma(&half), 1.0);
        assert_eq!(tonal_correct(&half, TonalMode::Auto).unwrap(), half);

        let quarter = Plane::filled(3, 3, 0.25);
        assert!((auto_gamma(&quarter) - 2.0).abs() < 1e-12);
        let out = tonal_correct(&quarter, TonalMode::Auto).unwrap();
        assert!(out.as_slice().iter().all(|&x| (x - 0.5).abs() < 1e-12));

        // ln(0.0625)/ln(0.5) = 4, clamped to 3
        assert_eq!(auto_gamma(&Plane::filled(2, 2, 0.0625)), 3.0);

        let fixed = tonal_correct(&Plane::filled(1, 1, 0.5), TonalMode::Fixed(2.2)).unwrap();
        assert!((fixed.get(0, 0) - 0.7297).abs() < 1e-4);

        assert!(tonal_correct(&Plane::filled(1, 1, 0.0), TonalMode::Auto).is_err());
        assert!(tonal_correct(&half, TonalMode::Fixed(0.0)).is_err());
    }

    #[test]
    fn tonal_curve_orders_and_never_darkens() {
        let levels = Plane::from_fn(256, 1, |x, _| (x as f64 / 255.0).max(ILLUMINATION_FLOOR));
        let dark = levels.map(|x| x * 0.3);
        for p in [&levels, &dark] {
            let out = tonal_correct(p, TonalMode::Auto).unwrap();
            for w in out.as_slice().windows(2) {
                assert!(w[0] <= w[1]);
            }
            for (o, i) in out.as_slice().iter().zip(p.as_slice()) {
                assert!(o >= i);
            }
        }
    }

    #[test]
    fn recombine_cases() {
        let r = Plane::from_fn(3, 1, |x, _| x as f64 / 2.0);
        assert_eq!(recombine(&Plane::filled(3, 1, 1.0), &r).unwrap(), r);
        let z = Plane::filled(3, 1, 0.0);
        assert_eq!(recombine(&Plane::filled(3, 1, 0.7), &z).unwrap(), z);
        let p = recombine(&Plane::filled(1, 1, 0.8), &Plane::filled(1, 1, 0.5)).unwrap();
        assert!((p.get(0, 0) - 0.4).abs() < 1e-15);
        assert!(recombine(&Plane::filled(2, 1, 1.0), &Plane::filled(1, 2, 1.0)).is_err());
    }
}
