//! The end-to-end de-hazing pipeline.
//!
//! ```text
//! RGB ─(PA-1: gray-world)─> HSV ─ V ─> L, R  (illumination/reflectance)
//!   L ─> bilateral L_i at each scale ─> L_i + detail_i + |D^nu detail_i| sign(detail_i)
//!     ─> entropy*std weights ─> fused L ─(GOCS tone curve)─> local contrast ─> L'
//!   V' = L' * R ─> HSV(H, S, V') ─> RGB
//! ```
//!
//! `k` scales both the tone curve (interpolating its exponent toward 1) and
//! the local contrast gain for PA-2; PA-1 runs both at unit strength.

use crate::decompose::{
    auto_gamma, estimate_illum_reflect, multiscale_illumination, recombine, tonal_correct,
    SolverOptions, TonalMode,
};
use crate::error::{Error, Result};
use crate::imstats::{histogram, channel_stats};
use crate::kernels::{
    frac_filter, gl_coefficients, local_stats, FractionalKernel, DEFAULT_DIRECTIONS, DEFAULT_TAPS,
};
use crate::kernels::local_mean_std;
use crate::par;
use crate::raster::{hsv_to_rgb, rgb_to_hsv, HsvImage, Plane, RasterImage};
use crate::ILLUMINATION_FLOOR;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Underwater use: gray-world colour-cast removal first, unit-strength tonal stages.
    Pa1,
    /// Hazy use: no colour balancing, tonal and contrast stages scaled by `k`.
    Pa2,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pa1" | "pa-1" => Ok(Variant::Pa1),
            "pa2" | "pa-2" => Ok(Variant::Pa2),
            other => Err(Error::contract(format!("unknown variant {other:?} (expected pa1 or pa2)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Pa1 => "pa1",
            Variant::Pa2 => "pa2",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DehazeParams {
    pub variant: Variant,
    /// Strength of the tonal and local contrast stages (PA-2 only).
    pub k: f64,
    /// Fractional order of the detail filter.
    pub nu: f64,
    /// Ascending bilateral spatial scales, in pixels.
    pub scales: Vec<f64>,
    /// Bilateral range scale, in intensity units.
    pub range_sigma: f64,
    pub gocs_enabled: bool,
    /// Radius of the fusion-weight and local contrast windows.
    pub contrast_window: usize,
    pub contrast_gain_cap: f64,
    pub solver: SolverOptions,
    /// Fractional mask truncation `K`.
    pub taps: usize,
    /// 4 or 8 stencil directions.
    pub directions: usize,
}

impl Default for DehazeParams {
    fn default() -> Self {
        Self {
            variant: Variant::Pa2,
            k: 1.0,
            nu: 0.5,
            scales: vec![1.0, 2.0, 4.0],
            range_sigma: 0.1,
            gocs_enabled: true,
            contrast_window: 7,
            contrast_gain_cap: 2.5,
            solver: SolverOptions::default(),
            taps: DEFAULT_TAPS,
            directions: DEFAULT_DIRECTIONS,
        }
    }
}

impl DehazeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::contract(m));
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return bad(format!("k must be >= 0, got {}", self.k));
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return bad(format!("nu must be in [0, 1], got {}", self.nu));
        }
        if self.scales.is_empty()
            || self.scales.iter().any(|&s| !(s > 0.0 && s.is_finite()))
            || self.scales.windows(2).any(|p| p[1] < p[0])
        {
            return bad(format!("scales must be positive and ascending, got {:?}", self.scales));
        }
        if !(self.range_sigma > 0.0) {
            return bad(format!("range sigma must be positive, got {}", self.range_sigma));
        }
        if !(self.contrast_gain_cap > 1.0) {
            return bad(format!("contrast gain cap must exceed 1, got {}", self.contrast_gain_cap));
        }
        if self.directions != 4 && self.directions != 8 {
            return bad(format!("directions must be 4 or 8, got {}", self.directions));
        }
        if self.taps < 2 {
            return bad(format!("fractional taps must be >= 2, got {}", self.taps));
        }
        self.solver.validate()
    }

    /// Tonal and contrast strength for this variant.
    pub fn strength(&self) -> f64 {
        match self.variant {
            Variant::Pa1 => 1.0,
            Variant::Pa2 => self.k,
        }
    }
}

/// Default parameters with `nu` derived from the value-channel entropy:
/// `nu = clamp(1 - H / 8, 0.3, 0.8)`, so flat low-entropy images get the
/// stronger fractional boost.
pub fn estimate_params(img: &RasterImage) -> Result<DehazeParams> {
    img.require_rgb("estimate_params")?;
    let v = value_plane(img);
    Ok(DehazeParams {
        nu: nu_from_entropy(histogram(&v).entropy_bits()),
        ..DehazeParams::default()
    })
}

pub fn nu_from_entropy(entropy_bits: f64) -> f64 {
    (1.0 - entropy_bits / 8.0).clamp(0.3, 0.8)
}

fn value_plane(img: &RasterImage) -> Plane {
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    Plane::from_fn(img.width(), img.height(), |x, y| {
        r.get(x, y).max(g.get(x, y)).max(b.get(x, y)).clamp(0.0, 1.0)
    })
}

/// Per-channel gains `(mean of channel means) / (channel mean)`.
pub fn gray_world_gains(img: &RasterImage) -> Result<[f64; 3]> {
    img.require_rgb("gray_world_balance")?;
    let means = [img.plane(0).mean(), img.plane(1).mean(), img.plane(2).mean()];
    if let Some(c) = means.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::Degenerate(format!("channel {c} has zero mean")));
    }
    let target = (means[0] + means[1] + means[2]) / 3.0;
    Ok(means.map(|m| target / m))
}

/// Gray-world colour-cast removal: scale each channel to the common mean, then clamp.
pub fn gray_world_balance(img: &RasterImage) -> Result<RasterImage> {
    let gains = gray_world_gains(img)?;
    RasterImage::rgb(
        img.plane(0).map(|v| (v * gains[0]).clamp(0.0, 1.0)),
        img.plane(1).map(|v| (v * gains[1]).clamp(0.0, 1.0)),
        img.plane(2).map(|v| (v * gains[2]).clamp(0.0, 1.0)),
    )
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// For each illumination scale `L_i`: `detail = V - L_i` and
/// `clamp(L_i + detail + |frac(detail)| sign(detail), 0, 1)`.
/// Only the detail layer passes through the fractional filter.
pub fn detail_enhance_per_scale(
    v: &Plane,
    illumination: &[Plane],
    kernel: &FractionalKernel,
    directions: usize,
) -> Result<Vec<Plane>> {
    if illumination.iter().any(|l| !l.same_shape(v)) {
        return Err(Error::contract("illumination scales differ in size from the value plane"));
    }
    par::map_collect(illumination, |l| {
        let detail = v.zip_map(l, |a, b| a - b)?;
        let boosted = frac_filter(&detail, kernel, directions)?;
        let (ls, ds, bs) = (l.as_slice(), detail.as_slice(), boosted.as_slice());
        Ok(Plane::from_vec(
            v.width(),
            v.height(),
            (0..v.len())
                .map(|i| (ls[i] + ds[i] + bs[i].abs() * sign(ds[i])).clamp(0.0, 1.0))
                .collect(),
        ))
    })
    .into_iter()
    .collect()
}

/// Per-scale weight planes; at each pixel they are non-negative and sum to 1.
#[derive(Clone, Debug)]
pub struct WeightStack {
    weights: Vec<Plane>,
}

impl WeightStack {
    /// Normalizes non-negative raw weights so that each pixel sums to 1.
    /// Pixels whose raw weights are all zero get uniform weights.
    pub fn normalize(raw: Vec<Plane>) -> Result<Self> {
        let first = raw
            .first()
            .ok_or_else(|| Error::contract("weight stack needs at least one plane"))?;
        if raw.iter().any(|p| !p.same_shape(first)) {
            return Err(Error::contract("weight planes differ in size"));
        }
        if raw.iter().any(|p| p.as_slice().iter().any(|&w| w < 0.0)) {
            return Err(Error::contract("raw weights must be non-negative"));
        }
        let (w, h, n) = (first.width(), first.height(), raw.len());
        let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(w * h); n];
        for i in 0..w * h {
            let total: f64 = raw.iter().map(|p| p.as_slice()[i]).sum();
            for (o, p) in out.iter_mut().zip(&raw) {
                o.push(if total > 0.0 {
                    p.as_slice()[i] / total
                } else {
                    1.0 / n as f64
                });
            }
        }
        Ok(Self {
            weights: out.into_iter().map(|d| Plane::from_vec(w, h, d)).collect(),
        })
    }

    pub fn planes(&self) -> &[Plane] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Raw weight `local entropy * local std + 1e-6` per scale, normalized across scales.
pub fn fusion_weights(enhanced: &[Plane], window: usize) -> Result<WeightStack> {
    let raw = par::map_collect(enhanced, |p| {
        let m = local_stats(p, window);
        m.entropy
            .zip_map(&m.std, |e, s| e * s + 1e-6)
            .expect("local stats maps share the source shape")
    });
    WeightStack::normalize(raw)
}

/// Pixelwise convex combination `sum_i w_i * enhanced_i`, bounded by the
/// per-pixel min/max of the inputs.
pub fn fuse(enhanced: &[Plane], weights: &WeightStack) -> Result<Plane> {
    if enhanced.is_empty() || enhanced.len() != weights.len() {
        return Err(Error::contract(format!(
            "{} planes but {} weight planes",
            enhanced.len(),
            weights.len()
        )));
    }
    let first = &enhanced[0];
    if enhanced
        .iter()
        .chain(weights.planes())
        .any(|p| !p.same_shape(first))
    {
        return Err(Error::contract("fusion inputs differ in size"));
    }
    let data = (0..first.len())
        .map(|i| {
            let mut acc = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (e, w) in enhanced.iter().zip(weights.planes()) {
                let v = e.as_slice()[i];
                acc += w.as_slice()[i] * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            acc.clamp(lo, hi)
        })
        .collect();
    Ok(Plane::from_vec(first.width(), first.height(), data))
}

/// Local contrast stretch around the windowed mean `m`:
/// `out = clamp(m + g (V - m), 0, 1)` with
/// `g = 1 + k * min(cap - 1, max(0, sigma_global / (sigma_local + 1e-6) - 1))`.
///
/// Windows already as contrasted as the whole image keep `g = 1`, and flat
/// windows have `V = m`, so neither is changed.
pub fn local_contrast(v: &Plane, window: usize, gain_cap: f64, k: f64) -> Result<Plane> {
    if !(gain_cap > 1.0) {
        return Err(Error::contract(format!("gain cap must exceed 1, got {gain_cap}")));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::contract(format!("contrast strength must be >= 0, got {k}")));
    }
    if k == 0.0 {
        return Ok(v.clone());
    }
    let global = channel_stats(v.as_slice())?.sigma;
    let (mean, std) = local_mean_std(v, window);
    let (vs, ms, ss) = (v.as_slice(), mean.as_slice(), std.as_slice());
    Ok(Plane::from_vec(
        v.width(),
        v.height(),
        (0..v.len())
            .map(|i| {
                let gain = contrast_gain(global, ss[i], gain_cap, k);
                (ms[i] + gain * (vs[i] - ms[i])).clamp(0.0, 1.0)
            })
            .collect(),
    ))
}

#[inline]
pub(crate) fn contrast_gain(global_std: f64, local_std: f64, gain_cap: f64, k: f64) -> f64 {
    let deficit = (global_std / (local_std + 1e-6) - 1.0).max(0.0);
    1.0 + k * deficit.min(gain_cap - 1.0)
}

/// Runs the full pipeline on a 3-channel image.
pub fn dehaze(img: &RasterImage, params: &DehazeParams) -> Result<RasterImage> {
    params.validate()?;
    img.require_rgb("dehaze")?;
    let balanced;
    let img = match params.variant {
        Variant::Pa1 => {
            balanced = gray_world_balance(img)?;
            &balanced
        }
        Variant::Pa2 => img,
    };
    let hsv = rgb_to_hsv(img)?;
    let decomposition = estimate_illum_reflect(&hsv.v, &params.solver)?;
    let illumination = &decomposition.illumination;

    let scales = multiscale_illumination(illumination, &params.scales, params.range_sigma)?;
    let kernel = gl_coefficients(params.nu, params.taps)?;
    let enhanced = detail_enhance_per_scale(illumination, &scales, &kernel, params.directions)?;
    let weights = fusion_weights(&enhanced, params.contrast_window)?;
    let fused = fuse(&enhanced, &weights)?.map(|x| x.max(ILLUMINATION_FLOOR));

    let strength = params.strength();
    let toned = if params.gocs_enabled {
        let gamma = (1.0 + strength * (auto_gamma(&fused) - 1.0)).clamp(1.0, 3.0);
        tonal_correct(&fused, TonalMode::Fixed(gamma))?
    } else {
        fused
    };
    let contrasted = local_contrast(&toned, params.contrast_window, params.contrast_gain_cap, strength)?;
    let value = recombine(&contrasted, &decomposition.reflectance)?;
    let out = hsv_to_rgb(&HsvImage::new(hsv.h, hsv.s, value)?)?;
    Ok(out.clamp01())
}

/// Haze formation model `clean * t + airlight * (1 - t)` per channel.
pub fn synth_haze(clean: &RasterImage, transmission: f64, airlight: f64) -> Result<RasterImage> {
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(Error::contract(format!("transmission must be in (0, 1], got {transmission}")));
    }
    if !(0.0..=1.0).contains(&airlight) {
        return Err(Error::contract(format!("airlight must be in [0, 1], got {airlight}")));
    }
    let veil = airlight * (1.0 - transmission);
    clean.map_planes(|p| p.map(|v| v * transmission + veil))
}
