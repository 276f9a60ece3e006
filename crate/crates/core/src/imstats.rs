//! Image statistics: the six moment statistics per channel, HSV channel
//! means/deviations, 256-bin histograms with percentile spans, and CSV export.
//!
//! Moments use population (1/N) normalization. Skewness and kurtosis are
//! undefined for zero-variance channels and are reported as `None` ("NA" in CSV).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{rgb_to_hsv, Plane, RasterImage};

/// Number of quantization levels for histograms and entropy.
pub const LEVELS: usize = 256;

/// Standard deviations below this are treated as zero when forming
/// standardized moments.
const ZERO_SPREAD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelStats {
    pub mu: f64,
    /// Central moment of order 2.
    pub mu2: f64,
    pub sigma: f64,
    /// Skewness `mu3 / sigma^3`.
    pub gamma: Option<f64>,
    /// Momental skewness, `gamma / 2`.
    pub alpha: Option<f64>,
    /// Kurtosis `mu4 / sigma^4` (3 for a Gaussian, below 3 for flattened histograms).
    pub kappa: Option<f64>,
}

pub fn channel_stats(samples: &[f64]) -> Result<ChannelStats> {
    if samples.is_empty() {
        return Err(Error::contract("statistics of an empty channel"));
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (mu2, mu3, mu4) = (m2 / n, m3 / n, m4 / n);
    let sigma = mu2.sqrt();
    let (gamma, kappa) = if sigma < ZERO_SPREAD {
        (None, None)
    } else {
        (Some(mu3 / (sigma * mu2)), Some(mu4 / (mu2 * mu2)))
    };
    Ok(ChannelStats {
        mu,
        mu2,
        sigma,
        gamma,
        alpha: gamma.map(|g| g / 2.0),
        kappa,
    })
}

/// Hue, saturation and value statistics. H and S are on the unit scale, V on 0-255.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsvStats {
    pub h_mean: f64,
    pub s_mean: f64,
    pub v_mean: f64,
    pub h_std: f64,
    pub s_std: f64,
    pub v_std: f64,
}

pub fn hsv_stats(img: &RasterImage) -> Result<HsvStats> {
    let hsv = rgb_to_hsv(img)?;
    let h = channel_stats(hsv.h.as_slice())?;
    let s = channel_stats(hsv.s.as_slice())?;
    let v = channel_stats(hsv.v.as_slice())?;
    Ok(HsvStats {
        h_mean: h.mu,
        s_mean: s.mu,
        v_mean: 255.0 * v.mu,
        h_std: h.sigma,
        s_std: s.sigma,
        v_std: 255.0 * v.sigma,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::contract("histogram needs at least one bin"));
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    /// Shannon entropy of the bin distribution, in bits.
    pub fn entropy_bits(&self) -> f64 {
        let total = self.total as f64;
        if self.total == 0 {
            return 0.0;
        }
        let h: f64 = self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.log2()
            })
            .sum();
        h.max(0.0)
    }
}

/// Bin index of `v` among [`LEVELS`] levels: `min(floor(v * 256), 255)`.
#[inline]
pub(crate) fn quantize_level(v: f64) -> usize {
    ((v.max(0.0) * LEVELS as f64).floor() as usize).min(LEVELS - 1)
}

/// Entropy in bits of a window histogram, via `(W log2 W - sum n log2 n) / W`.
pub(crate) fn entropy_from_counts(counts: &[u32]) -> f64 {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let nlogn = |n: u32| {
        let n = n as f64;
        n * n.log2()
    };
    let sum: f64 = counts.iter().filter(|&&c| c > 1).map(|&c| nlogn(c)).sum();
    ((nlogn(total) - sum) / total as f64).clamp(0.0, 8.0)
}

/// 256-bin histogram of a unit-range plane.
pub fn histogram(plane: &Plane) -> Histogram {
    let mut counts = vec![0u64; LEVELS];
    for &v in plane.as_slice() {
        counts[quantize_level(v)] += 1;
    }
    Histogram {
        counts,
        total: plane.len() as u64,
    }
}

/// Histogram with an arbitrary number of equal-width bins over `[0, 1]`.
pub fn histogram_with_bins(samples: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::contract("histogram needs at least one bin"));
    }
    let mut counts = vec![0u64; bins];
    for &v in samples {
        counts[((v.max(0.0) * bins as f64).floor() as usize).min(bins - 1)] += 1;
    }
    Ok(Histogram {
        counts,
        total: samples.len() as u64,
    })
}

/// Distance in bins between the `lo` and `hi` percentiles, each located as
/// the first bin whose cumulative count reaches that fraction of the total.
pub fn percentile_span(hist: &Histogram, lo: f64, hi: f64) -> Result<usize> {
    if !(0.0 <= lo && lo < hi && hi <= 100.0) {
        return Err(Error::contract(format!("percentiles must satisfy 0 <= lo < hi <= 100, got {lo}, {hi}")));
    }
    if hist.total == 0 {
        return Err(Error::contract("percentile span of an empty histogram"));
    }
    let locate = |pct: f64| {
        let target = pct / 100.0 * hist.total as f64;
        let mut cum = 0u64;
        for (i, &c) in hist.counts.iter().enumerate() {
            cum += c;
            if cum as f64 >= target {
                return i;
            }
        }
        hist.counts.len() - 1
    };
    Ok(locate(hi) - locate(lo))
}

/// One CSV row: a name, any number of labelled channel statistics and an
/// optional HSV block.
#[derive(Clone, Debug)]
pub struct StatsRecord {
    pub name: String,
    pub channels: Vec<(String, ChannelStats)>,
    pub hsv: Option<HsvStats>,
}

impl StatsRecord {
    fn header(&self) -> Vec<String> {
        let mut cols = vec!["name".to_string()];
        for (label, _) in &self.channels {
            for stat in ["mu", "mu_2", "sigma", "gamma", "alpha", "kappa"] {
                cols.push(if label.is_empty() {
                    stat.to_string()
                } else {
                    format!("{label}_{stat}")
                });
            }
        }
        if self.hsv.is_some() {
            cols.extend(
                ["H_mean", "S_mean", "V_mean", "H_std", "S_std", "V_std"].map(String::from),
            );
        }
        cols
    }

    fn fields(&self) -> Vec<String> {
        let mut out = vec![self.name.clone()];
        for (_, s) in &self.channels {
            out.extend([
                fixed5(s.mu),
                fixed5(s.mu2),
                fixed5(s.sigma),
                fixed5_or_na(s.gamma),
                fixed5_or_na(s.alpha),
                fixed5_or_na(s.kappa),
            ]);
        }
        if let Some(h) = &self.hsv {
            out.extend([h.h_mean, h.s_mean, h.v_mean, h.h_std, h.s_std, h.v_std].map(fixed5));
        }
        out
    }
}

/// Reals are written with five decimals, undefined moments as `NA`.
pub fn fixed5(v: f64) -> String {
    let s = format!("{v:.5}");
    // avoid "-0.00000"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn fixed5_or_na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fixed5)
}

/// Renders records as CSV text (header plus one line per record, LF endings).
pub fn stats_csv(rows: &[StatsRecord]) -> Result<String> {
    let first = rows
        .first()
        .ok_or_else(|| Error::contract("no statistics rows to export"))?;
    let header = first.header();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::contract(format!("csv encoding failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        if row.header() != header {
            return Err(Error::contract(format!(
                "row {:?} has a different column layout",
                row.name
            )));
        }
        w.write_record(row.fields()).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::contract(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn export_stats_csv(rows: &[StatsRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = stats_csv(rows)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Per-channel statistics of an RGB image plus its HSV block, labelled r, g, b.
pub fn image_record(name: impl Into<String>, img: &RasterImage) -> Result<StatsRecord> {
    img.require_rgb("image_record")?;
    let channels = ["r", "g", "b"]
        .iter()
        .zip(img.planes())
        .map(|(label, p)| Ok((label.to_string(), channel_stats(p.as_slice())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(StatsRecord {
        name: name.into(),
        channels,
        hsv: Some(hsv_stats(img)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_plane_has_undefined_shape_moments() {
        let s = channel_stats(&[0.5; 64]).unwrap();
        assert_eq!((s.mu, s.mu2, s.sigma), (0.5, 0.0, 0.0));
        assert!(s.gamma.is_none() && s.alpha.is_none() && s.kappa.is_none());
        let s = channel_stats(&[0.1; 1000]).unwrap();
        assert!(s.kappa.is_none());
    }

    #[test]
    fn two_point_distribution() {
        let samples: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let s = channel_stats(&samples).unwrap();
        assert_eq!(s.mu, 0.5);
        assert_eq!(s.mu2, 0.25);
        assert_eq!(s.sigma, 0.5);
        assert_eq!(s.gamma, Some(0.0));
        assert_eq!(s.alpha, Some(0.0));
        assert_eq!(s.kappa, Some(1.0));
    }

    #[test]
    fn empty_plane_rejected() {
        assert!(channel_stats(&[]).is_err());
    }

    #[test]
    fn hsv_stats_scales() {
        let one = |v| Plane::filled(4, 4, v);
        let red = RasterImage::rgb(one(1.0), one(0.0), one(0.0)).unwrap();
        let s = hsv_stats(&red).unwrap();
        assert_eq!((s.h_mean, s.s_mean, s.v_mean), (0.0, 1.0, 255.0));
        assert_eq!((s.h_std, s.s_std, s.v_std), (0.0, 0.0, 0.0));
        let gray = RasterImage::rgb(one(0.5), one(0.5), one(0.5)).unwrap();
        let s = hsv_stats(&gray).unwrap();
        assert_eq!((s.s_mean, s.v_mean), (0.0, 127.5));
        assert!(hsv_stats(&RasterImage::gray(one(0.5)).unwrap()).is_err());
    }

    #[test]
    fn histogram_binning() {
        let h = histogram(&Plane::filled(5, 5, 0.3));
        assert_eq!(h.counts().iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts()[76], 25);
        let ramp = Plane::from_fn(16, 16, |x, y| (y * 16 + x) as f64 / 256.0);
        assert!(histogram(&ramp).counts().iter().all(|&c| c == 1));
        let top = histogram(&Plane::filled(1, 1, 1.0));
        assert_eq!(top.counts()[255], 1);
        assert_eq!(top.counts().len(), 256);
    }

    #[test]
    fn entropy_of_level_patterns() {
        let mut counts = [0u32; 256];
        counts[10] = 7;
        counts[200] = 7;
        assert!((entropy_from_counts(&counts) - 1.0).abs() < 1e-12);
        let all = [1u32; 256];
        assert!((entropy_from_counts(&all) - 8.0).abs() < 1e-12);
        let mut single = [0u32; 256];
        single[3] = 225;
        assert_eq!(entropy_from_counts(&single), 0.0);
        let h = Histogram::from_counts(vec![1; 256]).unwrap();
        assert!((h.entropy_bits() - 8.0).abs() < 1e-12);
    }

    /// Cumulative-sum oracle written independently of `percentile_span`.
    fn span_oracle(counts: &[u64], lo: f64, hi: f64) -> usize {
        let total: u64 = counts.iter().sum();
        let cum: Vec<u64> = counts
            .iter()
            .scan(0, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        let first = |p: f64| cum.iter().position(|&c| (c as f64) * 100.0 >= p * total as f64).unwrap();
        first(hi) - first(lo)
    }

    #[test]
    fn percentile_spans() {
        let single = Histogram::from_counts({
            let mut c = vec![0; 256];
            c[40] = 9;
            c
        })
        .unwrap();
        assert_eq!(percentile_span(&single, 1.0, 99.0).unwrap(), 0);
        assert_eq!(percentile_span(&single, 10.0, 90.0).unwrap(), 0);

        let uniform = Histogram::from_counts(vec![1; 256]).unwrap();
        let oracle = span_oracle(uniform.counts(), 1.0, 99.0);
        assert_eq!(oracle, 251);
        assert_eq!(percentile_span(&uniform, 1.0, 99.0).unwrap(), oracle);

        let mut ends = vec![0; 256];
        ends[0] = 50;
        ends[255] = 50;
        let ends = Histogram::from_counts(ends).unwrap();
        assert_eq!(percentile_span(&ends, 1.0, 99.0).unwrap(), 255);
        assert_eq!(span_oracle(ends.counts(), 1.0, 99.0), 255);

        let empty = Histogram::from_counts(vec![0; 256]).unwrap();
        assert!(percentile_span(&empty, 1.0, 99.0).is_err());
        assert!(percentile_span(&uniform, 50.0, 10.0).is_err());
    }

    #[test]
    fn five_decimal_formatting() {
        assert_eq!(fixed5(0.318244999), "0.31824");
        assert_eq!(fixed5(0.318245001), "0.31825");
        assert_eq!(fixed5(-0.36641), "-0.36641");
        assert_eq!(fixed5(-0.000001), "0.00000");
        assert_eq!(fixed5(171.5676), "171.56760");
        // 0.125 and 0.375 are exact binary ties at 2 decimals; std rounds half to even
        assert_eq!(format!("{:.2}", 0.125), "0.12");
        assert_eq!(format!("{:.2}", 0.375), "0.38");
    }

    #[test]
    fn csv_layout() {
        let s = channel_stats(&[0.0, 1.0]).unwrap();
        let rec = StatsRecord {
            name: "x".into(),
            channels: vec![(String::new(), s)],
            hsv: None,
        };
        let text = stats_csv(&[rec]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "name,mu,mu_2,sigma,gamma,alpha,kappa");
        assert_eq!(lines[1], "x,0.50000,0.25000,0.50000,0.00000,0.00000,1.00000");
        assert!(!text.contains('\r'));

        let flat = channel_stats(&[0.2; 4]).unwrap();
        let rec = StatsRecord {
            name: "flat".into(),
            channels: vec![(String::new(), flat)],
            hsv: None,
        };
        assert!(stats_csv(&[rec]).unwrap().ends_with("flat,0.20000,0.00000,0.00000,NA,NA,NA\n"));
        assert!(stats_csv(&[]).is_err());
    }

    #[test]
    fn csv_rejects_mixed_layouts() {
        let s = channel_stats(&[0.0, 1.0]).unwrap();
        let a = StatsRecord { name: "a".into(), channels: vec![("r".into(), s)], hsv: None };
        let b = StatsRecord { name: "b".into(), channels: vec![("g".into(), s)], hsv: None };
        assert!(stats_csv(&[a, b]).is_err());
    }
}
