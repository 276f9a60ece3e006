use crate::error::{Error, Result};

/// A single row-major channel of real samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    /// Wraps `data` as a `width x height` plane. Fails when the length does
    /// not match or any sample is not finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::contract(format!(
                "plane of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite sample at index {i}")));
        }
        Ok(Self::from_vec(width, height, data))
    }

    pub(crate) fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_vec(width, height, vec![value; width * height])
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with replicate padding: out-of-range coordinates are clamped to the border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane::from_vec(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Elementwise combination of two planes of equal shape.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        if !self.same_shape(other) {
            return Err(Error::contract(format!(
                "plane shapes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Plane::from_vec(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn clamp01(&self) -> Plane {
        self.map(|v| v.clamp(0.0, 1.0))
    }
}

/// Planar image with one (gray) or three (RGB) channels, nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    planes: Vec<Plane>,
}

impl RasterImage {
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::contract(format!(
                "images have 1 or 3 channels, got {}",
                planes.len()
            )));
        }
        let (width, height) = (planes[0].width(), planes[0].height());
        if planes.iter().any(|p| p.width() != width || p.height() != height) {
            return Err(Error::contract("channel planes differ in size"));
        }
        if planes.iter().any(|p| p.as_slice().iter().any(|v| !v.is_finite())) {
            return Err(Error::contract("image contains non-finite samples"));
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn rgb(r: Plane, g: Plane, b: Plane) -> Result<Self> {
        Self::from_planes(vec![r, g, b])
    }

    pub fn gray(v: Plane) -> Result<Self> {
        Self::from_planes(vec![v])
    }

    /// Builds an RGB image from a per-pixel closure.
    pub fn rgb_from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let n = width * height;
        let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for (plane, v) in planes.iter_mut().zip(px) {
                    plane.push(v);
                }
            }
        }
        let [r, g, b] = planes;
        Self::rgb(
            Plane::new(width, height, r)?,
            Plane::new(width, height, g)?,
            Plane::new(width, height, b)?,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn plane(&self, channel: usize) -> &Plane {
        &self.planes[channel]
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    /// Replicates a gray image into three identical channels; RGB images are returned as is.
    pub fn to_rgb(&self) -> RasterImage {
        match self.planes.len() {
            1 => RasterImage {
                width: self.width,
                height: self.height,
                planes: vec![self.planes[0].clone(); 3],
            },
            _ => self.clone(),
        }
    }

    pub(crate) fn require_rgb(&self, what: &str) -> Result<()> {
        if self.channels() != 3 {
            return Err(Error::contract(format!(
                "{what} needs a 3-channel image, got {} channel(s)",
                self.channels()
            )));
        }
        Ok(())
    }

    pub fn map_planes(&self, f: impl Fn(&Plane) -> Plane) -> Result<RasterImage> {
        RasterImage::from_planes(self.planes.iter().map(f).collect())
    }

    pub fn clamp01(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            planes: self.planes.iter().map(Plane::clamp01).collect(),
        }
    }
}

/// Hue, saturation and value planes, all on the unit scale.
#[derive(Clone, Debug, PartialEq)]
pub struct HsvImage {
    pub h: Plane,
    pub s: Plane,
    pub v: Plane,
}

impl HsvImage {
    pub fn new(h: Plane, s: Plane, v: Plane) -> Result<Self> {
        if !h.same_shape(&s) || !h.same_shape(&v) {
            return Err(Error::contract("HSV planes differ in size"));
        }
        if h.as_slice().iter().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::contract("hue outside [0, 1)"));
        }
        for (name, p) in [("saturation", &s), ("value", &v)] {
            if p.as_slice().iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::contract(format!("{name} outside [0, 1]")));
            }
        }
        Ok(Self { h, s, v })
    }

    pub fn width(&self) -> usize {
        self.v.width()
    }

    pub fn height(&self) -> usize {
        self.v.height()
    }
}
