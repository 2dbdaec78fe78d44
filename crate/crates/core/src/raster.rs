//! Image, label and saliency rasters plus the elementary operations shared
//! by every stage: HSV conversion, min-max normalization and box smoothing.
//!
//! All grids are row-major. Pixel `(row, col)` lives at `row * width + col`.

use crate::error::{Error, Result};

/// Palette index VOC uses for object boundaries and "don't care" pixels.
pub const VOID: u8 = 255;

/// Number of semantic classes including background (index 0).
pub const NUM_CLASSES: usize = 21;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let expected = width
        .checked_mul(height)
        .ok_or(Error::InvalidDimensions { width, height })?;
    if len != expected {
        return Err(Error::BufferSize {
            expected,
            actual: len,
        });
    }
    Ok(())
}

/// Rows (or columns) covered before and after the anchor by a window of
/// side `k`. Odd windows are centered; even windows reach one further
/// forward, so `k = 20` spans 9 before and 10 after.
pub fn window_span(k: usize) -> (usize, usize) {
    debug_assert!(k >= 1);
    (k.div_ceil(2) - 1, k / 2)
}

#[inline]
pub(crate) fn clamp_offset(i: usize, offset: isize, len: usize) -> usize {
    (i as isize + offset).clamp(0, len as isize - 1) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Builds an image from interleaved `r, g, b` bytes.
    pub fn from_raw(width: usize, height: usize, raw: &[u8]) -> Result<Self> {
        if !raw.len().is_multiple_of(3) {
            return Err(Error::BufferSize {
                expected: width * height * 3,
                actual: raw.len(),
            });
        }
        let pixels = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        self.pixels[row * self.width + col] = rgb;
    }
}

/// HSV planes with every channel in `[0, 1]`; hue is a fraction of the full
/// circle, so it lies in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    width: usize,
    height: usize,
    h: Vec<f64>,
    s: Vec<f64>,
    v: Vec<f64>,
}

impl HsvImage {
    pub fn new(width: usize, height: usize, h: Vec<f64>, s: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_dims(width, height, h.len())?;
        check_dims(width, height, s.len())?;
        check_dims(width, height, v.len())?;
        for (i, &x) in h.iter().enumerate() {
            if !(0.0..1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!("hue {x} at index {i} outside [0,1)")));
            }
        }
        for (i, &x) in s.iter().chain(v.iter()).enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!(
                    "saturation/value {x} at index {i} outside [0,1]"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            h,
            s,
            v,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn hue(&self) -> &[f64] {
        &self.h
    }

    pub fn saturation(&self) -> &[f64] {
        &self.s
    }

    pub fn value(&self) -> &[f64] {
        &self.v
    }
}

/// Hexcone conversion of one 8-bit pixel. Achromatic pixels get hue 0.
pub fn rgb_to_hsv_pixel([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = (max - min) as f64;
    let v = max as f64 / 255.0;
    if max == min {
        return (0.0, 0.0, v);
    }
    let s = delta / max as f64;
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let sector = if max as f64 == r {
        (g - b) / delta
    } else if max as f64 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut h = sector.rem_euclid(6.0) / 6.0;
    if h >= 1.0 {
        h = 0.0;
    }
    (h, s, v)
}

/// Inverse hexcone conversion, rounding each channel to the nearest step.
pub fn hsv_to_rgb_pixel(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let c = v * s;
    let x = c * (1.0 - ((h6 % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let q = |t: f64| ((t + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r), q(g), q(b)]
}

pub fn rgb_to_hsv(img: &RgbImage) -> HsvImage {
    let n = img.pixels.len();
    let (mut h, mut s, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &px in &img.pixels {
        let (ph, ps, pv) = rgb_to_hsv_pixel(px);
        h.push(ph);
        s.push(ps);
        v.push(pv);
    }
    HsvImage {
        width: img.width,
        height: img.height,
        h,
        s,
        v,
    }
}

/// Per-pixel semantic class indices: 0 is background, 1..=20 the VOC object
/// classes, and [`VOID`] marks ignored pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, labels.len())?;
        if let Some(&bad) = labels
            .iter()
            .find(|&&l| l != VOID && l as usize >= NUM_CLASSES)
        {
            return Err(Error::InvalidLabel(bad));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    /// Panics on an out-of-range label.
    pub fn set(&mut self, row: usize, col: usize, label: u8) {
        assert!(label == VOID || (label as usize) < NUM_CLASSES, "bad label {label}");
        self.labels[row * self.width + col] = label;
    }

    /// Pixel count per class index (0..=20) and the VOID count.
    pub fn histogram(&self) -> ([usize; NUM_CLASSES], usize) {
        let mut counts = [0usize; NUM_CLASSES];
        let mut void = 0;
        for &l in &self.labels {
            if l == VOID {
                void += 1;
            } else {
                counts[l as usize] += 1;
            }
        }
        (counts, void)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Quantizes to 8 bits as `round(255 * v)`, halves rounding away from zero.
    /// Values outside `[0, 1]` saturate.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| (255.0 * v).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub(crate) fn ensure_same_dims(&self, other: &SaliencyMap) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }
}

/// Min-max rescale to `[0, 1]`. A constant map becomes all zeros.
pub fn normalize(map: &SaliencyMap) -> Result<SaliencyMap> {
    if let Some(index) = map.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    let (lo, hi) = map.min_max();
    let values = if hi > lo {
        let range = hi - lo;
        map.values
            .iter()
            .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; map.values.len()]
    };
    Ok(SaliencyMap::from_parts(map.width, map.height, values))
}

/// Box filter of side `k` with edge replication, evaluated separably.
/// Output is clamped to the input range so rounding never leaves it.
pub fn mean_filter(map: &SaliencyMap, k: usize) -> Result<SaliencyMap> {
    if k == 0 {
        return Err(Error::InvalidParameter("mean filter size must be >= 1".into()));
    }
    if k == 1 {
        return Ok(map.clone());
    }
    let (w, h) = map.dims();
    let (before, after) = window_span(k);
    let (before, after) = (before as isize, after as isize);
    let inv = 1.0 / k as f64;

    let mut rows = vec![0.0; w * h];
    for r in 0..h {
        let src = &map.values[r * w..(r + 1) * w];
        for c in 0..w {
            let mut sum = 0.0;
            for d in -before..=after {
                sum += src[clamp_offset(c, d, w)];
            }
            rows[r * w + c] = sum * inv;
        }
    }

    let (lo, hi) = map.min_max();
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut sum = 0.0;
            for d in -before..=after {
                sum += rows[clamp_offset(r, d, h) * w + c];
            }
            out[r * w + c] = (sum * inv).clamp(lo, hi);
        }
    }
    Ok(SaliencyMap::from_parts(w, h, out))
}
