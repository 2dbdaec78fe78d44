//! Low-level cues: local brightness energy and the warm-hue spectral filter.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::raster::{normalize, window_span, HsvImage, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastParams {
    /// Side of the square window over which V-channel energy is measured.
    pub block_size: usize,
}

impl Default for ContrastParams {
    fn default() -> Self {
        Self { block_size: 16 }
    }
}

impl ContrastParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "contrast block_size must be >= 2, got {}",
                self.block_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorParams {
    /// Sharpening exponent applied to the raw hue response.
    pub p: f64,
}

impl Default for ColorParams {
    fn default() -> Self {
        Self { p: 4.0 }
    }
}

impl ColorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::InvalidParameter(format!("color p must be > 0, got {}", self.p)));
        }
        Ok(())
    }
}

/// Copies `plane` into a `(w + k - 1) x (h + k - 1)` buffer with the border
/// replicated, so every window becomes a plain rectangular slice walk.
fn pad_replicate(plane: &[f64], w: usize, h: usize, before: usize, after: usize) -> (Vec<f64>, usize) {
    let pw = w + before + after;
    let ph = h + before + after;
    let mut out = Vec::with_capacity(pw * ph);
    for pr in 0..ph {
        let r = pr.saturating_sub(before).min(h - 1);
        let row = &plane[r * w..(r + 1) * w];
        for pc in 0..pw {
            out.push(row[pc.saturating_sub(before).min(w - 1)]);
        }
    }
    (out, pw)
}

/// Mean squared deviation of V over the window anchored at each pixel,
/// before normalization. Windows follow [`window_span`] and replicate edges.
pub fn contrast_energy(img: &HsvImage, params: &ContrastParams) -> Result<SaliencyMap> {
    params.validate()?;
    let (w, h) = img.dims();
    let k = params.block_size;
    let (before, after) = window_span(k);
    let (padded, pw) = pad_replicate(img.value(), w, h, before, after);
    let n = (k * k) as f64;

    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let mut sum = 0.0;
            for wr in 0..k {
                let start = (r + wr) * pw + c;
                sum += padded[start..start + k].iter().sum::<f64>();
            }
            let mean = sum / n;
            let mut energy = 0.0;
            for wr in 0..k {
                let start = (r + wr) * pw + c;
                energy += padded[start..start + k]
                    .iter()
                    .map(|&v| (v - mean) * (v - mean))
                    .sum::<f64>();
            }
            out.push(energy / n);
        }
    }
    SaliencyMap::new(w, h, out)
}

pub fn contrast_saliency(img: &HsvImage, params: &ContrastParams) -> Result<SaliencyMap> {
    normalize(&contrast_energy(img, params)?)
}

/// Raw spectral response `0.5 (cos 2πH + 1)`, peaking at red.
#[inline]
pub fn hue_response(hue: f64) -> f64 {
    0.5 * ((2.0 * PI * hue).cos() + 1.0)
}

/// Sharpened hue response per pixel, before normalization. Gray pixels
/// (zero saturation) have no hue and score 0.
pub fn color_response(img: &HsvImage, params: &ColorParams) -> Result<SaliencyMap> {
    params.validate()?;
    let (w, h) = img.dims();
    let values = img
        .hue()
        .iter()
        .zip(img.saturation())
        .map(|(&hue, &sat)| {
            if sat == 0.0 {
                0.0
            } else {
                hue_response(hue).clamp(0.0, 1.0).powf(params.p)
            }
        })
        .collect();
    SaliencyMap::new(w, h, values)
}

pub fn color_saliency(img: &HsvImage, params: &ColorParams) -> Result<SaliencyMap> {
    normalize(&color_response(img, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{rgb_to_hsv, RgbImage};

    fn hsv_from(w: usize, h: usize, hue: Vec<f64>, sat: Vec<f64>, val: Vec<f64>) -> HsvImage {
        HsvImage::new(w, h, hue, sat, val).unwrap()
    }

    fn v_only(w: usize, h: usize, val: Vec<f64>) -> HsvImage {
        hsv_from(w, h, vec![0.0; w * h], vec![0.0; w * h], val)
    }

    #[test]
    fn constant_v_has_no_energy() {
        let img = v_only(9, 6, vec![0.37; 54]);
        let raw = contrast_energy(&img, &ContrastParams::default()).unwrap();
        assert!(raw.values().iter().all(|&e| e.abs() < 1e-24));
        let norm = contrast_saliency(&img, &ContrastParams::default()).unwrap();
        assert!(norm.values().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn checkerboard_energy_is_quarter() {
        let val: Vec<f64> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as f64).collect();
        let img = v_only(4, 4, val);
        let raw = contrast_energy(&img, &ContrastParams { block_size: 2 }).unwrap();
        // interior windows hold two zeros and two ones
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(raw.get(r, c), 0.25);
            }
        }
    }

    #[test]
    fn block_size_validated() {
        let img = v_only(2, 2, vec![0.0; 4]);
        assert!(contrast_energy(&img, &ContrastParams { block_size: 1 }).is_err());
        assert!(color_response(&img, &ColorParams { p: 0.0 }).is_err());
        assert!(color_response(&img, &ColorParams { p: f64::NAN }).is_err());
    }

    #[test]
    fn hue_filter_endpoints() {
        let img = hsv_from(3, 1, vec![0.0, 0.5, 0.25], vec![1.0; 3], vec![1.0; 3]);
        let raw = color_response(&img, &ColorParams::default()).unwrap();
        assert!((raw.values()[0] - 1.0).abs() < 1e-12);
        assert!(raw.values()[1].abs() < 1e-12);
        assert!((raw.values()[2] - 0.0625).abs() < 1e-12);
        assert!((hue_response(0.25) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gray_pixels_score_zero() {
        let img = rgb_to_hsv(&RgbImage::new(2, 1, vec![[90, 90, 90], [255, 0, 0]]).unwrap());
        let raw = color_response(&img, &ColorParams::default()).unwrap();
        assert_eq!(raw.values(), &[0.0, 1.0]);
    }

    #[test]
    fn saliency_outputs_are_normalized() {
        let img = rgb_to_hsv(
            &RgbImage::new(
                3,
                2,
                vec![[255, 0, 0], [0, 0, 255], [30, 200, 40], [0, 0, 0], [255, 255, 255], [200, 120, 0]],
            )
            .unwrap(),
        );
        for m in [
            color_saliency(&img, &ColorParams::default()).unwrap(),
            contrast_saliency(&img, &ContrastParams { block_size: 2 }).unwrap(),
        ] {
            let (lo, hi) = m.min_max();
            assert_eq!((lo, hi), (0.0, 1.0));
        }
    }
}
