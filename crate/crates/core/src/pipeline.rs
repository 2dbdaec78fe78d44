//! Fusion of the three cues, center prior and final smoothing.

use crate::context::{Context, ContextModel};
use crate::error::{Error, Result};
use crate::features::{color_saliency, contrast_saliency, ColorParams, ContrastParams};
use crate::raster::{mean_filter, normalize, rgb_to_hsv, LabelMap, RgbImage, SaliencyMap};
use crate::semantic::{semantic_saliency, LutBank};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    /// Weight of the contrast map.
    pub w1: f64,
    /// Weight of the color map.
    pub w2: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self { w1: 0.5, w2: 0.5 }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.w1.is_finite() && self.w2.is_finite() && self.w1 >= 0.0 && self.w2 >= 0.0 && self.w1 + self.w2 > 0.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "fusion weights must be >= 0 with a positive sum, got ({}, {})",
                self.w1, self.w2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterPriorParams {
    pub sigma_sq: f64,
    pub enabled: bool,
}

impl Default for CenterPriorParams {
    fn default() -> Self {
        Self {
            sigma_sq: 40.0,
            enabled: true,
        }
    }
}

impl CenterPriorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq.is_finite() && self.sigma_sq > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_sq must be > 0, got {}", self.sigma_sq)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothParams {
    pub size: usize,
    pub enabled: bool,
}

impl Default for SmoothParams {
    fn default() -> Self {
        Self {
            size: 20,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineParams {
    pub contrast: ContrastParams,
    pub color: ColorParams,
    pub fusion: FusionParams,
    pub center_prior: CenterPriorParams,
    pub smooth: SmoothParams,
    /// Use the bank's user table instead of the detected context's.
    pub user_lut: bool,
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.contrast.validate()?;
        self.color.validate()?;
        self.fusion.validate()?;
        self.center_prior.validate()?;
        if self.smooth.size == 0 {
            return Err(Error::InvalidParameter("smoothing size must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn fuse_color_contrast(s_cn: &SaliencyMap, s_cl: &SaliencyMap, p: &FusionParams) -> Result<SaliencyMap> {
    s_cn.ensure_same_dims(s_cl)?;
    let values = s_cn
        .values()
        .iter()
        .zip(s_cl.values())
        .map(|(&cn, &cl)| p.w1 * cn + p.w2 * cl)
        .collect();
    SaliencyMap::new(s_cn.width(), s_cn.height(), values)
}

pub fn fuse_semantic(s_sege: &SaliencyMap, s_cncl: &SaliencyMap) -> Result<SaliencyMap> {
    s_sege.ensure_same_dims(s_cncl)?;
    let values = s_sege
        .values()
        .iter()
        .zip(s_cncl.values())
        .map(|(&a, &b)| a * b)
        .collect();
    SaliencyMap::new(s_sege.width(), s_sege.height(), values)
}

/// Center weight `2 + exp(-D^2 / (sigma_sq * max(M, N)))` for pixel
/// `(row, col)` of an `M x N` (rows x cols) image, with D measured from
/// `(M/2, N/2)`.
pub fn center_weight(row: usize, col: usize, rows: usize, cols: usize, sigma_sq: f64) -> f64 {
    let dx = row as f64 - rows as f64 / 2.0;
    let dy = col as f64 - cols as f64 / 2.0;
    let d2 = dx * dx + dy * dy;
    2.0 + (-d2 / (sigma_sq * rows.max(cols) as f64)).exp()
}

/// Map multiplied by the center weight, before renormalization.
pub fn center_weighted(map: &SaliencyMap, sigma_sq: f64) -> SaliencyMap {
    let (cols, rows) = map.dims();
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            values.push(map.get(r, c) * center_weight(r, c, rows, cols, sigma_sq));
        }
    }
    SaliencyMap::from_parts(cols, rows, values)
}

pub fn center_prior(map: &SaliencyMap, p: &CenterPriorParams) -> Result<SaliencyMap> {
    p.validate()?;
    normalize(&center_weighted(map, p.sigma_sq))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    pub s_cn: SaliencyMap,
    pub s_cl: SaliencyMap,
    pub s_sege: SaliencyMap,
    pub s_cncl: SaliencyMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub final_map: SaliencyMap,
    pub intermediates: Intermediates,
    pub context: Context,
}

/// RGB image and label map to a normalized final saliency map.
pub fn run_pipeline(
    img: &RgbImage,
    labels: &LabelMap,
    params: &PipelineParams,
    bank: &LutBank,
    model: &ContextModel,
) -> Result<PipelineOutput> {
    params.validate()?;
    if img.dims() != labels.dims() {
        return Err(Error::DimensionMismatch {
            left: img.dims(),
            right: labels.dims(),
        });
    }
    let hsv = rgb_to_hsv(img);
    let (s_cn, (s_cl, semantic)) = rayon::join(
        || contrast_saliency(&hsv, &params.contrast),
        || {
            rayon::join(
                || color_saliency(&hsv, &params.color),
                || semantic_saliency(labels, bank, model, params.user_lut),
            )
        },
    );
    let (s_cn, s_cl) = (s_cn?, s_cl?);
    let (s_sege, context) = semantic?;

    let s_cncl = fuse_color_contrast(&s_cn, &s_cl, &params.fusion)?;
    let mut out = fuse_semantic(&s_sege, &s_cncl)?;
    if params.center_prior.enabled {
        out = center_prior(&out, &params.center_prior)?;
    }
    if params.smooth.enabled {
        out = mean_filter(&out, params.smooth.size)?;
    }
    let final_map = normalize(&out)?;

    Ok(PipelineOutput {
        final_map,
        intermediates: Intermediates {
            s_cn,
            s_cl,
            s_sege,
            s_cncl,
        },
        context,
    })
}
