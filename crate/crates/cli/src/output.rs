use std::path::Path;

use ctxsal::{RgbImage, SaliencyMap};

use crate::commands::CliError;

/// Loads any 8-bit image the `image` crate decodes; alpha is dropped.
pub fn load_rgb(path: &Path) -> Result<RgbImage, CliError> {
    let img = image::open(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    RgbImage::from_raw(w, h, img.as_raw()).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// 8-bit grayscale PNG with `round(255 * v)` per pixel.
pub fn save_saliency_png(path: &Path, map: &SaliencyMap) -> Result<(), CliError> {
    image::save_buffer_with_format(
        path,
        &map.to_gray8(),
        map.width() as u32,
        map.height() as u32,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
