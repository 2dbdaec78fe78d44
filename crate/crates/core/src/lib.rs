//! Context-aware saliency maps.
//!
//! Three per-pixel cues are computed from an RGB image and its semantic
//! label map:
//!
//! * local brightness energy ([`features::contrast_saliency`]),
//! * a warm-hue spectral filter ([`features::color_saliency`]),
//! * class importance looked up in a table chosen by an MLP that
//!   recognizes the image context ([`semantic::semantic_saliency`]).
//!
//! [`pipeline::run_pipeline`] blends the first two linearly, gates the
//! blend with the semantic map, applies a center prior and a box filter,
//! and renormalizes.

pub mod classes;
pub mod context;
pub mod error;
pub mod features;
pub mod kv;
pub mod pipeline;
pub mod raster;
pub mod semantic;
pub mod voc;

pub use context::{Context, ContextModel};
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, PipelineOutput, PipelineParams};
pub use raster::{HsvImage, LabelMap, RgbImage, SaliencyMap, VOID};
pub use semantic::{LutBank, SaliencyLut};
