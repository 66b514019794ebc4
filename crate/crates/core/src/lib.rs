//! Temporal image fusion.
//!
//! Blends registered frame sequences into long-exposure renderings. Each
//! output pixel is a multi-band (Laplacian pyramid) blend of a window of
//! frames, weighted by per-frame quality (contrast, saturation,
//! well-exposedness), a Gaussian falloff in time, a gain on temporally
//! distinct content, and optionally a colour mask restricting which history
//! pixels take part.
//!
//! ```
//! use tempofuse_core::{FrameBuffer, FusionJob, FusionParams, run_video};
//!
//! let frames: Vec<FrameBuffer> = (0..4)
//!     .map(|i| FrameBuffer::uniform(16, 16, [0.1 * i as f64, 0.5, 0.5]).unwrap())
//!     .collect();
//! let job = FusionJob::video(FusionParams { tau: 2, ..Default::default() });
//! let mut outputs = Vec::new();
//! let n = run_video(&job, frames.into_iter().map(Ok::<_, tempofuse_core::Error>), |f| {
//!     outputs.push(f.image);
//!     Ok(())
//! })
//! .unwrap();
//! assert_eq!(n, 4);
//! ```

pub mod error;
pub mod fusion;
pub mod imagecore;
pub mod pipeline;
pub mod pyramid;
pub mod quality;
pub mod selective;

pub use error::{Error, Result};
pub use fusion::{
    assemble_weights, distinctness_envelope, fuse_window, temporal_distinctness, temporal_profile,
    virtual_exposure_time, FusionParams, RunningMean, TemporalProfile,
};
pub use imagecore::{clamp01, to_grayscale, ChannelMap, FrameBuffer, Raster};
pub use pipeline::{
    fuse_video, run_photo, run_video, Diagnostics, FusedFrame, FusionJob, FusionMode, NamedMap,
    PhotoFuser, VideoFuser,
};
pub use pyramid::{blend_pyramids, gaussian_pyramid, laplacian_pyramid, reconstruct, ImagePyramid};
pub use quality::{normalize_weights, quality_weight, QualityExponents};
pub use selective::{apply_selective_mask, color_mask, ColorTarget};
