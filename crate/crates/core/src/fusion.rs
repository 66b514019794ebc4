//! Temporal weighting and single-frame fusion.
//!
//! A window of frames `I_{t-tau} .. I_t` is blended with per-pixel weights
//!
//! ```text
//! W_k = exp(alpha_d * TD_k) * C_k^alpha_c * S_k^alpha_s * E_k^alpha_e * T(k, t)
//! ```
//!
//! normalized across the window, where `T` is a Gaussian in `t - k` with
//! `sigma = tau / 3` and `TD_k` is the min-max normalized deviation of frame
//! `k` from the mean of all frames up to and including `k`.

use std::borrow::Borrow;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{check_same_dims, clamp01, ChannelMap, FrameBuffer, Raster};
use crate::pyramid::{
    blend_pyramids, check_depth, default_depth, gaussian_pyramid, laplacian_pyramid, reconstruct,
    ImagePyramid,
};
use crate::quality::{normalize_weights, QualityExponents, QualityMaps};

/// Largest accepted `|alpha_d|`. `exp(500)` still leaves headroom for the
/// quality product and the window sum without overflowing an `f64`.
pub const MAX_ALPHA_D: f64 = 500.0;

/// Shape of the temporal falloff across a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalProfile {
    /// `exp(-(t-k)^2 / (2 sigma^2))`, `sigma = tau / 3`.
    #[default]
    Gaussian,
    /// Every frame in the window weighted equally.
    Uniform,
}

impl TemporalProfile {
    pub fn factor(self, k: usize, t: usize, tau: usize) -> Result<f64> {
        match self {
            TemporalProfile::Gaussian => temporal_profile(k, t, tau),
            TemporalProfile::Uniform => {
                check_in_window(k, t, tau)?;
                Ok(1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    /// Number of previous frames blended into each output.
    pub tau: usize,
    /// Frame rate of a video source; `None` for photographic sequences.
    pub fps: Option<f64>,
    /// Distinctness gain: positive favours transient content, negative
    /// suppresses it.
    pub alpha_d: f64,
    pub exps: QualityExponents,
    /// Pyramid level count, `None` for [`default_depth`].
    pub depth: Option<usize>,
    pub profile: TemporalProfile,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            tau: 25,
            fps: Some(30.0),
            alpha_d: 0.0,
            exps: QualityExponents::default(),
            depth: None,
            profile: TemporalProfile::Gaussian,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        self.exps.validate()?;
        if !self.alpha_d.is_finite() || self.alpha_d.abs() > MAX_ALPHA_D {
            return Err(Error::param(
                "alpha_d",
                format!("{} must be finite with magnitude <= {MAX_ALPHA_D}", self.alpha_d),
            ));
        }
        if let Some(fps) = self.fps {
            if !fps.is_finite() || fps <= 0.0 {
                return Err(Error::param("fps", format!("{fps} must be finite and > 0")));
            }
        }
        if self.depth == Some(0) {
            return Err(Error::param("depth", "must be at least 1"));
        }
        Ok(())
    }

    /// Gaussian spread in frames; 1 for a single-frame window.
    pub fn sigma(&self) -> f64 {
        sigma_for(self.tau)
    }

    /// Pyramid depth for frames of the given size.
    pub fn depth_for(&self, width: usize, height: usize) -> Result<usize> {
        let depth = self.depth.unwrap_or_else(|| default_depth(width, height));
        check_depth(width, height, depth)?;
        Ok(depth)
    }

    /// Virtual exposure of one output, when a frame rate is known.
    pub fn virtual_exposure_time(&self) -> Option<f64> {
        self.fps.map(|fps| virtual_exposure_time(self.tau, fps))
    }
}

fn sigma_for(tau: usize) -> f64 {
    if tau == 0 {
        1.0
    } else {
        tau as f64 / 3.0
    }
}

fn check_in_window(k: usize, t: usize, tau: usize) -> Result<()> {
    if k > t || t - k > tau {
        return Err(Error::OutsideWindow {
            k,
            t,
            start: t.saturating_sub(tau),
        });
    }
    Ok(())
}

/// Gaussian temporal weight of frame `k` in the window ending at `t`.
pub fn temporal_profile(k: usize, t: usize, tau: usize) -> Result<f64> {
    check_in_window(k, t, tau)?;
    let sigma = sigma_for(tau);
    let d = (t - k) as f64;
    Ok((-(d * d) / (2.0 * sigma * sigma)).exp())
}

/// Simulated exposure in seconds of a `tau + 1` frame window.
pub fn virtual_exposure_time(tau: usize, fps: f64) -> f64 {
    (tau as f64 + 1.0) / fps
}

/// Approximate exposure covered by a photographic sequence: frame count
/// times the mean interval between shots.
pub fn photo_virtual_exposure(frames: usize, mean_interval: f64) -> f64 {
    frames as f64 * mean_interval
}

/// Incremental per-pixel, per-channel mean of every frame seen so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningMean {
    count: usize,
    mean: Option<Raster>,
}

impl RunningMean {
    pub fn new() -> Self {
        RunningMean::default()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Option<&Raster> {
        self.mean.as_ref()
    }

    /// Folds one more frame into the mean.
    pub fn update(&mut self, frame: &FrameBuffer) -> Result<()> {
        match &mut self.mean {
            None => {
                self.mean = Some(frame.as_raster().clone());
                self.count = 1;
            }
            Some(mean) => {
                check_same_dims(mean.dims(), frame.dims())?;
                self.count += 1;
                let n = self.count as f64;
                for (m, &v) in mean.data_mut().iter_mut().zip(frame.as_raster().data()) {
                    *m += (v - *m) / n;
                }
            }
        }
        Ok(())
    }

    /// By-value form of [`RunningMean::update`].
    pub fn updated(mut self, frame: &FrameBuffer) -> Result<Self> {
        self.update(frame)?;
        Ok(self)
    }
}

/// Per-pixel largest channel deviation from the running mean, min-max
/// normalized over the frame. A constant map becomes all zeros.
pub fn temporal_distinctness(frame: &FrameBuffer, mean: &RunningMean) -> Result<ChannelMap> {
    let mu = mean.mean().ok_or(Error::Empty("running mean"))?;
    check_same_dims(mu.dims(), frame.dims())?;
    let (w, h) = frame.dims();
    let mut td = vec![0.0f64; w * h];
    for c in 0..3 {
        for ((d, &v), &m) in td.iter_mut().zip(frame.channel(c)).zip(mu.plane(c)) {
            *d = d.max((v - m).abs());
        }
    }
    let (lo, hi) = td
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    for d in &mut td {
        *d = if range > 0.0 { (*d - lo) / range } else { 0.0 };
    }
    ChannelMap::new(w, h, td)
}

/// `exp(alpha_d * TD)` per pixel.
pub fn distinctness_envelope(td: &ChannelMap, alpha_d: f64) -> ChannelMap {
    let data = td.data().iter().map(|&v| (alpha_d * v).exp()).collect();
    ChannelMap::from_vec_unchecked(td.width(), td.height(), data)
}

/// Temporal factors for a window of `len` frames ending at absolute index `t`.
pub fn window_factors(len: usize, t: usize, tau: usize, profile: TemporalProfile) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::Empty("window"));
    }
    if len > tau + 1 || len > t + 1 {
        return Err(Error::param(
            "window",
            format!("{len} frames ending at {t} exceed tau + 1 = {}", tau + 1),
        ));
    }
    let start = t + 1 - len;
    (start..=t).map(|k| profile.factor(k, t, tau)).collect()
}

/// Multiplies per-frame quality weights, distinctness envelopes and temporal
/// factors, then normalizes across the window.
pub fn combine_weights<Q, E>(quality: &[Q], envelopes: &[E], temporal: &[f64]) -> Result<Vec<ChannelMap>>
where
    Q: Borrow<ChannelMap>,
    E: Borrow<ChannelMap>,
{
    if quality.len() != envelopes.len() {
        return Err(Error::LengthMismatch {
            left: quality.len(),
            right: envelopes.len(),
        });
    }
    if quality.len() != temporal.len() {
        return Err(Error::LengthMismatch {
            left: quality.len(),
            right: temporal.len(),
        });
    }
    let raw = quality
        .iter()
        .zip(envelopes)
        .zip(temporal)
        .enumerate()
        .map(|(k, ((q, e), &t))| {
            let (q, e) = (q.borrow(), e.borrow());
            check_same_dims(q.dims(), e.dims()).map_err(|err| err.at_frame(k))?;
            let data = q.data().iter().zip(e.data()).map(|(&q, &e)| e * q * t).collect();
            ChannelMap::new(q.width(), q.height(), data).map_err(|err| err.at_frame(k))
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_weights(&raw)
}

/// Normalized blending weights for a window `frames[0..K]` holding frames
/// `t - K + 1 ..= t`; `means[i]` is the running mean through `frames[i]`.
pub fn assemble_weights<F>(
    frames: &[F],
    t: usize,
    params: &FusionParams,
    means: &[RunningMean],
) -> Result<Vec<ChannelMap>>
where
    F: Borrow<FrameBuffer>,
{
    params.validate()?;
    if frames.len() != means.len() {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: means.len(),
        });
    }
    let temporal = window_factors(frames.len(), t, params.tau, params.profile)?;
    let mut quality = Vec::with_capacity(frames.len());
    let mut envelopes = Vec::with_capacity(frames.len());
    for (k, (frame, mean)) in frames.iter().zip(means).enumerate() {
        let frame = frame.borrow();
        quality.push(QualityMaps::compute(frame).weight(&params.exps));
        let td = temporal_distinctness(frame, mean).map_err(|e| e.at_frame(k))?;
        envelopes.push(distinctness_envelope(&td, params.alpha_d));
    }
    combine_weights(&quality, &envelopes, &temporal)
}

/// Blends precomputed Laplacian pyramids of a window with normalized weights
/// and reconstructs the clamped output frame.
pub fn fuse_pyramids<P>(laplacians: &[P], weights: &[ChannelMap]) -> Result<FrameBuffer>
where
    P: Borrow<ImagePyramid> + Sync,
{
    if laplacians.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: laplacians.len(),
            right: weights.len(),
        });
    }
    let depth = laplacians
        .first()
        .ok_or(Error::Empty("window"))?
        .borrow()
        .depth();
    let weight_pyramids = weights
        .par_iter()
        .map(|w| gaussian_pyramid(w.as_raster(), depth))
        .collect::<Result<Vec<_>>>()?;
    let blended = blend_pyramids(laplacians, &weight_pyramids)?;
    clamp01(&reconstruct(&blended)?)
}

/// Pyramid-blends a window of frames with normalized weights.
pub fn fuse_window<F>(frames: &[F], weights: &[ChannelMap], depth: Option<usize>) -> Result<FrameBuffer>
where
    F: Borrow<FrameBuffer> + Sync,
{
    let first = frames.first().ok_or(Error::Empty("window"))?.borrow();
    let (w, h) = first.dims();
    let depth = depth.unwrap_or_else(|| default_depth(w, h));
    let laplacians = frames
        .par_iter()
        .map(|f| {
            let f = f.borrow();
            check_same_dims((w, h), f.dims())?;
            laplacian_pyramid(f.as_raster(), depth)
        })
        .collect::<Result<Vec<_>>>()?;
    fuse_pyramids(&laplacians, weights)
}
