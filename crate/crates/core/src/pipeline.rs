//! Streaming drivers.
//!
//! Video mode keeps a ring buffer of per-frame artifacts (Laplacian pyramid,
//! quality maps, distinctness envelope, optional colour mask) for the live
//! window only, so memory stays bounded by `tau + 1` frames regardless of
//! sequence length. Each artifact is computed once when its frame arrives and
//! reused by every window containing it; weight pyramids depend on the
//! window and are rebuilt per output.
//!
//! Photo mode blends the whole sequence into one frame and therefore has to
//! hold every frame's artifacts until the input ends.
//!
//! Frames must already be registered. Sequences shot with exposures much
//! shorter than the frame interval leave gaps in the path of fast movers,
//! which show up as dotted streaks in the output; nothing here compensates
//! for that.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fusion::{
    combine_weights, distinctness_envelope, fuse_pyramids, temporal_distinctness,
    window_factors, FusionParams, RunningMean,
};
use crate::imagecore::{ChannelMap, FrameBuffer};
use crate::pyramid::{laplacian_pyramid, ImagePyramid};
use crate::quality::QualityMaps;
use crate::selective::{apply_selective_mask, color_mask, ColorTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    /// One output per input, each blending the `tau + 1` most recent frames.
    Video,
    /// A single output blending the entire sequence.
    Photo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionJob {
    pub mode: FusionMode,
    pub params: FusionParams,
    pub selective: Option<ColorTarget>,
    /// Attach intermediate maps to every output.
    pub diagnostics: bool,
}

impl FusionJob {
    pub fn video(params: FusionParams) -> Self {
        FusionJob {
            mode: FusionMode::Video,
            params,
            selective: None,
            diagnostics: false,
        }
    }

    pub fn photo(params: FusionParams) -> Self {
        FusionJob {
            mode: FusionMode::Photo,
            ..FusionJob::video(params)
        }
    }

    pub fn with_selective(mut self, target: ColorTarget) -> Self {
        self.selective = Some(target);
        self
    }

    pub fn with_diagnostics(mut self, enabled: bool) -> Self {
        self.diagnostics = enabled;
        self
    }
}

/// Counts live [`FrameArtifacts`] and the high-water mark.
#[derive(Debug, Default)]
struct ResidencyCounter {
    live: AtomicUsize,
    peak: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residency {
    pub live: usize,
    pub peak: usize,
}

#[derive(Debug)]
struct ResidencyToken(Arc<ResidencyCounter>);

impl ResidencyToken {
    fn acquire(counter: &Arc<ResidencyCounter>) -> Self {
        let live = counter.live.fetch_add(1, Ordering::SeqCst) + 1;
        counter.peak.fetch_max(live, Ordering::SeqCst);
        ResidencyToken(Arc::clone(counter))
    }
}

impl Drop for ResidencyToken {
    fn drop(&mut self) {
        self.0.live.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Everything about one input frame that windows reuse.
#[derive(Debug)]
pub struct FrameArtifacts {
    index: usize,
    frame: FrameBuffer,
    laplacian: ImagePyramid,
    quality: QualityMaps,
    weight: ChannelMap,
    distinctness: ChannelMap,
    envelope: ChannelMap,
    mask: Option<ChannelMap>,
    _token: ResidencyToken,
}

impl FrameArtifacts {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn frame(&self) -> &FrameBuffer {
        &self.frame
    }

    pub fn laplacian(&self) -> &ImagePyramid {
        &self.laplacian
    }

    pub fn quality(&self) -> &QualityMaps {
        &self.quality
    }

    /// Unnormalized quality weight product.
    pub fn weight(&self) -> &ChannelMap {
        &self.weight
    }

    pub fn distinctness(&self) -> &ChannelMap {
        &self.distinctness
    }

    pub fn envelope(&self) -> &ChannelMap {
        &self.envelope
    }

    pub fn mask(&self) -> Option<&ChannelMap> {
        self.mask.as_ref()
    }

    /// Approximate heap bytes held.
    pub fn footprint_bytes(&self) -> usize {
        let maps = 6 + usize::from(self.mask.is_some());
        let plane = self.frame.width() * self.frame.height();
        (self.frame.as_raster().data().len() + self.laplacian.sample_count() + maps * plane)
            * std::mem::size_of::<f64>()
    }
}

/// Fixed-capacity FIFO keyed by absolute frame index; pushing into a full
/// buffer evicts the oldest entry.
#[derive(Debug)]
pub struct WindowBuffer<T> {
    capacity: usize,
    entries: VecDeque<(usize, T)>,
    peak: usize,
}

impl<T> WindowBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("capacity", "window buffer needs room for one frame"));
        }
        Ok(WindowBuffer {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            peak: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Most entries ever held at once.
    pub fn peak_len(&self) -> usize {
        self.peak
    }

    /// Drops the oldest entry, returning it.
    pub fn evict_oldest(&mut self) -> Option<(usize, T)> {
        self.entries.pop_front()
    }

    /// Appends `item`, returning whatever was evicted to make room.
    pub fn push(&mut self, index: usize, item: T) -> Option<(usize, T)> {
        let evicted = if self.is_full() {
            self.evict_oldest()
        } else {
            None
        };
        self.entries.push_back((index, item));
        self.peak = self.peak.max(self.entries.len());
        evicted
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.entries.iter().find(|(i, _)| *i == index).map(|(_, t)| t)
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }
}

/// Ring buffer sized for a `tau`-frame history plus the current frame.
pub fn window_buffer<T>(capacity: usize) -> Result<WindowBuffer<T>> {
    WindowBuffer::new(capacity)
}

/// A single-channel map tagged for diagnostic output as
/// `<frame>_<feature>`.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMap {
    pub frame: String,
    pub feature: String,
    pub map: ChannelMap,
}

impl NamedMap {
    pub fn new(frame: impl Into<String>, feature: impl Into<String>, map: ChannelMap) -> Self {
        NamedMap {
            frame: frame.into(),
            feature: feature.into(),
            map,
        }
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.frame, self.feature)
    }
}

/// Intermediate maps behind one output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Per-frame measures of the newest input frame.
    pub features: Vec<NamedMap>,
    /// Final normalized weights of every frame in the window; these sum to
    /// one per pixel and are meant to be viewed on a shared scale.
    pub weights: Vec<NamedMap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedFrame {
    /// Index of the newest input frame in the blend.
    pub index: usize,
    pub image: FrameBuffer,
    pub diagnostics: Option<Diagnostics>,
}

/// Per-frame artifact construction shared by both modes.
#[derive(Debug)]
struct ArtifactBuilder {
    params: FusionParams,
    selective: Option<ColorTarget>,
    dims: Option<(usize, usize)>,
    depth: usize,
    mean: RunningMean,
    next_index: usize,
    residency: Arc<ResidencyCounter>,
}

impl ArtifactBuilder {
    fn new(job: &FusionJob) -> Result<Self> {
        job.params.validate()?;
        Ok(ArtifactBuilder {
            params: job.params.clone(),
            selective: job.selective,
            dims: None,
            depth: 0,
            mean: RunningMean::new(),
            next_index: 0,
            residency: Arc::default(),
        })
    }

    fn build(&mut self, frame: FrameBuffer) -> Result<FrameArtifacts> {
        let index = self.next_index;
        let dims = frame.dims();
        match self.dims {
            None => {
                self.depth = self.params.depth_for(dims.0, dims.1)?;
                self.dims = Some(dims);
            }
            Some(expected) if expected != dims => {
                return Err(Error::DimensionMismatch {
                    expected_width: expected.0,
                    expected_height: expected.1,
                    width: dims.0,
                    height: dims.1,
                }
                .at_frame(index));
            }
            Some(_) => {}
        }
        self.mean.update(&frame).map_err(|e| e.at_frame(index))?;

        let token = ResidencyToken::acquire(&self.residency);
        let laplacian = laplacian_pyramid(frame.as_raster(), self.depth)?;
        let quality = QualityMaps::compute(&frame);
        let weight = quality.weight(&self.params.exps);
        let distinctness = temporal_distinctness(&frame, &self.mean).map_err(|e| e.at_frame(index))?;
        let envelope = distinctness_envelope(&distinctness, self.params.alpha_d);
        let mask = self.selective.as_ref().map(|t| color_mask(&frame, t));
        self.next_index += 1;
        Ok(FrameArtifacts {
            index,
            frame,
            laplacian,
            quality,
            weight,
            distinctness,
            envelope,
            mask,
            _token: token,
        })
    }

    fn residency(&self) -> Residency {
        Residency {
            live: self.residency.live.load(Ordering::SeqCst),
            peak: self.residency.peak.load(Ordering::SeqCst),
        }
    }
}

/// Blends a window of artifacts (oldest first, newest is the current frame).
fn fuse_artifacts(
    window: &[&FrameArtifacts],
    tau: usize,
    params: &FusionParams,
    diagnostics: bool,
) -> Result<FusedFrame> {
    let current = window.last().ok_or(Error::Empty("window"))?;
    let t = current.index;
    let temporal = window_factors(window.len(), t, tau, params.profile)?;
    let quality: Vec<&ChannelMap> = window.iter().map(|a| &a.weight).collect();
    let envelopes: Vec<&ChannelMap> = window.iter().map(|a| &a.envelope).collect();
    let mut weights = combine_weights(&quality, &envelopes, &temporal)?;
    if current.mask.is_some() {
        let masks: Vec<ChannelMap> = window
            .iter()
            .map(|a| a.mask.clone().ok_or(Error::Empty("colour mask")))
            .collect::<Result<_>>()?;
        weights = apply_selective_mask(&weights, &masks, window.len() - 1)?;
    }
    let laplacians: Vec<&ImagePyramid> = window.iter().map(|a| &a.laplacian).collect();
    let image = fuse_pyramids(&laplacians, &weights)?;

    let diagnostics = diagnostics.then(|| {
        let label = format!("{t:06}");
        let mut features = vec![
            NamedMap::new(&label, "contrast", current.quality.contrast.clone()),
            NamedMap::new(&label, "saturation", current.quality.saturation.clone()),
            NamedMap::new(&label, "exposedness", current.quality.exposedness.clone()),
            NamedMap::new(&label, "distinctness", current.distinctness.clone()),
        ];
        if let Some(mask) = &current.mask {
            features.push(NamedMap::new(&label, "mask", mask.clone()));
        }
        let weights = window
            .iter()
            .zip(weights)
            .map(|(a, w)| NamedMap::new(&label, format!("weight{:06}", a.index), w))
            .collect();
        Diagnostics { features, weights }
    });
    Ok(FusedFrame {
        index: t,
        image,
        diagnostics,
    })
}

/// Incremental video fusion: push frames in order, get one output per push.
#[derive(Debug)]
pub struct VideoFuser {
    builder: ArtifactBuilder,
    buffer: WindowBuffer<FrameArtifacts>,
    diagnostics: bool,
}

impl VideoFuser {
    pub fn new(job: &FusionJob) -> Result<Self> {
        if job.mode != FusionMode::Video {
            return Err(Error::param("mode", "video fusion needs a video job"));
        }
        Ok(VideoFuser {
            builder: ArtifactBuilder::new(job)?,
            buffer: window_buffer(job.params.tau + 1)?,
            diagnostics: job.diagnostics,
        })
    }

    /// Adds the next frame and fuses the window ending at it.
    pub fn push(&mut self, frame: FrameBuffer) -> Result<FusedFrame> {
        // the oldest frame leaves the window before the new one's artifacts exist
        if self.buffer.is_full() {
            self.buffer.evict_oldest();
        }
        let artifacts = self.builder.build(frame)?;
        let index = artifacts.index;
        self.buffer.push(index, artifacts);
        let window: Vec<&FrameArtifacts> = self.buffer.iter().collect();
        fuse_artifacts(&window, self.builder.params.tau, &self.builder.params, self.diagnostics)
            .map_err(|e| e.at_frame(index))
    }

    pub fn frames_seen(&self) -> usize {
        self.builder.next_index
    }

    pub fn window(&self) -> &WindowBuffer<FrameArtifacts> {
        &self.buffer
    }

    /// Live and peak counts of per-frame artifacts.
    pub fn residency(&self) -> Residency {
        self.builder.residency()
    }
}

/// Whole-sequence fusion into a single frame.
#[derive(Debug)]
pub struct PhotoFuser {
    builder: ArtifactBuilder,
    artifacts: Vec<FrameArtifacts>,
    diagnostics: bool,
}

impl PhotoFuser {
    pub fn new(job: &FusionJob) -> Result<Self> {
        if job.mode != FusionMode::Photo {
            return Err(Error::param("mode", "photo fusion needs a photo job"));
        }
        Ok(PhotoFuser {
            builder: ArtifactBuilder::new(job)?,
            artifacts: Vec::new(),
            diagnostics: job.diagnostics,
        })
    }

    pub fn push(&mut self, frame: FrameBuffer) -> Result<()> {
        let artifacts = self.builder.build(frame)?;
        self.artifacts.push(artifacts);
        Ok(())
    }

    pub fn residency(&self) -> Residency {
        self.builder.residency()
    }

    /// Blends everything pushed so far, anchoring the temporal profile at the
    /// last frame with `tau = K - 1`.
    pub fn finish(self) -> Result<FusedFrame> {
        if self.artifacts.is_empty() {
            return Err(Error::Empty("input sequence"));
        }
        let window: Vec<&FrameArtifacts> = self.artifacts.iter().collect();
        let tau = window.len() - 1;
        fuse_artifacts(&window, tau, &self.builder.params, self.diagnostics)
    }
}

/// Iterator adapter turning a frame source into fused video frames.
pub struct VideoStream<I> {
    frames: I,
    fuser: VideoFuser,
    failed: bool,
}

impl<I, E> Iterator for VideoStream<I>
where
    I: Iterator<Item = std::result::Result<FrameBuffer, E>>,
    E: From<Error>,
{
    type Item = std::result::Result<FusedFrame, E>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let result = match self.frames.next()? {
            Ok(frame) => self.fuser.push(frame).map_err(E::from),
            Err(e) => Err(e),
        };
        self.failed = result.is_err();
        Some(result)
    }
}

impl<I> VideoStream<I> {
    pub fn fuser(&self) -> &VideoFuser {
        &self.fuser
    }
}

/// Lazily fuses `frames`; iteration stops after the first error.
pub fn fuse_video<I, E>(job: &FusionJob, frames: I) -> Result<VideoStream<I::IntoIter>>
where
    I: IntoIterator<Item = std::result::Result<FrameBuffer, E>>,
{
    Ok(VideoStream {
        frames: frames.into_iter(),
        fuser: VideoFuser::new(job)?,
        failed: false,
    })
}

/// Runs a video job, handing each output to `sink` in frame order.
/// Returns the number of outputs emitted.
pub fn run_video<I, E, S>(job: &FusionJob, frames: I, mut sink: S) -> std::result::Result<usize, E>
where
    I: IntoIterator<Item = std::result::Result<FrameBuffer, E>>,
    E: From<Error>,
    S: FnMut(FusedFrame) -> std::result::Result<(), E>,
{
    let mut emitted = 0;
    for fused in fuse_video(job, frames)? {
        sink(fused?)?;
        emitted += 1;
    }
    if emitted == 0 {
        return Err(Error::Empty("input sequence").into());
    }
    Ok(emitted)
}

/// Runs a photo job over the whole sequence.
pub fn run_photo<I, E>(job: &FusionJob, frames: I) -> std::result::Result<FusedFrame, E>
where
    I: IntoIterator<Item = std::result::Result<FrameBuffer, E>>,
    E: From<Error>,
{
    let mut fuser = PhotoFuser::new(job)?;
    for frame in frames {
        fuser.push(frame?)?;
    }
    Ok(fuser.finish()?)
}
