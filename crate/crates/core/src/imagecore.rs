//! Raster types shared by every stage of the pipeline.
//!
//! All storage is planar: channel `c` occupies `data[c * w * h .. (c + 1) * w * h]`,
//! each plane row-major. Intensities are `f64` in the normalized `[0, 1]` domain;
//! integer sample formats are converted at the I/O boundary.

use crate::error::{Error, Result};

/// Luminance weights (BT.601) for R, G, B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Planar multi-channel raster of finite reals with no range constraint.
///
/// Pyramid levels live here since band-pass levels are signed and a
/// reconstruction can overshoot `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster { width, height });
        }
        if channels == 0 {
            return Err(Error::ChannelCount {
                expected: 1,
                actual: 0,
            });
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::DataLength {
                width,
                height,
                channels,
                expected,
                actual: data.len(),
            });
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Raster::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a raster by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Raster::new(width, height, channels, data)
    }

    pub(crate) fn zeros_unchecked(width: usize, height: usize, channels: usize) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Raster {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, channel: usize) -> f64 {
        self.data[channel * self.plane_len() + y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, channel: usize, value: f64) {
        let n = self.plane_len();
        self.data[channel * n + y * self.width + x] = value;
    }

    /// Largest absolute per-sample difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Raster) -> f64 {
        assert_eq!(
            (self.width, self.height, self.channels),
            (other.width, other.height, other.channels),
            "raster shapes differ"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Position of flat sample index `i` as `(x, y, channel)`.
    fn locate(&self, i: usize) -> (usize, usize, usize) {
        let n = self.plane_len();
        let c = i / n;
        let p = i % n;
        (p % self.width, p / self.width, c)
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => {
                let (x, y, channel) = self.locate(i);
                Err(Error::NonFinite {
                    x,
                    y,
                    channel,
                    value: self.data[i],
                })
            }
        }
    }
}

/// An RGB frame with every sample finite and inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    raster: Raster,
}

impl FrameBuffer {
    /// Wraps planar RGB data, rejecting non-finite or out-of-range samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        FrameBuffer::from_raster(Raster::new(width, height, 3, data)?)
    }

    pub fn from_raster(raster: Raster) -> Result<Self> {
        if raster.channels != 3 {
            return Err(Error::ChannelCount {
                expected: 3,
                actual: raster.channels,
            });
        }
        raster.check_finite()?;
        if let Some(i) = raster.data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            let (x, y, channel) = raster.locate(i);
            return Err(Error::OutOfRange {
                x,
                y,
                channel,
                value: raster.data[i],
            });
        }
        Ok(FrameBuffer { raster })
    }

    /// Frame with every pixel set to `rgb`.
    pub fn uniform(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        FrameBuffer::from_fn(width, height, |_, _| rgb)
    }

    /// Builds a frame from a per-pixel `(x, y) -> [r, g, b]` function.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let n = width * height;
        let mut data = vec![0.0; n * 3];
        for y in 0..height {
            for x in 0..width {
                let rgb = f(x, y);
                for (c, v) in rgb.into_iter().enumerate() {
                    data[c * n + y * width + x] = v;
                }
            }
        }
        FrameBuffer::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.raster.width
    }

    pub fn height(&self) -> usize {
        self.raster.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.raster.dims()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        self.raster.plane(c)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        [
            self.raster.get(x, y, 0),
            self.raster.get(x, y, 1),
            self.raster.get(x, y, 2),
        ]
    }

    pub fn as_raster(&self) -> &Raster {
        &self.raster
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }

    /// Iterates pixels in row-major order as `[r, g, b]`.
    pub fn pixels(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        let (r, g, b) = (self.channel(0), self.channel(1), self.channel(2));
        r.iter()
            .zip(g)
            .zip(b)
            .map(|((&r, &g), &b)| [r, g, b])
    }

    pub fn max_abs_diff(&self, other: &FrameBuffer) -> f64 {
        self.raster.max_abs_diff(&other.raster)
    }
}

/// Single-channel raster of finite reals: quality measures, weights,
/// distinctness and masks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMap {
    raster: Raster,
}

impl ChannelMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let raster = Raster::new(width, height, 1, data)?;
        raster.check_finite()?;
        Ok(ChannelMap { raster })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        ChannelMap::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ChannelMap::new(width, height, data)
    }

    pub fn from_raster(raster: Raster) -> Result<Self> {
        if raster.channels != 1 {
            return Err(Error::ChannelCount {
                expected: 1,
                actual: raster.channels,
            });
        }
        raster.check_finite()?;
        Ok(ChannelMap { raster })
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        ChannelMap {
            raster: Raster::from_parts_unchecked(width, height, 1, data),
        }
    }

    pub fn width(&self) -> usize {
        self.raster.width
    }

    pub fn height(&self) -> usize {
        self.raster.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.raster.dims()
    }

    pub fn data(&self) -> &[f64] {
        &self.raster.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.raster.data[y * self.raster.width + x]
    }

    pub fn as_raster(&self) -> &Raster {
        &self.raster
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn max_abs_diff(&self, other: &ChannelMap) -> f64 {
        self.raster.max_abs_diff(&other.raster)
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ChannelMap> {
        let data = self.data().iter().map(|&v| f(v)).collect();
        ChannelMap::new(self.width(), self.height(), data)
    }
}

/// Per-pixel BT.601 luminance.
pub fn to_grayscale(frame: &FrameBuffer) -> ChannelMap {
    let data = frame
        .pixels()
        .map(|[r, g, b]| {
            (LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b).clamp(0.0, 1.0)
        })
        .collect();
    ChannelMap::from_vec_unchecked(frame.width(), frame.height(), data)
}

/// Clamps every sample of a three-channel raster into `[0, 1]`.
///
/// Fails on the first non-finite sample, reporting its location.
pub fn clamp01(raster: &Raster) -> Result<FrameBuffer> {
    if raster.channels() != 3 {
        return Err(Error::ChannelCount {
            expected: 3,
            actual: raster.channels(),
        });
    }
    raster.check_finite()?;
    let data = raster.data().iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(FrameBuffer {
        raster: Raster::from_parts_unchecked(raster.width(), raster.height(), 3, data),
    })
}

pub(crate) fn check_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            expected_width: expected.0,
            expected_height: expected.1,
            width: actual.0,
            height: actual.1,
        });
    }
    Ok(())
}
