//! Per-frame quality measures and the weight product built from them.

use crate::error::{Error, Result};
use crate::imagecore::{check_same_dims, to_grayscale, ChannelMap, FrameBuffer};

/// Regularizer added to every weight before normalization, so pixels where
/// all frames score zero fall back to a uniform split.
pub const NORMALIZE_EPSILON: f64 = 1e-12;

/// Centre and spread of the well-exposedness Gaussian.
pub const EXPOSEDNESS_MEAN: f64 = 0.5;
pub const EXPOSEDNESS_SIGMA: f64 = 0.2;

/// Exponents applied to contrast, saturation and well-exposedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityExponents {
    pub alpha_c: f64,
    pub alpha_s: f64,
    pub alpha_e: f64,
}

impl QualityExponents {
    pub fn new(alpha_c: f64, alpha_s: f64, alpha_e: f64) -> Result<Self> {
        let exps = QualityExponents {
            alpha_c,
            alpha_s,
            alpha_e,
        };
        exps.validate()?;
        Ok(exps)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_c", self.alpha_c),
            ("alpha_s", self.alpha_s),
            ("alpha_e", self.alpha_e),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for QualityExponents {
    fn default() -> Self {
        QualityExponents {
            alpha_c: 1.0,
            alpha_s: 1.0,
            alpha_e: 1.0,
        }
    }
}

/// Absolute 4-neighbour Laplacian of the luminance, mirror borders.
pub fn contrast_map(frame: &FrameBuffer) -> ChannelMap {
    let gray = to_grayscale(frame);
    let (w, h) = gray.dims();
    let g = gray.data();
    let at = |x: usize, y: usize| g[y * w + x];
    // reflect-101; a 1-wide axis has no neighbour and mirrors onto itself
    let prev = |i: usize, n: usize| if i > 0 { i - 1 } else { 1.min(n - 1) };
    let next = |i: usize, n: usize| if i + 1 < n { i + 1 } else { i.saturating_sub(1) };
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let lap = at(prev(x, w), y) + at(next(x, w), y) + at(x, prev(y, h)) + at(x, next(y, h))
                - 4.0 * at(x, y);
            data.push(lap.abs());
        }
    }
    ChannelMap::from_vec_unchecked(w, h, data)
}

/// Population standard deviation of each pixel's R, G, B values.
pub fn saturation_map(frame: &FrameBuffer) -> ChannelMap {
    let data = frame
        .pixels()
        .map(|[r, g, b]| {
            let mean = (r + g + b) / 3.0;
            (((r - mean).powi(2) + (g - mean).powi(2) + (b - mean).powi(2)) / 3.0).sqrt()
        })
        .collect();
    ChannelMap::from_vec_unchecked(frame.width(), frame.height(), data)
}

/// Product over channels of a Gaussian centred on mid-gray.
pub fn well_exposedness_map(frame: &FrameBuffer) -> ChannelMap {
    let denom = 2.0 * EXPOSEDNESS_SIGMA * EXPOSEDNESS_SIGMA;
    let data = frame
        .pixels()
        .map(|rgb| {
            let sq: f64 = rgb.iter().map(|v| (v - EXPOSEDNESS_MEAN).powi(2)).sum();
            (-sq / denom).exp()
        })
        .collect();
    ChannelMap::from_vec_unchecked(frame.width(), frame.height(), data)
}

/// `base^exp` with `0^0 = 1`.
#[inline]
fn pow0(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else {
        base.powf(exp)
    }
}

/// The three quality measures of one frame, computed once and reusable for
/// any choice of exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityMaps {
    pub contrast: ChannelMap,
    pub saturation: ChannelMap,
    pub exposedness: ChannelMap,
}

impl QualityMaps {
    pub fn compute(frame: &FrameBuffer) -> Self {
        QualityMaps {
            contrast: contrast_map(frame),
            saturation: saturation_map(frame),
            exposedness: well_exposedness_map(frame),
        }
    }

    /// `C^alpha_c * S^alpha_s * E^alpha_e` per pixel.
    pub fn weight(&self, exps: &QualityExponents) -> ChannelMap {
        let data = self
            .contrast
            .data()
            .iter()
            .zip(self.saturation.data())
            .zip(self.exposedness.data())
            .map(|((&c, &s), &e)| {
                pow0(c, exps.alpha_c) * pow0(s, exps.alpha_s) * pow0(e, exps.alpha_e)
            })
            .collect();
        let (w, h) = self.contrast.dims();
        ChannelMap::from_vec_unchecked(w, h, data)
    }
}

/// Unnormalized quality weight of a single frame.
pub fn quality_weight(frame: &FrameBuffer, exps: &QualityExponents) -> ChannelMap {
    QualityMaps::compute(frame).weight(exps)
}

/// Rescales `K` weight maps so they sum to one at every pixel, each weight
/// first offset by [`NORMALIZE_EPSILON`].
pub fn normalize_weights(weights: &[ChannelMap]) -> Result<Vec<ChannelMap>> {
    let first = weights.first().ok_or(Error::Empty("weight maps"))?;
    let (w, h) = first.dims();
    for map in weights {
        check_same_dims((w, h), map.dims())?;
    }
    let mut totals = vec![0.0; w * h];
    for map in weights {
        for (t, &v) in totals.iter_mut().zip(map.data()) {
            *t += v + NORMALIZE_EPSILON;
        }
    }
    Ok(weights
        .iter()
        .map(|map| {
            let data = map
                .data()
                .iter()
                .zip(&totals)
                .map(|(&v, &t)| (v + NORMALIZE_EPSILON) / t)
                .collect();
            ChannelMap::from_vec_unchecked(w, h, data)
        })
        .collect())
}
