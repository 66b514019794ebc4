//! Colour-selective blending: history frames only contribute where they
//! resemble a chosen colour.
//!
//! Masks are real-valued in `[0, 1]`; [`color_mask`] produces binary ones,
//! but any soft mask is accepted by [`apply_selective_mask`].

use crate::error::{Error, Result};
use crate::imagecore::{check_same_dims, ChannelMap, FrameBuffer};

/// Largest possible Euclidean distance between two RGB colours in `[0, 1]^3`.
pub const MAX_RGB_DISTANCE: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorTarget {
    color: [f64; 3],
    threshold: f64,
}

impl ColorTarget {
    pub fn new(color: [f64; 3], threshold: f64) -> Result<Self> {
        if color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::param(
                "color",
                format!("{color:?} must have components in [0, 1]"),
            ));
        }
        if !(0.0..=MAX_RGB_DISTANCE).contains(&threshold) {
            return Err(Error::param(
                "threshold",
                format!("{threshold} must be in [0, sqrt(3)]"),
            ));
        }
        Ok(ColorTarget { color, threshold })
    }

    pub fn color(&self) -> [f64; 3] {
        self.color
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn matches(&self, rgb: [f64; 3]) -> bool {
        let d2: f64 = rgb
            .iter()
            .zip(&self.color)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2.sqrt() <= self.threshold
    }
}

/// 1 where a pixel lies within the target's RGB distance, 0 elsewhere.
pub fn color_mask(frame: &FrameBuffer, target: &ColorTarget) -> ChannelMap {
    let data = frame
        .pixels()
        .map(|rgb| if target.matches(rgb) { 1.0 } else { 0.0 })
        .collect();
    ChannelMap::from_vec_unchecked(frame.width(), frame.height(), data)
}

/// Multiplies every history frame's weights by its mask, leaves the frame at
/// `current_index` untouched, and renormalizes across the window.
///
/// Where every weight ends up zero the current frame takes the full weight.
pub fn apply_selective_mask(
    weights: &[ChannelMap],
    masks: &[ChannelMap],
    current_index: usize,
) -> Result<Vec<ChannelMap>> {
    if weights.len() != masks.len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: masks.len(),
        });
    }
    if current_index >= weights.len() {
        return Err(Error::IndexOutOfBounds {
            index: current_index,
            len: weights.len(),
        });
    }
    let dims = weights[current_index].dims();
    for (k, (w, m)) in weights.iter().zip(masks).enumerate() {
        check_same_dims(dims, w.dims()).map_err(|e| e.at_frame(k))?;
        check_same_dims(dims, m.dims()).map_err(|e| e.at_frame(k))?;
        if let Some(&v) = m.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param("mask", format!("frame {k} has value {v} outside [0, 1]")))
        }
    }

    let masked: Vec<Vec<f64>> = weights
        .iter()
        .zip(masks)
        .enumerate()
        .map(|(k, (w, m))| {
            if k == current_index {
                w.data().to_vec()
            } else {
                w.data().iter().zip(m.data()).map(|(w, m)| w * m).collect()
            }
        })
        .collect();

    let n = dims.0 * dims.1;
    let mut totals = vec![0.0; n];
    for map in &masked {
        for (t, v) in totals.iter_mut().zip(map) {
            *t += v;
        }
    }
    Ok(masked
        .into_iter()
        .enumerate()
        .map(|(k, map)| {
            let data = map
                .iter()
                .zip(&totals)
                .map(|(&v, &t)| {
                    if t > 0.0 {
                        v / t
                    } else if k == current_index {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            ChannelMap::from_vec_unchecked(dims.0, dims.1, data)
        })
        .collect())
}
