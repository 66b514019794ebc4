//! Grayscale dumps of intermediate maps.

use std::path::{Path, PathBuf};

use tempofuse_core::{ChannelMap, Diagnostics};

use crate::codec::{quantize, write_gray};
use crate::CliError;

/// Min-max stretch to 8 bits; a constant map becomes mid-gray.
pub fn stretch_to_u8(map: &ChannelMap) -> Vec<u8> {
    let (lo, hi) = map.min_max();
    let range = hi - lo;
    map.data()
        .iter()
        .map(|&v| {
            if range > 0.0 {
                quantize((v - lo) / range, 255) as u8
            } else {
                128
            }
        })
        .collect()
}

/// Features that are already normalized to [0, 1] and keep that scale, so a
/// static scene's distinctness reads as black rather than mid-gray.
const ABSOLUTE_FEATURES: [&str; 2] = ["distinctness", "mask"];

fn absolute_to_u8(map: &ChannelMap) -> Vec<u8> {
    map.data().iter().map(|&v| quantize(v, 255) as u8).collect()
}

/// Writes raw quality maps min-max stretched; distinctness, masks and weights
/// keep their absolute [0, 1] scale, so the weights of one output sum to
/// roughly 255 per pixel.
pub fn dump_diagnostics(diag: &Diagnostics, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::with_capacity(diag.features.len() + diag.weights.len());
    let features = diag.features.iter().map(|named| {
        let samples = if ABSOLUTE_FEATURES.contains(&named.feature.as_str()) {
            absolute_to_u8(&named.map)
        } else {
            stretch_to_u8(&named.map)
        };
        (named, samples)
    });
    let weights = diag.weights.iter().map(|named| (named, absolute_to_u8(&named.map)));
    for (named, samples) in features.chain(weights) {
        let (w, h) = named.map.dims();
        let path = dir.join(format!("{}.png", named.file_stem()));
        write_gray(samples, w, h, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempofuse_core::NamedMap;

    #[test]
    fn stretch() {
        let map = ChannelMap::from_fn(3, 1, |x, _| 2.0 + x as f64).unwrap();
        assert_eq!(stretch_to_u8(&map), vec![0, 128, 255]);
        let flat = ChannelMap::filled(2, 2, 0.7).unwrap();
        assert_eq!(stretch_to_u8(&flat), vec![128; 4]);
    }

    #[test]
    fn files_are_named_frame_feature() {
        let dir = tempfile::tempdir().unwrap();
        let map = ChannelMap::from_fn(4, 2, |x, _| x as f64 / 3.0).unwrap();
        let diag = Diagnostics {
            features: vec![NamedMap::new("000003", "contrast", map.clone())],
            weights: vec![NamedMap::new("000003", "weight000001", map)],
        };
        let written = dump_diagnostics(&diag, dir.path()).unwrap();
        let names: Vec<_> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["000003_contrast.png", "000003_weight000001.png"]);
        let img = image::open(&written[1]).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (4, 2));
        assert_eq!(img.get_pixel(3, 0).0, [255]);
    }

    #[test]
    fn static_distinctness_is_black_and_weights_share_scale() {
        let dir = tempfile::tempdir().unwrap();
        let w0 = ChannelMap::from_fn(5, 3, |x, y| (x + y) as f64 / 7.0).unwrap();
        let w1 = w0.map(|v| 1.0 - v).unwrap();
        let diag = Diagnostics {
            features: vec![
                NamedMap::new("000001", "distinctness", ChannelMap::filled(5, 3, 0.0).unwrap()),
                NamedMap::new("000001", "saturation", ChannelMap::filled(5, 3, 0.2).unwrap()),
            ],
            weights: vec![
                NamedMap::new("000001", "weight000000", w0),
                NamedMap::new("000001", "weight000001", w1),
            ],
        };
        let written = dump_diagnostics(&diag, dir.path()).unwrap();
        let load = |i: usize| image::open(&written[i]).unwrap().to_luma8();
        assert!(load(0).pixels().all(|p| p.0 == [0]));
        assert!(load(1).pixels().all(|p| p.0 == [128]));
        let (a, b) = (load(2), load(3));
        for (p, q) in a.pixels().zip(b.pixels()) {
            let sum = i32::from(p.0[0]) + i32::from(q.0[0]);
            assert!((254..=256).contains(&sum), "{sum}");
        }
    }
}
