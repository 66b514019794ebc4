//! Frame ingestion and PNG/PPM encoding.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};
use tempfile::NamedTempFile;
use tempofuse_core::FrameBuffer;

use crate::CliError;

const EXTENSIONS: [&str; 2] = ["png", "ppm"];

/// Resolves a directory or glob pattern to files in lexicographic order.
pub fn resolve_inputs(pattern: &str) -> Result<Vec<PathBuf>, CliError> {
    let dir = Path::new(pattern);
    let mut paths: Vec<PathBuf> = if dir.is_dir() {
        fs::read_dir(dir)
            .map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect()
    } else {
        glob::glob(pattern)
            .map_err(|e| CliError::Pattern {
                pattern: pattern.to_string(),
                reason: e.to_string(),
            })?
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect()
    };
    if paths.is_empty() {
        return Err(CliError::NoInputs(pattern.to_string()));
    }
    paths.sort();
    Ok(paths)
}

/// Decodes an 8/16-bit PNG or binary PPM into a normalized frame. Alpha is
/// dropped and grayscale is replicated across channels.
pub fn decode_frame(path: &Path) -> Result<FrameBuffer, CliError> {
    let decode_err = |source: image::ImageError| CliError::Decode {
        path: path.to_path_buf(),
        source,
    };
    let img = image::ImageReader::open(path)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(decode_err)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let n = w * h;
    let mut data = vec![0.0; 3 * n];
    let mut scatter = |i: usize, rgb: [f64; 3]| {
        for (c, v) in rgb.into_iter().enumerate() {
            data[c * n + i] = v;
        }
    };
    match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => {
            for (i, p) in img.to_rgb16().pixels().enumerate() {
                scatter(i, p.0.map(|v| f64::from(v) / 65535.0));
            }
        }
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => {
            for (i, p) in img.to_rgb32f().pixels().enumerate() {
                scatter(i, p.0.map(|v| f64::from(v).clamp(0.0, 1.0)));
            }
        }
        _ => {
            for (i, p) in img.to_rgb8().pixels().enumerate() {
                scatter(i, p.0.map(|v| f64::from(v) / 255.0));
            }
        }
    }
    FrameBuffer::new(w, h, data).map_err(|e| CliError::Frame {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Lazily decodes a sorted file list, rejecting frames whose size differs
/// from the first.
pub struct FrameSource {
    paths: std::vec::IntoIter<PathBuf>,
    dims: Option<(usize, usize)>,
}

impl FrameSource {
    pub fn new(paths: Vec<PathBuf>) -> Self {
        FrameSource {
            paths: paths.into_iter(),
            dims: None,
        }
    }
}

impl Iterator for FrameSource {
    type Item = Result<FrameBuffer, CliError>;

    fn next(&mut self) -> Option<Self::Item> {
        let path = self.paths.next()?;
        Some(decode_frame(&path).and_then(|frame| match self.dims {
            Some(expected) if expected != frame.dims() => Err(CliError::Dimensions {
                path,
                expected,
                actual: frame.dims(),
            }),
            _ => {
                self.dims = Some(frame.dims());
                Ok(frame)
            }
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.paths.size_hint()
    }
}

/// Frames matched by `pattern`, in filename order.
pub fn load_frames(pattern: &str) -> Result<FrameSource, CliError> {
    Ok(FrameSource::new(resolve_inputs(pattern)?))
}

/// `round(v * max)` with halves rounded up.
pub fn quantize(v: f64, max: u32) -> u32 {
    (v.clamp(0.0, 1.0) * f64::from(max) + 0.5).floor() as u32
}

/// Writes `bytes` through a sibling temp file so a failed write never leaves
/// a partial output behind.
fn write_atomic(
    path: &Path,
    encode: impl FnOnce(&mut NamedTempFile) -> image::ImageResult<()>,
) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    encode(&mut tmp).map_err(|source| CliError::Encode {
        path: path.to_path_buf(),
        source,
    })?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Writes an RGB PNG at 8 or 16 bits per sample.
pub fn write_frame(frame: &FrameBuffer, path: &Path, bit_depth: u8) -> Result<(), CliError> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    match bit_depth {
        8 => {
            let img = ImageBuffer::from_fn(w, h, |x, y| {
                Rgb(frame.pixel(x as usize, y as usize).map(|v| quantize(v, 255) as u8))
            });
            write_atomic(path, |f| img.write_to(f, ImageFormat::Png))
        }
        16 => {
            let img: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::from_fn(w, h, |x, y| {
                Rgb(frame.pixel(x as usize, y as usize).map(|v| quantize(v, 65535) as u16))
            });
            write_atomic(path, |f| img.write_to(f, ImageFormat::Png))
        }
        other => Err(CliError::BitDepth(other)),
    }
}

/// Writes 8-bit grayscale samples as PNG.
pub fn write_gray(samples: Vec<u8>, width: usize, height: usize, path: &Path) -> Result<(), CliError> {
    let img: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(width as u32, height as u32, samples).expect("sample count matches");
    write_atomic(path, |f| img.write_to(f, ImageFormat::Png))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(1.0, 255), 255);
        assert_eq!(quantize(0.5, 255), 128);
        assert_eq!(quantize(0.0, 65535), 0);
        assert_eq!(quantize(0.5, 65535), 32768);
    }

    #[test]
    fn png_round_trip_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let frame = FrameBuffer::from_fn(13, 7, |_, _| [rng.gen(), rng.gen(), rng.gen()]).unwrap();
        let path = dir.path().join("f.png");
        write_frame(&frame, &path, 16).unwrap();
        let back = decode_frame(&path).unwrap();
        assert!(back.max_abs_diff(&frame) <= 1.0 / 65535.0);
        write_frame(&frame, &path, 8).unwrap();
        let back = decode_frame(&path).unwrap();
        assert!(back.max_abs_diff(&frame) <= 1.0 / 255.0);
    }

    #[test]
    fn eight_bit_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let frame = FrameBuffer::from_fn(2, 1, |x, _| if x == 0 { [1.0; 3] } else { [0.5; 3] }).unwrap();
        let path = dir.path().join("e.png");
        write_frame(&frame, &path, 8).unwrap();
        let raw = image::open(&path).unwrap().to_rgb8();
        assert_eq!(raw.get_pixel(0, 0).0, [255; 3]);
        assert_eq!(raw.get_pixel(1, 0).0, [128; 3]);
        let back = decode_frame(&path).unwrap();
        assert_eq!(back.pixel(0, 0), [1.0; 3]);
    }

    #[test]
    fn ppm_decoding() {
        let dir = tempfile::tempdir().unwrap();
        let p8 = dir.path().join("a.ppm");
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 128, 0, 0, 0]);
        fs::write(&p8, bytes).unwrap();
        let f = decode_frame(&p8).unwrap();
        assert_eq!(f.pixel(0, 0), [1.0, 0.0, 128.0 / 255.0]);

        let p16 = dir.path().join("b.ppm");
        let mut bytes = b"P6\n1 1\n65535\n".to_vec();
        for v in [32768u16, 65535, 0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        fs::write(&p16, bytes).unwrap();
        let f = decode_frame(&p16).unwrap();
        assert_eq!(f.pixel(0, 0), [32768.0 / 65535.0, 1.0, 0.0]);
        assert!((f.pixel(0, 0)[0] - 0.50001).abs() < 1e-5);
    }

    #[test]
    fn lexicographic_order() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in ["f003.png", "f001.png", "f002.ppm", "notes.txt"].iter().enumerate() {
            let path = dir.path().join(name);
            if name.ends_with(".txt") {
                fs::write(&path, b"x").unwrap();
            } else if name.ends_with(".ppm") {
                fs::write(&path, b"P6\n1 1\n255\n\x02\x02\x02").unwrap();
            } else {
                let v = i as f64 / 255.0;
                write_frame(&FrameBuffer::uniform(1, 1, [v; 3]).unwrap(), &path, 8).unwrap();
            }
        }
        let names: Vec<_> = resolve_inputs(dir.path().to_str().unwrap())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["f001.png", "f002.ppm", "f003.png"]);
        let glob = format!("{}/f*.png", dir.path().display());
        let values: Vec<f64> = load_frames(&glob).unwrap().map(|f| f.unwrap().pixel(0, 0)[0]).collect();
        assert_eq!(values, [1.0 / 255.0, 0.0]);
        assert!(matches!(
            load_frames(&format!("{}/none*.png", dir.path().display())),
            Err(CliError::NoInputs(_))
        ));
    }

    #[test]
    fn corrupt_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.png");
        fs::write(&path, b"not an image").unwrap();
        let err = decode_frame(&path).unwrap_err();
        assert!(err.to_string().contains("broken.png"), "{err}");
    }

    #[test]
    fn write_failure_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let frame = FrameBuffer::uniform(2, 2, [0.5; 3]).unwrap();
        let missing = dir.path().join("nope").join("x.png");
        assert!(write_frame(&frame, &missing, 8).is_err());
        let bad_depth = dir.path().join("y.png");
        assert!(matches!(
            write_frame(&frame, &bad_depth, 12),
            Err(CliError::BitDepth(12))
        ));
        assert!(!bad_depth.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
