//! Gaussian and Laplacian pyramids and weighted multi-band blending.
//!
//! Smoothing uses the separable 5-tap binomial kernel `[1, 4, 6, 4, 1] / 16`
//! with mirror (reflect-101) borders. Level `l + 1` has `ceil` half the
//! dimensions of level `l`, so frames of any size are supported.

use std::borrow::Borrow;

use crate::error::{Error, Result};
use crate::imagecore::Raster;

pub const BINOMIAL_KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PyramidKind {
    Gaussian,
    Laplacian,
}

impl PyramidKind {
    fn name(self) -> &'static str {
        match self {
            PyramidKind::Gaussian => "gaussian",
            PyramidKind::Laplacian => "laplacian",
        }
    }
}

/// Ordered pyramid levels, level 0 at full resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePyramid {
    kind: PyramidKind,
    levels: Vec<Raster>,
}

impl ImagePyramid {
    /// Assembles a pyramid from explicit levels, checking the ceil-halving
    /// shape rule and a uniform channel count.
    pub fn from_levels(kind: PyramidKind, levels: Vec<Raster>) -> Result<Self> {
        let first = levels.first().ok_or(Error::Empty("pyramid levels"))?;
        let channels = first.channels();
        for (l, pair) in levels.windows(2).enumerate() {
            let expected = half_dims(pair[0].dims());
            if pair[1].dims() != expected || pair[1].channels() != channels {
                return Err(Error::PyramidShape {
                    level: l + 1,
                    detail: format!(
                        "expected {}x{}x{channels}, got {}x{}x{}",
                        expected.0,
                        expected.1,
                        pair[1].width(),
                        pair[1].height(),
                        pair[1].channels()
                    ),
                });
            }
        }
        Ok(ImagePyramid { kind, levels })
    }

    pub fn kind(&self) -> PyramidKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Raster] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Raster {
        &self.levels[l]
    }

    pub fn channels(&self) -> usize {
        self.levels[0].channels()
    }

    /// Number of `f64` samples held across all levels.
    pub fn sample_count(&self) -> usize {
        self.levels.iter().map(|l| l.data().len()).sum()
    }
}

fn half_dims((w, h): (usize, usize)) -> (usize, usize) {
    (w.div_ceil(2), h.div_ceil(2))
}

/// Deepest pyramid supported by an image: `floor(log2(min(w, h))) + 1`.
pub fn max_depth(width: usize, height: usize) -> usize {
    let m = width.min(height);
    if m == 0 {
        return 0;
    }
    (usize::BITS - m.leading_zeros()) as usize
}

/// `max_depth - 1`, but never below 1.
pub fn default_depth(width: usize, height: usize) -> usize {
    max_depth(width, height).saturating_sub(1).max(1)
}

pub(crate) fn check_depth(width: usize, height: usize, depth: usize) -> Result<()> {
    let max = max_depth(width, height);
    if depth == 0 || depth > max {
        return Err(Error::InvalidDepth {
            requested: depth,
            max,
        });
    }
    Ok(())
}

/// Mirror index into `0..n` without repeating the edge sample.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let j = i.rem_euclid(period);
    if j >= n as isize {
        (period - j) as usize
    } else {
        j as usize
    }
}

/// Filters `src` (stride `stride`, length `n`) and keeps every other sample.
fn decimate_line(src: &[f64], n: usize, stride: usize, out: &mut [f64], out_stride: usize) {
    let m = n.div_ceil(2);
    for o in 0..m {
        let centre = 2 * o as isize;
        let mut acc = 0.0;
        for (t, &k) in BINOMIAL_KERNEL.iter().enumerate() {
            acc += k * src[reflect(centre + t as isize - 2, n) * stride];
        }
        out[o * out_stride] = acc;
    }
}

/// Zero-stuffs `src` (length `n`) to length `m` and filters with the kernel
/// scaled by 2.
fn expand_line(src: &[f64], n: usize, stride: usize, m: usize, out: &mut [f64], out_stride: usize) {
    debug_assert!(m == 2 * n || m + 1 == 2 * n);
    for o in 0..m {
        let mut acc = 0.0;
        for (t, &k) in BINOMIAL_KERNEL.iter().enumerate() {
            let j = reflect(o as isize + t as isize - 2, m);
            if j.is_multiple_of(2) {
                acc += k * src[(j / 2) * stride];
            }
        }
        out[o * out_stride] = 2.0 * acc;
    }
}

/// Blur with the binomial kernel, then drop odd rows and columns.
pub fn blur_downsample(image: &Raster) -> Raster {
    let (w, h) = image.dims();
    let (hw, hh) = half_dims((w, h));
    let channels = image.channels();
    let mut out = Raster::zeros_unchecked(hw, hh, channels);
    let mut rows = vec![0.0; hw * h];
    for c in 0..channels {
        let src = image.plane(c);
        for y in 0..h {
            decimate_line(&src[y * w..], w, 1, &mut rows[y * hw..], 1);
        }
        let dst = out.plane_mut(c);
        for x in 0..hw {
            decimate_line(&rows[x..], h, hw, &mut dst[x..], hw);
        }
    }
    out
}

/// Expand to exactly `width x height`, which must be the parent dimensions of
/// `image` under ceil-halving.
pub fn upsample(image: &Raster, width: usize, height: usize) -> Raster {
    let (w, h) = image.dims();
    let channels = image.channels();
    let mut out = Raster::zeros_unchecked(width, height, channels);
    let mut rows = vec![0.0; width * h];
    for c in 0..channels {
        let src = image.plane(c);
        for y in 0..h {
            expand_line(&src[y * w..], w, 1, width, &mut rows[y * width..], 1);
        }
        let dst = out.plane_mut(c);
        for x in 0..width {
            expand_line(&rows[x..], h, width, height, &mut dst[x..], width);
        }
    }
    out
}

/// Low-pass pyramid: level 0 is `image`, each further level is the blurred
/// and decimated previous one.
pub fn gaussian_pyramid(image: &Raster, depth: usize) -> Result<ImagePyramid> {
    check_depth(image.width(), image.height(), depth)?;
    let mut levels = Vec::with_capacity(depth);
    levels.push(image.clone());
    for l in 1..depth {
        let next = blur_downsample(&levels[l - 1]);
        levels.push(next);
    }
    Ok(ImagePyramid {
        kind: PyramidKind::Gaussian,
        levels,
    })
}

/// Band-pass pyramid. The last level holds the low-pass residual.
pub fn laplacian_pyramid(image: &Raster, depth: usize) -> Result<ImagePyramid> {
    let gaussian = gaussian_pyramid(image, depth)?;
    let mut levels = gaussian.levels;
    for l in 0..depth - 1 {
        let (w, h) = levels[l].dims();
        let expanded = upsample(&levels[l + 1], w, h);
        for (v, e) in levels[l].data_mut().iter_mut().zip(expanded.data()) {
            *v -= e;
        }
    }
    Ok(ImagePyramid {
        kind: PyramidKind::Laplacian,
        levels,
    })
}

/// Collapses a Laplacian pyramid back into a full-resolution raster.
pub fn reconstruct(pyramid: &ImagePyramid) -> Result<Raster> {
    if pyramid.kind != PyramidKind::Laplacian {
        return Err(Error::PyramidKind {
            expected: PyramidKind::Laplacian.name(),
            actual: pyramid.kind.name(),
        });
    }
    let mut levels = pyramid.levels.iter().rev();
    let mut running = levels.next().expect("pyramid has a level").clone();
    for level in levels {
        let (w, h) = level.dims();
        let mut expanded = upsample(&running, w, h);
        for (v, l) in expanded.data_mut().iter_mut().zip(level.data()) {
            *v += l;
        }
        running = expanded;
    }
    Ok(running)
}

/// Multi-band blend: each output level is the per-pixel sum over inputs of
/// Gaussian weight level times Laplacian image level, the single weight
/// channel broadcast over all image channels.
pub fn blend_pyramids<I, W>(images: &[I], weights: &[W]) -> Result<ImagePyramid>
where
    I: Borrow<ImagePyramid>,
    W: Borrow<ImagePyramid>,
{
    if images.is_empty() {
        return Err(Error::Empty("image pyramids"));
    }
    if images.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: images.len(),
            right: weights.len(),
        });
    }
    let reference = images[0].borrow();
    let depth = reference.depth();
    for (k, (img, wgt)) in images.iter().zip(weights).enumerate() {
        let (img, wgt) = (img.borrow(), wgt.borrow());
        if img.kind != PyramidKind::Laplacian || wgt.kind != PyramidKind::Gaussian {
            return Err(Error::PyramidShape {
                level: 0,
                detail: format!(
                    "input {k}: expected laplacian image and gaussian weight, got {} and {}",
                    img.kind.name(),
                    wgt.kind.name()
                ),
            });
        }
        if img.depth() != depth || wgt.depth() != depth {
            return Err(Error::PyramidShape {
                level: depth.min(img.depth()).min(wgt.depth()),
                detail: format!(
                    "input {k}: depths {} (image) and {} (weight), expected {depth}",
                    img.depth(),
                    wgt.depth()
                ),
            });
        }
        for l in 0..depth {
            let (il, wl, rl) = (&img.levels[l], &wgt.levels[l], &reference.levels[l]);
            if !il.same_shape(rl) || wl.dims() != rl.dims() || wl.channels() != 1 {
                return Err(Error::PyramidShape {
                    level: l,
                    detail: format!(
                        "input {k}: image {}x{}x{}, weight {}x{}x{}, expected {}x{}x{} and single-channel weight",
                        il.width(),
                        il.height(),
                        il.channels(),
                        wl.width(),
                        wl.height(),
                        wl.channels(),
                        rl.width(),
                        rl.height(),
                        rl.channels()
                    ),
                });
            }
        }
    }

    let mut levels = Vec::with_capacity(depth);
    for l in 0..depth {
        let shape = &reference.levels[l];
        let n = shape.plane_len();
        let mut acc = Raster::zeros_unchecked(shape.width(), shape.height(), shape.channels());
        for (img, wgt) in images.iter().zip(weights) {
            let (il, wl) = (&img.borrow().levels[l], wgt.borrow().levels[l].data());
            for (dst, src) in acc.data_mut().chunks_mut(n).zip(il.data().chunks(n)) {
                for ((d, &s), &w) in dst.iter_mut().zip(src).zip(wl) {
                    *d += w * s;
                }
            }
        }
        levels.push(acc);
    }
    Ok(ImagePyramid {
        kind: PyramidKind::Laplacian,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_raster(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> Raster {
        Raster::from_fn(w, h, c, |_, _, _| rng.gen::<f64>()).unwrap()
    }

    /// Independent oracle: dense 5x5 outer-product kernel applied at every
    /// even position with explicit mirror indexing.
    fn direct_blur_downsample(image: &Raster) -> Raster {
        let (w, h) = image.dims();
        let mirror = |i: isize, n: usize| -> usize {
            let n = n as isize;
            let mut i = i;
            while i < 0 || i >= n {
                if i < 0 {
                    i = -i;
                }
                if i >= n {
                    i = 2 * (n - 1) - i;
                }
            }
            i as usize
        };
        let k = [1.0, 4.0, 6.0, 4.0, 1.0];
        Raster::from_fn(w.div_ceil(2), h.div_ceil(2), image.channels(), |x, y, c| {
            let mut acc = 0.0;
            for dy in -2isize..=2 {
                for dx in -2isize..=2 {
                    let sx = mirror(2 * x as isize + dx, w);
                    let sy = mirror(2 * y as isize + dy, h);
                    acc += k[(dx + 2) as usize] * k[(dy + 2) as usize] * image.get(sx, sy, c);
                }
            }
            acc / 256.0
        })
        .unwrap()
    }

    #[test]
    fn depth_limits() {
        assert_eq!(max_depth(8, 8), 4);
        assert_eq!(max_depth(257, 131), 8);
        assert_eq!(max_depth(1, 100), 1);
        assert_eq!(max_depth(64, 64), 7);
        assert_eq!(default_depth(64, 64), 6);
        assert_eq!(default_depth(1, 1), 1);
        assert_eq!(default_depth(3, 3), 1);
    }

    #[test]
    fn reflect_indexing() {
        let got: Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect(-1, 2), 1);
        assert_eq!(reflect(2, 2), 0);
    }

    #[test]
    fn constant_gaussian_pyramid_stays_constant() {
        let img = Raster::filled(13, 9, 1, 0.5).unwrap();
        let pyr = gaussian_pyramid(&img, 3).unwrap();
        assert_eq!(pyr.depth(), 3);
        for level in pyr.levels() {
            assert!(level.data().iter().all(|v| (v - 0.5).abs() < 1e-14));
        }
    }

    #[test]
    fn depth_one_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_raster(&mut rng, 7, 5, 3);
        let g = gaussian_pyramid(&img, 1).unwrap();
        assert_eq!(g.levels(), std::slice::from_ref(&img));
        let l = laplacian_pyramid(&img, 1).unwrap();
        assert_eq!(l.levels(), std::slice::from_ref(&img));
        assert_eq!(reconstruct(&l).unwrap(), img);
    }

    #[test]
    fn impulse_level_matches_direct_convolution() {
        let mut img = Raster::filled(8, 8, 1, 0.0).unwrap();
        img.set(3, 4, 0, 1.0);
        let pyr = gaussian_pyramid(&img, 2).unwrap();
        let oracle = direct_blur_downsample(&img);
        assert_eq!(pyr.level(1).dims(), (4, 4));
        assert!(pyr.level(1).max_abs_diff(&oracle) < 1e-15);
        // Odd sizes and edge impulses exercise the mirror border.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = random_raster(&mut rng, 11, 7, 2);
        assert!(blur_downsample(&img).max_abs_diff(&direct_blur_downsample(&img)) < 1e-14);
    }

    #[test]
    fn depth_errors_name_both_values() {
        let img = Raster::filled(8, 8, 1, 0.0).unwrap();
        let err = gaussian_pyramid(&img, 5).unwrap_err();
        assert_eq!(err, Error::InvalidDepth { requested: 5, max: 4 });
        assert!(err.to_string().contains('5') && err.to_string().contains('4'));
        assert!(laplacian_pyramid(&img, 0).is_err());
    }

    #[test]
    fn constant_laplacian_has_no_band_energy() {
        let img = Raster::filled(21, 17, 3, 0.25).unwrap();
        let pyr = laplacian_pyramid(&img, max_depth(21, 17)).unwrap();
        let last = pyr.depth() - 1;
        for (l, level) in pyr.levels().iter().enumerate() {
            let expected = if l == last { 0.25 } else { 0.0 };
            assert!(level.data().iter().all(|v| (v - expected).abs() < 1e-14));
        }
        assert!(reconstruct(&pyr).unwrap().max_abs_diff(&img) < 1e-14);
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_raster(&mut rng, 16, 16, 3);
        let pyr = laplacian_pyramid(&img, 4).unwrap();
        assert!(reconstruct(&pyr).unwrap().max_abs_diff(&img) < 1e-6);
    }

    #[test]
    fn reconstruct_rejects_gaussian() {
        let img = Raster::filled(4, 4, 1, 0.0).unwrap();
        let g = gaussian_pyramid(&img, 2).unwrap();
        assert!(matches!(reconstruct(&g), Err(Error::PyramidKind { .. })));
    }

    fn uniform_weights(w: usize, h: usize, depth: usize, v: f64) -> ImagePyramid {
        gaussian_pyramid(&Raster::filled(w, h, 1, v).unwrap(), depth).unwrap()
    }

    #[test]
    fn blend_identity_and_selector() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = laplacian_pyramid(&random_raster(&mut rng, 12, 10, 3), 3).unwrap();
        let b = laplacian_pyramid(&random_raster(&mut rng, 12, 10, 3), 3).unwrap();
        let ones = uniform_weights(12, 10, 3, 1.0);
        let zeros = uniform_weights(12, 10, 3, 0.0);
        assert_eq!(blend_pyramids(&[&a], &[&ones]).unwrap(), a);
        assert_eq!(blend_pyramids(&[&a, &b], &[&zeros, &ones]).unwrap(), b);
    }

    #[test]
    fn blend_is_convex_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = laplacian_pyramid(&random_raster(&mut rng, 9, 14, 3), 3).unwrap();
        let b = laplacian_pyramid(&random_raster(&mut rng, 9, 14, 3), 3).unwrap();
        let wa = uniform_weights(9, 14, 3, 0.25);
        let wb = uniform_weights(9, 14, 3, 0.75);
        let out = blend_pyramids(&[&a, &b], &[&wa, &wb]).unwrap();
        for l in 0..3 {
            for i in 0..out.level(l).data().len() {
                let expected = 0.25 * a.level(l).data()[i] + 0.75 * b.level(l).data()[i];
                assert!((out.level(l).data()[i] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blend_errors() {
        let a = laplacian_pyramid(&Raster::filled(8, 8, 3, 0.1).unwrap(), 3).unwrap();
        let short = laplacian_pyramid(&Raster::filled(8, 8, 3, 0.1).unwrap(), 2).unwrap();
        let w = uniform_weights(8, 8, 3, 1.0);
        let other = uniform_weights(9, 8, 3, 1.0);
        let empty: [&ImagePyramid; 0] = [];
        assert!(matches!(
            blend_pyramids(&empty, &empty),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            blend_pyramids(&[&a, &short], &[&w, &w]),
            Err(Error::PyramidShape { .. })
        ));
        match blend_pyramids(&[&a], &[&other]) {
            Err(Error::PyramidShape { level, .. }) => assert_eq!(level, 0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            blend_pyramids(&[&a], &[&w, &w]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn from_levels_checks_halving() {
        let l0 = Raster::filled(5, 5, 1, 0.0).unwrap();
        let good = Raster::filled(3, 3, 1, 0.0).unwrap();
        let bad = Raster::filled(2, 3, 1, 0.0).unwrap();
        assert!(ImagePyramid::from_levels(PyramidKind::Gaussian, vec![l0.clone(), good]).is_ok());
        assert!(ImagePyramid::from_levels(PyramidKind::Gaussian, vec![l0, bad]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_any_shape(w in 1usize..40, h in 1usize..40, seed in any::<u64>(), depth_frac in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_raster(&mut rng, w, h, 2);
            let max = max_depth(w, h);
            let depth = 1 + ((max - 1) as f64 * depth_frac) as usize;
            let pyr = laplacian_pyramid(&img, depth).unwrap();
            for pair in pyr.levels().windows(2) {
                prop_assert_eq!(pair[1].dims(), half_dims(pair[0].dims()));
            }
            prop_assert!(reconstruct(&pyr).unwrap().max_abs_diff(&img) < 1e-6);
        }

        #[test]
        fn partition_of_unity_passes_through(seed in any::<u64>(), k in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w, h, depth) = (13, 10, 3);
            let img = laplacian_pyramid(&random_raster(&mut rng, w, h, 3), depth).unwrap();
            let raw: Vec<Vec<f64>> = (0..k).map(|_| (0..w * h).map(|_| rng.gen::<f64>() + 1e-3).collect()).collect();
            let weights: Vec<ImagePyramid> = (0..k).map(|i| {
                let data: Vec<f64> = (0..w * h).map(|p| raw[i][p] / raw.iter().map(|r| r[p]).sum::<f64>()).collect();
                gaussian_pyramid(&Raster::new(w, h, 1, data).unwrap(), depth).unwrap()
            }).collect();
            let images = vec![&img; k];
            let out = blend_pyramids(&images, &weights).unwrap();
            for l in 0..depth {
                prop_assert!(out.level(l).max_abs_diff(img.level(l)) < 1e-6);
            }
        }

        #[test]
        fn blend_is_linear_in_images(seed in any::<u64>(), s in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w, h, depth) = (8, 6, 2);
            let a = random_raster(&mut rng, w, h, 3);
            let b = random_raster(&mut rng, w, h, 3);
            let other = laplacian_pyramid(&random_raster(&mut rng, w, h, 3), depth).unwrap();
            let wts = [
                gaussian_pyramid(&random_raster(&mut rng, w, h, 1), depth).unwrap(),
                gaussian_pyramid(&random_raster(&mut rng, w, h, 1), depth).unwrap(),
            ];
            let combo = Raster::new(w, h, 3, a.data().iter().zip(b.data()).map(|(x, y)| x + s * y).collect()).unwrap();
            let la = laplacian_pyramid(&a, depth).unwrap();
            let lb = laplacian_pyramid(&b, depth).unwrap();
            let lc = laplacian_pyramid(&combo, depth).unwrap();
            let zero = laplacian_pyramid(&Raster::filled(w, h, 3, 0.0).unwrap(), depth).unwrap();
            let ba = blend_pyramids(&[&la, &other], &wts).unwrap();
            let bb = blend_pyramids(&[&lb, &zero], &wts).unwrap();
            let bc = blend_pyramids(&[&lc, &other], &wts).unwrap();
            for l in 0..depth {
                for i in 0..bc.level(l).data().len() {
                    let expected = ba.level(l).data()[i] + s * bb.level(l).data()[i];
                    prop_assert!((bc.level(l).data()[i] - expected).abs() < 1e-9);
                }
            }
        }
    }
}
