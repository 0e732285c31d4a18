use super::{GrayImage, RgbImage};
use crate::error::{Error, Result};

/// Square convolution kernel with odd side `2 * radius + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// `weights` is row-major over a `(2r+1) x (2r+1)` grid.
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                got: weights.len(),
            });
        }
        Ok(Self { radius, weights })
    }

    pub fn identity() -> Self {
        Self {
            radius: 0,
            weights: vec![1.0],
        }
    }

    /// Normalized box filter.
    pub fn boxed(radius: usize) -> Self {
        let side = 2 * radius + 1;
        let n = side * side;
        Self {
            radius,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the center.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        let side = self.side() as isize;
        self.weights[((dy + r) * side + dx + r) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Normalized 2-D Gaussian. `radius == 0` selects `ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Kernel> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = if radius == 0 {
        default_radius(sigma)
    } else {
        radius
    };
    let r = radius as isize;
    let denom = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity((2 * radius + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push((-((dx * dx + dy * dy) as f64) / denom).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Kernel { radius, weights })
}

fn default_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

fn gaussian_1d(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let denom = 2.0 * sigma * sigma;
    let mut w: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / denom).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Convolve a 64-bit plane with edge replication. No rounding.
///
/// The kernel is applied as correlation; every kernel used here is
/// symmetric so the distinction never shows.
pub fn convolve_plane(plane: &[f64], width: usize, height: usize, k: &Kernel) -> Vec<f64> {
    let r = k.radius as isize;
    let side = k.side();
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for ky in 0..side {
                let sy = clamp_index(y as isize + ky as isize - r, height);
                let row = &plane[sy * width..(sy + 1) * width];
                let krow = &k.weights[ky * side..(ky + 1) * side];
                for (kx, &w) in krow.iter().enumerate() {
                    let sx = clamp_index(x as isize + kx as isize - r, width);
                    acc += w * row[sx];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Convolve with edge replication, accumulate in f64, round and clamp.
pub fn convolve(img: &GrayImage, k: &Kernel) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    if k.side() > 2 * w.min(h) + 1 {
        return Err(Error::KernelTooLarge {
            side: k.side(),
            width: w,
            height: h,
        });
    }
    let out = convolve_plane(&img.to_plane(), w, h, k);
    Ok(GrayImage::from_plane(w, h, &out))
}

/// Separable Gaussian blur of a 64-bit plane with edge replication.
///
/// Equivalent to [`convolve_plane`] with [`gaussian_kernel`] up to
/// floating-point reassociation, at `O(r)` instead of `O(r^2)` per pixel.
pub fn gaussian_blur_plane(
    plane: &[f64],
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<Vec<f64>> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = default_radius(sigma);
    let w1 = gaussian_1d(sigma, radius);
    let r = radius as isize;
    let mut tmp = vec![0.0; width * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (i, &w) in w1.iter().enumerate() {
                acc += w * row[clamp_index(x as isize + i as isize - r, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for (i, &w) in w1.iter().enumerate() {
            let sy = clamp_index(y as isize + i as isize - r, height);
            let src = &tmp[sy * width..(sy + 1) * width];
            let dst = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    Ok(out)
}

/// Per-channel Gaussian blur of a color image.
pub fn gaussian_blur_rgb(img: &RgbImage, sigma: f64) -> Result<RgbImage> {
    let (w, h) = (img.width(), img.height());
    let planes = (0..3)
        .map(|c| gaussian_blur_plane(&img.channel_plane(c), w, h, sigma))
        .collect::<Result<Vec<_>>>()?;
    Ok(RgbImage::from_planes(
        w,
        h,
        [&planes[0], &planes[1], &planes[2]],
    ))
}

/// Area-averaging resample of a plane to `(out_w, out_h)`.
///
/// Every output pixel is the coverage-weighted mean of the source pixels its
/// footprint overlaps, so integer downscales reduce to exact block means.
pub fn resize_area(
    plane: &[f64],
    width: usize,
    height: usize,
    out_w: usize,
    out_h: usize,
) -> Vec<f64> {
    if width == out_w && height == out_h {
        return plane.to_vec();
    }
    let xs = footprints(width, out_w);
    let ys = footprints(height, out_h);
    let mut out = vec![0.0; out_w * out_h];
    for (oy, yspan) in ys.iter().enumerate() {
        for (ox, xspan) in xs.iter().enumerate() {
            let mut acc = 0.0;
            let mut total = 0.0;
            for &(sy, wy) in yspan {
                let row = &plane[sy * width..(sy + 1) * width];
                for &(sx, wx) in xspan {
                    acc += wx * wy * row[sx];
                    total += wx * wy;
                }
            }
            out[oy * out_w + ox] = acc / total;
        }
    }
    out
}

/// Source indices and overlap weights covered by each output cell.
fn footprints(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let start = o as f64 * scale;
            let end = start + scale;
            let first = start.floor() as usize;
            let last = (end.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (end.min(s as f64 + 1.0) - start.max(s as f64)).max(0.0);
                    (overlap > 1e-12).then_some((s, overlap))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::quantize;

    fn lcg_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut s = seed;
        GrayImage::from_fn(w, h, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 56) as u8
        })
    }

    /// Direct nested-loop summation with explicit replicate clamping.
    fn oracle_convolve(img: &GrayImage, k: &Kernel) -> GrayImage {
        let r = k.radius() as isize;
        let (w, h) = (img.width() as isize, img.height() as isize);
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x as isize + dx).max(0).min(w - 1);
                    let sy = (y as isize + dy).max(0).min(h - 1);
                    acc += k.at(dx, dy) * img.get(sx as usize, sy as usize) as f64;
                }
            }
            quantize(acc)
        })
    }

    #[test]
    fn identity_kernel_is_identity() {
        let img = lcg_image(7, 5, 3);
        assert_eq!(convolve(&img, &Kernel::identity()).unwrap(), img);
    }

    #[test]
    fn normalized_kernels_preserve_constants() {
        let img = GrayImage::filled(9, 6, 137);
        for k in [
            Kernel::boxed(1),
            Kernel::boxed(2),
            gaussian_kernel(1.3, 0).unwrap(),
            gaussian_kernel(0.7, 2).unwrap(),
        ] {
            assert_eq!(convolve(&img, &k).unwrap(), img);
        }
    }

    #[test]
    fn box_filter_matches_direct_summation() {
        let img = GrayImage::from_fn(5, 5, |x, y| ((x * 37 + y * 91) % 256) as u8);
        let k = Kernel::boxed(1);
        assert_eq!(convolve(&img, &k).unwrap(), oracle_convolve(&img, &k));
        // Corner (0,0): replicated 3x3 window over values at x,y in {0,0,1}.
        let v = |x: usize, y: usize| ((x * 37 + y * 91) % 256) as f64;
        let mut acc = 0.0;
        for y in [0, 0, 1] {
            for x in [0, 0, 1] {
                acc += v(x, y);
            }
        }
        assert_eq!(convolve(&img, &k).unwrap().get(0, 0), quantize(acc / 9.0));
    }

    #[test]
    fn random_kernels_match_direct_summation() {
        for seed in 0..10 {
            let img = lcg_image(11, 8, seed);
            let k = gaussian_kernel(0.5 + seed as f64 * 0.3, 0).unwrap();
            if k.side() > 2 * 8 + 1 {
                continue;
            }
            assert_eq!(convolve(&img, &k).unwrap(), oracle_convolve(&img, &k));
        }
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let img = GrayImage::filled(2, 3, 0);
        assert!(convolve(&img, &Kernel::boxed(2)).is_ok());
        assert!(matches!(
            convolve(&img, &Kernel::boxed(3)),
            Err(Error::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn gaussian_weights_normalized_and_symmetric() {
        for sigma in [0.3, 1.0, 2.5, 6.0] {
            let k = gaussian_kernel(sigma, 0).unwrap();
            assert!((k.sum() - 1.0).abs() < 1e-12);
            let r = k.radius() as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    assert_eq!(k.at(dx, dy), k.at(-dx, dy));
                    assert_eq!(k.at(dx, dy), k.at(dy, dx));
                }
            }
        }
    }

    #[test]
    fn gaussian_center_weight_sigma_one_radius_one() {
        // Direct evaluation: center 1, edges e^-0.5, corners e^-1.
        let e1 = (-0.5f64).exp();
        let e2 = (-1.0f64).exp();
        let expected = 1.0 / (1.0 + 4.0 * e1 + 4.0 * e2);
        let k = gaussian_kernel(1.0, 1).unwrap();
        assert!((k.at(0, 0) - expected).abs() < 1e-15);
        assert!((k.at(0, 0) - 0.2042).abs() < 5e-5);
    }

    #[test]
    fn gaussian_rejects_nonpositive_sigma() {
        assert!(matches!(gaussian_kernel(0.0, 2), Err(Error::InvalidSigma(_))));
        assert!(matches!(gaussian_kernel(-1.0, 0), Err(Error::InvalidSigma(_))));
        assert_eq!(gaussian_kernel(1.0, 0).unwrap().radius(), 3);
    }

    #[test]
    fn separable_blur_matches_2d_convolution() {
        let img = lcg_image(20, 13, 9);
        for sigma in [0.8, 1.5, 2.0] {
            let k = gaussian_kernel(sigma, 0).unwrap();
            let full = convolve_plane(&img.to_plane(), 20, 13, &k);
            let sep = gaussian_blur_plane(&img.to_plane(), 20, 13, sigma).unwrap();
            for (a, b) in full.iter().zip(&sep) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn convolution_is_linear_up_to_rounding() {
        let a = GrayImage::from_fn(12, 9, |x, y| ((x * 13 + y * 7) % 120) as u8);
        let b = GrayImage::from_fn(12, 9, |x, y| ((x * 5 + y * 29) % 120) as u8);
        let sum = GrayImage::from_fn(12, 9, |x, y| a.get(x, y) + b.get(x, y));
        let k = gaussian_kernel(1.2, 0).unwrap();
        let (ca, cb, cs) = (
            convolve(&a, &k).unwrap(),
            convolve(&b, &k).unwrap(),
            convolve(&sum, &k).unwrap(),
        );
        for i in 0..12 * 9 {
            let d = cs.data()[i] as i32 - ca.data()[i] as i32 - cb.data()[i] as i32;
            assert!(d.abs() <= 1, "pixel {i}: {d}");
        }
    }

    #[test]
    fn area_resize_block_means() {
        let plane: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let out = resize_area(&plane, 4, 4, 2, 2);
        assert_eq!(out, vec![2.5, 4.5, 10.5, 12.5]);
        let up = resize_area(&[1.0, 3.0], 2, 1, 4, 1);
        assert_eq!(up, vec![1.0, 1.0, 3.0, 3.0]);
        let frac = resize_area(&[0.0, 3.0, 6.0], 3, 1, 2, 1);
        assert!((frac[0] - 1.0).abs() < 1e-12 && (frac[1] - 5.0).abs() < 1e-12);
    }
}
