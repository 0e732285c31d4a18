use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::manifest::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::raster::{gaussian_blur_rgb, save_image, RgbImage};

/// One concrete augmentation. Applied in the order blur, brightness,
/// per-channel shift, translation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AugmentSpec {
    pub blur_sigma: f64,
    pub brightness_delta: i32,
    pub channel_deltas: [i32; 3],
    /// Translation in pixels; vacated pixels replicate the nearest edge.
    pub shift: (i32, i32),
}

impl AugmentSpec {
    fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return Err(Error::InvalidSigma(self.blur_sigma));
        }
        if !(-64..=64).contains(&self.brightness_delta) {
            return Err(Error::OutOfRange {
                value: self.brightness_delta as f64,
                min: -64.0,
                max: 64.0,
            });
        }
        if let Some(&d) = self.channel_deltas.iter().find(|d| !(-32..=32).contains(*d)) {
            return Err(Error::OutOfRange {
                value: d as f64,
                min: -32.0,
                max: 32.0,
            });
        }
        let (dx, dy) = self.shift;
        if dx.unsigned_abs() as f64 >= 0.25 * width as f64
            || dy.unsigned_abs() as f64 >= 0.25 * height as f64
        {
            return Err(Error::ShiftTooLarge { dx, dy });
        }
        Ok(())
    }
}

/// Sampling ranges for randomized augmentation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentRanges {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub brightness: i32,
    pub channel: i32,
    /// Maximum translation as a fraction of the image side.
    pub shift_frac: f64,
}

impl Default for AugmentRanges {
    fn default() -> Self {
        Self {
            sigma_min: 1.0,
            sigma_max: 6.0,
            brightness: 40,
            channel: 16,
            shift_frac: 0.10,
        }
    }
}

impl AugmentRanges {
    pub fn sample(&self, rng: &mut impl Rng, width: usize, height: usize) -> AugmentSpec {
        let blur_sigma = if self.sigma_max > self.sigma_min {
            rng.random_range(self.sigma_min..=self.sigma_max)
        } else {
            self.sigma_min
        };
        let b = self.brightness.clamp(0, 64);
        let c = self.channel.clamp(0, 32);
        let frac = self.shift_frac.clamp(0.0, 0.24);
        let mx = (frac * width as f64).floor() as i32;
        let my = (frac * height as f64).floor() as i32;
        AugmentSpec {
            blur_sigma,
            brightness_delta: rng.random_range(-b..=b),
            channel_deltas: [(); 3].map(|_| rng.random_range(-c..=c)),
            shift: (rng.random_range(-mx..=mx), rng.random_range(-my..=my)),
        }
    }
}

/// Applies one augmentation. The angle label is unchanged by every step.
pub fn augment(img: &RgbImage, a: &AugmentSpec) -> Result<RgbImage> {
    let (w, h) = (img.width(), img.height());
    a.validate(w, h)?;
    let blurred = if a.blur_sigma > 0.0 {
        gaussian_blur_rgb(img, a.blur_sigma)?
    } else {
        img.clone()
    };
    let (dx, dy) = a.shift;
    let src = blurred.data();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h as i32 {
        let sy = (y - dy).clamp(0, h as i32 - 1) as usize;
        for x in 0..w as i32 {
            let sx = (x - dx).clamp(0, w as i32 - 1) as usize;
            let i = (sy * w + sx) * 3;
            for c in 0..3 {
                let v = (src[i + c] as i32 + a.brightness_delta).clamp(0, 255);
                out.push((v + a.channel_deltas[c]).clamp(0, 255) as u8);
            }
        }
    }
    RgbImage::from_raw(w, h, out)
}

fn entry_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_add(0x632B_E59B_D9B4_E019)
}

/// Materializes a blurred, photometrically shifted twin of every sharp entry
/// into `out_dir`, copying the originals alongside. Twins inherit the sharp
/// label and batch. The result is sorted by path.
pub fn augment_manifest(
    m: &DatasetManifest,
    out_dir: impl AsRef<Path>,
    ranges: &AugmentRanges,
    seed: u64,
) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let produced = m
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| -> Result<Vec<ManifestEntry>> {
            let name = flat_name(&e.path);
            let src = m.resolve(e);
            let copy = out_dir.join(&name);
            if src != copy {
                fs::copy(&src, &copy)?;
            }
            let mut out = vec![ManifestEntry {
                path: name.clone(),
                ..e.clone()
            }];
            if !e.blur {
                let img = m.load_entry(e)?;
                let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(seed, i));
                let spec = ranges.sample(&mut rng, img.width(), img.height());
                let aug = augment(&img, &spec)?;
                let stem = name.trim_end_matches(".png");
                let aug_name = format!("{stem}_aug.png");
                save_image(&aug, out_dir.join(&aug_name))?;
                out.push(ManifestEntry {
                    path: aug_name,
                    blur: spec.blur_sigma > 0.0,
                    ..e.clone()
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut entries: Vec<ManifestEntry> = produced.into_iter().flatten().collect();
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(DatasetManifest::new(out_dir, entries))
}

/// Flattens a relative path into a single file name, keeping it unique.
fn flat_name(path: &str) -> String {
    let flat = path.replace(['/', '\\'], "__").replace("..", "up");
    if flat.ends_with(".png") {
        flat
    } else {
        format!("{flat}.png")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> RgbImage {
        let data = (0..8 * 6 * 3).map(|i| (i * 7 % 256) as u8).collect();
        RgbImage::from_raw(8, 6, data).unwrap()
    }

    #[test]
    fn zero_spec_is_identity() {
        assert_eq!(augment(&img(), &AugmentSpec::default()).unwrap(), img());
    }

    #[test]
    fn brightness_clamps() {
        let px = RgbImage::filled(1, 1, [250, 10, 128]);
        let a = AugmentSpec {
            brightness_delta: 10,
            ..Default::default()
        };
        assert_eq!(augment(&px, &a).unwrap().pixel(0, 0), [255, 20, 138]);
        let a = AugmentSpec {
            brightness_delta: -20,
            channel_deltas: [0, 5, -32],
            ..Default::default()
        };
        assert_eq!(augment(&px, &a).unwrap().pixel(0, 0), [230, 5, 76]);
    }

    #[test]
    fn shift_replicates_edges() {
        let a = AugmentSpec {
            shift: (1, -1),
            ..Default::default()
        };
        let src = img();
        let out = augment(&src, &a).unwrap();
        assert_eq!(out.pixel(3, 2), src.pixel(2, 3));
        assert_eq!(out.pixel(0, 5), src.pixel(0, 5));
        assert_eq!(out.pixel(0, 0), src.pixel(0, 1));
    }

    #[test]
    fn oversized_shift_rejected() {
        let a = AugmentSpec {
            shift: (2, 0),
            ..Default::default()
        };
        assert!(matches!(augment(&img(), &a), Err(Error::ShiftTooLarge { .. })));
        let a = AugmentSpec {
            brightness_delta: 65,
            ..Default::default()
        };
        assert!(augment(&img(), &a).is_err());
    }

    #[test]
    fn sampled_specs_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = AugmentRanges::default();
        for _ in 0..200 {
            let s = r.sample(&mut rng, 256, 256);
            s.validate(256, 256).unwrap();
            assert!((1.0..=6.0).contains(&s.blur_sigma));
        }
    }
}
