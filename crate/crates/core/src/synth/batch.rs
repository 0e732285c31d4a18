use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{render_motion_blur, render_scene, Background, BlurSpec, SceneSpec};
use crate::dataset::{DatasetManifest, LabelSource, ManifestEntry};
use crate::error::{Error, Result};
use crate::raster::save_image;

/// One capture condition rendered for every integer angle in a range.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSpec {
    pub batch: u32,
    pub count_per_angle: usize,
    pub angle_min: i32,
    pub angle_max: i32,
    /// Cycled per image.
    pub backgrounds: Vec<Background>,
    pub blur: Option<BlurSpec>,
    pub img_size: usize,
    /// Relative jitter of pivot and marker geometry.
    pub geometry_jitter: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl BatchSpec {
    pub fn new(batch: u32, backgrounds: Vec<Background>, seed: u64) -> Self {
        Self {
            batch,
            count_per_angle: 1,
            angle_min: -90,
            angle_max: 90,
            backgrounds,
            blur: None,
            img_size: 256,
            geometry_jitter: 0.1,
            noise_sigma: 2.0,
            seed,
        }
    }

    fn is_blurred(&self) -> bool {
        self.blur.is_some_and(|b| b.sweep_deg > 0.0 && b.k_sub > 1)
    }

    /// File name for one frame; sorts in (angle, index) order.
    pub fn file_name(&self, angle: i32, index: usize) -> String {
        let tag = if self.is_blurred() { "m" } else { "s" };
        format!("b{}{tag}_a{:03}_{index:03}.png", self.batch, angle + 90)
    }

    /// Scene for one frame, jittered deterministically from the seed.
    pub fn scene(&self, angle: i32, index: usize) -> SceneSpec {
        let seed = image_seed(self.seed, self.batch, angle, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = SceneSpec::with_size(self.img_size);
        let j = self.geometry_jitter;
        let mut jitter = |v: f64| v * (1.0 + rng.random_range(-j..=j));
        let pivot = (jitter(base.pivot.0), jitter(base.pivot.1));
        let slot = (angle - self.angle_min) as usize * self.count_per_angle + index;
        let background = self.backgrounds[slot % self.backgrounds.len()].reseeded(seed ^ 0xB6);
        SceneSpec {
            pivot,
            arm_offset: jitter(base.arm_offset),
            marker_len: jitter(base.marker_len),
            marker_wid: jitter(base.marker_wid),
            theta_deg: angle as f64,
            background,
            noise_sigma: self.noise_sigma,
            seed,
            ..base
        }
    }
}

/// Backgrounds of capture condition `batch` (1-based, cycling after 4).
/// Every condition mixes all four families, each with its own levels,
/// contrast and texture scale, the way one physical setup shows a variety
/// of surfaces under one lighting.
pub fn standard_backgrounds(batch: u32) -> Vec<Background> {
    let noise = |level, spread| Background::Noise { level, spread, seed: 0 };
    match (batch.max(1) - 1) % 4 {
        0 => vec![
            Background::Flat(200),
            Background::Gradient { a: 160, b: 230 },
            noise(190, 25),
            Background::Checker { cell: 32, lo: 150, hi: 220 },
        ],
        1 => vec![
            Background::Flat(180),
            Background::Gradient { a: 235, b: 170 },
            noise(205, 15),
            Background::Checker { cell: 24, lo: 170, hi: 235 },
        ],
        2 => vec![
            Background::Flat(225),
            Background::Gradient { a: 150, b: 210 },
            noise(175, 30),
            Background::Checker { cell: 40, lo: 140, hi: 200 },
        ],
        _ => vec![
            Background::Flat(160),
            Background::Gradient { a: 210, b: 245 },
            noise(220, 20),
            Background::Checker { cell: 48, lo: 130, hi: 190 },
        ],
    }
}

/// Random background for the auxiliary set: any family with randomized
/// parameters, never one of the [`standard_backgrounds`].
pub fn auxiliary_background(rng: &mut impl Rng, family: usize, seed: u64) -> Background {
    loop {
        let bg = match family % 4 {
            0 => Background::Flat(rng.random_range(100..=245)),
            1 => Background::Gradient {
                a: rng.random_range(100..=245),
                b: rng.random_range(100..=245),
            },
            2 => {
                let spread = rng.random_range(4..=35);
                Background::Noise {
                    level: rng.random_range(100 + spread..=250 - spread),
                    spread,
                    seed,
                }
            }
            _ => {
                let lo = rng.random_range(100..=210);
                Background::Checker {
                    cell: rng.random_range(4..=48),
                    lo,
                    hi: rng.random_range(lo + 10..=250),
                }
            }
        };
        let reserved = (1..=4)
            .flat_map(standard_backgrounds)
            .any(|b| b.reseeded(seed) == bg);
        if !reserved {
            return bg;
        }
    }
}

/// In-memory images with uniformly drawn continuous angles for pretraining
/// the feature extractor, over randomized backgrounds so the features do not
/// key on any one scene. Every third frame is motion blurred.
pub fn auxiliary_set(count: usize, size: usize, seed: u64) -> Result<Vec<(crate::raster::RgbImage, f64)>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let s = image_seed(seed, u32::MAX, 0, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let base = SceneSpec::with_size(size);
            let mut jitter = |v: f64| v * (1.0 + rng.random_range(-0.1..=0.1));
            let pivot = (jitter(base.pivot.0), jitter(base.pivot.1));
            let scene = SceneSpec {
                pivot,
                arm_offset: jitter(base.arm_offset),
                marker_len: jitter(base.marker_len),
                marker_wid: jitter(base.marker_wid),
                background: auxiliary_background(&mut rng, i, s),
                noise_sigma: 2.0,
                seed: s,
                ..base
            };
            let theta = rng.random_range(-89.5..89.5);
            let scene = scene.at_angle(theta);
            if i % 3 == 2 {
                render_motion_blur(&scene, &BlurSpec::default())
            } else {
                render_scene(&scene)
            }
        })
        .collect()
}

/// SplitMix64-style mixing of the per-frame identifiers.
pub fn image_seed(seed: u64, batch: u32, angle: i32, index: usize) -> u64 {
    let mut z = seed
        ^ (batch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((angle as i64 as u64).wrapping_add(1 << 20)).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ (index as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders `count_per_angle` frames per integer angle into `out_dir` and
/// returns their manifest, ordered by (angle, index).
pub fn generate_batch(spec: &BatchSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    if spec.angle_min > spec.angle_max || spec.angle_min < -90 || spec.angle_max > 90 {
        return Err(Error::InvalidScene(format!(
            "angle range {}..{}",
            spec.angle_min, spec.angle_max
        )));
    }
    if spec.count_per_angle == 0 || spec.backgrounds.is_empty() {
        return Err(Error::InvalidScene(
            "need at least one frame per angle and one background".into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let jobs: Vec<(i32, usize)> = (spec.angle_min..=spec.angle_max)
        .flat_map(|a| (0..spec.count_per_angle).map(move |i| (a, i)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(angle, index)| {
            let scene = spec.scene(angle, index);
            let (img, truth) = match spec.blur {
                Some(b) if spec.is_blurred() => render_motion_blur(&scene, &b)?,
                _ => render_scene(&scene)?,
            };
            let name = spec.file_name(angle, index);
            save_image(&img, out_dir.join(&name))?;
            Ok(ManifestEntry {
                path: name,
                angle_deg: truth,
                blur: spec.is_blurred(),
                batch: spec.batch,
                source: LabelSource::Synthetic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetManifest::new(out_dir, entries))
}
