//! Deterministic renderer of marker scenes with exact ground-truth angles.
//!
//! Geometry: an arm rotates about `pivot`; the dark marker rectangle sits on
//! the arm from `arm_offset` to `arm_offset + marker_len` along it and is
//! `marker_wid` across. Angles are counterclockwise-positive as seen on
//! screen, 0 pointing right.

mod batch;

pub use batch::{auxiliary_set, generate_batch, image_seed, standard_backgrounds, auxiliary_background, BatchSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{quantize, RgbImage};

/// Minimum gap between the marker and the darkest background level.
pub const MIN_CONTRAST: i32 = 50;
/// Supersampling grid per axis for edge anti-aliasing.
const SUPERSAMPLE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Background {
    Flat(u8),
    /// Horizontal ramp from `a` at the left edge to `b` at the right edge.
    Gradient { a: u8, b: u8 },
    /// Uniform per-pixel noise in `level ± spread`.
    Noise { level: u8, spread: u8, seed: u64 },
    Checker { cell: usize, lo: u8, hi: u8 },
}

impl Background {
    pub fn min_level(&self) -> i32 {
        match *self {
            Background::Flat(l) => l as i32,
            Background::Gradient { a, b } => a.min(b) as i32,
            Background::Noise { level, spread, .. } => level as i32 - spread as i32,
            Background::Checker { lo, hi, .. } => lo.min(hi) as i32,
        }
    }

    /// Same family with a different noise seed; other families are unchanged.
    pub fn reseeded(&self, seed: u64) -> Background {
        match *self {
            Background::Noise { level, spread, .. } => Background::Noise { level, spread, seed },
            other => other,
        }
    }

    fn plane(&self, size: usize) -> Vec<f64> {
        match *self {
            Background::Flat(l) => vec![l as f64; size * size],
            Background::Gradient { a, b } => {
                let span = (size.max(2) - 1) as f64;
                let row: Vec<f64> = (0..size)
                    .map(|x| a as f64 + (b as f64 - a as f64) * x as f64 / span)
                    .collect();
                row.iter().copied().cycle().take(size * size).collect()
            }
            Background::Noise { level, spread, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = spread as i32;
                (0..size * size)
                    .map(|_| (level as i32 + rng.random_range(-s..=s)).clamp(0, 255) as f64)
                    .collect()
            }
            Background::Checker { cell, lo, hi } => {
                let cell = cell.max(1);
                let mut out = Vec::with_capacity(size * size);
                for y in 0..size {
                    for x in 0..size {
                        let odd = (x / cell + y / cell) % 2 == 1;
                        out.push(if odd { hi } else { lo } as f64);
                    }
                }
                out
            }
        }
    }
}

/// One scene to render.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneSpec {
    pub img_size: usize,
    pub pivot: (f64, f64),
    pub arm_offset: f64,
    pub marker_len: f64,
    pub marker_wid: f64,
    pub theta_deg: f64,
    pub marker_gray: u8,
    pub background: Background,
    /// Standard deviation of additive gray pixel noise.
    pub noise_sigma: f64,
    /// Seeds the pixel noise.
    pub seed: u64,
}

impl SceneSpec {
    /// Default layout scaled to a square frame of `size` pixels.
    pub fn with_size(size: usize) -> Self {
        let s = size as f64;
        Self {
            img_size: size,
            pivot: (0.35 * s, 0.5 * s),
            arm_offset: 0.07 * s,
            marker_len: 0.32 * s,
            marker_wid: 0.05 * s,
            theta_deg: 0.0,
            marker_gray: 30,
            background: Background::Flat(200),
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn at_angle(mut self, theta_deg: f64) -> Self {
        self.theta_deg = theta_deg;
        self
    }

    /// Marker corners in pixel coordinates at angle `theta_deg`.
    pub fn marker_corners(&self, theta_deg: f64) -> [(f64, f64); 4] {
        let (s, c) = theta_deg.to_radians().sin_cos();
        let (px, py) = self.pivot;
        let (u0, u1) = (self.arm_offset, self.arm_offset + self.marker_len);
        let h = self.marker_wid / 2.0;
        // Local (u, v) to image: u along (cos, -sin), v along (sin, cos).
        let map = |u: f64, v: f64| (px + u * c + v * s, py - u * s + v * c);
        [map(u0, -h), map(u1, -h), map(u1, h), map(u0, h)]
    }

    fn marker_inside(&self, theta_deg: f64) -> bool {
        let size = self.img_size as f64;
        self.marker_corners(theta_deg)
            .iter()
            .all(|&(x, y)| x >= 0.0 && y >= 0.0 && x <= size && y <= size)
    }

    /// Checks every invariant except the angle range, which depends on use.
    fn validate_geometry(&self) -> Result<()> {
        if self.img_size == 0 || self.img_size > u16::MAX as usize {
            return Err(Error::InvalidScene(format!("img_size {}", self.img_size)));
        }
        let dims = [self.arm_offset, self.marker_len, self.marker_wid];
        if dims.iter().any(|v| !v.is_finite() || *v < 0.0) || self.marker_len <= 0.0 || self.marker_wid <= 0.0 {
            return Err(Error::InvalidScene("marker dimensions must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidScene(format!("noise_sigma {}", self.noise_sigma)));
        }
        if (self.marker_gray as i32) >= self.background.min_level() - MIN_CONTRAST {
            return Err(Error::InvalidScene(format!(
                "marker gray {} too close to background minimum {}",
                self.marker_gray,
                self.background.min_level()
            )));
        }
        if self.marker_len > self.img_size as f64 || self.marker_wid > self.img_size as f64 {
            return Err(Error::MarkerOutOfBounds {
                angle_deg: self.theta_deg,
                size: self.img_size,
            });
        }
        for deg in -90..=90 {
            if !self.marker_inside(deg as f64) {
                return Err(Error::MarkerOutOfBounds {
                    angle_deg: deg as f64,
                    size: self.img_size,
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.theta_deg) {
            return Err(Error::InvalidScene(format!(
                "theta {} outside [-90, 90]",
                self.theta_deg
            )));
        }
        self.validate_geometry()
    }
}

/// Exposure model for a moving arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlurSpec {
    /// Angular travel during the exposure, centered on the scene angle.
    pub sweep_deg: f64,
    /// Number of sharp sub-exposures averaged.
    pub k_sub: usize,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self {
            sweep_deg: 20.0,
            k_sub: 16,
        }
    }
}

impl BlurSpec {
    /// Sub-exposure angles evenly spaced across the sweep.
    pub fn angles(&self, center: f64) -> Vec<f64> {
        if self.k_sub == 1 || self.sweep_deg == 0.0 {
            return vec![center; self.k_sub.max(1)];
        }
        let start = center - self.sweep_deg / 2.0;
        let step = self.sweep_deg / (self.k_sub - 1) as f64;
        (0..self.k_sub).map(|i| start + step * i as f64).collect()
    }
}

/// Coverage of one pixel by the marker, in sixteenths.
fn coverage(spec: &SceneSpec, cos: f64, sin: f64, x: usize, y: usize) -> u32 {
    let (px, py) = spec.pivot;
    let (u0, u1) = (spec.arm_offset, spec.arm_offset + spec.marker_len);
    let h = spec.marker_wid / 2.0;
    let inside = |sx: f64, sy: f64| {
        let (dx, dy) = (sx - px, sy - py);
        let u = dx * cos - dy * sin;
        let v = dx * sin + dy * cos;
        u >= u0 && u <= u1 && v.abs() <= h
    };
    // Pixels far from every edge are uniformly in or out.
    let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
    let (dx, dy) = (cx - px, cy - py);
    let u = dx * cos - dy * sin;
    let v = dx * sin + dy * cos;
    let margin = std::f64::consts::FRAC_1_SQRT_2 + 1e-9;
    let edge_dist = (u - u0).abs().min((u1 - u).abs()).min((h - v.abs()).abs());
    if edge_dist > margin {
        return if inside(cx, cy) { (SUPERSAMPLE * SUPERSAMPLE) as u32 } else { 0 };
    }
    let mut hits = 0;
    for j in 0..SUPERSAMPLE {
        for i in 0..SUPERSAMPLE {
            let sx = x as f64 + (i as f64 + 0.5) / SUPERSAMPLE as f64;
            let sy = y as f64 + (j as f64 + 0.5) / SUPERSAMPLE as f64;
            if inside(sx, sy) {
                hits += 1;
            }
        }
    }
    hits
}

/// Renders at an arbitrary angle; callers validate.
fn render_unchecked(spec: &SceneSpec, theta_deg: f64, background: &[f64]) -> RgbImage {
    let n = spec.img_size;
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    let mut plane = background.to_vec();

    let corners = spec.marker_corners(theta_deg);
    let lo = |f: fn(&(f64, f64)) -> f64| corners.iter().map(f).fold(f64::MAX, f64::min);
    let hi = |f: fn(&(f64, f64)) -> f64| corners.iter().map(f).fold(f64::MIN, f64::max);
    let x0 = (lo(|c| c.0).floor().max(0.0)) as usize;
    let y0 = (lo(|c| c.1).floor().max(0.0)) as usize;
    let x1 = (hi(|c| c.0).ceil() as usize).min(n);
    let y1 = (hi(|c| c.1).ceil() as usize).min(n);
    let full = (SUPERSAMPLE * SUPERSAMPLE) as f64;
    let ink = spec.marker_gray as f64;
    for y in y0..y1 {
        for x in x0..x1 {
            let c = coverage(spec, cos, sin, x, y) as f64 / full;
            if c > 0.0 {
                let i = y * n + x;
                plane[i] = plane[i] * (1.0 - c) + ink * c;
            }
        }
    }
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        for v in plane.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let data = plane.iter().flat_map(|&v| [quantize(v); 3]).collect();
    RgbImage::from_raw(n, n, data).expect("square frame")
}

/// Sharp render; the returned truth is `theta_deg` verbatim.
pub fn render_scene(spec: &SceneSpec) -> Result<(RgbImage, f64)> {
    spec.validate()?;
    let bg = spec.background.plane(spec.img_size);
    Ok((render_unchecked(spec, spec.theta_deg, &bg), spec.theta_deg))
}

/// Multi-exposure motion blur: per-channel mean of `k_sub` sharp renders
/// spread over the sweep. Truth is the sweep's center angle.
pub fn render_motion_blur(spec: &SceneSpec, blur: &BlurSpec) -> Result<(RgbImage, f64)> {
    spec.validate()?;
    if blur.k_sub == 0 {
        return Err(Error::InvalidScene("k_sub must be at least 1".into()));
    }
    if !(blur.sweep_deg >= 0.0 && blur.sweep_deg.is_finite()) {
        return Err(Error::InvalidScene(format!("sweep {}", blur.sweep_deg)));
    }
    let angles = blur.angles(spec.theta_deg);
    for &a in &angles {
        if !spec.marker_inside(a) {
            return Err(Error::MarkerOutOfBounds {
                angle_deg: a,
                size: spec.img_size,
            });
        }
    }
    let bg = spec.background.plane(spec.img_size);
    let n = spec.img_size * spec.img_size * 3;
    let mut acc = vec![0.0f64; n];
    for &a in &angles {
        let frame = render_unchecked(spec, a, &bg);
        for (s, &v) in acc.iter_mut().zip(frame.data()) {
            *s += v as f64;
        }
    }
    let k = angles.len() as f64;
    let data = acc.iter().map(|&s| quantize(s / k)).collect();
    let img = RgbImage::from_raw(spec.img_size, spec.img_size, data)?;
    Ok((img, spec.theta_deg))
}
