//! Pixel containers shared by every pipeline stage.
//!
//! All images are 8-bit, row-major and immutable once built. Arithmetic that
//! feeds back into 8-bit storage goes through [`quantize`], which rounds half
//! away from zero and clamps to `[0, 255]`.

mod filter;
mod io;

pub use filter::{
    convolve, convolve_plane, gaussian_blur_plane, gaussian_blur_rgb, gaussian_kernel, resize_area,
    Kernel,
};
pub use io::{load_image, save_image, Encodable};

use crate::error::{Error, Result};

/// Round half away from zero, then clamp into the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Rec.601 luma of one RGB triple, unrounded.
#[inline]
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

fn check_dims(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::CorruptData(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    if width > u16::MAX as usize || height > u16::MAX as usize {
        return Err(Error::UnsupportedFormat(format!(
            "dimensions {width}x{height} exceed 16-bit range"
        )));
    }
    if len != width * height * channels {
        return Err(Error::CorruptData(format!(
            "expected {} samples for {width}x{height}x{channels}, got {len}",
            width * height * channels
        )));
    }
    Ok(())
}

/// Color frame, interleaved `r, g, b` per pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 3)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, data }
    }

    /// Replicate a grayscale image into all three channels.
    pub fn from_gray(gray: &GrayImage) -> Self {
        let data = gray.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            width: gray.width,
            height: gray.height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// One channel as a 64-bit plane.
    pub fn channel_plane(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(3).map(|&v| v as f64).collect()
    }

    /// Rebuild an image from three 64-bit planes, quantizing each sample.
    pub fn from_planes(width: usize, height: usize, planes: [&[f64]; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for i in 0..width * height {
            for plane in planes {
                data.push(quantize(plane[i]));
            }
        }
        Self { width, height, data }
    }

    /// Rec.601 grayscale conversion.
    pub fn to_grayscale(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| quantize(luma(p[0] as f64, p[1] as f64, p[2] as f64)))
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Free-function form of [`RgbImage::to_grayscale`].
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    img.to_grayscale()
}

/// Single-channel 8-bit intensity image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Build from a closure over `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Quantize a 64-bit plane into an image.
    pub fn from_plane(width: usize, height: usize, plane: &[f64]) -> Self {
        Self {
            width,
            height,
            data: plane.iter().map(|&v| quantize(v)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn to_plane(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

/// Foreground/background mask; every sample is 0 or 255.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    pub const FOREGROUND: u8 = 255;

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        if let Some(v) = data.iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::CorruptData(format!("binary image holds value {v}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), width * height, "mask length");
        Self {
            width,
            height,
            data: mask.iter().map(|&m| if m { 255 } else { 0 }).collect(),
        }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }
}
