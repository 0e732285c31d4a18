//! Lossless codecs: PNG (8-bit gray/RGB), binary PPM `P6` and PGM `P5`.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use super::{BinaryImage, GrayImage, RgbImage};
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

/// Decode a PNG/PPM/PGM file into RGB. Gray sources are expanded with r=g=b.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") {
        decode_pnm(bytes)
    } else {
        Err(Error::UnsupportedFormat("unrecognized magic bytes".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let corrupt = |e: png::DecodingError| Error::CorruptData(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptData("png too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let rows = buf.chunks(info.line_size).take(h);
    let stride = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded palette".into()))
        }
    };
    let mut data = Vec::with_capacity(w * h * 3);
    for row in rows {
        for px in row[..w * stride].chunks_exact(stride) {
            match stride {
                1 | 2 => data.extend_from_slice(&[px[0], px[0], px[0]]),
                _ => data.extend_from_slice(&px[..3]),
            }
        }
    }
    RgbImage::from_raw(w, h, data)
}

/// Splits the PNM header into its four tokens and returns the payload offset.
fn pnm_header(bytes: &[u8]) -> Result<([usize; 3], usize)> {
    let mut pos = 2;
    let mut values = [0usize; 3];
    for value in values.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::CorruptData("truncated pnm header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *value = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptData("bad pnm header field".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((values, pos + 1)),
        _ => Err(Error::CorruptData("truncated pnm header".into())),
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<RgbImage> {
    let channels = if bytes[1] == b'6' { 3 } else { 1 };
    let ([w, h, maxval], offset) = pnm_header(bytes)?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("pnm maxval {maxval}")));
    }
    let need = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::CorruptData("pnm dimensions overflow".into()))?;
    let payload = &bytes[offset..];
    if payload.len() < need {
        return Err(Error::CorruptData(format!(
            "pnm raster has {} of {need} bytes",
            payload.len()
        )));
    }
    let payload = &payload[..need];
    if channels == 3 {
        RgbImage::from_raw(w, h, payload.to_vec())
    } else {
        Ok(RgbImage::from_gray(&GrayImage::from_raw(w, h, payload.to_vec())?))
    }
}

/// Images that can be written by [`save_image`].
pub trait Encodable {
    fn dims(&self) -> (usize, usize);
    fn channels(&self) -> usize;
    fn samples(&self) -> &[u8];
}

impl Encodable for RgbImage {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn channels(&self) -> usize {
        3
    }
    fn samples(&self) -> &[u8] {
        self.data()
    }
}

impl Encodable for GrayImage {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn channels(&self) -> usize {
        1
    }
    fn samples(&self) -> &[u8] {
        self.data()
    }
}

impl Encodable for BinaryImage {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
    fn channels(&self) -> usize {
        1
    }
    fn samples(&self) -> &[u8] {
        self.data()
    }
}

/// Write an image; the format follows the extension (`png`, `ppm`, `pgm`).
pub fn save_image<I: Encodable + ?Sized>(img: &I, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let bytes = match ext.as_str() {
        "png" => encode_png(img)?,
        "ppm" => encode_pnm(img, 3),
        "pgm" if img.channels() == 1 => encode_pnm(img, 1),
        "pgm" => {
            return Err(Error::UnsupportedFormat(
                "color image cannot be written as pgm".into(),
            ))
        }
        other => return Err(Error::UnsupportedFormat(format!("extension '{other}'"))),
    };
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub(crate) fn encode_png<I: Encodable + ?Sized>(img: &I) -> Result<Vec<u8>> {
    let (w, h) = img.dims();
    let mut bytes = Vec::new();
    let mut enc = png::Encoder::new(&mut bytes, w as u32, h as u32);
    enc.set_color(if img.channels() == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    enc.set_depth(png::BitDepth::Eight);
    enc.set_compression(png::Compression::Fast);
    let encode_err = |e: png::EncodingError| Error::Io(std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(encode_err)?;
    writer.write_image_data(img.samples()).map_err(encode_err)?;
    writer.finish().map_err(encode_err)?;
    Ok(bytes)
}

fn encode_pnm<I: Encodable + ?Sized>(img: &I, channels: usize) -> Vec<u8> {
    let (w, h) = img.dims();
    let magic = if channels == 3 { "P6" } else { "P5" };
    let mut bytes = format!("{magic} {w} {h} 255\n").into_bytes();
    if channels == img.channels() {
        bytes.extend_from_slice(img.samples());
    } else {
        bytes.extend(img.samples().iter().flat_map(|&v| [v, v, v]));
    }
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_two_pixel_ppm() {
        let mut bytes = b"P6 2 1 255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let img = decode(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.pixel(0, 0), [255, 0, 0]);
        assert_eq!(img.pixel(1, 0), [0, 0, 255]);
    }

    #[test]
    fn pnm_header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n1 1\n255\n".to_vec();
        bytes.push(9);
        assert_eq!(decode(&bytes).unwrap().pixel(0, 0), [9, 9, 9]);
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let mut bytes = b"P6 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        assert!(matches!(decode(&bytes), Err(Error::CorruptData(_))));
        assert!(matches!(decode(b"P6 2"), Err(Error::CorruptData(_))));
    }

    #[test]
    fn truncated_png_is_corrupt() {
        let png = encode_png(&GrayImage::filled(8, 8, 3)).unwrap();
        let cut = &png[..png.len() - 20];
        assert!(matches!(decode(cut), Err(Error::CorruptData(_))));
    }

    #[test]
    fn unknown_magic_is_unsupported() {
        assert!(matches!(decode(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(decode(b"P3 1 1 255\n0 0 0"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn sixteen_bit_pnm_is_unsupported() {
        assert!(matches!(
            decode(b"P5 1 1 65535\n\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn gray_pgm_encoding_is_exact() {
        let bytes = encode_pnm(&GrayImage::filled(1, 1, 128), 1);
        assert_eq!(bytes, b"P5 1 1 255\n\x80");
    }

    #[test]
    fn missing_file_reported() {
        assert!(matches!(
            load_image("/nonexistent/definitely/not/here.png"),
            Err(Error::FileNotFound(_))
        ));
    }
}
