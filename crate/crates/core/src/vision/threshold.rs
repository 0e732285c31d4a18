use crate::raster::{BinaryImage, GrayImage};

/// Global threshold. With `invert` (the default for a dark marker) pixels at
/// or below `t` become foreground; otherwise pixels above `t` do.
pub fn binary_threshold(img: &GrayImage, t: u8, invert: bool) -> BinaryImage {
    let mask: Vec<bool> = img
        .data()
        .iter()
        .map(|&v| if invert { v <= t } else { v > t })
        .collect();
    BinaryImage::from_mask(img.width(), img.height(), &mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dark_pixels_become_foreground() {
        let img = GrayImage::from_raw(3, 1, vec![100, 200, 128]).unwrap();
        let inv = binary_threshold(&img, 128, true);
        assert_eq!(inv.data(), &[255, 0, 255]);
        let direct = binary_threshold(&img, 128, false);
        assert_eq!(direct.data(), &[0, 255, 0]);
    }

    #[test]
    fn white_image_has_no_foreground() {
        let img = GrayImage::filled(6, 4, 255);
        for t in [0u8, 100, 254] {
            assert_eq!(binary_threshold(&img, t, true).count(), 0);
        }
    }
}
