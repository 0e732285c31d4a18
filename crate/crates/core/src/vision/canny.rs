use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{gaussian_blur_plane, BinaryImage, GrayImage};

/// Pre-smoothing applied before the Sobel stage.
pub const CANNY_SIGMA: f64 = 1.0;

/// Canny edge detector: Gaussian smoothing, Sobel gradients, 4-bin
/// non-maximum suppression and 8-connected double-threshold hysteresis.
pub fn canny(img: &GrayImage, low: f64, high: f64) -> Result<BinaryImage> {
    if !(low > 0.0 && low < high) {
        return Err(Error::InvalidThresholds { low, high });
    }
    let (w, h) = (img.width(), img.height());
    let smooth = gaussian_blur_plane(&img.to_plane(), w, h, CANNY_SIGMA)?;
    let (mag, bins) = sobel(&smooth, w, h);
    let thin = suppress_non_maxima(&mag, &bins, w, h);
    Ok(hysteresis(&thin, w, h, low, high))
}

/// Sobel magnitude plus gradient direction quantized to 0/45/90/135 degrees.
pub(crate) fn sobel(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<u8>) {
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        plane[yc * w + xc]
    };
    let mut mag = vec![0.0; w * h];
    let mut bins = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            // Direction folded into [0, 180).
            let mut deg = gy.atan2(gx).to_degrees();
            if deg < 0.0 {
                deg += 180.0;
            }
            bins[i] = if !(22.5..157.5).contains(&deg) {
                0
            } else if deg < 67.5 {
                1
            } else if deg < 112.5 {
                2
            } else {
                3
            };
        }
    }
    (mag, bins)
}

/// Neighbor offsets along the gradient, "previous" side first.
const ALONG: [[(isize, isize); 2]; 4] = [
    [(-1, 0), (1, 0)],
    [(-1, -1), (1, 1)],
    [(0, -1), (0, 1)],
    [(1, -1), (-1, 1)],
];

/// Keeps a pixel when it strictly beats the previous neighbor and is not
/// below the next one, so a two-pixel plateau thins to its first pixel.
fn suppress_non_maxima(mag: &[f64], bins: &[u8], w: usize, h: usize) -> Vec<f64> {
    let get = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 {
                continue;
            }
            let [(px, py), (nx, ny)] = ALONG[bins[i] as usize];
            let prev = get(x as isize + px, y as isize + py);
            let next = get(x as isize + nx, y as isize + ny);
            if m > prev && m >= next {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(mag: &[f64], w: usize, h: usize, low: f64, high: f64) -> BinaryImage {
    let mut edge = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in mag.iter().enumerate() {
        if m >= high {
            edge[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edge[j] && mag[j] >= low {
                    edge[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    BinaryImage::from_mask(w, h, &edge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let img = GrayImage::filled(20, 15, 90);
        assert_eq!(canny(&img, 10.0, 30.0).unwrap().count(), 0);
    }

    #[test]
    fn inverted_thresholds_rejected() {
        let img = GrayImage::filled(4, 4, 0);
        assert!(matches!(
            canny(&img, 100.0, 50.0),
            Err(Error::InvalidThresholds { .. })
        ));
        assert!(canny(&img, 0.0, 50.0).is_err());
        assert!(canny(&img, 50.0, 50.0).is_err());
    }

    /// Oracle: smooth, then direct Sobel on each row, first column of max |gx|.
    fn max_gradient_column(img: &GrayImage) -> usize {
        let (w, h) = (img.width(), img.height());
        let s = gaussian_blur_plane(&img.to_plane(), w, h, CANNY_SIGMA).unwrap();
        let y = h / 2;
        let px = |x: usize, y: usize| s[y * w + x];
        let mut best = (0, f64::MIN);
        for x in 1..w - 1 {
            let gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            if gx.abs() > best.1 {
                best = (x, gx.abs());
            }
        }
        best.0
    }

    #[test]
    fn step_edge_gives_one_vertical_line() {
        let img = GrayImage::from_fn(32, 32, |x, _| if x < 16 { 0 } else { 255 });
        let edges = canny(&img, 50.0, 150.0).unwrap();
        let col = max_gradient_column(&img);
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(edges.is_set(x, y), x == col, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn weak_edges_survive_only_when_linked() {
        // One strong pixel chained to weak ones, plus an isolated weak pixel.
        let w = 6;
        let mut mag = vec![0.0; w * 3];
        mag[w + 1] = 200.0;
        mag[w + 2] = 60.0;
        mag[w + 3] = 60.0;
        mag[5] = 60.0;
        let out = hysteresis(&mag, w, 3, 50.0, 150.0);
        assert!(out.is_set(1, 1) && out.is_set(2, 1) && out.is_set(3, 1));
        // (5,0) is not 8-adjacent to the chain end at (3,1).
        assert!(!out.is_set(5, 0));
        mag[4] = 60.0;
        let out = hysteresis(&mag, w, 3, 50.0, 150.0);
        assert!(out.is_set(4, 0) && out.is_set(5, 0));
    }
}
