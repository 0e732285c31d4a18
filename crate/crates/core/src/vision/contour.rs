//! Suzuki–Abe border following over 8-connected foreground.

use crate::raster::BinaryImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelPoint {
    pub x: i32,
    pub y: i32,
}

impl PixelPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Whether a border separates a component from the background around it or
/// from a hole inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BorderKind {
    Outer,
    Hole,
}

/// Closed border in traversal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<PixelPoint>,
    pub kind: BorderKind,
}

impl Contour {
    /// Closed arc length through consecutive points.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                (((a.x - b.x).pow(2) + (a.y - b.y).pow(2)) as f64).sqrt()
            })
            .sum()
    }
}

/// Clockwise on screen (y down), starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(dx: i32, dy: i32) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("neighbor offset")
}

/// Labels on a zero-padded copy of the image so every border pixel has a
/// background frame around it.
struct LabelGrid {
    stride: usize,
    cells: Vec<i32>,
}

impl LabelGrid {
    fn new(img: &BinaryImage) -> Self {
        let stride = img.width() + 2;
        let mut cells = vec![0; stride * (img.height() + 2)];
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.is_set(x, y) {
                    cells[(y + 1) * stride + x + 1] = 1;
                }
            }
        }
        Self { stride, cells }
    }

    #[inline]
    fn idx(&self, x: i32, y: i32) -> usize {
        y as usize * self.stride + x as usize
    }

    #[inline]
    fn get(&self, x: i32, y: i32) -> i32 {
        self.cells[self.idx(x, y)]
    }

    #[inline]
    fn set(&mut self, x: i32, y: i32, v: i32) {
        let i = self.idx(x, y);
        self.cells[i] = v;
    }
}

/// Traces every outer and hole border of the foreground (255) pixels.
///
/// Borders come out in raster discovery order (top-to-bottom, then
/// left-to-right by start pixel). Coordinates are in the input image frame.
pub fn trace_contours(img: &BinaryImage) -> Vec<Contour> {
    let mut grid = LabelGrid::new(img);
    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut contours = Vec::new();
    let mut nbd = 1;

    for y in 1..=h {
        for x in 1..=w {
            let here = grid.get(x, y);
            if here == 0 {
                continue;
            }
            let start = if here == 1 && grid.get(x - 1, y) == 0 {
                Some(((x - 1, y), BorderKind::Outer))
            } else if here >= 1 && grid.get(x + 1, y) == 0 {
                Some(((x + 1, y), BorderKind::Hole))
            } else {
                None
            };
            if let Some((from, kind)) = start {
                nbd += 1;
                let points = follow_border(&mut grid, (x, y), from, nbd);
                contours.push(Contour {
                    points: points
                        .into_iter()
                        .map(|(px, py)| PixelPoint::new(px - 1, py - 1))
                        .collect(),
                    kind,
                });
            }
        }
    }
    contours
}

fn follow_border(grid: &mut LabelGrid, start: (i32, i32), from: (i32, i32), nbd: i32) -> Vec<(i32, i32)> {
    let (x0, y0) = start;
    // Clockwise search around the start pixel for the first nonzero neighbor.
    let d0 = dir_index(from.0 - x0, from.1 - y0);
    let first = (0..8).map(|k| (d0 + k) % 8).find_map(|d| {
        let (dx, dy) = DIRS[d];
        (grid.get(x0 + dx, y0 + dy) != 0).then_some((x0 + dx, y0 + dy))
    });
    let Some(p1) = first else {
        grid.set(x0, y0, -nbd);
        return vec![start];
    };

    let mut points = Vec::new();
    let mut prev = p1;
    let mut cur = start;
    loop {
        points.push(cur);
        // Counterclockwise search starting just after `prev`.
        let dp = dir_index(prev.0 - cur.0, prev.1 - cur.1);
        let mut east_zero_examined = false;
        let mut next = cur;
        for k in 1..=8 {
            let d = (dp + 8 - k) % 8;
            let (dx, dy) = DIRS[d];
            let cand = (cur.0 + dx, cur.1 + dy);
            if grid.get(cand.0, cand.1) != 0 {
                next = cand;
                break;
            }
            if d == 0 {
                east_zero_examined = true;
            }
        }
        if east_zero_examined {
            grid.set(cur.0, cur.1, -nbd);
        } else if grid.get(cur.0, cur.1) == 1 {
            grid.set(cur.0, cur.1, nbd);
        }
        if next == start && cur == p1 {
            break;
        }
        prev = cur;
        cur = next;
    }
    points
}
