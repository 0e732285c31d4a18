use super::config::PipelineConfig;
use crate::error::{Error, Result};

/// Tolerance under which two side lengths count as tied.
const LENGTH_TIE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

impl From<Vec<Point>> for Polygon {
    fn from(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }
}

/// Shoelace area, always non-negative.
pub fn polygon_area(p: &Polygon) -> Result<f64> {
    let v = p.vertices();
    if v.len() < 3 {
        return Err(Error::TooFewVertices {
            needed: 3,
            got: v.len(),
        });
    }
    Ok(signed_area(v).abs())
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

/// Simple four-vertex polygon in traversal order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    vertices: [Point; 4],
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

impl Quad {
    /// Rejects bow-tie (self-intersecting) vertex orders.
    pub fn new(vertices: [Point; 4]) -> Result<Self> {
        let [a, b, c, d] = vertices;
        if segments_cross(a, b, c, d) || segments_cross(b, c, d, a) {
            return Err(Error::DegenerateQuad("self-intersecting"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// Side `k` joins vertex `k` to vertex `k + 1`.
    pub fn side_lengths(&self) -> [f64; 4] {
        let v = &self.vertices;
        std::array::from_fn(|k| v[k].distance(v[(k + 1) % 4]))
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Quad {
        Quad {
            vertices: self.vertices.map(|p| Point::new(p.x + dx, p.y + dy)),
        }
    }
}

impl TryFrom<&Polygon> for Quad {
    type Error = Error;

    fn try_from(p: &Polygon) -> Result<Self> {
        let v: [Point; 4] = p.vertices().try_into().map_err(|_| Error::TooFewVertices {
            needed: 4,
            got: p.len(),
        })?;
        Quad::new(v)
    }
}

/// Picks the largest 4-vertex polygon whose area lies in the configured
/// fraction of the image area.
pub fn select_marker(polys: &[Polygon], img_area: f64, cfg: &PipelineConfig) -> Result<Quad> {
    let (lo, hi) = (cfg.min_area_frac * img_area, cfg.max_area_frac * img_area);
    let mut best: Option<Quad> = None;
    for poly in polys.iter().filter(|p| p.len() == 4) {
        let Ok(quad) = Quad::try_from(poly) else {
            continue;
        };
        let area = quad.area();
        if area < lo || area > hi {
            continue;
        }
        if best.is_none_or(|b| area > b.area()) {
            best = Some(quad);
        }
    }
    best.ok_or(Error::DetectionFailed)
}

/// Endpoints of the marker's center line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MidpointPair {
    pub p1: Point,
    pub p2: Point,
}

/// Midpoints of the two short sides of a rectangle-like quad.
///
/// The short sides must be opposite. When both opposite pairs qualify (a
/// square) sides 0 and 2 win.
pub fn short_side_midpoints(q: &Quad) -> Result<MidpointPair> {
    let len = q.side_lengths();
    if len.iter().any(|&l| l <= LENGTH_TIE) {
        return Err(Error::DegenerateQuad("zero-length side"));
    }
    let mut sorted = len;
    sorted.sort_by(f64::total_cmp);
    let second = sorted[1] + LENGTH_TIE;
    let pair = [(0usize, 2usize), (1, 3)]
        .into_iter()
        .find(|&(a, b)| len[a] <= second && len[b] <= second)
        .ok_or(Error::DegenerateQuad("shortest sides are adjacent"))?;
    let v = q.vertices();
    let mid = |k: usize| v[k].midpoint(v[(k + 1) % 4]);
    Ok(MidpointPair {
        p1: mid(pair.0),
        p2: mid(pair.1),
    })
}

/// Angle of the undirected line through the midpoints, in degrees within
/// `(-90, 90]`, counterclockwise-positive as seen on screen (image y grows
/// downward, so the vertical difference is negated).
pub fn estimate_angle(m: &MidpointPair) -> Result<f64> {
    let (p1, p2) = (m.p1, m.p2);
    if p1 == p2 {
        return Err(Error::CoincidentPoints);
    }
    let mut dx = p1.x - p2.x;
    let mut dy = -(p1.y - p2.y);
    if dx == 0.0 {
        return Ok(90.0);
    }
    // Orient the direction into the right half-plane; the line is undirected.
    if dx < 0.0 {
        dx = -dx;
        dy = -dy;
    }
    Ok(dy.atan2(dx).to_degrees() + 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    Baseline,
    Model,
}

/// One angle reading; baseline readings carry the quad they came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleEstimate {
    pub theta_deg: f64,
    pub method: EstimateMethod,
    pub quad: Option<Quad>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn quad(v: [(f64, f64); 4]) -> Quad {
        Quad::new(v.map(|(x, y)| p(x, y))).unwrap()
    }

    #[test]
    fn shoelace_areas() {
        let square = Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]);
        assert_eq!(polygon_area(&square).unwrap(), 1.0);
        let tri = Polygon::new(vec![p(0.0, 0.0), p(4.0, 0.0), p(0.0, 3.0)]);
        assert_eq!(polygon_area(&tri).unwrap(), 6.0);
        let rev = Polygon::new(tri.vertices().iter().rev().copied().collect());
        assert_eq!(polygon_area(&rev).unwrap(), 6.0);
        assert!(matches!(
            polygon_area(&Polygon::new(vec![p(0.0, 0.0), p(1.0, 1.0)])),
            Err(Error::TooFewVertices { .. })
        ));
    }

    #[test]
    fn bow_tie_is_rejected() {
        assert!(Quad::new([p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)]).is_err());
    }

    #[test]
    fn rectangle_short_sides() {
        let q = quad([(0.0, 0.0), (10.0, 0.0), (10.0, 4.0), (0.0, 4.0)]);
        let m = short_side_midpoints(&q).unwrap();
        assert_eq!(m.p1, p(10.0, 2.0));
        assert_eq!(m.p2, p(0.0, 2.0));
    }

    #[test]
    fn square_prefers_first_and_third_side() {
        let q = quad([(0.0, 0.0), (5.0, 0.0), (5.0, 5.0), (0.0, 5.0)]);
        let m = short_side_midpoints(&q).unwrap();
        assert_eq!(m.p1, p(2.5, 0.0));
        assert_eq!(m.p2, p(2.5, 5.0));
    }

    #[test]
    fn rotated_rectangle_midpoints_rotate() {
        let (cx, cy) = (5.0, 2.0);
        let t = 30f64.to_radians();
        let rot = |x: f64, y: f64| {
            let (dx, dy) = (x - cx, y - cy);
            p(cx + dx * t.cos() - dy * t.sin(), cy + dx * t.sin() + dy * t.cos())
        };
        let q = Quad::new([rot(0.0, 0.0), rot(10.0, 0.0), rot(10.0, 4.0), rot(0.0, 4.0)]).unwrap();
        let m = short_side_midpoints(&q).unwrap();
        let (e1, e2) = (rot(10.0, 2.0), rot(0.0, 2.0));
        assert!(m.p1.distance(e1) < 1e-12 && m.p2.distance(e2) < 1e-12);
    }

    #[test]
    fn adjacent_short_sides_are_degenerate() {
        // Kite: sides 1, 1, long, long.
        let q = quad([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (-8.0, 9.0)]);
        assert!(matches!(short_side_midpoints(&q), Err(Error::DegenerateQuad(_))));
    }

    #[test]
    fn angle_examples() {
        let m = |a: (f64, f64), b: (f64, f64)| MidpointPair { p1: p(a.0, a.1), p2: p(b.0, b.1) };
        assert_eq!(estimate_angle(&m((100.0, 50.0), (100.0, 150.0))).unwrap(), 90.0);
        assert_eq!(estimate_angle(&m((150.0, 100.0), (50.0, 100.0))).unwrap(), 0.0);
        assert!((estimate_angle(&m((110.0, 90.0), (90.0, 110.0))).unwrap() - 45.0).abs() < 1e-12);
        assert!((estimate_angle(&m((90.0, 90.0), (110.0, 110.0))).unwrap() + 45.0).abs() < 1e-12);
        assert!(matches!(
            estimate_angle(&m((1.0, 1.0), (1.0, 1.0))),
            Err(Error::CoincidentPoints)
        ));
        // Nearly vertical: leaning right stays just under 90, leaning left
        // (just past 90) wraps to just above -90.
        let a = estimate_angle(&m((101.0, 0.0), (100.0, 100.0))).unwrap();
        assert!(a > 89.0 && a < 90.0);
        let b = estimate_angle(&m((99.0, 0.0), (100.0, 100.0))).unwrap();
        assert!(b < -89.0 && b > -90.0);
    }

    #[test]
    fn select_prefers_largest_in_range() {
        let cfg = PipelineConfig::default();
        let sq = |s: f64, o: f64| {
            Polygon::new(vec![p(o, o), p(o + s, o), p(o + s, o + s), p(o, o + s)])
        };
        let tri = Polygon::new(vec![p(0.0, 0.0), p(50.0, 0.0), p(0.0, 50.0)]);
        let polys = vec![tri.clone(), sq(20.0, 0.0), sq(30.0, 100.0), sq(2.0, 5.0)];
        let q = select_marker(&polys, 200.0 * 200.0, &cfg).unwrap();
        assert_eq!(q.area(), 900.0);
        assert!(matches!(
            select_marker(&[], 40000.0, &cfg),
            Err(Error::DetectionFailed)
        ));
        assert!(matches!(
            select_marker(&[tri, sq(2.0, 0.0)], 40000.0, &cfg),
            Err(Error::DetectionFailed)
        ));
    }
}
