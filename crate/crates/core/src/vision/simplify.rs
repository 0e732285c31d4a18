//! Ramer–Douglas–Peucker simplification.
//!
//! Distances are measured to the anchor chord as a segment, so every dropped
//! point is within `epsilon` of the simplified chain even when it projects
//! past the chord's ends.

use super::contour::Contour;
use super::geometry::{Point, Polygon};
use crate::error::{Error, Result};

/// Largest contour for which the closed-curve split uses the exact diameter.
const EXACT_DIAMETER_LIMIT: usize = 4096;

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (p.x - a.x).hypot(p.y - a.y);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    (p.x - (a.x + t * dx)).hypot(p.y - (a.y + t * dy))
}

fn check(points: &[Point], epsilon: f64) -> Result<()> {
    if epsilon < 0.0 || epsilon.is_nan() {
        return Err(Error::NegativeEpsilon(epsilon));
    }
    if points.len() < 2 {
        return Err(Error::TooFewVertices {
            needed: 2,
            got: points.len(),
        });
    }
    Ok(())
}

/// Simplify an open polyline; both endpoints are always kept.
pub fn simplify_open(points: &[Point], epsilon: f64) -> Result<Vec<Point>> {
    check(points, epsilon)?;
    let keep = rdp_mask(points, epsilon);
    Ok(points
        .iter()
        .zip(&keep)
        .filter_map(|(&p, &k)| k.then_some(p))
        .collect())
}

/// Iterative RDP over `points[0..n]`, marking the kept indices.
fn rdp_mask(points: &[Point], epsilon: f64) -> Vec<bool> {
    let n = points.len();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0, n - 1)];
    while let Some((first, last)) = stack.pop() {
        if last <= first + 1 {
            continue;
        }
        let (a, b) = (points[first], points[last]);
        let mut best = (first, -1.0);
        for (i, &p) in points.iter().enumerate().take(last).skip(first + 1) {
            let d = point_segment_distance(p, a, b);
            if d > best.1 {
                best = (i, d);
            }
        }
        if best.1 > epsilon {
            keep[best.0] = true;
            stack.push((best.0, last));
            stack.push((first, best.0));
        }
    }
    keep
}

/// Indices of the two mutually farthest points, `i < j`.
fn split_pair(points: &[Point]) -> (usize, usize) {
    let dist2 = |a: Point, b: Point| (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
    let n = points.len();
    if n <= EXACT_DIAMETER_LIMIT {
        let mut best = (0, 0, -1.0);
        for i in 0..n {
            for j in i + 1..n {
                let d = dist2(points[i], points[j]);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        (best.0, best.1)
    } else {
        // Two farthest-point sweeps approximate the diameter on huge borders.
        let far = |from: usize| {
            (0..n)
                .max_by(|&a, &b| {
                    dist2(points[from], points[a]).total_cmp(&dist2(points[from], points[b]))
                })
                .unwrap_or(0)
        };
        let a = far(0);
        let b = far(a);
        (a.min(b), a.max(b))
    }
}

/// Simplify a closed curve (no repeated closing point). The curve is split at
/// its two mutually farthest points and each half is simplified as an open
/// chain.
pub fn simplify_closed(points: &[Point], epsilon: f64) -> Result<Polygon> {
    check(points, epsilon)?;
    let n = points.len();
    let (i, j) = split_pair(points);
    if i == j {
        return Ok(Polygon::new(vec![points[0]]));
    }
    let first: Vec<Point> = points[i..=j].to_vec();
    let second: Vec<Point> = points[j..].iter().chain(&points[..=i]).copied().collect();
    let mut out = simplify_open(&first, epsilon)?;
    out.pop();
    let mut rest = simplify_open(&second, epsilon)?;
    rest.pop();
    out.extend(rest);
    debug_assert!(out.len() <= n);
    out.dedup();
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    Ok(Polygon::new(out))
}

/// Simplify a traced border as a closed curve.
pub fn simplify_contour(c: &Contour, epsilon: f64) -> Result<Polygon> {
    let pts: Vec<Point> = c
        .points
        .iter()
        .map(|p| Point::new(p.x as f64, p.y as f64))
        .collect();
    simplify_closed(&pts, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn shallow_bump_collapses() {
        let line = pts(&[(0.0, 0.0), (5.0, 0.4), (10.0, 0.0)]);
        assert_eq!(simplify_open(&line, 0.5).unwrap(), pts(&[(0.0, 0.0), (10.0, 0.0)]));
        assert_eq!(simplify_open(&line, 0.3).unwrap(), line);
    }

    #[test]
    fn negative_epsilon_rejected() {
        let line = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(simplify_open(&line, -0.1), Err(Error::NegativeEpsilon(_))));
        assert!(simplify_open(&line[..1], 1.0).is_err());
    }

    #[test]
    fn zero_epsilon_keeps_only_off_chord_points() {
        let line = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0)]);
        assert_eq!(
            simplify_open(&line, 0.0).unwrap(),
            pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0)])
        );
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let (a, b) = (Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        assert_eq!(point_segment_distance(Point::new(5.0, 3.0), a, b), 3.0);
        assert_eq!(point_segment_distance(Point::new(13.0, 4.0), a, b), 5.0);
        assert_eq!(point_segment_distance(Point::new(3.0, 4.0), a, a), 5.0);
    }

    /// Square border of side `side` walked pixel by pixel, with a
    /// deterministic jitter of at most 1 px.
    fn jittered_square(side: i32) -> (Vec<Point>, [Point; 4]) {
        let mut raw = Vec::new();
        for x in 0..side {
            raw.push((x, 0));
        }
        for y in 0..side {
            raw.push((side, y));
        }
        for x in (1..=side).rev() {
            raw.push((x, side));
        }
        for y in (1..=side).rev() {
            raw.push((0, y));
        }
        let mut s = 7u64;
        let mut jitter = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let v: Vec<Point> = raw
            .into_iter()
            .map(|(x, y)| Point::new(x as f64 + 0.7 * jitter(), y as f64 + 0.7 * jitter()))
            .collect();
        let s = side as f64;
        (v, [Point::new(0.0, 0.0), Point::new(s, 0.0), Point::new(s, s), Point::new(0.0, s)])
    }

    #[test]
    fn jittered_square_reduces_to_corners() {
        let (points, corners) = jittered_square(50);
        let perimeter: f64 = (0..points.len())
            .map(|i| {
                let (a, b) = (points[i], points[(i + 1) % points.len()]);
                (a.x - b.x).hypot(a.y - b.y)
            })
            .sum();
        let eps = 0.02 * perimeter;
        let poly = simplify_closed(&points, eps).unwrap();
        assert_eq!(poly.vertices().len(), 4, "{:?}", poly);
        for c in corners {
            let near = poly
                .vertices()
                .iter()
                .map(|v| (v.x - c.x).hypot(v.y - c.y))
                .fold(f64::MAX, f64::min);
            assert!(near <= 2.0, "corner {c:?} off by {near}");
        }
        // Exhaustive closeness check of every input point to the result.
        let v = poly.vertices();
        for p in &points {
            let d = (0..v.len())
                .map(|i| point_segment_distance(*p, v[i], v[(i + 1) % v.len()]))
                .fold(f64::MAX, f64::min);
            assert!(d <= eps + 1e-9);
        }
    }

    #[test]
    fn closed_split_uses_diameter() {
        let tri = pts(&[(0.0, 0.0), (10.0, 0.0), (0.0, 1.0)]);
        assert_eq!(split_pair(&tri), (1, 2));
    }
}
