use markerlens::eval::summarize;
use markerlens::raster::{
    convolve, gaussian_kernel, load_image, save_image, GrayImage, Kernel, RgbImage,
};
use markerlens::vision::{
    estimate_angle, point_segment_distance, polygon_area, short_side_midpoints, simplify_open,
    MidpointPair, Point, Polygon, Quad,
};
use markerlens::dataset::{denormalize_label, normalize_label};
use proptest::prelude::*;

fn rgb_image(max_side: usize) -> impl Strategy<Value = RgbImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h * 3)
            .prop_map(move |data| RgbImage::from_raw(w, h, data).unwrap())
    })
}

fn gray_image(min_side: usize, max_side: usize, lo: u8, hi: u8) -> impl Strategy<Value = GrayImage> {
    (min_side..=max_side, min_side..=max_side).prop_flat_map(move |(w, h)| {
        prop::collection::vec(lo..=hi, w * h)
            .prop_map(move |data| GrayImage::from_raw(w, h, data).unwrap())
    })
}

fn point() -> impl Strategy<Value = Point> {
    (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn lift(g: &GrayImage) -> RgbImage {
    RgbImage::from_gray(g)
}

/// Corners of a rectangle with distinct side lengths.
fn rectangle() -> impl Strategy<Value = [Point; 4]> {
    (point(), 5.0..80.0f64, 1.2..6.0f64, -180.0..180.0f64).prop_map(|(c, w, aspect, deg)| {
        let (s, co) = deg.to_radians().sin_cos();
        let (hl, hw) = (w * aspect / 2.0, w / 2.0);
        [(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)]
            .map(|(u, v)| Point::new(c.x + u * co - v * s, c.y + u * s + v * co))
    })
}

fn unordered(m: MidpointPair) -> [(f64, f64); 2] {
    let mut pts = [(m.p1.x, m.p1.y), (m.p2.x, m.p2.y)];
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn image_files_round_trip(img in rgb_image(12), gray in gray_image(1, 12, 0, 255)) {
        let dir = tempfile::tempdir().unwrap();
        for ext in ["png", "ppm"] {
            let p = dir.path().join(format!("x.{ext}"));
            save_image(&img, &p).unwrap();
            prop_assert_eq!(&load_image(&p).unwrap(), &img);
        }
        for ext in ["png", "pgm"] {
            let p = dir.path().join(format!("g.{ext}"));
            save_image(&gray, &p).unwrap();
            prop_assert_eq!(&load_image(&p).unwrap(), &lift(&gray));
        }
    }

    #[test]
    fn grayscale_is_idempotent(img in rgb_image(10)) {
        let g = img.to_grayscale();
        prop_assert_eq!(lift(&g).to_grayscale(), g);
    }

    #[test]
    fn normalized_kernels_keep_constants(v in any::<u8>(), sigma in 0.3..4.0f64, r in 1usize..4, side in 9usize..16) {
        let img = GrayImage::filled(side, side, v);
        let out = convolve(&img, &gaussian_kernel(sigma, r).unwrap()).unwrap();
        prop_assert_eq!(out, img.clone());
        prop_assert_eq!(convolve(&img, &Kernel::boxed(r)).unwrap(), img);
    }

    #[test]
    fn convolution_is_linear_up_to_rounding(
        pair in (8usize..14, 8usize..14).prop_flat_map(|(w, h)| (
            prop::collection::vec(0u8..=127, w * h),
            prop::collection::vec(0u8..=127, w * h),
            Just((w, h)),
        )),
        sigma in 0.5..3.0f64,
    ) {
        let (a, b, (w, h)) = pair;
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let k = gaussian_kernel(sigma, 3).unwrap();
        let conv = |d: Vec<u8>| convolve(&GrayImage::from_raw(w, h, d).unwrap(), &k).unwrap();
        let (ca, cb, cs) = (conv(a), conv(b), conv(sum));
        for i in 0..w * h {
            let diff = cs.data()[i] as i32 - ca.data()[i] as i32 - cb.data()[i] as i32;
            prop_assert!(diff.abs() <= 1, "pixel {} off by {}", i, diff);
        }
    }

    #[test]
    fn angle_is_in_range_and_undirected(p1 in point(), p2 in point()) {
        prop_assume!(p1 != p2);
        let a = estimate_angle(&MidpointPair { p1, p2 }).unwrap();
        let b = estimate_angle(&MidpointPair { p1: p2, p2: p1 }).unwrap();
        prop_assert!(a > -90.0 && a <= 90.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn midpoints_ignore_vertex_rotation(v in rectangle(), k in 1usize..4) {
        let base = unordered(short_side_midpoints(&Quad::new(v).unwrap()).unwrap());
        let mut r = v;
        r.rotate_left(k);
        let rotated = unordered(short_side_midpoints(&Quad::new(r).unwrap()).unwrap());
        for (a, b) in base.iter().zip(&rotated) {
            prop_assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn simplification_keeps_every_point_within_epsilon(
        pts in prop::collection::vec(point(), 2..40),
        eps in 0.0..200.0f64,
    ) {
        let out = simplify_open(&pts, eps).unwrap();
        prop_assert_eq!(out.first(), pts.first());
        prop_assert_eq!(out.last(), pts.last());
        for p in &pts {
            let d = out
                .windows(2)
                .map(|s| point_segment_distance(*p, s[0], s[1]))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(d <= eps + 1e-9, "point {:?} at {} > {}", p, d, eps);
        }
    }

    #[test]
    fn area_translates_and_scales(v in prop::collection::vec(point(), 3..10), t in point(), s in 0.1..10.0f64) {
        let a = polygon_area(&Polygon::new(v.clone())).unwrap();
        let moved = Polygon::new(v.iter().map(|p| Point::new(p.x + t.x, p.y + t.y)).collect());
        let scaled = Polygon::new(v.iter().map(|p| Point::new(p.x * s, p.y * s)).collect());
        // Shoelace cancellation scales with the squared coordinate magnitude.
        let span = v.iter().chain([&t]).map(|p| p.x.abs().max(p.y.abs())).fold(1.0, f64::max);
        let tol = 1e-9 * a.abs().max(4.0 * span * span);
        prop_assert!((polygon_area(&moved).unwrap() - a).abs() <= tol);
        prop_assert!((polygon_area(&scaled).unwrap() - s * s * a).abs() <= s * s * tol);
    }

    #[test]
    fn summary_invariants(mut errs in prop::collection::vec(0.0..180.0f64, 1..60), seed in any::<u64>()) {
        let st = summarize(&errs);
        prop_assert!(st.mean >= 0.0 && st.std >= 0.0);
        prop_assert!(st.p90 >= st.median);
        let above = errs.iter().filter(|&&e| e > st.p90).count();
        prop_assert!(above * 10 <= errs.len());
        // Fisher-Yates with a fixed LCG: any permutation gives the same stats.
        let mut s = seed;
        for i in (1..errs.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            errs.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(summarize(&errs), st);
    }

    #[test]
    fn zero_spread_iff_equal(v in 0.0..90.0f64, n in 1usize..30, bump in 1e-6..1.0f64) {
        prop_assert_eq!(summarize(&vec![v; n]).std, 0.0);
        let mut xs = vec![v; n];
        xs.push(v + bump);
        prop_assert!(summarize(&xs).std > 0.0);
    }

    #[test]
    fn six_decimal_labels_round_trip(micro in -90_000_000i64..=90_000_000) {
        let theta: f64 = format!("{:.6}", micro as f64 / 1e6).parse().unwrap();
        let n = normalize_label(theta).unwrap();
        prop_assert!((0.0..=1.0).contains(&n));
        prop_assert_eq!(denormalize_label(n).unwrap(), theta);
    }
}
