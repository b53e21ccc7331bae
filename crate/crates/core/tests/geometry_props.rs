use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reproj_core::geometry::{
    detect_markers, estimate_homography, fit_homography, order_corners, stamp_disks, tilt_keystone, warp,
};
use reproj_core::iqa::{ssim, SsimParams};
use reproj_core::synth::{line_art, Polarity};
use reproj_core::{DetectParams, Homography, MarkerLayout, Point, Raster, Rect};

/// Convex quad with every interior angle comfortably away from 180 degrees.
fn random_quad(rng: &mut ChaCha8Rng, span: f64) -> [Point; 4] {
    let cx = rng.gen_range(-span..span);
    let cy = rng.gen_range(-span..span);
    let base = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut pts = [Point::origin(); 4];
    for (i, p) in pts.iter_mut().enumerate() {
        let angle = base + i as f64 * std::f64::consts::FRAC_PI_2 + rng.gen_range(-0.4..0.4);
        let r = rng.gen_range(0.3 * span..span);
        *p = Point::new(cx + r * angle.cos(), cy + r * angle.sin());
    }
    pts
}

#[test]
fn dlt_reproduces_exact_correspondences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let src = random_quad(&mut rng, 500.0);
        let dst = random_quad(&mut rng, 500.0);
        let pairs: Vec<_> = src.iter().copied().zip(dst).collect();
        let h = estimate_homography(&pairs).unwrap();
        for (s, d) in &pairs {
            let p = h.apply(*s).unwrap();
            assert!((p - d).norm() < 1e-6, "{p} vs {d}");
        }
    }
}

#[test]
fn dlt_recovers_a_known_homography_from_many_points() {
    let truth = Homography::from_row_slice(&[1.1, 0.05, 12.0, -0.03, 0.95, -7.0, 1e-4, -2e-4, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<_> = (0..20)
        .map(|_| {
            let p = Point::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0));
            (p, truth.apply(p).unwrap())
        })
        .collect();
    let h = estimate_homography(&pairs).unwrap();
    for (a, b) in h.to_row_array().iter().zip(truth.to_row_array()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn normalized_estimate_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let src = random_quad(&mut rng, 300.0);
        let dst = random_quad(&mut rng, 300.0);
        let pairs: Vec<_> = src.iter().copied().zip(dst).collect();
        let s = rng.gen_range(0.01..100.0);
        let scaled: Vec<_> = pairs
            .iter()
            .map(|(a, b)| (Point::from(a.coords * s), Point::from(b.coords * s)))
            .collect();
        let h = fit_homography(&pairs).unwrap();
        let hs = fit_homography(&scaled).unwrap();
        // Hartley normalization removes the scale, so the normalized solve is identical
        for (a, b) in h.normalized.iter().zip(hs.normalized.iter()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // and the de-normalized results are conjugate by S
        let sm = Homography::from_row_slice(&[s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let conj = sm.compose(&h.homography).unwrap().compose(&sm.inverse()).unwrap();
        for (a, b) in conj.to_row_array().iter().zip(hs.homography.to_row_array()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }
}

/// Frontal board: dimmed line art inside the margin, full-white fiducials in it.
fn frontal_board(layout: &MarkerLayout) -> (Raster, [Point; 4], usize) {
    let content = line_art(480, 352, 5, Polarity::DarkOnLight)
        .unwrap()
        .map(|v| 0.8 * v);
    let margin = layout.margin_px();
    let padded = content.pad(margin, 0.0);
    let (w, h) = padded.dims();
    let pts = layout.pixel_points(w, h);
    let mut data = padded.into_samples();
    stamp_disks(&mut data, w, h, 1, &pts, layout.radius_px, 1.0);
    (Raster::new(w, h, 1, 1.0, data).unwrap(), pts, margin)
}

#[test]
fn keystoned_board_is_rectified() {
    let layout = MarkerLayout::default();
    let (board, pts, margin) = frontal_board(&layout);
    let (w, h) = board.dims();
    let key = tilt_keystone(w, h, 10.0, 4.0).unwrap();
    let seen = warp(&board, &key, w, h, 0.0).unwrap();

    let found = detect_markers(&seen, &DetectParams::default()).unwrap();
    for (f, p) in found.iter().zip(&pts) {
        let expected = key.apply(*p).unwrap();
        assert!((f - expected).norm() < 0.5, "{f} vs {expected}");
    }
    let pairs: Vec<_> = found.into_iter().zip(pts).collect();
    let back = estimate_homography(&pairs).unwrap();
    let rectified = warp(&seen, &back, w, h, 0.0).unwrap();
    let region = Rect {
        x: margin,
        y: margin,
        width: w - 2 * margin,
        height: h - 2 * margin,
    };
    let s = ssim(
        &rectified.crop(region).unwrap(),
        &board.crop(region).unwrap(),
        &SsimParams::default(),
    )
    .unwrap()
    .mean_ssim;
    assert!(s >= 0.95, "rectified ssim {s}");
}

#[test]
fn detection_order_ignores_stamp_order() {
    let layout = MarkerLayout::default();
    let (w, h) = (300, 200);
    let pts = layout.pixel_points(w, h);
    let perms = [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1], [1, 3, 0, 2]];
    for perm in perms {
        let mut data = vec![0.1; w * h];
        let shuffled: Vec<Point> = perm.iter().map(|&i| pts[i]).collect();
        stamp_disks(&mut data, w, h, 1, &shuffled, 6.0, 1.0);
        let img = Raster::new(w, h, 1, 1.0, data).unwrap();
        let found = detect_markers(&img, &DetectParams::default()).unwrap();
        for (f, p) in found.iter().zip(&pts) {
            assert!((f - p).norm() < 0.5);
        }
    }
}

proptest! {
    #[test]
    fn ordering_is_a_permutation_invariant(seed in any::<u64>(), rot in 0usize..4, flip in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // an axis-aligned-ish board seen with mild perspective
        let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-30.0..30.0);
        let truth = [
            Point::new(50.0 + jitter(&mut rng), 40.0 + jitter(&mut rng)),
            Point::new(600.0 + jitter(&mut rng), 40.0 + jitter(&mut rng)),
            Point::new(600.0 + jitter(&mut rng), 440.0 + jitter(&mut rng)),
            Point::new(50.0 + jitter(&mut rng), 440.0 + jitter(&mut rng)),
        ];
        let mut labels = truth;
        labels.rotate_left(rot);
        if flip {
            labels.reverse();
        }
        prop_assert_eq!(order_corners(labels), truth);
    }

    #[test]
    fn inverse_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_quad(&mut rng, 200.0);
        let dst = random_quad(&mut rng, 200.0);
        let pairs: Vec<_> = src.iter().copied().zip(dst).collect();
        let h = estimate_homography(&pairs).unwrap();
        let inv = h.inverse();
        for p in src {
            let q = inv.apply(h.apply(p).unwrap()).unwrap();
            prop_assert!((q - p).norm() < 1e-6);
        }
    }
}
