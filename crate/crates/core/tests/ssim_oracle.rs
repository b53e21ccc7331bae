//! SSIM against an independent brute-force implementation: a direct 2D
//! Gaussian window summed at every valid position, with deviations taken
//! about the local mean instead of via raw moments.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reproj_core::iqa::{mse, psnr, ssim, Psnr, SsimParams};
use reproj_core::Raster;

fn brute_force_ssim(a: &Raster, r: &Raster, sigma: f64, radius: usize, k1: f64, k2: f64) -> f64 {
    let (w, h) = a.dims();
    let l = a.range();
    let (c1, c2) = ((k1 * l).powi(2), (k2 * l).powi(2));
    let n = 2 * radius + 1;
    let mut weights = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let dx = i as f64 - radius as f64;
            let dy = j as f64 - radius as f64;
            weights[j * n + i] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);

    let mut sum = 0.0;
    let mut count = 0;
    for y0 in 0..=h - n {
        for x0 in 0..=w - n {
            let (mut ma, mut mr) = (0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let wt = weights[j * n + i];
                    ma += wt * a.get(x0 + i, y0 + j, 0);
                    mr += wt * r.get(x0 + i, y0 + j, 0);
                }
            }
            let (mut va, mut vr, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let wt = weights[j * n + i];
                    let da = a.get(x0 + i, y0 + j, 0) - ma;
                    let dr = r.get(x0 + i, y0 + j, 0) - mr;
                    va += wt * da * da;
                    vr += wt * dr * dr;
                    cov += wt * da * dr;
                }
            }
            sum += ((2.0 * ma * mr + c1) * (2.0 * cov + c2)) / ((ma * ma + mr * mr + c1) * (va + vr + c2));
            count += 1;
        }
    }
    sum / count as f64
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Raster {
    Raster::new(w, h, 1, 1.0, (0..w * h).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

#[test]
fn matches_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = SsimParams::default();
    for _ in 0..50 {
        let a = random_image(&mut rng, 32, 32);
        let b = random_image(&mut rng, 32, 32);
        let fast = ssim(&a, &b, &p).unwrap().mean_ssim;
        let slow = brute_force_ssim(&a, &b, 1.5, 5, 0.01, 0.03);
        assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
    }
}

#[test]
fn matches_brute_force_on_correlated_pairs() {
    // near-identical inputs exercise the high-SSIM end of the formula
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = SsimParams::default();
    for _ in 0..10 {
        let a = random_image(&mut rng, 24, 40);
        let b = a.map(|v| v * 0.9 + 0.05);
        let fast = ssim(&a, &b, &p).unwrap().mean_ssim;
        let slow = brute_force_ssim(&a, &b, 1.5, 5, 0.01, 0.03);
        assert!((fast - slow).abs() < 1e-9);
    }
}

#[test]
fn identity_gives_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let w = rng.gen_range(11..64);
        let h = rng.gen_range(11..64);
        let a = random_image(&mut rng, w, h);
        let s = ssim(&a, &a, &SsimParams::default()).unwrap();
        assert!((s.mean_ssim - 1.0).abs() < 1e-9);
        assert_eq!(s.ssim_map.dims(), (w - 10, h - 10));
    }
}

#[test]
fn constant_images_follow_the_luminance_term() {
    let a = Raster::filled(32, 32, 1, 0.5).unwrap();
    let b = Raster::filled(32, 32, 1, 0.25).unwrap();
    let s = ssim(&a, &b, &SsimParams::default()).unwrap().mean_ssim;
    let c1 = 1e-4;
    let closed = (2.0 * 0.5 * 0.25 + c1) / (0.25 + 0.0625 + c1);
    assert!((s - closed).abs() < 1e-12);
    // the commonly quoted rounded figure
    assert!((s - 0.80007).abs() < 1e-5);
}

#[test]
fn psnr_infinite_exactly_when_mse_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_image(&mut rng, 16, 16);
    assert_eq!(mse(&a, &a).unwrap(), 0.0);
    assert_eq!(psnr(&a, &a).unwrap(), Psnr::Infinite);
    let b = a.map(|v| if v > 0.5 { v - 1e-6 } else { v + 1e-6 });
    assert!(mse(&a, &b).unwrap() > 0.0);
    assert!(matches!(psnr(&a, &b).unwrap(), Psnr::Finite(db) if db.is_finite()));
}

#[test]
fn ssim_decreases_with_noise_level() {
    let reference = reproj_core::synth::photo(96, 96, 3).unwrap();
    let sigmas = [0.01, 0.05, 0.1, 0.2];
    let mut means = Vec::new();
    for &sigma in &sigmas {
        let mut total = 0.0;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
            let noisy = Raster::from_vec_clamped(
                96,
                96,
                1,
                1.0,
                reference
                    .samples()
                    .iter()
                    .map(|v| v + rand_distr::Distribution::sample(&normal, &mut rng))
                    .collect(),
            )
            .unwrap();
            total += ssim(&noisy, &reference, &SsimParams::default())
                .unwrap()
                .mean_ssim;
        }
        means.push(total / 10.0);
    }
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_and_bounded(seed in any::<u64>(), w in 11usize..40, h in 11usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_image(&mut rng, w, h);
        let b = random_image(&mut rng, w, h);
        let p = SsimParams::default();
        let ab = ssim(&a, &b, &p).unwrap();
        let ba = ssim(&b, &a, &p).unwrap();
        prop_assert!((ab.mean_ssim - ba.mean_ssim).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab.mean_ssim));
        prop_assert!(ab.ssim_map.samples().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn oracle_holds_for_larger_images(seed in any::<u64>(), w in 11usize..64, h in 11usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_image(&mut rng, w, h);
        let jitter: Vec<f64> = a.samples().iter().map(|v| (v + rng.gen_range(-0.2..0.2)).clamp(0.0, 1.0)).collect();
        let b = Raster::new(w, h, 1, 1.0, jitter).unwrap();
        let fast = ssim(&a, &b, &SsimParams::default()).unwrap().mean_ssim;
        prop_assert!((fast - brute_force_ssim(&a, &b, 1.5, 5, 0.01, 0.03)).abs() < 1e-9);
    }
}
