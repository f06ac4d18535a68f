//! Baseline measures against hand values and a windowed similarity oracle
//! built from explicit 2-D loops.

mod common;

use common::{gray_image, pair, random_gray, Rng};
use rbqi_core::baselines::{
    age, error_pixels, msssim, psnr, ssim, ssim_components, BaselineParams, PsnrScore,
};
use rbqi_core::raster::Raster;

#[test]
fn age_and_error_pixel_hand_values() {
    // 8x8, a 3x3 block of +100 errors and one isolated +30 pixel. The block
    // center is the only pixel whose four neighbors all err.
    let rec = gray_image(8, 8, |x, y| {
        let base = 50.0;
        if (2..5).contains(&x) && (2..5).contains(&y) {
            base + 100.0
        } else if (x, y) == (6, 6) {
            base + 30.0
        } else {
            base
        }
    });
    let refr = gray_image(8, 8, |_, _| 50.0);
    let p = pair(refr, rec);

    let want_age = (9.0 * 100.0 + 30.0) / 64.0;
    assert_eq!(age(&p).unwrap(), want_age);

    let c = error_pixels(&p, 20.0).unwrap();
    assert_eq!(c.ep, 10);
    assert_eq!(c.cep, 1);
    assert_eq!(c.p_ep, 10.0 / 64.0);
    assert_eq!(c.p_cep, 1.0 / 64.0);
}

#[test]
fn error_threshold_is_strict() {
    let refr = gray_image(8, 8, |_, _| 100.0);
    let rec = gray_image(8, 8, |x, _| if x < 4 { 120.0 } else { 121.0 });
    let p = pair(refr, rec);
    // |diff| of exactly 20 does not cross a threshold of 20.
    let c = error_pixels(&p, 20.0).unwrap();
    assert_eq!(c.ep, 32);
}

#[test]
fn psnr_of_uniform_offset_and_identical_pair() {
    // Every pixel off by 16 gray levels: mse = 256.
    let a = gray_image(16, 16, |x, y| ((x + y) % 220) as f64);
    let b = gray_image(16, 16, |x, y| ((x + y) % 220) as f64 + 16.0);
    let p = pair(a, b);
    match psnr(&p).unwrap() {
        PsnrScore::Db(v) => assert!((v - 24.048403955560608).abs() < 1e-12),
        PsnrScore::Identical => panic!("offset pair reported identical"),
    }

    let c = gray_image(16, 16, |x, y| (x * y % 256) as f64);
    let p2 = pair(c.clone(), c);
    assert_eq!(psnr(&p2).unwrap(), PsnrScore::Identical);
    assert_eq!(psnr(&p2).unwrap().as_db(), f64::INFINITY);
}

fn gaussian_1d(width: usize, sigma: f64) -> Vec<f64> {
    let half = width as isize / 2;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    for v in &mut k {
        *v /= s;
    }
    k
}

/// Valid-position windowed similarity means computed with one explicit 2-D
/// weighted loop per window, nothing separable, nothing shared.
fn ssim_oracle(r: &Raster, i: &Raster, params: &BaselineParams) -> (f64, f64, f64) {
    let win = params.ssim_window;
    let k1d = gaussian_1d(win, 1.5);
    let c1 = (params.ssim_k1 * 255.0) * (params.ssim_k1 * 255.0);
    let c2 = (params.ssim_k2 * 255.0) * (params.ssim_k2 * 255.0);
    let (w, h) = (r.width(), r.height());
    let (ow, oh) = (w - win + 1, h - win + 1);
    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    let mut l_sum = 0.0;
    for y in 0..oh {
        for x in 0..ow {
            let (mut mr, mut mi) = (0.0, 0.0);
            let (mut srr, mut sii, mut sri) = (0.0, 0.0, 0.0);
            for wy in 0..win {
                for wx in 0..win {
                    let wgt = k1d[wy] * k1d[wx];
                    let a = r.get(x + wx, y + wy);
                    let b = i.get(x + wx, y + wy);
                    mr += wgt * a;
                    mi += wgt * b;
                    srr += wgt * a * a;
                    sii += wgt * b * b;
                    sri += wgt * a * b;
                }
            }
            let var_r = srr - mr * mr;
            let var_i = sii - mi * mi;
            let cov = sri - mr * mi;
            let lum = (2.0 * mr * mi + c1) / ((mr * mr + mi * mi) + c1);
            let cs = (2.0 * cov + c2) / ((var_r + var_i) + c2);
            ssim_sum += lum * cs;
            cs_sum += cs;
            l_sum += lum;
        }
    }
    let n = (ow * oh) as f64;
    (ssim_sum / n, cs_sum / n, l_sum / n)
}

/// Box 2x2 decimation, trailing odd row/column dropped.
fn halve(p: &Raster) -> Raster {
    let (w, h) = (p.width() / 2, p.height() / 2);
    let mut out = Raster::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let s = p.get(2 * x, 2 * y)
                + p.get(2 * x + 1, 2 * y)
                + p.get(2 * x, 2 * y + 1)
                + p.get(2 * x + 1, 2 * y + 1);
            out.set(x, y, s / 4.0);
        }
    }
    out
}

#[test]
fn ssim_matches_the_direct_window_oracle() {
    let mut rng = Rng::new(0xba5e_0001);
    let params = BaselineParams::default();
    for case in 0..3 {
        let a = random_gray(&mut rng, 24, 20);
        let b = random_gray(&mut rng, 24, 20);
        let p = pair(a.clone(), b.clone());
        let got = ssim(&p, &params).unwrap();
        let (want, want_cs, want_l) = ssim_oracle(a.plane(0), b.plane(0), &params);
        assert!(
            (got - want).abs() < 1e-9,
            "case {case}: ssim {got} vs oracle {want}"
        );
        let (s, cs, lum) = ssim_components(&p, &params).unwrap();
        assert!((s - want).abs() < 1e-9);
        assert!((cs - want_cs).abs() < 1e-9);
        assert!((lum - want_l).abs() < 1e-9);
    }
}

#[test]
fn ssim_of_identical_pair_is_exactly_one() {
    let mut rng = Rng::new(0xba5e_0011);
    let img = random_gray(&mut rng, 32, 32);
    let p = pair(img.clone(), img);
    assert_eq!(ssim(&p, &BaselineParams::default()).unwrap(), 1.0);
}

#[test]
fn ssim_of_uniform_luminance_shift_reduces_to_the_scalar_formula() {
    // Zero variance everywhere: the contrast-structure ratio collapses to 1
    // in every window, leaving only the luminance comparison, identical in
    // each window.
    let a = gray_image(20, 20, |_, _| 100.0);
    let b = gray_image(20, 20, |_, _| 104.0);
    let got = ssim(&pair(a, b), &BaselineParams::default()).unwrap();
    let c1 = (0.01 * 255.0) * (0.01 * 255.0);
    let want = (2.0 * 100.0 * 104.0 + c1) / ((100.0 * 100.0 + 104.0 * 104.0) + c1);
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn msssim_matches_a_manually_staged_chain() {
    let mut rng = Rng::new(0xba5e_0021);
    let params = BaselineParams::default();
    let a = random_gray(&mut rng, 180, 180);
    let b = random_gray(&mut rng, 180, 180);
    let got = msssim(&pair(a.clone(), b.clone()), &params).unwrap();

    let (mut r, mut i) = (a.plane(0).clone(), b.plane(0).clone());
    let mut want = 1.0;
    for l in 0..params.msssim_levels {
        let (_, cs, lum) = ssim_oracle(&r, &i, &params);
        want *= cs.max(0.0).powf(params.msssim_weights[l]);
        if l + 1 == params.msssim_levels {
            want *= lum.max(0.0).powf(params.msssim_weights[l]);
        } else {
            r = halve(&r);
            i = halve(&i);
        }
    }
    assert!(
        (got - want).abs() < 1e-9,
        "msssim {got} vs staged oracle {want}"
    );
}

#[test]
fn msssim_of_identical_pair_is_exactly_one() {
    let mut rng = Rng::new(0xba5e_0031);
    let img = random_gray(&mut rng, 180, 180);
    let p = pair(img.clone(), img);
    assert_eq!(msssim(&p, &BaselineParams::default()).unwrap(), 1.0);
}

#[test]
fn msssim_needs_room_for_five_halvings() {
    let mut rng = Rng::new(0xba5e_0041);
    let a = random_gray(&mut rng, 100, 100);
    let b = random_gray(&mut rng, 100, 100);
    assert!(msssim(&pair(a, b), &BaselineParams::default()).is_err());
}
