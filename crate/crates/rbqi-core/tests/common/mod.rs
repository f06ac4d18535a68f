//! Shared fixtures for the integration tests: a deterministic RNG, image
//! builders, and independently coded oracles the production code is checked
//! against.

#![allow(dead_code)]

use rbqi_core::image::{ColorSpace, ImagePair, PlanarImage};
use rbqi_core::raster::Raster;

/// xorshift64* with Box-Muller on top; seeds are fixed per test so every
/// run sees the same corpus.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer gray level in 0..=255 as f64.
    pub fn level(&mut self) -> f64 {
        (self.next_u64() % 256) as f64
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub fn gray_image(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> PlanarImage {
    let vals: Vec<f64> = (0..w * h).map(|i| f(i % w, i / w)).collect();
    PlanarImage::from_planes(ColorSpace::Gray, vec![Raster::from_vec(w, h, vals)]).unwrap()
}

pub fn srgb_image(
    w: usize,
    h: usize,
    f: impl Fn(usize, usize) -> (f64, f64, f64),
) -> PlanarImage {
    let mut planes = vec![Vec::with_capacity(w * h), Vec::new(), Vec::new()];
    planes[1].reserve(w * h);
    planes[2].reserve(w * h);
    for i in 0..w * h {
        let (r, g, b) = f(i % w, i / w);
        planes[0].push(r);
        planes[1].push(g);
        planes[2].push(b);
    }
    PlanarImage::from_planes(
        ColorSpace::Srgb,
        planes
            .into_iter()
            .map(|v| Raster::from_vec(w, h, v))
            .collect(),
    )
    .unwrap()
}

pub fn random_gray(rng: &mut Rng, w: usize, h: usize) -> PlanarImage {
    let vals: Vec<f64> = (0..w * h).map(|_| rng.level()).collect();
    PlanarImage::from_planes(ColorSpace::Gray, vec![Raster::from_vec(w, h, vals)]).unwrap()
}

pub fn random_srgb(rng: &mut Rng, w: usize, h: usize) -> PlanarImage {
    let mut r = Vec::with_capacity(w * h);
    let mut g = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        r.push(rng.level());
        g.push(rng.level());
        b.push(rng.level());
    }
    PlanarImage::from_planes(
        ColorSpace::Srgb,
        vec![
            Raster::from_vec(w, h, r),
            Raster::from_vec(w, h, g),
            Raster::from_vec(w, h, b),
        ],
    )
    .unwrap()
}

pub fn pair(reference: PlanarImage, reconstructed: PlanarImage) -> ImagePair {
    ImagePair::new(reference, reconstructed).unwrap()
}

/// Edge-replicating sampler, the same border rule the production windows use.
pub fn at_clamped(p: &Raster, x: isize, y: isize) -> f64 {
    let xi = x.clamp(0, p.width() as isize - 1) as usize;
    let yi = y.clamp(0, p.height() as isize - 1) as usize;
    p.get(xi, yi)
}

/// Brute-force structure index: for every pixel, try every displacement in
/// the search neighborhood, computing windowed moments with four explicit
/// loops and fresh accumulators. Shares only the moment definitions
/// (population variance, E[ri] - mu_r*mu_i) with the production code, none
/// of its summation machinery.
pub fn si_oracle(
    r: &Raster,
    i: &Raster,
    nhood: usize,
    window: usize,
    k: f64,
    dynamic_range: f64,
) -> Vec<f64> {
    let (w, h) = (r.width(), r.height());
    let c = (k * dynamic_range) * (k * dynamic_range);
    let sh = (nhood / 2) as isize;
    let wh = (window / 2) as isize;
    let area = (window * window) as f64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut best = f64::NEG_INFINITY;
            for dy in -sh..=sh {
                for dx in -sh..=sh {
                    // Search coordinates clamp to the image before the stat
                    // window opens around them.
                    let m = (x + dx).clamp(0, w as isize - 1);
                    let n = (y + dy).clamp(0, h as isize - 1);
                    let mut sr = 0.0;
                    let mut si = 0.0;
                    let mut srr = 0.0;
                    let mut sii = 0.0;
                    let mut sri = 0.0;
                    for wy in -wh..=wh {
                        for wx in -wh..=wh {
                            let a = at_clamped(r, x + wx, y + wy);
                            let b = at_clamped(i, m + wx, n + wy);
                            sr += a;
                            si += b;
                            srr += a * a;
                            sii += b * b;
                            sri += a * b;
                        }
                    }
                    let mr = sr / area;
                    let mi = si / area;
                    let var_r = srr / area - mr * mr;
                    let var_i = sii / area - mi * mi;
                    let cross = sri / area - mr * mi;
                    let cand = (2.0 * cross + c) / ((var_r + var_i) + c);
                    if cand > best {
                        best = cand;
                    }
                }
            }
            out.push(best.clamp(-1.0, 1.0));
        }
    }
    out
}
