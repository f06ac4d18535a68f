//! Color difference maps and the adaptive visibility threshold.
//!
//! Distances are plain Euclidean Lab differences on lowpassed planes. The
//! threshold raster alpha_c scales the base just-noticeable color difference
//! of 2.3 Lab units up where chroma is high (colorfulness masks hue shifts)
//! and where luminance changes fast (busy luminance masks color error), both
//! measured on the reference only.

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};
use crate::raster::Raster;
use crate::window::{window_sums_plane, Padded, Rect};

#[derive(Clone, Debug, serde::Serialize)]
pub struct ColorParams {
    /// Base just-noticeable color difference in Lab units.
    pub jncd: f64,
    pub gaussian_sigma: f64,
    /// Kernel half-width in pixels.
    pub gaussian_radius: usize,
    /// Window width for the local mean luminance, odd.
    pub mean_lum_window: usize,
    /// Luminance-masking weights for dark (E < 48), mid, and bright (E > 80)
    /// backgrounds.
    pub rho_dark: f64,
    pub rho_mid: f64,
    pub rho_bright: f64,
}

impl Default for ColorParams {
    fn default() -> Self {
        ColorParams {
            jncd: 2.3,
            gaussian_sigma: 1.5,
            gaussian_radius: (3.0 * 1.5_f64).round() as usize,
            mean_lum_window: 5,
            rho_dark: 0.12,
            rho_mid: 0.025,
            rho_bright: 0.08,
        }
    }
}

/// Outputs of the color path for one level.
pub struct ColorMaps {
    pub d_c: Raster,
    pub alpha_c: Raster,
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn blur_plane(p: &Raster, kernel: &[f64]) -> Raster {
    let (w, h) = (p.width(), p.height());
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = Raster::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                let sx = (x + j as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += kv * p.get(sx, y);
            }
            tmp.set(x as usize, y, acc);
        }
    }
    let mut out = Raster::filled(w, h, 0.0);
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                let sy = (y + j as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp.get(x, sy);
            }
            out.set(x, y as usize, acc);
        }
    }
    out
}

/// Separable Gaussian with clamped borders, applied to every channel. The 1-D
/// kernel is normalized to sum 1, so constants pass through unchanged.
pub fn gaussian_blur(img: &PlanarImage, params: &ColorParams) -> Result<PlanarImage> {
    let min_dim = img.width().min(img.height());
    if params.gaussian_radius > min_dim / 2 {
        return Err(Error::KernelTooLarge {
            radius: params.gaussian_radius,
            min_dim,
        });
    }
    let kernel = gaussian_kernel(params.gaussian_sigma, params.gaussian_radius);
    let planes = img.planes().iter().map(|p| blur_plane(p, &kernel)).collect();
    Ok(PlanarImage::new_unchecked(img.space(), planes))
}

fn require_lab(img: &PlanarImage) -> Result<()> {
    if img.space() != ColorSpace::Lab {
        return Err(Error::WrongColorSpace {
            expected: "Lab",
            found: img.space().name(),
        });
    }
    Ok(())
}

/// Per-pixel Euclidean Lab distance between co-located pixels.
pub fn color_distance(ref_lab: &PlanarImage, rec_lab: &PlanarImage) -> Result<Raster> {
    require_lab(ref_lab)?;
    require_lab(rec_lab)?;
    if ref_lab.width() != rec_lab.width() || ref_lab.height() != rec_lab.height() {
        return Err(Error::DimensionMismatch(
            ref_lab.width(),
            ref_lab.height(),
            rec_lab.width(),
            rec_lab.height(),
        ));
    }
    let mut out = Raster::filled(ref_lab.width(), ref_lab.height(), 0.0);
    for k in 0..out.len() {
        let dl = ref_lab.plane(0).as_slice()[k] - rec_lab.plane(0).as_slice()[k];
        let da = ref_lab.plane(1).as_slice()[k] - rec_lab.plane(1).as_slice()[k];
        let db = ref_lab.plane(2).as_slice()[k] - rec_lab.plane(2).as_slice()[k];
        out.as_mut_slice()[k] = (dl * dl + da * da + db * db).sqrt();
    }
    Ok(out)
}

/// Adaptive threshold raster alpha_c = jncd * s_L * s_C from the reference:
/// s_C = 1 + 0.045 * chroma; s_L = rho(E) * dL + 1 where E is the local mean
/// luminance and dL the largest absolute central difference of L over the
/// horizontal, vertical, and both diagonal directions.
pub fn ajncd_threshold(ref_lab: &PlanarImage, params: &ColorParams) -> Result<Raster> {
    require_lab(ref_lab)?;
    let (w, h) = (ref_lab.width(), ref_lab.height());
    let win = params.mean_lum_window;
    if win == 0 || win % 2 == 0 {
        return Err(Error::BadWindow(win));
    }
    if w.min(h) < win {
        return Err(Error::TooSmall {
            needed: win,
            got_w: w,
            got_h: h,
        });
    }
    let l = ref_lab.plane(0);
    let a = ref_lab.plane(1);
    let b = ref_lab.plane(2);

    let half = win / 2;
    let padded = Padded::new(l.as_slice(), w, h, half);
    let sums = window_sums_plane(&padded, half, Rect::full(w, h));
    let area = (win * win) as f64;

    const DIRS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let sample = |x: isize, y: isize| -> f64 {
        l.get(
            x.clamp(0, w as isize - 1) as usize,
            y.clamp(0, h as isize - 1) as usize,
        )
    };

    let mut out = Raster::filled(w, h, 0.0);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let k = y as usize * w + x as usize;
            let e = sums[k] / area;
            let rho = if e < 48.0 {
                params.rho_dark
            } else if e <= 80.0 {
                params.rho_mid
            } else {
                params.rho_bright
            };
            let mut dl: f64 = 0.0;
            for (dx, dy) in DIRS {
                let g = ((sample(x + dx, y + dy) - sample(x - dx, y - dy)) / 2.0).abs();
                if g > dl {
                    dl = g;
                }
            }
            let s_l = rho * dl + 1.0;
            let chroma = (a.as_slice()[k] * a.as_slice()[k]
                + b.as_slice()[k] * b.as_slice()[k])
                .sqrt();
            let s_c = 1.0 + 0.045 * chroma;
            out.as_mut_slice()[k] = params.jncd * s_l * s_c;
        }
    }
    Ok(out)
}
