//! Statistical error measures and the classic similarity baselines used for
//! comparison against the main index.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::{ColorSpace, ImagePair};
use crate::pyramid::downsample_plane;
use crate::raster::Raster;

#[derive(Clone, Debug, serde::Serialize)]
pub struct BaselineParams {
    /// Gray-level threshold for the error-pixel family.
    pub ep_threshold: f64,
    pub ssim_window: usize,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
    pub msssim_levels: usize,
    /// Per-scale exponents, one per level; the published five-vector.
    pub msssim_weights: Vec<f64>,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            ep_threshold: 20.0,
            ssim_window: 11,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
            msssim_levels: 5,
            msssim_weights: vec![0.0448, 0.2856, 0.3001, 0.2363, 0.1333],
        }
    }
}

const SSIM_SIGMA: f64 = 1.5;
const DYNAMIC_RANGE: f64 = 255.0;

fn gray_planes(pair: &ImagePair) -> Result<(&Raster, &Raster)> {
    if pair.space() != ColorSpace::Gray {
        return Err(Error::WrongColorSpace {
            expected: "grayscale",
            found: pair.space().name(),
        });
    }
    Ok((pair.reference.plane(0), pair.reconstructed.plane(0)))
}

/// Mean absolute gray-level error.
pub fn age(pair: &ImagePair) -> Result<f64> {
    let (r, i) = gray_planes(pair)?;
    let sum: f64 = r
        .as_slice()
        .iter()
        .zip(i.as_slice())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(sum / r.len() as f64)
}

/// Counts from the thresholded error mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorPixelCounts {
    /// Pixels with |r - i| > threshold.
    pub ep: usize,
    pub p_ep: f64,
    /// Error pixels whose four in-image neighbors are all error pixels;
    /// a neighbor beyond the border counts as clean, so border pixels never
    /// cluster.
    pub cep: usize,
    pub p_cep: f64,
}

pub fn error_pixels(pair: &ImagePair, threshold: f64) -> Result<ErrorPixelCounts> {
    let (r, i) = gray_planes(pair)?;
    let (w, h) = (r.width(), r.height());
    let mask: Vec<bool> = r
        .as_slice()
        .iter()
        .zip(i.as_slice())
        .map(|(&a, &b)| (a - b).abs() > threshold)
        .collect();
    let ep = mask.iter().filter(|&&m| m).count();
    let mut cep = 0;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            if mask[y * w + x]
                && mask[y * w + x - 1]
                && mask[y * w + x + 1]
                && mask[(y - 1) * w + x]
                && mask[(y + 1) * w + x]
            {
                cep += 1;
            }
        }
    }
    let n = (w * h) as f64;
    Ok(ErrorPixelCounts {
        ep,
        p_ep: ep as f64 / n,
        cep,
        p_cep: cep as f64 / n,
    })
}

/// Peak signal-to-noise ratio, with identical pairs kept distinct from any
/// finite decibel value so downstream CSV stays parseable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsnrScore {
    Db(f64),
    Identical,
}

impl PsnrScore {
    /// Collapses the sentinel to +infinity for numeric consumers.
    pub fn as_db(&self) -> f64 {
        match self {
            PsnrScore::Db(v) => *v,
            PsnrScore::Identical => f64::INFINITY,
        }
    }
}

impl fmt::Display for PsnrScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsnrScore::Db(v) => write!(f, "{v}"),
            PsnrScore::Identical => write!(f, "identical"),
        }
    }
}

pub fn psnr(pair: &ImagePair) -> Result<PsnrScore> {
    let (r, i) = gray_planes(pair)?;
    let mse: f64 = r
        .as_slice()
        .iter()
        .zip(i.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / r.len() as f64;
    if mse == 0.0 {
        Ok(PsnrScore::Identical)
    } else {
        Ok(PsnrScore::Db(
            10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10(),
        ))
    }
}

fn gaussian_window(width: usize, sigma: f64) -> Vec<f64> {
    let half = width as isize / 2;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Weighted sums of `vals` over every fully-interior window position
/// (valid-region convolution), kernel applied separably.
fn valid_weighted_sums(vals: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let win = kernel.len();
    let (ow, oh) = (w - win + 1, h - win + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                acc += kv * vals[y * w + x + j];
            }
            horiz[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (j, &kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(y + j) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

struct SsimMeans {
    ssim: f64,
    cs: f64,
    luminance: f64,
}

fn ssim_means(r: &Raster, i: &Raster, params: &BaselineParams) -> Result<SsimMeans> {
    let (w, h) = (r.width(), r.height());
    let win = params.ssim_window;
    if win == 0 || win % 2 == 0 {
        return Err(Error::BadWindow(win));
    }
    if w < win || h < win {
        return Err(Error::TooSmall {
            needed: win,
            got_w: w,
            got_h: h,
        });
    }
    let kernel = gaussian_window(win, SSIM_SIGMA);
    let c1 = (params.ssim_k1 * DYNAMIC_RANGE).powi(2);
    let c2 = (params.ssim_k2 * DYNAMIC_RANGE).powi(2);

    let rs = r.as_slice();
    let is = i.as_slice();
    let product = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &y)| x * y).collect()
    };
    let mu_r = valid_weighted_sums(rs, w, h, &kernel);
    let mu_i = valid_weighted_sums(is, w, h, &kernel);
    let s_rr = valid_weighted_sums(&product(rs, rs), w, h, &kernel);
    let s_ii = valid_weighted_sums(&product(is, is), w, h, &kernel);
    let s_ri = valid_weighted_sums(&product(rs, is), w, h, &kernel);

    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    let mut l_sum = 0.0;
    for k in 0..mu_r.len() {
        let (mr, mi) = (mu_r[k], mu_i[k]);
        let var_r = s_rr[k] - mr * mr;
        let var_i = s_ii[k] - mi * mi;
        let cov = s_ri[k] - mr * mi;
        let num_l = 2.0 * mr * mi + c1;
        let den_l = (mr * mr + mi * mi) + c1;
        let num_cs = 2.0 * cov + c2;
        let den_cs = (var_r + var_i) + c2;
        ssim_sum += (num_l * num_cs) / (den_l * den_cs);
        cs_sum += num_cs / den_cs;
        l_sum += num_l / den_l;
    }
    let n = mu_r.len() as f64;
    Ok(SsimMeans {
        ssim: ssim_sum / n,
        cs: cs_sum / n,
        luminance: l_sum / n,
    })
}

/// Mean structural similarity over the valid window positions, Gaussian
/// weighted. Identical pairs return exactly 1.0: the covariance and the two
/// variances come off the same weighted-sum path, so every per-window ratio
/// is 1 bit for bit.
pub fn ssim(pair: &ImagePair, params: &BaselineParams) -> Result<f64> {
    let (r, i) = gray_planes(pair)?;
    Ok(ssim_means(r, i, params)?.ssim)
}

/// Mean contrast-structure term alone (no luminance comparison), exposed for
/// diagnostics and for the multiscale product.
pub fn ssim_components(pair: &ImagePair, params: &BaselineParams) -> Result<(f64, f64, f64)> {
    let (r, i) = gray_planes(pair)?;
    let m = ssim_means(r, i, params)?;
    Ok((m.ssim, m.cs, m.luminance))
}

/// Multiscale similarity: contrast-structure means at every scale, the
/// luminance mean only at the coarsest, combined as a weighted geometric
/// product. Downsampling is the same 2x2 box decimation the main pipeline
/// uses. A negative mean (strong anticorrelation) would make the fractional
/// power undefined, so bases are floored at zero and such a pair scores 0.
pub fn msssim(pair: &ImagePair, params: &BaselineParams) -> Result<f64> {
    let (r, i) = gray_planes(pair)?;
    assert_eq!(
        params.msssim_weights.len(),
        params.msssim_levels,
        "one weight per scale"
    );
    let levels = params.msssim_levels;
    let needed = params.ssim_window << (levels - 1);
    if r.width() < needed || r.height() < needed {
        return Err(Error::TooSmall {
            needed,
            got_w: r.width(),
            got_h: r.height(),
        });
    }
    let (mut cur_r, mut cur_i) = (r.clone(), i.clone());
    let mut score = 1.0;
    for l in 0..levels {
        let m = ssim_means(&cur_r, &cur_i, params)?;
        score *= m.cs.max(0.0).powf(params.msssim_weights[l]);
        if l + 1 == levels {
            score *= m.luminance.max(0.0).powf(params.msssim_weights[l]);
        } else {
            cur_r = downsample_plane(&cur_r);
            cur_i = downsample_plane(&cur_i);
        }
    }
    Ok(score)
}
