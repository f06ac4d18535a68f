//! Structure index with neighborhood search, and the structure difference
//! maps derived from it.
//!
//! SI at (x, y) is the best contrast-and-structure match between the
//! reference window at (x, y) and reconstruction windows centered anywhere in
//! the nhood x nhood search area, which forgives small parasitic background
//! motion. The luminance term of the usual similarity index is deliberately
//! absent: a brightness shift with intact structure should not count against
//! a reconstruction.
//!
//! Numerics here are deliberate. Variance and cross-covariance share one
//! box-sum path, so for identical inputs the zero-displacement candidate has
//! numerator and denominator bitwise equal and SI comes out exactly 1.0; the
//! whole-pipeline zero-on-identity law rests on that. Variances are never
//! clamped at zero for the same reason. Candidate values for a given
//! displacement are also independent of the nhood that requested them, which
//! turns "max over a superset" into an exact elementwise inequality between
//! runs with nested search windows.

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};
use crate::raster::Raster;
use crate::window::{window_sums_plane, window_sums_product, Padded, Rect};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Debug, serde::Serialize)]
pub struct StructureParams {
    /// Search window width in pixels, odd.
    pub nhood: usize,
    /// Stabilizing fraction of the dynamic range.
    pub k: f64,
    /// Maximum intensity value (255 for 8-bit input).
    pub dynamic_range: f64,
    /// Width of the local-statistics window, odd.
    pub stat_window: usize,
    /// Visibility divisor applied on textured pixels.
    pub a_textured: f64,
}

impl Default for StructureParams {
    fn default() -> Self {
        StructureParams {
            nhood: 17,
            k: 0.03,
            dynamic_range: 255.0,
            stat_window: 11,
            a_textured: 1000.0,
        }
    }
}

impl StructureParams {
    pub fn stabilizer(&self) -> f64 {
        (self.k * self.dynamic_range).powi(2)
    }
}

/// Per-level structure outputs: the index itself, the difference map
/// d_s = (1 - si) / 2, the per-pixel visibility divisor, and the binary
/// texture flags that produced it.
pub struct StructureMaps {
    pub si: Raster,
    pub d_s: Raster,
    pub alpha_s: Raster,
    pub texture_flags: Raster,
}

fn require_gray(img: &PlanarImage) -> Result<&Raster> {
    if img.space() != ColorSpace::Gray {
        return Err(Error::WrongColorSpace {
            expected: "grayscale",
            found: img.space().name(),
        });
    }
    Ok(img.plane(0))
}

fn check_window(window: usize, w: usize, h: usize) -> Result<usize> {
    if window == 0 || window % 2 == 0 || window > w.min(h) {
        return Err(Error::BadWindow(window));
    }
    Ok(window / 2)
}

/// Windowed mean and population variance with clamped borders, as two flat
/// row-major vectors.
fn plane_moments(p: &Padded, half: usize) -> (Vec<f64>, Vec<f64>) {
    let rect = Rect::full(p.w, p.h);
    let sums = window_sums_plane(p, half, rect);
    let sq = window_sums_product(p, p, 0, 0, half, rect);
    let area = ((2 * half + 1) * (2 * half + 1)) as f64;
    let mut mean = sums;
    let mut var = sq;
    for (m, v) in mean.iter_mut().zip(var.iter_mut()) {
        *m /= area;
        *v = *v / area - *m * *m;
    }
    (mean, var)
}

/// Per-pixel windowed mean and population variance of a grayscale image.
/// Borders are handled by clamping sample coordinates to the image edge.
pub fn local_stats(img: &PlanarImage, window: usize) -> Result<(Raster, Raster)> {
    let plane = require_gray(img)?;
    let (w, h) = (plane.width(), plane.height());
    let half = check_window(window, w, h)?;
    let padded = Padded::new(plane.as_slice(), w, h, half);
    let (mean, var) = plane_moments(&padded, half);
    Ok((Raster::from_vec(w, h, mean), Raster::from_vec(w, h, var)))
}

/// Everything one displacement evaluation needs; shared read-only across
/// worker threads.
struct SiContext {
    w: usize,
    h: usize,
    sh: usize,
    area: f64,
    c: f64,
    pr: Padded,
    pi: Padded,
    mean_r: Vec<f64>,
    var_r: Vec<f64>,
    mean_i: Vec<f64>,
    var_i: Vec<f64>,
}

impl SiContext {
    fn new(r: &Raster, i: &Raster, params: &StructureParams) -> Result<(Self, isize)> {
        if !r.same_dims(i) {
            return Err(Error::DimensionMismatch(
                r.width(),
                r.height(),
                i.width(),
                i.height(),
            ));
        }
        let (w, h) = (r.width(), r.height());
        if params.nhood == 0 || params.nhood % 2 == 0 {
            return Err(Error::BadWindow(params.nhood));
        }
        if w.min(h) < params.nhood {
            return Err(Error::TooSmall {
                needed: params.nhood,
                got_w: w,
                got_h: h,
            });
        }
        let sh = check_window(params.stat_window, w, h)?;
        let pr = Padded::new(r.as_slice(), w, h, sh);
        let pi = Padded::new(i.as_slice(), w, h, sh);
        let (mean_r, var_r) = plane_moments(&pr, sh);
        let (mean_i, var_i) = plane_moments(&pi, sh);
        let ctx = SiContext {
            w,
            h,
            sh,
            area: (params.stat_window * params.stat_window) as f64,
            c: params.stabilizer(),
            pr,
            pi,
            mean_r,
            var_r,
            mean_i,
            var_i,
        };
        Ok((ctx, (params.nhood / 2) as isize))
    }

    #[inline]
    fn candidate(&self, s_ri: f64, ri: usize, ii: usize) -> f64 {
        let cross = s_ri / self.area - self.mean_r[ri] * self.mean_i[ii];
        (2.0 * cross + self.c) / ((self.var_r[ri] + self.var_i[ii]) + self.c)
    }

    /// Folds one displacement's candidates into `best` via elementwise max.
    /// Centers whose displaced window stays inside the image go through the
    /// sliding box sums; centers whose candidate position clamps at a border
    /// are evaluated directly.
    fn accumulate(&self, dx: isize, dy: isize, best: &mut [f64]) {
        let (w, h) = (self.w as isize, self.h as isize);
        let ix0 = (-dx).max(0);
        let ix1 = w - dx.max(0);
        let iy0 = (-dy).max(0);
        let iy1 = h - dy.max(0);
        let interior = ix0 < ix1 && iy0 < iy1;

        if interior {
            let rect = Rect {
                x0: ix0 as usize,
                x1: ix1 as usize,
                y0: iy0 as usize,
                y1: iy1 as usize,
            };
            let sums = window_sums_product(&self.pr, &self.pi, dx, dy, self.sh, rect);
            let rw = rect.width();
            for cy in rect.y0..rect.y1 {
                let ry = cy * self.w;
                let iy = (cy as isize + dy) as usize * self.w;
                let srow = &sums[(cy - rect.y0) * rw..][..rw];
                for (k, cx) in (rect.x0..rect.x1).enumerate() {
                    let ri = ry + cx;
                    let ii = iy + (cx as isize + dx) as usize;
                    let cand = self.candidate(srow[k], ri, ii);
                    if cand > best[ri] {
                        best[ri] = cand;
                    }
                }
            }
        }

        for y in 0..h {
            if interior && y >= iy0 && y < iy1 {
                for x in 0..ix0 {
                    self.clamped_candidate(x, y, dx, dy, best);
                }
                for x in ix1..w {
                    self.clamped_candidate(x, y, dx, dy, best);
                }
            } else {
                for x in 0..w {
                    self.clamped_candidate(x, y, dx, dy, best);
                }
            }
        }
    }

    fn clamped_candidate(&self, x: isize, y: isize, dx: isize, dy: isize, best: &mut [f64]) {
        let (w, h) = (self.w as isize, self.h as isize);
        let m = (x + dx).clamp(0, w - 1);
        let n = (y + dy).clamp(0, h - 1);
        let sh = self.sh as isize;
        let win = 2 * self.sh + 1;
        let pad = self.pr.pad as isize;
        let mut s = 0.0;
        for v in -sh..=sh {
            let ar = &self.pr.row(y + v)[(x - sh + pad) as usize..][..win];
            let br = &self.pi.row(n + v)[(m - sh + pad) as usize..][..win];
            for (a, b) in ar.iter().zip(br) {
                s += a * b;
            }
        }
        let ri = (y * w + x) as usize;
        let ii = (n * w + m) as usize;
        let cand = self.candidate(s, ri, ii);
        if cand > best[ri] {
            best[ri] = cand;
        }
    }

    fn finish(&self, mut best: Vec<f64>) -> Raster {
        for v in &mut best {
            *v = v.clamp(-1.0, 1.0);
        }
        Raster::from_vec(self.w, self.h, best)
    }
}

fn displacements(nh: isize) -> Vec<(isize, isize)> {
    let mut out = Vec::with_capacity(((2 * nh + 1) * (2 * nh + 1)) as usize);
    for dy in -nh..=nh {
        for dx in -nh..=nh {
            out.push((dx, dy));
        }
    }
    out
}

/// Structure index raster in [-1, 1], search parallelized over displacements.
/// The merge is an elementwise max, so the result does not depend on worker
/// count or scheduling.
#[cfg(feature = "parallel")]
pub fn structure_index(
    ref_gray: &PlanarImage,
    rec_gray: &PlanarImage,
    params: &StructureParams,
) -> Result<Raster> {
    let r = require_gray(ref_gray)?;
    let i = require_gray(rec_gray)?;
    let (ctx, nh) = SiContext::new(r, i, params)?;
    let n = ctx.w * ctx.h;
    let best = displacements(nh)
        .into_par_iter()
        .fold(
            || vec![f64::NEG_INFINITY; n],
            |mut acc, (dx, dy)| {
                ctx.accumulate(dx, dy, &mut acc);
                acc
            },
        )
        .reduce(
            || vec![f64::NEG_INFINITY; n],
            |mut a, b| {
                for (av, bv) in a.iter_mut().zip(&b) {
                    if *bv > *av {
                        *av = *bv;
                    }
                }
                a
            },
        );
    Ok(ctx.finish(best))
}

#[cfg(not(feature = "parallel"))]
pub fn structure_index(
    ref_gray: &PlanarImage,
    rec_gray: &PlanarImage,
    params: &StructureParams,
) -> Result<Raster> {
    structure_index_seq(ref_gray, rec_gray, params)
}

/// Single-threaded structure index; bit-identical to [`structure_index`].
pub fn structure_index_seq(
    ref_gray: &PlanarImage,
    rec_gray: &PlanarImage,
    params: &StructureParams,
) -> Result<Raster> {
    let r = require_gray(ref_gray)?;
    let i = require_gray(rec_gray)?;
    let (ctx, nh) = SiContext::new(r, i, params)?;
    let mut best = vec![f64::NEG_INFINITY; ctx.w * ctx.h];
    for (dx, dy) in displacements(nh) {
        ctx.accumulate(dx, dy, &mut best);
    }
    Ok(ctx.finish(best))
}

/// Combines the index with texture flags into the per-level maps: d_s in
/// [0, 1] and the visibility divisor alpha_s (1.0 on plain pixels,
/// `a_textured` where the flag is set).
pub fn structure_difference(
    si: &Raster,
    texture_flags: &Raster,
    params: &StructureParams,
) -> Result<StructureMaps> {
    if !si.same_dims(texture_flags) {
        return Err(Error::DimensionMismatch(
            si.width(),
            si.height(),
            texture_flags.width(),
            texture_flags.height(),
        ));
    }
    let (w, h) = (si.width(), si.height());
    let mut d_s = Raster::filled(w, h, 0.0);
    let mut alpha_s = Raster::filled(w, h, 1.0);
    for (k, (&s, &f)) in si
        .as_slice()
        .iter()
        .zip(texture_flags.as_slice())
        .enumerate()
    {
        d_s.as_mut_slice()[k] = (1.0 - s) / 2.0;
        if f != 0.0 {
            alpha_s.as_mut_slice()[k] = params.a_textured;
        }
    }
    Ok(StructureMaps {
        si: si.clone(),
        d_s,
        alpha_s,
        texture_flags: texture_flags.clone(),
    })
}
