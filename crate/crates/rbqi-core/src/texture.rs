//! Two-stage texture/edge/uniform classification.
//!
//! Structure differences inside busy texture are much harder to see than the
//! same differences on flat areas, so textured pixels get a large visibility
//! divisor downstream. Stage 1 labels each pixel from its 3x3 variance;
//! stage 2 smooths the labels by voting over an 8x8 neighborhood and keeps
//! only the texture-dominated outcomes.

use crate::error::{Error, Result};
use crate::image::{ColorSpace, PlanarImage};
use crate::raster::Raster;
use crate::window::{window_sums_plane, window_sums_product, Padded, Rect};

/// Thresholds for both stages. The stage-1 bounds are variances in squared
/// gray levels: below `t_uniform` a 3x3 patch is flat, above `t_edge` it is
/// a hard transition. A full-range step inside a 3x3 window has variance
/// above 14000 while 8-bit noise texture hovers near 5400, so the 8100
/// default separates step edges from texture with a comfortable margin.
/// The `frac_*` fields are the stage-2 vote fractions of the 64-sample
/// neighborhood.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TextureParams {
    pub t_uniform: f64,
    pub t_edge: f64,
    /// Uniform when at least this fraction of votes is uniform.
    pub frac_uniform: f64,
    /// Uniform/texture when uniform votes reach this fraction and texture
    /// outvotes edge.
    pub frac_uniform_mixed: f64,
    /// Texture when texture votes reach this fraction.
    pub frac_texture: f64,
    /// Edge/texture when edge and texture votes reach these two fractions.
    pub frac_edge_mixed: f64,
    pub frac_texture_mixed: f64,
    /// Strong edge when edge votes reach this fraction; anything left over
    /// is a medium edge.
    pub frac_strong_edge: f64,
}

impl Default for TextureParams {
    fn default() -> Self {
        TextureParams {
            t_uniform: 25.0,
            t_edge: 8100.0,
            frac_uniform: 0.9,
            frac_uniform_mixed: 0.5,
            frac_texture: 0.5,
            frac_edge_mixed: 0.2,
            frac_texture_mixed: 0.3,
            frac_strong_edge: 0.5,
        }
    }
}

const LABEL_UNIFORM: u8 = 0;
const LABEL_TEXTURE: u8 = 1;
const LABEL_EDGE: u8 = 2;

/// Classifies every pixel of a grayscale image and returns the binary
/// texture flag raster (1.0 where the pixel counts as texture or
/// edge/texture, 0.0 elsewhere). Needs at least 8 px on each side for the
/// voting neighborhood.
pub fn classify_texture(img: &PlanarImage, params: &TextureParams) -> Result<Raster> {
    if img.space() != ColorSpace::Gray {
        return Err(Error::WrongColorSpace {
            expected: "grayscale",
            found: img.space().name(),
        });
    }
    let (w, h) = (img.width(), img.height());
    if w < 8 || h < 8 {
        return Err(Error::TooSmall {
            needed: 8,
            got_w: w,
            got_h: h,
        });
    }
    let plane = img.plane(0);

    // Stage 1: label from the 3x3 clamped-border population variance.
    let pad = Padded::new(plane.as_slice(), w, h, 1);
    let rect = Rect::full(w, h);
    let sums = window_sums_plane(&pad, 1, rect);
    let sq = window_sums_product(&pad, &pad, 0, 0, 1, rect);
    let labels: Vec<u8> = sums
        .iter()
        .zip(&sq)
        .map(|(&s, &ss)| {
            let mean = s / 9.0;
            let var = ss / 9.0 - mean * mean;
            if var < params.t_uniform {
                LABEL_UNIFORM
            } else if var > params.t_edge {
                LABEL_EDGE
            } else {
                LABEL_TEXTURE
            }
        })
        .collect();

    // Stage 2: vote over the 8x8 neighborhood (offsets -3..=4, clamped), so
    // N is always 64 and border pixels revote their clamped neighbors.
    let n = 64.0;
    let mut flags = Raster::filled(w, h, 0.0);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut u, mut t, mut e) = (0u32, 0u32, 0u32);
            for dy in -3..=4isize {
                let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                for dx in -3..=4isize {
                    let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                    match labels[yy * w + xx] {
                        LABEL_UNIFORM => u += 1,
                        LABEL_TEXTURE => t += 1,
                        _ => e += 1,
                    }
                }
            }
            let (u, t, e) = (f64::from(u), f64::from(t), f64::from(e));
            // First matching row of the decision table wins. Several rows
            // share an outcome but describe distinct classes, so they stay
            // separate instead of being merged into one condition.
            #[allow(clippy::if_same_then_else)]
            let textured = if u >= params.frac_uniform * n {
                false // uniform
            } else if u >= params.frac_uniform_mixed * n && t > e {
                false // uniform/texture
            } else if t >= params.frac_texture * n {
                true // texture
            } else if e >= params.frac_edge_mixed * n && t >= params.frac_texture_mixed * n {
                true // edge/texture
            } else {
                false // strong or medium edge
            };
            if textured {
                flags.set(x as usize, y as usize, 1.0);
            }
        }
    }
    Ok(flags)
}
