//! End-to-end scoring pipeline: pyramid, per-level structure and color maps,
//! pooling.

use crate::color::{ajncd_threshold, color_distance, gaussian_blur, ColorMaps, ColorParams};
use crate::error::Result;
use crate::image::{ImagePair, PlanarImage};
use crate::pooling::{pool_to_score, LevelMaps, PoolingParams, RbqiResult};
use crate::pyramid::build_pyramid;
use crate::raster::Raster;
use crate::structure::{
    structure_difference, structure_index, structure_index_seq, StructureMaps, StructureParams,
};
use crate::texture::{classify_texture, TextureParams};

/// Full parameter set for one scoring run.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RbqiParams {
    pub structure: StructureParams,
    pub texture: TextureParams,
    pub color: ColorParams,
    pub pooling: PoolingParams,
    /// Pyramid depth.
    pub levels: usize,
}

impl RbqiParams {
    pub fn new() -> Self {
        RbqiParams {
            structure: StructureParams::default(),
            texture: TextureParams::default(),
            color: ColorParams::default(),
            pooling: PoolingParams::default(),
            levels: 3,
        }
    }
}

impl Default for RbqiParams {
    fn default() -> Self {
        Self::new()
    }
}

/// Everything one level produced, for debug dumps and diagnostics.
pub struct LevelDiagnostics {
    pub structure: StructureMaps,
    pub color: ColorMaps,
}

type SiFn = fn(&PlanarImage, &PlanarImage, &StructureParams) -> Result<Raster>;

fn level_pipeline(
    ref_gray: &PlanarImage,
    rec_gray: &PlanarImage,
    ref_lab: &PlanarImage,
    rec_lab: &PlanarImage,
    params: &RbqiParams,
    si_fn: SiFn,
) -> Result<(StructureMaps, ColorMaps)> {
    let si = si_fn(ref_gray, rec_gray, &params.structure)?;
    // Texture masking, like the color threshold below, is driven by the
    // reference alone: visibility depends on what the scene looks like, not
    // on what the reconstruction put there.
    let flags = classify_texture(ref_gray, &params.texture)?;
    let smaps = structure_difference(&si, &flags, &params.structure)?;

    let ref_blurred = gaussian_blur(ref_lab, &params.color)?;
    let rec_blurred = gaussian_blur(rec_lab, &params.color)?;
    let d_c = color_distance(&ref_blurred, &rec_blurred)?;
    let alpha_c = ajncd_threshold(&ref_blurred, &params.color)?;
    Ok((smaps, ColorMaps { d_c, alpha_c }))
}

fn run(
    pair: &ImagePair,
    params: &RbqiParams,
    si_fn: SiFn,
    keep_maps: bool,
) -> Result<(RbqiResult, Vec<LevelDiagnostics>)> {
    let pyramid = build_pyramid(pair, params.levels)?;
    let mut level_maps = Vec::with_capacity(pyramid.level_count());
    let mut diagnostics = Vec::new();
    for level in &pyramid.levels {
        let (smaps, cmaps) = level_pipeline(
            &level.ref_gray,
            &level.rec_gray,
            &level.ref_lab,
            &level.rec_lab,
            params,
            si_fn,
        )?;
        if keep_maps {
            level_maps.push(LevelMaps {
                d_s: smaps.d_s.clone(),
                alpha_s: smaps.alpha_s.clone(),
                d_c: cmaps.d_c.clone(),
                alpha_c: cmaps.alpha_c.clone(),
            });
            diagnostics.push(LevelDiagnostics {
                structure: smaps,
                color: cmaps,
            });
        } else {
            level_maps.push(LevelMaps {
                d_s: smaps.d_s,
                alpha_s: smaps.alpha_s,
                d_c: cmaps.d_c,
                alpha_c: cmaps.alpha_c,
            });
        }
    }
    let result = pool_to_score(&level_maps, &params.pooling)?;
    Ok((result, diagnostics))
}

/// Scores one pair. Grayscale pairs are placed on the Lab neutral axis by
/// channel replication, so their color term reduces to lightness distance.
pub fn rbqi(pair: &ImagePair, params: &RbqiParams) -> Result<RbqiResult> {
    run(pair, params, structure_index, false).map(|(r, _)| r)
}

/// Single-threaded scorer, bit-identical to [`rbqi`].
pub fn rbqi_seq(pair: &ImagePair, params: &RbqiParams) -> Result<RbqiResult> {
    run(pair, params, structure_index_seq, false).map(|(r, _)| r)
}

/// Like [`rbqi`] but also returns every intermediate map per level, for the
/// debug dump interface.
pub fn rbqi_with_maps(
    pair: &ImagePair,
    params: &RbqiParams,
) -> Result<(RbqiResult, Vec<LevelDiagnostics>)> {
    run(pair, params, structure_index, true)
}
