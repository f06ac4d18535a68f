//! Multiscale decomposition shared by the quality index and MS-SSIM.

use crate::error::{Error, Result};
use crate::image::{ColorSpace, ImagePair, PlanarImage};
use crate::raster::Raster;

/// One pyramid level: grayscale and Lab views of both pair members, all four
/// rasters sharing dimensions.
pub struct PyramidLevel {
    pub ref_gray: PlanarImage,
    pub rec_gray: PlanarImage,
    pub ref_lab: PlanarImage,
    pub rec_lab: PlanarImage,
}

/// Levels ordered fine to coarse; level 0 has the input dimensions.
pub struct PyramidPair {
    pub levels: Vec<PyramidLevel>,
}

impl PyramidPair {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

/// 2x2 box average followed by decimation by 2 on each axis. Odd trailing
/// rows/columns are dropped. Summation order inside each block is fixed so
/// repeated runs are bit-identical.
pub(crate) fn downsample_plane(p: &Raster) -> Raster {
    let (w, h) = (p.width() / 2, p.height() / 2);
    debug_assert!(w >= 1 && h >= 1);
    let mut out = Raster::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let s = ((p.get(2 * x, 2 * y) + p.get(2 * x + 1, 2 * y))
                + p.get(2 * x, 2 * y + 1))
                + p.get(2 * x + 1, 2 * y + 1);
            out.set(x, y, 0.25 * s);
        }
    }
    out
}

fn downsample_image(img: &PlanarImage) -> PlanarImage {
    let planes = img.planes().iter().map(downsample_plane).collect();
    PlanarImage::new_unchecked(img.space(), planes)
}

/// Builds the L-level decomposition: per level, grayscale and Lab versions of
/// both images. Grayscale input pairs are promoted to sRGB by channel
/// replication before the Lab conversion, putting them on the neutral axis.
///
/// The coarsest level must keep at least 24 px on its short side so the
/// structure search window and the 8x8 pooling regions stay meaningful.
pub fn build_pyramid(pair: &ImagePair, levels: usize) -> Result<PyramidPair> {
    let min_dim = pair.width().min(pair.height());
    if levels == 0 || levels > usize::BITS as usize - 1 || min_dim < 24usize << (levels - 1) {
        return Err(Error::TooSmallForLevels { levels, min_dim });
    }

    let (ref_gray, rec_gray, ref_lab, rec_lab) = match pair.space() {
        ColorSpace::Srgb => (
            pair.reference.to_gray()?,
            pair.reconstructed.to_gray()?,
            pair.reference.to_lab()?,
            pair.reconstructed.to_lab()?,
        ),
        ColorSpace::Gray => (
            pair.reference.clone(),
            pair.reconstructed.clone(),
            pair.reference.gray_to_srgb()?.to_lab()?,
            pair.reconstructed.gray_to_srgb()?.to_lab()?,
        ),
        ColorSpace::Lab => {
            return Err(Error::WrongColorSpace {
                expected: "sRGB or grayscale",
                found: "Lab",
            })
        }
    };

    let mut out = Vec::with_capacity(levels);
    out.push(PyramidLevel {
        ref_gray,
        rec_gray,
        ref_lab,
        rec_lab,
    });
    for l in 1..levels {
        let prev = &out[l - 1];
        out.push(PyramidLevel {
            ref_gray: downsample_image(&prev.ref_gray),
            rec_gray: downsample_image(&prev.rec_gray),
            ref_lab: downsample_image(&prev.ref_lab),
            rec_lab: downsample_image(&prev.rec_lab),
        });
    }
    Ok(PyramidPair { levels: out })
}
