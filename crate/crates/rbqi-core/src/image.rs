//! Planar f64 images, file loading, and color conversions.
//!
//! Pixels are promoted to f64 at load time and every later stage works in
//! doubles; 8-bit quantization only reappears in the debug PGM dump.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorSpace {
    Gray,
    Srgb,
    Lab,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            ColorSpace::Srgb | ColorSpace::Lab => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Gray => "grayscale",
            ColorSpace::Srgb => "sRGB",
            ColorSpace::Lab => "Lab",
        }
    }
}

/// One image as per-channel planes. Grayscale images hold a single plane,
/// sRGB and Lab three. All planes share dimensions and contain only finite
/// samples; the type is immutable after construction.
#[derive(Clone, Debug)]
pub struct PlanarImage {
    space: ColorSpace,
    planes: Vec<Raster>,
}

impl PlanarImage {
    pub fn from_planes(space: ColorSpace, planes: Vec<Raster>) -> Result<Self> {
        if planes.is_empty() || planes[0].is_empty() {
            return Err(Error::EmptyInput);
        }
        if planes.len() != space.channels() {
            return Err(Error::WrongColorSpace {
                expected: space.name(),
                found: "wrong plane count",
            });
        }
        let (w, h) = (planes[0].width(), planes[0].height());
        for p in &planes {
            if p.width() != w || p.height() != h {
                return Err(Error::DimensionMismatch(w, h, p.width(), p.height()));
            }
            if !p.all_finite() {
                return Err(Error::NonFiniteInput);
            }
        }
        Ok(PlanarImage { space, planes })
    }

    /// Internal constructor for planes whose invariants hold by construction
    /// (conversions, pyramid levels). Checked only in debug builds.
    pub(crate) fn new_unchecked(space: ColorSpace, planes: Vec<Raster>) -> Self {
        debug_assert_eq!(planes.len(), space.channels());
        debug_assert!(planes
            .iter()
            .all(|p| p.width() == planes[0].width() && p.height() == planes[0].height()));
        PlanarImage { space, planes }
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn plane(&self, i: usize) -> &Raster {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[Raster] {
        &self.planes
    }

    /// Rec.601 luma of an sRGB image, applied to the nonlinear 8-bit values.
    pub fn to_gray(&self) -> Result<PlanarImage> {
        if self.space != ColorSpace::Srgb {
            return Err(Error::WrongColorSpace {
                expected: "sRGB",
                found: self.space.name(),
            });
        }
        let (r, g, b) = (&self.planes[0], &self.planes[1], &self.planes[2]);
        let mut y = Raster::filled(self.width(), self.height(), 0.0);
        for (i, out) in y.as_mut_slice().iter_mut().enumerate() {
            *out = 0.299 * r.as_slice()[i] + 0.587 * g.as_slice()[i] + 0.114 * b.as_slice()[i];
        }
        Ok(PlanarImage::new_unchecked(ColorSpace::Gray, vec![y]))
    }

    /// sRGB to CIELAB under D65: IEC 61966-2-1 gamma expansion, the standard
    /// sRGB matrix, then the cube-root lightness function.
    pub fn to_lab(&self) -> Result<PlanarImage> {
        if self.space != ColorSpace::Srgb {
            return Err(Error::WrongColorSpace {
                expected: "sRGB",
                found: self.space.name(),
            });
        }
        let (w, h) = (self.width(), self.height());
        let mut l = Raster::filled(w, h, 0.0);
        let mut a = Raster::filled(w, h, 0.0);
        let mut b = Raster::filled(w, h, 0.0);
        for i in 0..w * h {
            let (lv, av, bv) = srgb_pixel_to_lab(
                self.planes[0].as_slice()[i],
                self.planes[1].as_slice()[i],
                self.planes[2].as_slice()[i],
            );
            l.as_mut_slice()[i] = lv;
            a.as_mut_slice()[i] = av;
            b.as_mut_slice()[i] = bv;
        }
        Ok(PlanarImage::new_unchecked(ColorSpace::Lab, vec![l, a, b]))
    }

    /// Promotes a grayscale image to sRGB by replicating the plane. The
    /// result sits on the neutral axis, so Lab a and b vanish and the color
    /// path degenerates to lightness differences, which is the sensible
    /// reading of the color term for achromatic input.
    pub fn gray_to_srgb(&self) -> Result<PlanarImage> {
        if self.space != ColorSpace::Gray {
            return Err(Error::WrongColorSpace {
                expected: "grayscale",
                found: self.space.name(),
            });
        }
        let p = self.planes[0].clone();
        Ok(PlanarImage::new_unchecked(
            ColorSpace::Srgb,
            vec![p.clone(), p.clone(), p],
        ))
    }
}

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

fn srgb_expand(c: f64) -> f64 {
    let c = c / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    // Threshold (6/29)^3 with the linear toe below it.
    const DELTA3: f64 = 216.0 / 24389.0;
    const SLOPE: f64 = 24389.0 / 27.0 / 116.0; // 1 / (3 delta^2)
    if t > DELTA3 {
        t.cbrt()
    } else {
        SLOPE * t + 16.0 / 116.0
    }
}

pub(crate) fn srgb_pixel_to_lab(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    // Each matrix row sums to its white-point component, so a neutral pixel
    // has X/Xn == Y/Yn == Z/Zn algebraically and a == b == 0. The rounded
    // row sums do not honor that identity, which would leave ~1e-13 of fake
    // chroma on gray pixels; take the shared quotient directly instead.
    if r == g && g == b {
        let f = lab_f(srgb_expand(r));
        return (116.0 * f - 16.0, 0.0, 0.0);
    }
    let (rl, gl, bl) = (srgb_expand(r), srgb_expand(g), srgb_expand(b));
    let mut xyz = [0.0; 3];
    for (row, out) in SRGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * rl + row[1] * gl + row[2] * bl;
    }
    let fx = lab_f(xyz[0] / D65_WHITE[0]);
    let fy = lab_f(xyz[1] / D65_WHITE[1]);
    let fz = lab_f(xyz[2] / D65_WHITE[2]);
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Reference/reconstruction pair with matching dimensions and color space.
#[derive(Clone, Debug)]
pub struct ImagePair {
    pub reference: PlanarImage,
    pub reconstructed: PlanarImage,
}

impl ImagePair {
    pub fn new(reference: PlanarImage, reconstructed: PlanarImage) -> Result<Self> {
        if reference.width() != reconstructed.width()
            || reference.height() != reconstructed.height()
        {
            return Err(Error::DimensionMismatch(
                reference.width(),
                reference.height(),
                reconstructed.width(),
                reconstructed.height(),
            ));
        }
        if reference.space() != reconstructed.space() {
            return Err(Error::WrongColorSpace {
                expected: reference.space().name(),
                found: reconstructed.space().name(),
            });
        }
        Ok(ImagePair {
            reference,
            reconstructed,
        })
    }

    pub fn width(&self) -> usize {
        self.reference.width()
    }

    pub fn height(&self) -> usize {
        self.reference.height()
    }

    pub fn space(&self) -> ColorSpace {
        self.reference.space()
    }
}

/// Decodes an 8-bit PNG or PNM file into a planar image. Alpha channels are
/// dropped; anything that is not 8 bits per sample is rejected rather than
/// silently rescaled.
pub fn load_image(path: &Path) -> Result<PlanarImage> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?
        .with_guessed_format()
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        image::ImageError::Decoding(d) => Error::CorruptData(d.to_string()),
        image::ImageError::Limits(l) => Error::CorruptData(l.to_string()),
        image::ImageError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::CorruptData(format!("{path:?}: unexpected end of file"))
        }
        image::ImageError::IoError(io) => Error::Io {
            path: path.to_path_buf(),
            source: io,
        },
        other => Error::CorruptData(other.to_string()),
    })?;

    use image::DynamicImage::*;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::CorruptData(format!("{path:?}: zero-sized image")));
    }
    let take = |chan: usize, stride: usize, bytes: &[u8]| -> Raster {
        let mut r = Raster::filled(w, h, 0.0);
        for (i, out) in r.as_mut_slice().iter_mut().enumerate() {
            *out = bytes[i * stride + chan] as f64;
        }
        r
    };
    match decoded {
        ImageLuma8(buf) => {
            let bytes = buf.into_raw();
            Ok(PlanarImage::new_unchecked(
                ColorSpace::Gray,
                vec![take(0, 1, &bytes)],
            ))
        }
        ImageLumaA8(buf) => {
            let bytes = buf.into_raw();
            Ok(PlanarImage::new_unchecked(
                ColorSpace::Gray,
                vec![take(0, 2, &bytes)],
            ))
        }
        ImageRgb8(buf) => {
            let bytes = buf.into_raw();
            let planes = (0..3).map(|c| take(c, 3, &bytes)).collect();
            Ok(PlanarImage::new_unchecked(ColorSpace::Srgb, planes))
        }
        ImageRgba8(buf) => {
            let bytes = buf.into_raw();
            let planes = (0..3).map(|c| take(c, 4, &bytes)).collect();
            Ok(PlanarImage::new_unchecked(ColorSpace::Srgb, planes))
        }
        _ => Err(Error::UnsupportedFormat(format!(
            "{path:?}: only 8-bit grayscale and RGB images are supported"
        ))),
    }
}

/// Writes a raster as a binary 8-bit PGM (debug dumps of difference maps).
/// Values are clamped to [0,255] and rounded half away from zero.
pub fn dump_pgm(r: &Raster, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    write!(out, "P5\n{} {}\n255\n", r.width(), r.height()).map_err(io_err)?;
    let bytes: Vec<u8> = r
        .as_slice()
        .iter()
        .map(|&v| v.clamp(0.0, 255.0).round() as u8)
        .collect();
    out.write_all(&bytes).map_err(io_err)?;
    out.flush().map_err(io_err)
}
