//! Uniform access to every metric the toolkit computes, so the evaluation
//! driver and the command line can ask for "a list of metrics on a pair"
//! without caring which module implements each one.

use std::fmt;

use crate::baselines::{age, error_pixels, msssim, psnr, ssim, BaselineParams, PsnrScore};
use crate::error::Result;
use crate::image::{ColorSpace, ImagePair};
use crate::pipeline::{rbqi, rbqi_seq, RbqiParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Rbqi,
    Age,
    Ep,
    PEp,
    Cep,
    PCep,
    Psnr,
    Ssim,
    MsSsim,
}

pub const ALL_METRICS: [MetricKind; 9] = [
    MetricKind::Rbqi,
    MetricKind::Age,
    MetricKind::Ep,
    MetricKind::PEp,
    MetricKind::Cep,
    MetricKind::PCep,
    MetricKind::Psnr,
    MetricKind::Ssim,
    MetricKind::MsSsim,
];

impl MetricKind {
    /// Machine-friendly name used in CSV columns and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Rbqi => "rbqi",
            MetricKind::Age => "age",
            MetricKind::Ep => "ep",
            MetricKind::PEp => "pep",
            MetricKind::Cep => "cep",
            MetricKind::PCep => "pcep",
            MetricKind::Psnr => "psnr",
            MetricKind::Ssim => "ssim",
            MetricKind::MsSsim => "msssim",
        }
    }

    /// Display name for tables.
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Rbqi => "RBQI",
            MetricKind::Age => "AGE",
            MetricKind::Ep => "EP",
            MetricKind::PEp => "pEP",
            MetricKind::Cep => "CEP",
            MetricKind::PCep => "pCEP",
            MetricKind::Psnr => "PSNR",
            MetricKind::Ssim => "SSIM",
            MetricKind::MsSsim => "MS-SSIM",
        }
    }

    /// Parses a metric name, accepting the table spellings too.
    pub fn parse(s: &str) -> Option<MetricKind> {
        match s.to_ascii_lowercase().as_str() {
            "rbqi" => Some(MetricKind::Rbqi),
            "age" => Some(MetricKind::Age),
            "ep" => Some(MetricKind::Ep),
            "pep" => Some(MetricKind::PEp),
            "cep" => Some(MetricKind::Cep),
            "pcep" => Some(MetricKind::PCep),
            "psnr" => Some(MetricKind::Psnr),
            "ssim" => Some(MetricKind::Ssim),
            "msssim" | "ms-ssim" => Some(MetricKind::MsSsim),
            _ => None,
        }
    }

    fn needs_gray(self) -> bool {
        !matches!(self, MetricKind::Rbqi)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything the metric set needs; both halves have usable defaults.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct MetricParams {
    pub rbqi: RbqiParams,
    pub baseline: BaselineParams,
}

/// A single metric output. PSNR keeps its lossless sentinel distinct from
/// any finite decibel value; everything else is a plain number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricValue {
    Number(f64),
    Identical,
}

impl MetricValue {
    /// Numeric view; the lossless sentinel becomes +infinity, which ranks
    /// and fits correctly in the correlation pipeline.
    pub fn as_f64(self) -> f64 {
        match self {
            MetricValue::Number(v) => v,
            MetricValue::Identical => f64::INFINITY,
        }
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Number(v) => write!(f, "{v}"),
            MetricValue::Identical => f.write_str("identical"),
        }
    }
}

/// Scores one pair on the requested metrics, in the requested order.
///
/// Baselines run on the gray channel; a color pair is converted once up
/// front. The reconstruction-quality index takes either space directly.
/// Error-pixel counts are computed a single time even if several of the
/// derived statistics are requested.
pub fn score_pair(
    pair: &ImagePair,
    metrics: &[MetricKind],
    params: &MetricParams,
) -> Result<Vec<(MetricKind, MetricValue)>> {
    score_pair_impl(pair, metrics, params, false)
}

/// Like `score_pair` but forcing the sequential scoring path.
pub fn score_pair_seq(
    pair: &ImagePair,
    metrics: &[MetricKind],
    params: &MetricParams,
) -> Result<Vec<(MetricKind, MetricValue)>> {
    score_pair_impl(pair, metrics, params, true)
}

fn score_pair_impl(
    pair: &ImagePair,
    metrics: &[MetricKind],
    params: &MetricParams,
    sequential: bool,
) -> Result<Vec<(MetricKind, MetricValue)>> {
    let gray_storage;
    let gray_pair = if metrics.iter().any(|m| m.needs_gray()) && pair.space() != ColorSpace::Gray
    {
        gray_storage = ImagePair::new(
            pair.reference.to_gray()?,
            pair.reconstructed.to_gray()?,
        )?;
        &gray_storage
    } else {
        pair
    };

    let mut ep_counts = None;
    let mut out = Vec::with_capacity(metrics.len());
    for &kind in metrics {
        let value = match kind {
            MetricKind::Rbqi => {
                let result = if sequential {
                    rbqi_seq(pair, &params.rbqi)?
                } else {
                    rbqi(pair, &params.rbqi)?
                };
                MetricValue::Number(result.rbqi)
            }
            MetricKind::Age => MetricValue::Number(age(gray_pair)?),
            MetricKind::Ep | MetricKind::PEp | MetricKind::Cep | MetricKind::PCep => {
                if ep_counts.is_none() {
                    ep_counts = Some(error_pixels(gray_pair, params.baseline.ep_threshold)?);
                }
                let c = ep_counts.as_ref().unwrap();
                MetricValue::Number(match kind {
                    MetricKind::Ep => c.ep as f64,
                    MetricKind::PEp => c.p_ep,
                    MetricKind::Cep => c.cep as f64,
                    _ => c.p_cep,
                })
            }
            MetricKind::Psnr => match psnr(gray_pair)? {
                PsnrScore::Db(v) => MetricValue::Number(v),
                PsnrScore::Identical => MetricValue::Identical,
            },
            MetricKind::Ssim => MetricValue::Number(ssim(gray_pair, &params.baseline)?),
            MetricKind::MsSsim => MetricValue::Number(msssim(gray_pair, &params.baseline)?),
        };
        out.push((kind, value));
    }
    Ok(out)
}
