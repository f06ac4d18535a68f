//! Probability-summation pooling of the difference maps into one score.
//!
//! Each pixel is treated as an independent detector whose miss probability is
//! exp(-|d/alpha|^beta); independence makes no-detection probabilities
//! multiply across pixels, regions, levels, and scales, which collapses into
//! a plain sum of |d/alpha|^beta terms in the exponent. The score is
//! log10(1 + D) so large distortions saturate the way opinions do.

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::structure::StructureMaps;
use crate::color::ColorMaps;

#[derive(Clone, Debug, serde::Serialize)]
pub struct PoolingParams {
    pub beta_s: f64,
    pub beta_c: f64,
    /// Pooling block width; partial edge blocks are kept as smaller blocks.
    pub region: usize,
}

impl Default for PoolingParams {
    fn default() -> Self {
        PoolingParams {
            beta_s: 3.5,
            beta_c: 3.5,
            region: 8,
        }
    }
}

/// Final score and its diagnostic decomposition.
#[derive(Clone, Debug)]
pub struct RbqiResult {
    /// log10(1 + D); 0 means no perceptible difference.
    pub rbqi: f64,
    /// Pooled Minkowski sum over both channels, all levels.
    pub d: f64,
    /// Per-level structure aggregates (beta-norm of d_s/alpha_s per level).
    pub d_s_per_level: Vec<f64>,
    /// Per-level color aggregates.
    pub d_c_per_level: Vec<f64>,
    /// 1 - exp(-D): probability that the distortion is detected at all.
    pub p_detect: f64,
}

/// Per-level pooling inputs as produced by the structure and color paths.
pub struct LevelMaps {
    pub d_s: Raster,
    pub alpha_s: Raster,
    pub d_c: Raster,
    pub alpha_c: Raster,
}

/// |x|^beta. The default exponent gets an exact-monotone fast path: x^3.5 as
/// x^3 * sqrt(x) is a composition of operations that are each monotone under
/// rounding, which the no-tolerance search-window comparisons rely on, and it
/// is far cheaper than powf.
#[inline]
pub(crate) fn minkowski_term(x: f64, beta: f64) -> f64 {
    let x = x.abs();
    if beta == 3.5 {
        ((x * x) * x) * x.sqrt()
    } else {
        x.powf(beta)
    }
}

/// Per-pixel detection probabilities 1 - exp(-|d/alpha|^beta) for the
/// structure and color channels.
pub fn detection_probability_maps(
    smaps: &StructureMaps,
    cmaps: &ColorMaps,
    params: &PoolingParams,
) -> Result<(Raster, Raster)> {
    if !smaps.d_s.same_dims(&cmaps.d_c) {
        return Err(Error::DimensionMismatch(
            smaps.d_s.width(),
            smaps.d_s.height(),
            cmaps.d_c.width(),
            cmaps.d_c.height(),
        ));
    }
    let p = |d: &Raster, alpha: &Raster, beta: f64| -> Raster {
        let vals = d
            .as_slice()
            .iter()
            .zip(alpha.as_slice())
            .map(|(&d, &a)| -(-minkowski_term(d / a, beta)).exp_m1())
            .collect();
        Raster::from_vec(d.width(), d.height(), vals)
    };
    Ok((
        p(&smaps.d_s, &smaps.alpha_s, params.beta_s),
        p(&cmaps.d_c, &cmaps.alpha_c, params.beta_c),
    ))
}

fn validate(levels: &[LevelMaps]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::EmptyInput);
    }
    for lv in levels {
        if lv.d_s.is_empty() {
            return Err(Error::EmptyInput);
        }
        for r in [&lv.alpha_s, &lv.d_c, &lv.alpha_c] {
            if !r.same_dims(&lv.d_s) {
                return Err(Error::DimensionMismatch(
                    lv.d_s.width(),
                    lv.d_s.height(),
                    r.width(),
                    r.height(),
                ));
            }
        }
        for r in [&lv.d_s, &lv.alpha_s, &lv.d_c, &lv.alpha_c] {
            if !r.all_finite() {
                return Err(Error::NonFiniteInput);
            }
        }
    }
    Ok(())
}

fn score_from_d(d: f64) -> (f64, f64) {
    // log10(1 + D) through ln_1p so D == 0 maps to exactly 0.
    let rbqi = d.ln_1p() / std::f64::consts::LN_10;
    let p_detect = -(-d).exp_m1();
    (rbqi, p_detect)
}

/// Collapsed pooling: one pass per level in row-major order, accumulating
/// the structure and color Minkowski terms, then the log mapping. This is
/// the production scorer; the summation order is fixed so results are
/// bit-reproducible.
pub fn pool_to_score(levels: &[LevelMaps], params: &PoolingParams) -> Result<RbqiResult> {
    validate(levels)?;
    let mut d_total = 0.0;
    let mut d_s_per_level = Vec::with_capacity(levels.len());
    let mut d_c_per_level = Vec::with_capacity(levels.len());
    for lv in levels {
        let mut s_sum = 0.0;
        let mut c_sum = 0.0;
        for k in 0..lv.d_s.len() {
            s_sum += minkowski_term(
                lv.d_s.as_slice()[k] / lv.alpha_s.as_slice()[k],
                params.beta_s,
            );
            c_sum += minkowski_term(
                lv.d_c.as_slice()[k] / lv.alpha_c.as_slice()[k],
                params.beta_c,
            );
        }
        d_s_per_level.push(s_sum.powf(1.0 / params.beta_s));
        d_c_per_level.push(c_sum.powf(1.0 / params.beta_c));
        d_total += s_sum + c_sum;
    }
    let (rbqi, p_detect) = score_from_d(d_total);
    Ok(RbqiResult {
        rbqi,
        d: d_total,
        d_s_per_level,
        d_c_per_level,
        p_detect,
    })
}

/// Staged pooling: Minkowski aggregation region by region, then across
/// regions within a level, then across levels, finally recombining the two
/// channels. Algebraically identical to [`pool_to_score`] because the
/// exponent is the same at every stage; kept as a separate implementation so
/// the identity is testable rather than assumed.
pub fn pool_to_score_staged(levels: &[LevelMaps], params: &PoolingParams) -> Result<RbqiResult> {
    validate(levels)?;
    let channel = |pick: fn(&LevelMaps) -> (&Raster, &Raster), beta: f64| -> (Vec<f64>, f64) {
        let mut per_level = Vec::with_capacity(levels.len());
        for lv in levels {
            let (d, alpha) = pick(lv);
            let (w, h) = (d.width(), d.height());
            let mut level_sum = 0.0;
            for by in (0..h).step_by(8) {
                for bx in (0..w).step_by(8) {
                    let mut region_sum = 0.0;
                    for y in by..(by + 8).min(h) {
                        for x in bx..(bx + 8).min(w) {
                            region_sum += minkowski_term(d.get(x, y) / alpha.get(x, y), beta);
                        }
                    }
                    let region_agg = region_sum.powf(1.0 / beta);
                    level_sum += region_agg.powf(beta);
                }
            }
            per_level.push(level_sum.powf(1.0 / beta));
        }
        let scale_sum: f64 = per_level.iter().map(|v| v.powf(beta)).sum();
        let scale_agg = scale_sum.powf(1.0 / beta);
        (per_level, scale_agg)
    };
    let (d_s_per_level, ds) = channel(|lv| (&lv.d_s, &lv.alpha_s), params.beta_s);
    let (d_c_per_level, dc) = channel(|lv| (&lv.d_c, &lv.alpha_c), params.beta_c);
    let d = ds.powf(params.beta_s) + dc.powf(params.beta_c);
    let (rbqi, p_detect) = score_from_d(d);
    Ok(RbqiResult {
        rbqi,
        d,
        d_s_per_level,
        d_c_per_level,
        p_detect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(w: usize, h: usize, d_s: f64, alpha_s: f64, d_c: f64, alpha_c: f64) -> LevelMaps {
        LevelMaps {
            d_s: Raster::filled(w, h, d_s),
            alpha_s: Raster::filled(w, h, alpha_s),
            d_c: Raster::filled(w, h, d_c),
            alpha_c: Raster::filled(w, h, alpha_c),
        }
    }

    #[test]
    fn zero_maps_score_exactly_zero() {
        let levels = vec![level(16, 16, 0.0, 1.0, 0.0, 2.3)];
        let r = pool_to_score(&levels, &PoolingParams::default()).unwrap();
        assert_eq!(r.d, 0.0);
        assert_eq!(r.rbqi, 0.0);
        assert_eq!(r.p_detect, 0.0);
    }

    #[test]
    fn single_unit_summand() {
        let levels = vec![level(1, 1, 1.0, 1.0, 0.0, 2.3)];
        let r = pool_to_score(&levels, &PoolingParams::default()).unwrap();
        assert_eq!(r.d, 1.0);
        assert!((r.rbqi - 2.0_f64.log10()).abs() < 1e-12);
        assert!((r.p_detect - (1.0 - (-1.0_f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn empty_and_nonfinite_inputs_are_rejected() {
        assert!(matches!(
            pool_to_score(&[], &PoolingParams::default()),
            Err(Error::EmptyInput)
        ));
        let mut bad = level(4, 4, 0.1, 1.0, 0.0, 2.3);
        bad.d_c.set(2, 2, f64::NAN);
        assert!(matches!(
            pool_to_score(&[bad], &PoolingParams::default()),
            Err(Error::NonFiniteInput)
        ));
    }

    #[test]
    fn texture_divisor_crushes_detection() {
        let smaps = StructureMaps {
            si: Raster::filled(2, 2, 0.0),
            d_s: Raster::filled(2, 2, 0.5),
            alpha_s: Raster::filled(2, 2, 1000.0),
            texture_flags: Raster::filled(2, 2, 1.0),
        };
        let cmaps = ColorMaps {
            d_c: Raster::filled(2, 2, 0.0),
            alpha_c: Raster::filled(2, 2, 2.3),
        };
        let (p_ds, p_dc) =
            detection_probability_maps(&smaps, &cmaps, &PoolingParams::default()).unwrap();
        assert!(p_ds.as_slice().iter().all(|&p| p < 1e-10));
        assert!(p_dc.as_slice().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn unit_ratio_detection_probability() {
        let smaps = StructureMaps {
            si: Raster::filled(1, 1, -1.0),
            d_s: Raster::filled(1, 1, 1.0),
            alpha_s: Raster::filled(1, 1, 1.0),
            texture_flags: Raster::filled(1, 1, 0.0),
        };
        let cmaps = ColorMaps {
            d_c: Raster::filled(1, 1, 0.0),
            alpha_c: Raster::filled(1, 1, 2.3),
        };
        let (p_ds, _) =
            detection_probability_maps(&smaps, &cmaps, &PoolingParams::default()).unwrap();
        assert!((p_ds.get(0, 0) - 0.6321205588285577).abs() < 1e-12);
    }

    #[test]
    fn level_diagnostics_recombine_to_the_total() {
        let mut state = 0xfeed_u64;
        let mut rnd = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 40) as f64 / (1u64 << 24) as f64
        };
        let levels: Vec<LevelMaps> = (0..3)
            .map(|l| {
                let n = 32 >> l;
                LevelMaps {
                    d_s: Raster::from_vec(n, n, (0..n * n).map(|_| rnd()).collect()),
                    alpha_s: Raster::filled(n, n, 1.0),
                    d_c: Raster::from_vec(n, n, (0..n * n).map(|_| rnd() * 20.0).collect()),
                    alpha_c: Raster::filled(n, n, 2.3),
                }
            })
            .collect();
        let params = PoolingParams::default();
        let r = pool_to_score(&levels, &params).unwrap();
        let recombined: f64 = (0..3)
            .map(|l| {
                r.d_s_per_level[l].powf(params.beta_s) + r.d_c_per_level[l].powf(params.beta_c)
            })
            .sum();
        assert!((recombined - r.d).abs() <= 1e-9 * r.d.max(1.0));
    }
}
