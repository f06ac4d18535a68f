//! Four-parameter logistic mapping from raw metric scores to the opinion
//! scale, fitted with Levenberg-Marquardt. The nonlinear remap is standard
//! practice before computing PCC/RMSE so that metrics with different output
//! ranges are compared on equal footing.

use crate::error::{Error, Result};

/// predicted(M) = (g1 - g2) / (1 + exp(-(M - g3)/|g4|)) + g2
#[derive(Clone, Debug)]
pub struct LogisticFit {
    pub gamma: [f64; 4],
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

impl LogisticFit {
    pub fn predict(&self, score: f64) -> f64 {
        let [g1, g2, g3, g4] = self.gamma;
        (g1 - g2) * sigmoid((score - g3) / g4.abs()) + g2
    }
}

/// Numerically stable logistic; saturates cleanly for +-inf input.
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Solves a 4x4 system in place with partial pivoting. `None` if singular.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut s = b[col];
        for k in col + 1..4 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn residual_norm2(scores: &[f64], mos: &[f64], g: &[f64; 4]) -> f64 {
    let fit = LogisticFit {
        gamma: *g,
        converged: false,
        iterations: 0,
        residual_norm: 0.0,
    };
    scores
        .iter()
        .zip(mos)
        .map(|(&s, &m)| {
            let r = fit.predict(s) - m;
            r * r
        })
        .sum()
}

const MAX_ITERATIONS: usize = 2000;

/// Fits the logistic to (score, mos) pairs.
///
/// The target side must be finite; scores may include +-inf (a lossless
/// PSNR pair, for instance), which saturate the logistic and contribute a
/// zero Jacobian row for the shape parameters. A flat opinion column is
/// answered with the exact constant fit before any degeneracy check, since
/// that fit is trivially right. Identical scores with varying opinions have
/// no usable slope and error out. Hitting the iteration cap is reported via
/// `converged: false` on the best parameters found, not as an error.
pub fn fit_logistic(scores: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    assert_eq!(scores.len(), mos.len());
    let n = scores.len();
    if n < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: n });
    }
    if scores.iter().any(|v| v.is_nan()) || mos.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }

    if mos.iter().all(|&m| m == mos[0]) {
        // Constant target: predictions equal the constant for any shape, so
        // report the exact fit immediately (zero residual, trivially done).
        return Ok(LogisticFit {
            gamma: [mos[0], mos[0], 0.0, 1.0],
            converged: true,
            iterations: 0,
            residual_norm: 0.0,
        });
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(Error::DegenerateInput(
            "all scores identical; logistic has no slope to fit".into(),
        ));
    }

    let finite: Vec<f64> = {
        let mut v: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let (g3_init, g4_init) = if finite.is_empty() {
        (0.0, 1.0)
    } else {
        let med = median(&finite);
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        let var = finite.iter().map(|&s| (s - mean) * (s - mean)).sum::<f64>()
            / finite.len() as f64;
        let sd = var.sqrt();
        (med, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })
    };
    let mut g = [
        mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mos.iter().cloned().fold(f64::INFINITY, f64::min),
        g3_init,
        g4_init,
    ];

    let mut norm2 = residual_norm2(scores, mos, &g);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        // Accumulate J^T J and J^T r for the current parameters.
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        let a = g[0] - g[1];
        let g4a = g[3].abs();
        for (&score, &m) in scores.iter().zip(mos) {
            let z = (score - g[2]) / g4a;
            let s = sigmoid(z);
            let pred = a * s + g[1];
            let r = pred - m;
            let q = s * (1.0 - s);
            // Saturated samples (q == 0, e.g. infinite scores) carry no
            // information about the center or scale; zero those entries
            // rather than multiplying 0 by an infinite z.
            let (j3, j4) = if q == 0.0 {
                (0.0, 0.0)
            } else {
                (-a * q / g4a, -a * q * z * g[3].signum() / g4a)
            };
            let j = [s, 1.0 - s, j3, j4];
            for row in 0..4 {
                for col in 0..4 {
                    jtj[row][col] += j[row] * j[col];
                }
                jtr[row] += j[row] * r;
            }
        }

        // Damped step: (J^T J + lambda I) d = -J^T r. Retries with larger
        // damping happen on later iterations rather than an inner loop so
        // the iteration cap bounds total work.
        let mut aug = jtj;
        for (row, cell) in aug.iter_mut().enumerate() {
            cell[row] += lambda;
        }
        let step = solve4(aug, [-jtr[0], -jtr[1], -jtr[2], -jtr[3]]);

        let mut accepted = false;
        if let Some(d) = step {
            let cand = [g[0] + d[0], g[1] + d[1], g[2] + d[2], g[3] + d[3]];
            if cand.iter().all(|v| v.is_finite()) && cand[3] != 0.0 {
                let cand_norm2 = residual_norm2(scores, mos, &cand);
                if cand_norm2 < norm2 {
                    let improvement = norm2.sqrt() - cand_norm2.sqrt();
                    g = cand;
                    norm2 = cand_norm2;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if improvement < 1e-10 * norm2.sqrt().max(1e-30) || norm2 == 0.0 {
                        converged = true;
                        break;
                    }
                }
            }
        }
        if !accepted {
            lambda *= 10.0;
            if lambda > 1e14 {
                // Damping has ground the step to nothing; we are at a local
                // minimum for all practical purposes.
                converged = true;
                break;
            }
        }
    }

    Ok(LogisticFit {
        gamma: g,
        converged,
        iterations,
        residual_norm: norm2.sqrt(),
    })
}
