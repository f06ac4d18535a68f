//! Correlation and error statistics between metric outputs and opinion
//! scores.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// One report row's worth of agreement statistics. Correlations are `None`
/// when undefined (zero variance on either side).
#[derive(Clone, Debug)]
pub struct CorrelationRow {
    pub n: usize,
    pub pcc: Option<f64>,
    pub srocc: Option<f64>,
    pub rmse: f64,
    pub p_pcc: Option<f64>,
    pub p_srocc: Option<f64>,
}

/// 1-based ranks with ties averaged, the usual rank-correlation convention.
/// Values must not contain NaN; infinities rank fine.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN in ranks"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average of ranks i+1..=j+1.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson linear correlation; `None` if either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank-order correlation with average-rank ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn rmse(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len());
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    (sum / pred.len() as f64).sqrt()
}

/// Two-tailed p-value for a correlation of `rho` over `n` samples, via the
/// t-statistic with n-2 degrees of freedom. Perfect correlations pin p to 0.
pub fn correlation_p_value(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    2.0 * dist.cdf(-t.abs())
}

/// Assembles one report row: accuracy (PCC) and consistency (RMSE) against
/// the fitted predictions, monotonicity (SROCC) against the raw scores.
pub fn correlations(fitted: &[f64], raw: &[f64], mos: &[f64]) -> Result<CorrelationRow> {
    let n = mos.len();
    assert!(fitted.len() == n && raw.len() == n);
    if n < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: n });
    }
    let pcc = pearson(fitted, mos);
    let srocc = spearman(raw, mos);
    Ok(CorrelationRow {
        n,
        pcc,
        srocc,
        rmse: rmse(fitted, mos),
        p_pcc: pcc.map(|r| correlation_p_value(r, n)),
        p_srocc: srocc.map(|r| correlation_p_value(r, n)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_over_ties() {
        let r = average_ranks(&[10.0, 20.0, 20.0, 5.0]);
        assert_eq!(r, vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn infinities_rank_last() {
        let r = average_ranks(&[1.0, f64::INFINITY, 3.0]);
        assert_eq!(r, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn perfect_line_and_degenerate_side() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[7.0; 4]), None);
    }

    #[test]
    fn swapped_neighbors_dataset() {
        // Hand-ranked: x = 1..6 against y = pairwise swaps.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0];
        let rho = spearman(&x, &y).unwrap();
        assert!((rho - 29.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            correlations(&v, &v, &v),
            Err(Error::TooFewSamples { needed: 5, got: 4 })
        ));
    }
}
