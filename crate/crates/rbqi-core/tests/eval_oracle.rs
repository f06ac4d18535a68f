//! Evaluation harness: frozen correlation values, rank invariances, logistic
//! recovery, and a small end-to-end run over files on disk.

mod common;

use std::fs;
use std::path::Path;

use common::{gray_image, Rng};
use rbqi_core::error::Error;
use rbqi_core::eval::{
    correlations, evaluate, fit_logistic, load_manifest, pearson, spearman, EvalOptions,
};
use rbqi_core::image::dump_pgm;
use rbqi_core::metrics::MetricKind;

// Six points checked against a scipy run that was done once and copied here:
// pearsonr and spearmanr on x = 1..6, y = (2,1,4,3,6,5) both give
// rho = 29/35 with the two-sided p below.
const X6: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
const Y6: [f64; 6] = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0];
const RHO6: f64 = 0.828_571_428_571_428_6;
const P6: f64 = 0.041_562_682_215_743_440;

#[test]
fn frozen_correlation_and_p_value() {
    let r = pearson(&X6, &Y6).unwrap();
    assert!((r - RHO6).abs() < 1e-9, "pearson {r}");
    let s = spearman(&X6, &Y6).unwrap();
    assert!((s - RHO6).abs() < 1e-9, "spearman {s}");

    let row = correlations(&Y6, &Y6, &X6).unwrap();
    assert!((row.pcc.unwrap() - RHO6).abs() < 1e-9);
    assert!((row.srocc.unwrap() - RHO6).abs() < 1e-9);
    assert!((row.p_pcc.unwrap() - P6).abs() < 1e-9, "p {:?}", row.p_pcc);
    assert!((row.p_srocc.unwrap() - P6).abs() < 1e-9);
}

#[test]
fn rank_correlation_ignores_monotone_warping() {
    let s = spearman(&X6, &Y6).unwrap();
    let warped: Vec<f64> = X6.iter().map(|&v| v * v * v + 1.0).collect();
    let sw = spearman(&warped, &Y6).unwrap();
    assert_eq!(s, sw, "cubing the scores changed a rank correlation");
}

#[test]
fn linear_correlation_ignores_affine_rescaling_after_the_fit() {
    // An affine map of the metric axis is absorbed by gamma_3 and gamma_4,
    // so fitted predictions, and hence the linear correlation, are stable.
    let mut rng = Rng::new(0xe7a1_0001);
    let scores: Vec<f64> = (0..40).map(|_| rng.range(0.0, 4.0)).collect();
    let mos: Vec<f64> = scores
        .iter()
        .map(|&s| {
            let clean = 1.0 + 4.0 / (1.0 + (-(s - 2.0) / 0.8).exp());
            (clean + 0.05 * rng.normal()).clamp(1.0, 5.0)
        })
        .collect();
    let rescaled: Vec<f64> = scores.iter().map(|&s| 7.0 * s - 3.0).collect();

    let f1 = fit_logistic(&scores, &mos).unwrap();
    let f2 = fit_logistic(&rescaled, &mos).unwrap();
    let pred1: Vec<f64> = scores.iter().map(|&s| f1.predict(s)).collect();
    let pred2: Vec<f64> = rescaled.iter().map(|&s| f2.predict(s)).collect();
    let r1 = pearson(&pred1, &mos).unwrap();
    let r2 = pearson(&pred2, &mos).unwrap();
    assert!(
        (r1 - r2).abs() < 1e-6,
        "affine rescale moved fitted correlation: {r1} vs {r2}"
    );
}

#[test]
fn logistic_recovers_known_parameters_through_noise() {
    // gamma = (5, 1, 0.5, 0.2) sampled at 100 points with sigma 0.05 noise;
    // the fitted curve must track the data to RMSE <= 0.06 and fitted
    // correlation >= 0.995, and a second run must reproduce it bit for bit.
    let run = || {
        let mut rng = Rng::new(0xe7a1_0011);
        let scores: Vec<f64> = (0..100).map(|k| k as f64 / 99.0).collect();
        let mos: Vec<f64> = scores
            .iter()
            .map(|&s| {
                let clean = (5.0 - 1.0) / (1.0 + (-(s - 0.5) / 0.2).exp()) + 1.0;
                clean + 0.05 * rng.normal()
            })
            .collect();
        let fit = fit_logistic(&scores, &mos).unwrap();
        let pred: Vec<f64> = scores.iter().map(|&s| fit.predict(s)).collect();
        let row = correlations(&pred, &scores, &mos).unwrap();
        (fit, row)
    };
    let (fit, row) = run();
    assert!(fit.converged, "fit flagged non-converged on clean data");
    assert!(row.rmse <= 0.06, "rmse {}", row.rmse);
    assert!(row.pcc.unwrap() >= 0.995, "pcc {:?}", row.pcc);

    let (fit2, row2) = run();
    assert_eq!(fit.gamma, fit2.gamma, "refit changed parameters");
    assert_eq!(row.rmse, row2.rmse);
}

#[test]
fn correlations_need_five_pairs() {
    let x = [1.0, 2.0, 3.0, 4.0];
    assert!(matches!(
        correlations(&x, &x, &x),
        Err(Error::TooFewSamples { needed: 5, got: 4 })
    ));
}

/// Writes a small dataset to disk: reference/reconstruction PGM pairs plus a
/// manifest. Degradation strength tracks 5 - mos so scores should correlate.
fn write_dataset(dir: &Path, n: usize) {
    let mut rng = Rng::new(0xe7a1_0021);
    let mut lines = vec!["pair_id,reference,reconstructed,mos,subset".to_string()];
    for k in 0..n {
        let base: Vec<f64> = (0..48 * 48).map(|_| rng.level()).collect();
        let refr = gray_image(48, 48, |x, y| base[y * 48 + x]);
        let mos = 5.0 - 0.6 * k as f64 / (n - 1).max(1) as f64 * 4.0;
        let strength = (5.0 - mos) * 12.0;
        let noise: Vec<f64> = (0..48 * 48)
            .map(|_| (rng.uniform() - 0.5) * 2.0 * strength)
            .collect();
        let rec = gray_image(48, 48, |x, y| {
            (base[y * 48 + x] + noise[y * 48 + x]).clamp(0.0, 255.0)
        });
        dump_pgm(refr.plane(0), &dir.join(format!("ref{k}.pgm"))).unwrap();
        dump_pgm(rec.plane(0), &dir.join(format!("rec{k}.pgm"))).unwrap();
        let subset = if k % 2 == 0 { "even" } else { "odd" };
        lines.push(format!("p{k:02},ref{k}.pgm,rec{k}.pgm,{mos},{subset}"));
    }
    fs::write(dir.join("manifest.csv"), lines.join("\n") + "\n").unwrap();
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn evaluate_produces_a_full_row_grid_and_deterministic_csv() {
    let dir = scratch();
    write_dataset(dir.path(), 8);
    let manifest = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let mut options = EvalOptions::default();
    options.metrics = vec![MetricKind::Rbqi, MetricKind::Psnr, MetricKind::Ssim];
    // 48 px images only fit two halvings before the coarse-level floor.
    options.params.rbqi.levels = 2;
    options.params.rbqi.structure.nhood = 5;

    let report = evaluate(&manifest, &options).unwrap();
    assert!(report.skipped.is_empty(), "skipped: {:?}", report.skipped);

    // 3 metrics x (all + even + odd) = 9 rows, metric-major, whole set
    // leading each metric's block.
    assert_eq!(report.rows.len(), 9);
    for (b, metric) in ["rbqi", "psnr", "ssim"].iter().enumerate() {
        assert_eq!(report.rows[3 * b].metric, *metric);
        assert_eq!(report.rows[3 * b].subset, "all");
        assert_eq!(report.rows[3 * b + 1].subset, "even");
        assert_eq!(report.rows[3 * b + 2].subset, "odd");
    }
    for metric in ["rbqi", "psnr", "ssim"] {
        for subset in ["all", "even", "odd"] {
            let row = report
                .find(metric, subset)
                .unwrap_or_else(|| panic!("missing row {metric}/{subset}"));
            if subset == "all" {
                assert_eq!(row.n, 8);
                assert!(row.pcc.is_some(), "{metric}/all lost its statistics");
            } else {
                // Four pairs per half: present, but below the correlation
                // floor, so the cells stay empty.
                assert_eq!(row.n, 4);
                assert!(row.pcc.is_none());
                assert!(row.rmse.is_none());
            }
        }
    }

    // The monotone noise ramp must be visible to the index.
    let rbqi_all = report.find("rbqi", "all").unwrap();
    assert!(
        rbqi_all.srocc.unwrap().abs() > 0.9,
        "rank correlation too weak: {:?}",
        rbqi_all.srocc
    );

    let again = evaluate(&manifest, &options).unwrap();
    assert_eq!(report.to_csv(), again.to_csv(), "repeat run changed the CSV");
}

#[test]
fn evaluate_keeps_small_manifests_on_the_grid() {
    let dir = scratch();
    write_dataset(dir.path(), 4);
    let manifest = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let mut options = EvalOptions::default();
    options.metrics = vec![MetricKind::Age];

    let report = evaluate(&manifest, &options).unwrap();
    let all = report.find("age", "all").unwrap();
    assert_eq!(all.n, 4);
    assert!(all.pcc.is_none() && all.srocc.is_none() && all.rmse.is_none());
}

#[test]
fn evaluate_can_focus_on_one_subset() {
    let dir = scratch();
    write_dataset(dir.path(), 10);
    let manifest = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let mut options = EvalOptions::default();
    options.metrics = vec![MetricKind::Psnr];
    options.subset = Some("even".to_string());

    let report = evaluate(&manifest, &options).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].subset, "even");
    assert_eq!(report.rows[0].n, 5);
    assert!(report.rows[0].pcc.is_some());
}

#[test]
fn missing_reconstruction_is_skipped_not_fatal() {
    let dir = scratch();
    write_dataset(dir.path(), 6);
    fs::remove_file(dir.path().join("rec3.pgm")).unwrap();
    let manifest =
        rbqi_core::eval::load_manifest_deferred(&dir.path().join("manifest.csv")).unwrap();
    let mut options = EvalOptions::default();
    options.metrics = vec![MetricKind::Age];

    let report = evaluate(&manifest, &options).unwrap();
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].pair_id, "p03");
    assert_eq!(report.find("age", "all").unwrap().n, 5);

    // The strict loader refuses the same manifest up front.
    assert!(load_manifest(&dir.path().join("manifest.csv")).is_err());
}
