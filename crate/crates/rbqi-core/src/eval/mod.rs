//! Correlation evaluation against subjective scores: load a manifest, score
//! every pair, fit the logistic remap per metric, and report PCC / SROCC /
//! RMSE per subset.

pub mod logistic;
pub mod manifest;
pub mod stats;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::image::{load_image, ImagePair};
use crate::metrics::{score_pair, score_pair_seq, MetricKind, MetricParams, MetricValue, ALL_METRICS};

pub use logistic::{fit_logistic, LogisticFit};
pub use manifest::{
    load_external_scores, load_manifest, load_manifest_deferred, DatasetManifest, ExternalScore,
    ManifestEntry,
};
pub use stats::{correlations, pearson, rmse, spearman, CorrelationRow};

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub metric: String,
    pub subset: String,
    pub n: usize,
    /// `None` in any statistic means it could not be computed for this row:
    /// fewer than five pairs, or no spread on one side.
    pub pcc: Option<f64>,
    pub srocc: Option<f64>,
    pub rmse: Option<f64>,
    pub p_pcc: Option<f64>,
    pub p_srocc: Option<f64>,
    pub fit_converged: bool,
}

#[derive(Clone, Debug)]
pub struct SkippedPair {
    pub pair_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub skipped: Vec<SkippedPair>,
}

fn fmt_opt(v: Option<f64>) -> String {
    // Shortest round-trip float formatting keeps the CSV bit-deterministic
    // without committing to a decimal count.
    v.map_or(String::new(), |x| format!("{x}"))
}

impl EvaluationReport {
    pub fn find(&self, metric: &str, subset: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.subset == subset)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,subset,n,pcc,srocc,rmse,p_pcc,p_srocc\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.metric,
                r.subset,
                r.n,
                fmt_opt(r.pcc),
                fmt_opt(r.srocc),
                fmt_opt(r.rmse),
                fmt_opt(r.p_pcc),
                fmt_opt(r.p_srocc),
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let fmt4 = |v: Option<f64>| v.map_or("      -".to_string(), |x| format!("{x:7.4}"));
        let mut out = format!(
            "{:<10} {:<12} {:>5} {:>7} {:>7} {:>7} {:>9} {:>9}\n",
            "metric", "subset", "n", "pcc", "srocc", "rmse", "p(pcc)", "p(srocc)"
        );
        let mut any_unconverged = false;
        for r in &self.rows {
            let p4 = |v: Option<f64>| v.map_or("        -".to_string(), |x| format!("{x:9.2e}"));
            let mark = if r.fit_converged {
                " "
            } else {
                any_unconverged = true;
                "*"
            };
            out.push_str(&format!(
                "{:<10} {:<12} {:>5} {} {} {} {} {}{}\n",
                r.metric,
                r.subset,
                r.n,
                fmt4(r.pcc),
                fmt4(r.srocc),
                fmt4(r.rmse),
                p4(r.p_pcc),
                p4(r.p_srocc),
                mark,
            ));
        }
        if any_unconverged {
            out.push_str("* logistic fit hit its iteration cap; statistics use best parameters found\n");
        }
        if !self.skipped.is_empty() {
            out.push_str(&format!("skipped {} pair(s):\n", self.skipped.len()));
            for s in &self.skipped {
                out.push_str(&format!("  {}: {}\n", s.pair_id, s.reason));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub metrics: Vec<MetricKind>,
    pub params: MetricParams,
    /// Restrict the report to one subset tag.
    pub subset: Option<String>,
    /// Scores computed by other tools, merged in as extra report rows.
    pub external: Vec<ExternalScore>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            metrics: ALL_METRICS.to_vec(),
            params: MetricParams::default(),
            subset: None,
            external: Vec::new(),
        }
    }
}

/// Scores every manifest pair and assembles the correlation report.
///
/// Pairs that cannot be loaded or scored are skipped and listed in the
/// report rather than failing the run. A row whose statistics cannot be
/// computed (fewer than five usable pairs, or a metric with no spread)
/// still appears, with those cells empty, so the report shape always
/// matches metrics x subsets. Rows appear per metric, with the whole-set
/// row first and subset rows following in manifest order; the row layout
/// and float formatting are deterministic, so the same inputs produce a
/// byte-identical CSV no matter how the scoring work was scheduled.
pub fn evaluate(manifest: &DatasetManifest, options: &EvalOptions) -> Result<EvaluationReport> {
    evaluate_impl(manifest, options, false)
}

/// Like `evaluate` but scoring pairs one at a time on one thread.
pub fn evaluate_seq(manifest: &DatasetManifest, options: &EvalOptions) -> Result<EvaluationReport> {
    evaluate_impl(manifest, options, true)
}

fn score_entry(
    entry: &ManifestEntry,
    options: &EvalOptions,
    sequential: bool,
) -> std::result::Result<Vec<(MetricKind, MetricValue)>, Error> {
    let reference = load_image(&entry.reference)?;
    let reconstructed = load_image(&entry.reconstructed)?;
    let pair = ImagePair::new(reference, reconstructed)?;
    if sequential {
        score_pair_seq(&pair, &options.metrics, &options.params)
    } else {
        score_pair(&pair, &options.metrics, &options.params)
    }
}

fn evaluate_impl(
    manifest: &DatasetManifest,
    options: &EvalOptions,
    sequential: bool,
) -> Result<EvaluationReport> {
    let entries: Vec<&ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| options.subset.as_deref().is_none_or(|s| e.subset == s))
        .collect();

    let scored = score_all(&entries, options, sequential);

    let mut report = EvaluationReport::default();
    let mut usable: Vec<(&ManifestEntry, Vec<(MetricKind, MetricValue)>)> = Vec::new();
    for (entry, result) in entries.iter().zip(scored) {
        match result {
            Ok(values) => usable.push((entry, values)),
            Err(e) => report.skipped.push(SkippedPair {
                pair_id: entry.pair_id.clone(),
                reason: e.to_string(),
            }),
        }
    }

    // Row layout: whole set first (unless already restricted to one tag),
    // then each tag in manifest order.
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    if options.subset.is_none() {
        groups.push(("all".to_string(), (0..usable.len()).collect()));
    }
    for (i, (entry, _)) in usable.iter().enumerate() {
        match groups.iter_mut().find(|(tag, _)| *tag == entry.subset) {
            Some((_, idxs)) => idxs.push(i),
            None => groups.push((entry.subset.clone(), vec![i])),
        }
    }

    for (mi, &kind) in options.metrics.iter().enumerate() {
        for (tag, idxs) in &groups {
            let scores: Vec<f64> = idxs.iter().map(|&i| usable[i].1[mi].1.as_f64()).collect();
            let mos: Vec<f64> = idxs.iter().map(|&i| usable[i].0.mos).collect();
            report.rows.push(make_row(kind.name(), tag, &scores, &mos)?);
        }
    }

    // External scores join by pair_id; metrics appear after the built-in
    // ones, alphabetically so the layout does not depend on file order.
    let mut external: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for row in &options.external {
        external
            .entry(row.metric.as_str())
            .or_default()
            .insert(row.pair_id.as_str(), row.score);
    }
    for (metric, by_pair) in &external {
        for (tag, idxs) in &groups {
            let mut scores = Vec::new();
            let mut mos = Vec::new();
            for &i in idxs {
                if let Some(&s) = by_pair.get(usable[i].0.pair_id.as_str()) {
                    scores.push(s);
                    mos.push(usable[i].0.mos);
                }
            }
            report.rows.push(make_row(metric, tag, &scores, &mos)?);
        }
    }

    Ok(report)
}

fn make_row(metric: &str, subset: &str, scores: &[f64], mos: &[f64]) -> Result<ReportRow> {
    let empty = || ReportRow {
        metric: metric.to_string(),
        subset: subset.to_string(),
        n: scores.len(),
        pcc: None,
        srocc: None,
        rmse: None,
        p_pcc: None,
        p_srocc: None,
        fit_converged: true,
    };
    if scores.len() < 5 {
        return Ok(empty());
    }
    let fit = match fit_logistic(scores, mos) {
        Ok(fit) => fit,
        // No spread in the scores: nothing to fit, nothing to rank.
        Err(Error::DegenerateInput(_)) => return Ok(empty()),
        Err(e) => return Err(e),
    };
    let predictions: Vec<f64> = scores.iter().map(|&s| fit.predict(s)).collect();
    let stats = correlations(&predictions, scores, mos)?;
    Ok(ReportRow {
        metric: metric.to_string(),
        subset: subset.to_string(),
        n: stats.n,
        pcc: stats.pcc,
        srocc: stats.srocc,
        rmse: Some(stats.rmse),
        p_pcc: stats.p_pcc,
        p_srocc: stats.p_srocc,
        fit_converged: fit.converged,
    })
}

#[cfg(feature = "parallel")]
fn score_all(
    entries: &[&ManifestEntry],
    options: &EvalOptions,
    sequential: bool,
) -> Vec<std::result::Result<Vec<(MetricKind, MetricValue)>, Error>> {
    use rayon::prelude::*;
    if sequential {
        entries
            .iter()
            .map(|e| score_entry(e, options, true))
            .collect()
    } else {
        entries
            .par_iter()
            .map(|e| score_entry(e, options, false))
            .collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn score_all(
    entries: &[&ManifestEntry],
    options: &EvalOptions,
    sequential: bool,
) -> Vec<std::result::Result<Vec<(MetricKind, MetricValue)>, Error>> {
    entries
        .iter()
        .map(|e| score_entry(e, options, sequential))
        .collect()
}

/// Which scoring parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    /// Structure-search neighborhood side length.
    Nhood,
    /// Pyramid depth.
    Levels,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nhood" => Ok(SweepParameter::Nhood),
            "l" | "levels" => Ok(SweepParameter::Levels),
            _ => Err(Error::UnknownParameter(name.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Nhood => "nhood",
            SweepParameter::Levels => "levels",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: usize,
    pub report: EvaluationReport,
}

/// Runs the full evaluation once per parameter value. Values that the
/// scoring core rejects (an even neighborhood, a pyramid too deep for the
/// images) surface as that pair being skipped, exactly as in `evaluate`.
pub fn sweep(
    manifest: &DatasetManifest,
    options: &EvalOptions,
    param: SweepParameter,
    values: &[usize],
) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut opts = options.clone();
        match param {
            SweepParameter::Nhood => opts.params.rbqi.structure.nhood = value,
            SweepParameter::Levels => opts.params.rbqi.levels = value,
        }
        points.push(SweepPoint {
            value,
            report: evaluate(manifest, &opts)?,
        });
    }
    Ok(points)
}
