//! Command-line front end: score a pair, evaluate a manifest against
//! opinion scores, or sweep a scoring parameter. Every number printed here
//! comes straight from the library; this binary only parses arguments and
//! formats output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rbqi_core::eval::{
    evaluate, load_external_scores, load_manifest_deferred, sweep, EvalOptions,
    EvaluationReport, SweepParameter, SweepPoint,
};
use rbqi_core::image::{dump_pgm, load_image, ImagePair};
use rbqi_core::metrics::{score_pair, MetricKind, MetricParams, MetricValue, ALL_METRICS};
use rbqi_core::pooling::detection_probability_maps;
use rbqi_core::raster::Raster;
use rbqi_core::{rbqi_with_maps, Error};

#[derive(Parser)]
#[command(name = "rbqi", version, about = "Background reconstruction quality metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one reference/reconstruction pair
    Score {
        reference: PathBuf,
        reconstructed: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Write per-level intermediate maps as PGM files into this directory
        #[arg(long, value_name = "DIR")]
        dump_maps: Option<PathBuf>,
    },
    /// Correlate metric scores with the opinion scores in a manifest
    Evaluate {
        /// CSV with header pair_id,reference,reconstructed,mos,subset
        manifest: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Only report rows for this subset tag
        #[arg(long, value_name = "TAG")]
        subset: Option<String>,
        /// Merge scores computed elsewhere (CSV: pair_id,metric,score)
        #[arg(long, value_name = "FILE")]
        external_scores: Option<PathBuf>,
    },
    /// Re-run the evaluation for several values of one scoring parameter
    Sweep {
        manifest: PathBuf,
        /// Parameter to vary: nhood or L
        parameter: String,
        /// Comma-separated values, e.g. 1,9,17,33
        values: String,
        #[command(flatten)]
        common: CommonArgs,
        /// Only report rows for this subset tag
        #[arg(long, value_name = "TAG")]
        subset: Option<String>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Comma-separated metrics (rbqi,age,ep,pep,cep,pcep,psnr,ssim,msssim) or "all"
    #[arg(long, default_value = "all")]
    metrics: String,
    /// Structure search neighborhood side length (odd)
    #[arg(long)]
    nhood: Option<usize>,
    /// Pyramid depth
    #[arg(long)]
    levels: Option<usize>,
    /// Structure pooling exponent
    #[arg(long)]
    beta_s: Option<f64>,
    /// Color pooling exponent
    #[arg(long)]
    beta_c: Option<f64>,
    /// Gray-level threshold for the error-pixel family
    #[arg(long)]
    ep_threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    output: OutputFormat,
    /// Worker threads for scoring (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Table,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::DimensionMismatch(..) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Score {
            reference,
            reconstructed,
            common,
            dump_maps,
        } => cmd_score(&reference, &reconstructed, &common, dump_maps.as_deref()),
        Command::Evaluate {
            manifest,
            common,
            subset,
            external_scores,
        } => cmd_evaluate(&manifest, &common, subset, external_scores.as_deref()),
        Command::Sweep {
            manifest,
            parameter,
            values,
            common,
            subset,
        } => cmd_sweep(&manifest, &parameter, &values, &common, subset),
    }
}

fn parse_metrics(arg: &str) -> Result<Vec<MetricKind>, Error> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(ALL_METRICS.to_vec());
    }
    let mut out = Vec::new();
    for name in arg.split(',') {
        let name = name.trim();
        match MetricKind::parse(name) {
            Some(kind) => {
                if !out.contains(&kind) {
                    out.push(kind);
                }
            }
            None => {
                return Err(Error::ParseError {
                    line: 0,
                    msg: format!(
                        "unknown metric {name:?}; valid: rbqi, age, ep, pep, cep, pcep, psnr, ssim, msssim"
                    ),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::ParseError {
            line: 0,
            msg: "empty metric list".into(),
        });
    }
    Ok(out)
}

fn build_params(common: &CommonArgs) -> Result<MetricParams, Error> {
    let mut params = MetricParams::default();
    if let Some(n) = common.nhood {
        if n == 0 || n % 2 == 0 {
            return Err(Error::BadWindow(n));
        }
        params.rbqi.structure.nhood = n;
    }
    if let Some(l) = common.levels {
        if l == 0 {
            return Err(Error::ParseError {
                line: 0,
                msg: "levels must be at least 1".into(),
            });
        }
        params.rbqi.levels = l;
    }
    for (flag, target) in [
        (common.beta_s, &mut params.rbqi.pooling.beta_s),
        (common.beta_c, &mut params.rbqi.pooling.beta_c),
    ] {
        if let Some(b) = flag {
            if b.is_nan() || b <= 0.0 {
                return Err(Error::ParseError {
                    line: 0,
                    msg: format!("pooling exponent must be positive, got {b}"),
                });
            }
            *target = b;
        }
    }
    if let Some(t) = common.ep_threshold {
        if t.is_nan() || t < 0.0 {
            return Err(Error::ParseError {
                line: 0,
                msg: format!("ep threshold must be non-negative, got {t}"),
            });
        }
        params.baseline.ep_threshold = t;
    }
    Ok(params)
}

#[cfg(feature = "parallel")]
fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // A failure here means a pool already exists (repeat call in-process);
        // scoring still works, just on the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_workers(_workers: Option<usize>) {}

fn json_value(value: MetricValue) -> serde_json::Value {
    match value {
        MetricValue::Number(v) => serde_json::json!(v),
        MetricValue::Identical => serde_json::json!("identical"),
    }
}

fn cmd_score(
    reference: &Path,
    reconstructed: &Path,
    common: &CommonArgs,
    dump_dir: Option<&Path>,
) -> Result<ExitCode, Error> {
    let metrics = parse_metrics(&common.metrics)?;
    let params = build_params(common)?;
    init_workers(common.workers);

    let pair = ImagePair::new(load_image(reference)?, load_image(reconstructed)?)?;
    let scores = score_pair(&pair, &metrics, &params)?;

    if let Some(dir) = dump_dir {
        dump_intermediate_maps(&pair, &params, dir)?;
    }

    let mut text = String::new();
    match common.output {
        OutputFormat::Table => {
            for (kind, value) in &scores {
                text.push_str(&format!("{:<8} {}\n", kind.name(), value));
            }
        }
        OutputFormat::Csv => {
            text.push_str("metric,value\n");
            for (kind, value) in &scores {
                text.push_str(&format!("{},{}\n", kind.name(), value));
            }
        }
        OutputFormat::Json => {
            let mut obj = serde_json::Map::new();
            for (kind, value) in &scores {
                obj.insert(kind.name().to_string(), json_value(*value));
            }
            let doc = serde_json::json!({
                "reference": reference.display().to_string(),
                "reconstructed": reconstructed.display().to_string(),
                "scores": obj,
                "params": params,
            });
            text = serde_json::to_string_pretty(&doc).expect("json");
            text.push('\n');
        }
    }
    write_stdout(&text);
    Ok(ExitCode::SUCCESS)
}

/// Emits the final output in one write. A reader that closed the pipe early
/// (score | head, say) is not an error worth a panic message.
fn write_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).is_err() || out.flush().is_err() {
        std::process::exit(0);
    }
}

/// Writes every per-level intermediate map, rescaled to the 8-bit range so
/// image viewers can open them directly.
fn dump_intermediate_maps(
    pair: &ImagePair,
    params: &MetricParams,
    dir: &Path,
) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let (_, diagnostics) = rbqi_with_maps(pair, &params.rbqi)?;
    for (level, diag) in diagnostics.iter().enumerate() {
        let (p_s, p_c) =
            detection_probability_maps(&diag.structure, &diag.color, &params.rbqi.pooling)?;
        let maps: [(&str, &Raster); 8] = [
            ("si", &diag.structure.si),
            ("d_s", &diag.structure.d_s),
            ("alpha_s", &diag.structure.alpha_s),
            ("texture", &diag.structure.texture_flags),
            ("d_c", &diag.color.d_c),
            ("alpha_c", &diag.color.alpha_c),
            ("p_s", &p_s),
            ("p_c", &p_c),
        ];
        for (name, map) in maps {
            let path = dir.join(format!("level{level}_{name}.pgm"));
            dump_pgm(&rescale_for_dump(map), &path)?;
        }
    }
    Ok(())
}

fn rescale_for_dump(map: &Raster) -> Raster {
    let (lo, hi) = map.min_max().unwrap_or((0.0, 0.0));
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let vals = map.as_slice().iter().map(|&v| (v - lo) * scale).collect();
    Raster::from_vec(map.width(), map.height(), vals)
}

fn report_json(report: &EvaluationReport) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "metric": r.metric,
                "subset": r.subset,
                "n": r.n,
                "pcc": r.pcc,
                "srocc": r.srocc,
                "rmse": r.rmse,
                "p_pcc": r.p_pcc,
                "p_srocc": r.p_srocc,
                "fit_converged": r.fit_converged,
            })
        })
        .collect();
    let skipped: Vec<serde_json::Value> = report
        .skipped
        .iter()
        .map(|s| serde_json::json!({"pair_id": s.pair_id, "reason": s.reason}))
        .collect();
    serde_json::json!({"rows": rows, "skipped": skipped})
}

fn finish_report(report: &EvaluationReport) -> ExitCode {
    if report.skipped.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    }
}

fn cmd_evaluate(
    manifest_path: &Path,
    common: &CommonArgs,
    subset: Option<String>,
    external_path: Option<&Path>,
) -> Result<ExitCode, Error> {
    let metrics = parse_metrics(&common.metrics)?;
    let params = build_params(common)?;
    init_workers(common.workers);

    let manifest = load_manifest_deferred(manifest_path)?;
    let external = match external_path {
        Some(p) => load_external_scores(p)?,
        None => Vec::new(),
    };
    let options = EvalOptions {
        metrics,
        params,
        subset,
        external,
    };
    let report = evaluate(&manifest, &options)?;

    match common.output {
        OutputFormat::Table => write_stdout(&report.to_table()),
        OutputFormat::Csv => {
            write_stdout(&report.to_csv());
            for s in &report.skipped {
                eprintln!("skipped {}: {}", s.pair_id, s.reason);
            }
        }
        OutputFormat::Json => {
            let mut doc = report_json(&report);
            doc["params"] = serde_json::json!(options.params);
            let mut text = serde_json::to_string_pretty(&doc).expect("json");
            text.push('\n');
            write_stdout(&text);
        }
    }
    Ok(finish_report(&report))
}

fn sweep_table(parameter: &str, points: &[SweepPoint]) -> String {
    // One row per metric and subset, one column group per parameter value,
    // so trends across the sweep read left to right.
    let mut out = format!("sweep over {parameter}\n");
    let mut header = format!("{:<10} {:<12}", "metric", "subset");
    for p in points {
        header.push_str(&format!(
            " | {:>7} {:>7} {:>7}",
            format!("pcc@{}", p.value),
            format!("srocc@{}", p.value),
            format!("rmse@{}", p.value)
        ));
    }
    out.push_str(&header);
    out.push('\n');
    let Some(first) = points.first() else {
        return out;
    };
    let fmt = |v: Option<f64>| v.map_or("      -".to_string(), |x| format!("{x:7.4}"));
    for row in &first.report.rows {
        let mut line = format!("{:<10} {:<12}", row.metric, row.subset);
        for p in points {
            match p.report.find(&row.metric, &row.subset) {
                Some(r) => line.push_str(&format!(
                    " | {} {} {}",
                    fmt(r.pcc),
                    fmt(r.srocc),
                    fmt(r.rmse)
                )),
                None => line.push_str(&format!(" | {:>7} {:>7} {:>7}", "-", "-", "-")),
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn cmd_sweep(
    manifest_path: &Path,
    parameter: &str,
    values: &str,
    common: &CommonArgs,
    subset: Option<String>,
) -> Result<ExitCode, Error> {
    let param = SweepParameter::parse(parameter)?;
    let parsed_values: Vec<usize> = values
        .split(',')
        .map(|v| {
            v.trim().parse().map_err(|_| Error::ParseError {
                line: 0,
                msg: format!("sweep value is not a positive integer: {v:?}"),
            })
        })
        .collect::<Result<_, _>>()?;
    if parsed_values.is_empty() {
        return Err(Error::ParseError {
            line: 0,
            msg: "empty sweep value list".into(),
        });
    }
    let metrics = parse_metrics(&common.metrics)?;
    let params = build_params(common)?;
    init_workers(common.workers);

    let manifest = load_manifest_deferred(manifest_path)?;
    let options = EvalOptions {
        metrics,
        params,
        subset,
        external: Vec::new(),
    };
    let points = sweep(&manifest, &options, param, &parsed_values)?;

    let mut text = String::new();
    match common.output {
        OutputFormat::Table => text = sweep_table(param.name(), &points),
        OutputFormat::Csv => {
            text.push_str("parameter,value,metric,subset,n,pcc,srocc,rmse,p_pcc,p_srocc\n");
            for p in &points {
                for line in p.report.to_csv().lines().skip(1) {
                    text.push_str(&format!("{},{},{}\n", param.name(), p.value, line));
                }
            }
        }
        OutputFormat::Json => {
            let point_docs: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    let mut doc = report_json(&p.report);
                    doc["value"] = serde_json::json!(p.value);
                    doc
                })
                .collect();
            let doc = serde_json::json!({
                "parameter": param.name(),
                "points": point_docs,
                "params": options.params,
            });
            text = serde_json::to_string_pretty(&doc).expect("json");
            text.push('\n');
        }
    }
    write_stdout(&text);

    let any_skipped = points.iter().any(|p| !p.report.skipped.is_empty());
    Ok(if any_skipped {
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    })
}
