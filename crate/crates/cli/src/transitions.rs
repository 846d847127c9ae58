use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use tapkit::transition::{
    cv_percent, detect_threshold, fit_power_law, pearson, stability_cv, MetricSeries, PowerLawFit,
    StabilityStats, ThresholdResult,
};

use crate::analyze::{analyze_records, performance_weights, NormalizeMethod};
use crate::output::{csv_bytes, load_traces, num, write_output};
use crate::{Cli, CliError, CliResult};

#[derive(Debug, Args)]
pub struct TransitionsArgs {
    /// constraints.csv from `analyze`, or a taptrace/1 file.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Critical-point candidates for the power-law fit: `start:stop:step` or a comma list.
    #[arg(long)]
    pub xc_grid: Option<String>,

    /// CSV with columns label,std,mean; `-` reads stdin.
    #[arg(long)]
    pub stability: Option<PathBuf>,

    /// Performance weights used when `--input` is a trace file.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.3, 0.4, 0.3, 0.1])]
    pub weights: Vec<f64>,
}

/// The columns of constraints.csv this command consumes.
#[derive(Debug, Clone, Deserialize)]
struct GroupPoint {
    model: String,
    accuracy: f64,
    beta: f64,
    combined_product: f64,
    weighted_performance: f64,
}

#[derive(Debug, Deserialize)]
struct StabilityRow {
    label: String,
    std: f64,
    mean: f64,
}

#[derive(Debug, Serialize)]
struct SeriesReport {
    name: String,
    points: usize,
    threshold: Option<ThresholdResult>,
    power_law: Option<PowerLawFit>,
    /// Pearson(accuracy, β).
    pearson_accuracy_entropy: Option<f64>,
    /// Pearson(weighted performance, β).
    pearson_performance_entropy: Option<f64>,
    /// CV of weighted performance across the series' groups.
    stability: Option<StabilityStats>,
}

#[derive(Debug, Serialize)]
struct LabelledStability {
    label: String,
    std: f64,
    mean: f64,
    cv_percent: f64,
}

#[derive(Debug, Serialize)]
struct TransitionsReport {
    series: Vec<SeriesReport>,
    stability_table: Vec<LabelledStability>,
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |why: String| CliError::Config(format!("--xc-grid `{spec}`: {why}"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(e.to_string()));
    let grid: Vec<f64> = if let [start, stop, step] = spec.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
        if !(step > 0.0) || stop < start {
            return Err(bad("needs step > 0 and stop ≥ start".into()));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(parse).collect::<CliResult<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return Err(bad("no finite candidates".into()));
    }
    Ok(grid)
}

fn is_trace_file(path: &Path) -> CliResult<bool> {
    let text = fs::read(path).map_err(|e| CliError::Config(format!("--input {}: {e}", path.display())))?;
    Ok(text.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{'))
}

fn load_points(cli: &Cli, args: &TransitionsArgs, path: &Path) -> CliResult<(Vec<GroupPoint>, Vec<String>)> {
    if is_trace_file(path)? {
        let weights = performance_weights(&args.weights)?;
        let (file, notes) = load_traces(path)?;
        let rows = analyze_records(
            &file.records,
            cli.window,
            tapkit::analysis::DEFAULT_VARIANCE_RATIO,
            NormalizeMethod::Minmax,
            &weights,
        )?;
        let points = rows
            .into_iter()
            .map(|r| GroupPoint {
                model: r.summary.key.model.clone(),
                accuracy: r.summary.accuracy,
                beta: r.summary.triple.beta,
                combined_product: r.combined_product,
                weighted_performance: r.weighted_performance,
            })
            .collect();
        return Ok((points, notes));
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("--input {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, row) in reader.deserialize::<GroupPoint>().enumerate() {
        let p = row.map_err(|e| CliError::Validation(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        if [p.accuracy, p.beta, p.combined_product, p.weighted_performance].iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!("{}: row {}: non-finite value", path.display(), i + 1)));
        }
        points.push(p);
    }
    Ok((points, Vec::new()))
}

/// Statistics the data cannot support (too few points, zero variance,
/// non-positive values for a power law) are reported as absent.
fn optional<T>(r: tapkit::Result<T>) -> Option<T> {
    r.ok()
}

fn series_report(name: String, points: &[&GroupPoint], grid: Option<&[f64]>) -> SeriesReport {
    let x: Vec<f64> = points.iter().map(|p| p.combined_product).collect();
    let y: Vec<f64> = points.iter().map(|p| p.weighted_performance).collect();
    let acc: Vec<f64> = points.iter().map(|p| p.accuracy).collect();
    let beta: Vec<f64> = points.iter().map(|p| p.beta).collect();
    let series = optional(MetricSeries::new(x, y.clone()));
    let threshold = series.as_ref().and_then(|s| optional(detect_threshold(s)));
    let power_law = match (&series, grid) {
        (Some(s), Some(g)) => optional(fit_power_law(s, g)),
        _ => None,
    };
    let corr = |a: &[f64], b: &[f64]| optional(pearson(a, b)).flatten();
    SeriesReport {
        name,
        points: points.len(),
        threshold,
        power_law,
        pearson_accuracy_entropy: corr(&acc, &beta),
        pearson_performance_entropy: corr(&y, &beta),
        stability: optional(stability_cv(&y)),
    }
}

fn read_stability(path: &Path) -> CliResult<Vec<LabelledStability>> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Config(format!("--stability stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("--stability {}: {e}", path.display())))?;
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<StabilityRow>().enumerate() {
        let row = row.map_err(|e| CliError::Validation(format!("--stability row {}: {e}", i + 1)))?;
        let cv = cv_percent(row.std, row.mean)
            .map_err(|e| CliError::Validation(format!("--stability row {}: {e}", i + 1)))?;
        out.push(LabelledStability {
            label: row.label,
            std: row.std,
            mean: row.mean,
            cv_percent: cv,
        });
    }
    Ok(out)
}

fn plot_rows(points: &[GroupPoint], all: &SeriesReport) -> CliResult<Vec<u8>> {
    let bp = all.threshold.map(|t| t.breakpoint);
    csv_bytes(
        &["model", "combined_product", "weighted_performance", "breakpoint", "segment"],
        points.iter().map(|p| {
            let segment = match bp {
                Some(b) if p.combined_product < b => "pre",
                Some(_) => "post",
                None => "",
            };
            vec![
                p.model.clone(),
                num(p.combined_product),
                num(p.weighted_performance),
                bp.map(num).unwrap_or_default(),
                segment.to_string(),
            ]
        }),
    )
}

pub fn run(cli: &Cli, args: &TransitionsArgs) -> CliResult<Vec<String>> {
    if args.input.is_none() && args.stability.is_none() {
        return Err(CliError::Config("one of --input or --stability is required".into()));
    }
    let grid = args.xc_grid.as_deref().map(parse_grid).transpose()?;
    let mut lines = Vec::new();
    let mut series = Vec::new();
    let mut points = Vec::new();

    if let Some(path) = &args.input {
        let (loaded, notes) = load_points(cli, args, path)?;
        lines.extend(notes);
        points = loaded;
        if points.len() < 4 {
            return Err(CliError::InsufficientData(format!(
                "threshold detection needs at least 4 groups, found {}",
                points.len()
            )));
        }
        let all = series_report("all".into(), &points.iter().collect::<Vec<_>>(), grid.as_deref());
        match &all.threshold {
            Some(t) => lines.push(format!(
                "all: breakpoint {} (pre {}, post {}{})",
                num(t.breakpoint),
                num(t.pre_mean),
                num(t.post_mean),
                if t.degenerate { ", degenerate" } else { "" }
            )),
            None => lines.push("all: no admissible breakpoint".into()),
        }
        series.push(all);
        let mut by_model: BTreeMap<&str, Vec<&GroupPoint>> = BTreeMap::new();
        for p in &points {
            by_model.entry(p.model.as_str()).or_default().push(p);
        }
        // per-model series only where a model spans several groups
        if by_model.len() > 1 {
            for (model, pts) in by_model.into_iter().filter(|(_, pts)| pts.len() >= 2) {
                series.push(series_report(model.to_string(), &pts, grid.as_deref()));
            }
        }
    }

    let stability_table = match &args.stability {
        Some(path) => read_stability(path)?,
        None => Vec::new(),
    };
    for s in &stability_table {
        lines.push(format!("{}: CV {:.2}%", s.label, s.cv_percent));
    }

    let report = TransitionsReport { series, stability_table };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    json.push('\n');
    let path = write_output(&cli.out, "transitions.json", json.as_bytes())?;
    lines.insert(0, format!("wrote {}", path.display()));
    if cli.plot_data && !report.series.is_empty() {
        let bytes = plot_rows(&points, &report.series[0])?;
        let p = write_output(&cli.out, "plot_phase_transitions.csv", &bytes)?;
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(lines)
}
