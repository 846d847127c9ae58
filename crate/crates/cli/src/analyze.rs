use std::path::PathBuf;

use clap::{Args, ValueEnum};

use tapkit::analysis::{summarize_groups, GroupSummary, DEFAULT_VARIANCE_RATIO};
use tapkit::constraints::{
    combined_product, normalize_triple, weighted_performance, ConstraintTriple, Normalization,
    PerformanceWeights, ValueRange,
};
use tapkit::trace::QuestionTrace;

use crate::output::{core_error, csv_bytes, load_traces, num, write_output};
use crate::{Cli, CliError, CliResult};

pub const CONSTRAINTS_HEADER: [&str; 16] = [
    "model",
    "difficulty",
    "condition",
    "records",
    "accuracy",
    "beta",
    "gamma",
    "delta",
    "window",
    "positions",
    "beta_norm",
    "gamma_norm",
    "delta_norm",
    "combined_product",
    "weighted_performance",
    "d_eff",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeMethod {
    /// Scale β and δ to [0, 1] over the analysed groups.
    Minmax,
    /// Divide β by ln(positions) and δ by its largest attainable value.
    MaxEntropy,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// taptrace/1 file.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "minmax")]
    pub normalize: NormalizeMethod,

    /// Performance weights for β, γ, δ and β·γ·δ.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.3, 0.4, 0.3, 0.1])]
    pub weights: Vec<f64>,

    /// Variance share defining effective dimensionality.
    #[arg(long, default_value_t = DEFAULT_VARIANCE_RATIO)]
    pub ratio: f64,
}

/// One analysed group with every derived column.
#[derive(Debug, Clone)]
pub struct GroupRow {
    pub summary: GroupSummary,
    pub normalized: ConstraintTriple,
    pub combined_product: f64,
    pub weighted_performance: f64,
}

pub fn performance_weights(w: &[f64]) -> CliResult<PerformanceWeights> {
    match w {
        [b, g, d, i] => PerformanceWeights::new(*b, *g, *d, *i)
            .map_err(|e| CliError::Config(format!("--weights: {e}"))),
        _ => Err(CliError::Config(format!("--weights: expected 4 values, got {}", w.len()))),
    }
}

/// Summaries plus normalised triples and performance for every group.
pub fn analyze_records(
    records: &[QuestionTrace],
    window: usize,
    ratio: f64,
    method: NormalizeMethod,
    weights: &PerformanceWeights,
) -> CliResult<Vec<GroupRow>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(CliError::Config(format!("--ratio {ratio} is outside (0, 1]")));
    }
    if records.is_empty() {
        return Err(CliError::InsufficientData("trace file has no records".into()));
    }
    let summaries = summarize_groups(records, window, ratio).map_err(|e| core_error(e, CliError::Validation))?;
    let ranges = (
        ValueRange::of(summaries.iter().map(|s| s.triple.beta)),
        ValueRange::of(summaries.iter().map(|s| s.triple.delta)),
    );
    summaries
        .into_iter()
        .map(|summary| {
            let method = match (method, ranges) {
                (NormalizeMethod::MaxEntropy, _) => Normalization::MaxEntropy {
                    positions: summary.positions,
                },
                (NormalizeMethod::Minmax, (Some(beta), Some(delta))) => Normalization::MinMax { beta, delta },
                _ => unreachable!("ranges exist for a non-empty group list"),
            };
            let normalized = normalize_triple(&summary.triple, &method).map_err(|e| core_error(e, CliError::Validation))?;
            Ok(GroupRow {
                combined_product: combined_product(&summary.triple),
                weighted_performance: weighted_performance(&summary.triple, weights),
                normalized,
                summary,
            })
        })
        .collect()
}

fn row_fields(row: &GroupRow) -> Vec<String> {
    let s = &row.summary;
    vec![
        s.key.model.clone(),
        s.key.difficulty.to_string(),
        s.key.condition.to_string(),
        s.records.to_string(),
        num(s.accuracy),
        num(s.triple.beta),
        num(s.triple.gamma),
        num(s.triple.delta),
        s.triple.window.to_string(),
        s.positions.to_string(),
        num(row.normalized.beta),
        num(row.normalized.gamma),
        num(row.normalized.delta),
        num(row.combined_product),
        num(row.weighted_performance),
        s.d_eff.map(|d| d.to_string()).unwrap_or_default(),
    ]
}

fn key_fields(row: &GroupRow) -> [String; 3] {
    let k = &row.summary.key;
    [k.model.clone(), k.difficulty.to_string(), k.condition.to_string()]
}

fn plot_files(rows: &[GroupRow]) -> CliResult<Vec<(&'static str, Vec<u8>)>> {
    let performance = csv_bytes(
        &["model", "difficulty", "condition", "accuracy"],
        rows.iter().map(|r| {
            let mut f = key_fields(r).to_vec();
            f.push(num(r.summary.accuracy));
            f
        }),
    )?;
    let semantic = csv_bytes(
        &["model", "difficulty", "condition", "entropy", "d_eff", "accuracy"],
        rows.iter().map(|r| {
            let mut f = key_fields(r).to_vec();
            f.push(num(r.summary.triple.beta));
            f.push(r.summary.d_eff.map(|d| d.to_string()).unwrap_or_default());
            f.push(num(r.summary.accuracy));
            f
        }),
    )?;
    let entropy = csv_bytes(
        &["model", "difficulty", "condition", "entropy", "accuracy", "weighted_performance"],
        rows.iter().map(|r| {
            let mut f = key_fields(r).to_vec();
            f.push(num(r.summary.triple.beta));
            f.push(num(r.summary.accuracy));
            f.push(num(r.weighted_performance));
            f
        }),
    )?;
    Ok(vec![
        ("plot_performance_by_difficulty.csv", performance),
        ("plot_semantic_space.csv", semantic),
        ("plot_performance_entropy.csv", entropy),
    ])
}

pub fn run(cli: &Cli, args: &AnalyzeArgs) -> CliResult<Vec<String>> {
    let weights = performance_weights(&args.weights)?;
    let (file, mut lines) = load_traces(&args.input)?;
    let rows = analyze_records(&file.records, cli.window, args.ratio, args.normalize, &weights)?;
    let bytes = csv_bytes(&CONSTRAINTS_HEADER, rows.iter().map(row_fields))?;
    let path = write_output(&cli.out, "constraints.csv", &bytes)?;
    lines.push(format!("wrote {} ({} groups)", path.display(), rows.len()));
    if cli.plot_data {
        for (name, bytes) in plot_files(&rows)? {
            let p = write_output(&cli.out, name, &bytes)?;
            lines.push(format!("wrote {}", p.display()));
        }
    }
    Ok(lines)
}
