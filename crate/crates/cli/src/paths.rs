use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;

use tapkit::path::{aggregate, analyze_pair_with, Condition, PathAggregate, PathReport, RevisionLexicon};
use tapkit::trace::QuestionTrace;

use crate::output::{csv_bytes, load_traces, num, opt_num, write_output};
use crate::{Cli, CliError, CliResult};

pub const PATHS_HEADER: [&str; 8] = [
    "model",
    "question_id",
    "delta_steps",
    "delta_consistency",
    "delta_directness",
    "l_diff",
    "revisions_normal",
    "revisions_shuffled",
];

/// `question_id` of the per-model aggregate row.
pub const AGGREGATE_ID: &str = "__mean__";

#[derive(Debug, Args)]
pub struct PathsArgs {
    /// taptrace/1 file holding both conditions.
    #[arg(long)]
    pub input: PathBuf,

    /// Revision markers (default: actually,instead,correction).
    #[arg(long, value_delimiter = ',')]
    pub revision_words: Vec<String>,
}

#[derive(Default)]
struct Pairing<'a> {
    normal: Option<&'a QuestionTrace>,
    shuffled: Option<&'a QuestionTrace>,
}

struct ModelPaths {
    reports: Vec<PathReport>,
    aggregate: PathAggregate,
}

fn report_fields(model: &str, r: &PathReport) -> Vec<String> {
    vec![
        model.to_string(),
        r.question_id.clone(),
        num(r.delta_steps),
        opt_num(r.delta_consistency),
        num(r.delta_directness),
        num(r.l_diff),
        r.revisions_normal.to_string(),
        r.revisions_shuffled.to_string(),
    ]
}

fn aggregate_fields(model: &str, a: &PathAggregate) -> Vec<String> {
    vec![
        model.to_string(),
        AGGREGATE_ID.to_string(),
        num(a.delta_steps),
        opt_num(a.delta_consistency),
        num(a.delta_directness),
        num(a.l_diff),
        num(a.revisions_normal),
        num(a.revisions_shuffled),
    ]
}

pub fn run(cli: &Cli, args: &PathsArgs) -> CliResult<Vec<String>> {
    let lexicon = if args.revision_words.is_empty() {
        RevisionLexicon::default()
    } else {
        RevisionLexicon::new(&args.revision_words)
    };
    let (file, mut lines) = load_traces(&args.input)?;

    let mut pairs: BTreeMap<(&str, &str), Pairing> = BTreeMap::new();
    for rec in &file.records {
        let slot = pairs.entry((rec.model.as_str(), rec.id.as_str())).or_default();
        match rec.condition {
            Condition::Normal => slot.normal = Some(rec),
            Condition::Shuffled => slot.shuffled = Some(rec),
        }
    }

    let (mut unpaired, mut stepless) = (0usize, 0usize);
    let mut by_model: BTreeMap<&str, Vec<PathReport>> = BTreeMap::new();
    for ((model, id), pair) in &pairs {
        let (Some(normal), Some(shuffled)) = (pair.normal, pair.shuffled) else {
            unpaired += 1;
            continue;
        };
        if normal.steps.is_empty() || shuffled.steps.is_empty() {
            stepless += 1;
            continue;
        }
        let invalid = |e: tapkit::Error| CliError::Validation(format!("model {model}, question {id}: {e}"));
        let n = normal.solution_trace().map_err(invalid)?;
        let s = shuffled.solution_trace().map_err(invalid)?;
        let report = analyze_pair_with(&n, &s, &lexicon).map_err(invalid)?;
        by_model.entry(model).or_default().push(report);
    }
    if by_model.is_empty() {
        return Err(CliError::InsufficientData(format!(
            "no normal/shuffled pairs with solution steps ({unpaired} unpaired ids, {stepless} without steps)"
        )));
    }

    let mut models = Vec::new();
    for (model, reports) in by_model {
        let aggregate = aggregate(&reports).map_err(|e| CliError::Validation(e.to_string()))?;
        models.push((model, ModelPaths { reports, aggregate }));
    }

    let mut rows = Vec::new();
    for (model, mp) in &models {
        rows.extend(mp.reports.iter().map(|r| report_fields(model, r)));
        rows.push(aggregate_fields(model, &mp.aggregate));
    }
    let path = write_output(&cli.out, "paths.csv", &csv_bytes(&PATHS_HEADER, rows)?)?;
    lines.insert(0, format!("wrote {}", path.display()));
    let total: usize = models.iter().map(|(_, m)| m.aggregate.pairs).sum();
    lines.push(format!("{total} pairs analysed, {unpaired} unpaired ids, {stepless} pairs without steps"));
    for (model, mp) in &models {
        lines.push(format!("{model}: mean delta_steps {}", num(mp.aggregate.delta_steps)));
    }

    if cli.plot_data {
        let mut long = Vec::new();
        for (model, mp) in &models {
            let a = &mp.aggregate;
            let metrics = [
                ("delta_steps", Some(a.delta_steps)),
                ("l_diff", Some(a.l_diff)),
                ("delta_directness", Some(a.delta_directness)),
                ("delta_consistency", a.delta_consistency),
            ];
            for (metric, value) in metrics {
                long.push(vec![model.to_string(), metric.to_string(), opt_num(value)]);
            }
        }
        let bytes = csv_bytes(&["model", "metric", "value"], long)?;
        let p = write_output(&cli.out, "plot_path_metrics.csv", &bytes)?;
        lines.push(format!("wrote {}", p.display()));
    }
    Ok(lines)
}
