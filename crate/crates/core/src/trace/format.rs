use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{QuestionTrace, TraceFileHeader, FORMAT_TAG};

/// Accepted deviation of an attention row's mass from one.
pub const ATTENTION_SUM_TOLERANCE: f64 = 1e-4;
/// Rows closer to unit mass than this are kept as written.
const RENORMALIZE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line 1: bad header: {0}")]
    BadHeader(String),

    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },

    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl TraceError {
    /// 1-based line number in the source file, when known.
    pub fn line(&self) -> Option<usize> {
        match self {
            TraceError::BadHeader(_) => Some(1),
            TraceError::Malformed { line, .. } | TraceError::Invalid { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A parsed trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: TraceFileHeader,
    pub records: Vec<QuestionTrace>,
    /// Line numbers of records whose attention was rescaled to unit mass.
    pub renormalized: Vec<usize>,
}

/// Rounds to 9 significant digits.
pub(crate) fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn validate_header(header: &TraceFileHeader) -> Result<(), String> {
    if header.format != FORMAT_TAG {
        return Err(format!("format is `{}`, expected `{FORMAT_TAG}`", header.format));
    }
    if header.embedding_dim == 0 {
        return Err("embedding_dim must be positive".into());
    }
    if header.num_choices < 2 {
        return Err("num_choices must be at least 2".into());
    }
    Ok(())
}

/// Checks every record invariant. Rescales the attention row when its mass is
/// within tolerance but not already unit; returns whether it did.
fn validate_record(rec: &mut QuestionTrace, header: &TraceFileHeader) -> Result<bool, String> {
    if rec.id.is_empty() {
        return Err("id is empty".into());
    }
    if rec.model.is_empty() {
        return Err("model is empty".into());
    }
    for (name, v) in [("true_answer", rec.true_answer), ("predicted_answer", rec.predicted_answer)] {
        if v >= header.num_choices {
            return Err(format!("{name} {v} is not below num_choices {}", header.num_choices));
        }
    }
    if !(0.0..=1.0).contains(&rec.confidence) {
        return Err(format!("confidence {} is outside [0, 1]", rec.confidence));
    }
    if rec.seq_len == 0 {
        return Err("seq_len must be positive".into());
    }
    if rec.attention.len() != rec.seq_len {
        return Err(format!(
            "attention has {} entries but seq_len is {}",
            rec.attention.len(),
            rec.seq_len
        ));
    }
    if let Some(pos) = rec.attention.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(format!("attention[{pos}] = {} is negative or not finite", rec.attention[pos]));
    }
    let sum: f64 = rec.attention.iter().sum();
    if (sum - 1.0).abs() > ATTENTION_SUM_TOLERANCE {
        return Err(format!("attention sums to {sum}, beyond tolerance {ATTENTION_SUM_TOLERANCE}"));
    }
    for (k, step) in rec.steps.iter().enumerate() {
        if step.embedding.len() != header.embedding_dim {
            return Err(format!(
                "step {k} embedding has dimension {}, header declares embedding_dim {}",
                step.embedding.len(),
                header.embedding_dim
            ));
        }
        if step.embedding.iter().any(|v| !v.is_finite()) {
            return Err(format!("step {k} embedding has a non-finite value"));
        }
    }
    let rescale = (sum - 1.0).abs() > RENORMALIZE_THRESHOLD;
    if rescale {
        rec.attention.iter_mut().for_each(|w| *w /= sum);
    }
    Ok(rescale)
}

type RecordKey = (String, String, super::Condition);

fn key_of(rec: &QuestionTrace) -> RecordKey {
    (rec.model.clone(), rec.id.clone(), rec.condition)
}

fn duplicate_message(rec: &QuestionTrace) -> String {
    format!(
        "duplicate record for id `{}`, model `{}`, condition {}",
        rec.id, rec.model, rec.condition
    )
}

/// Parses and validates a whole trace file. Blank lines are skipped.
pub fn read_traces<R: BufRead>(source: R) -> Result<TraceFile, TraceError> {
    let mut lines = source.lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| TraceError::BadHeader("file is empty".into()))?;
    let header: TraceFileHeader =
        serde_json::from_str(&first).map_err(|e| TraceError::BadHeader(e.to_string()))?;
    validate_header(&header).map_err(TraceError::BadHeader)?;

    let mut records = Vec::new();
    let mut renormalized = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: QuestionTrace = serde_json::from_str(&line).map_err(|e| TraceError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let rescaled = validate_record(&mut rec, &header).map_err(|message| TraceError::Invalid {
            line: line_no,
            message,
        })?;
        if !seen.insert(key_of(&rec)) {
            return Err(TraceError::Invalid {
                line: line_no,
                message: duplicate_message(&rec),
            });
        }
        if rescaled {
            renormalized.push(line_no);
        }
        records.push(rec);
    }
    Ok(TraceFile {
        header,
        records,
        renormalized,
    })
}

/// The canonical stored form of a record: attention at unit mass and every
/// float rounded to 9 significant digits.
pub fn canonicalize(rec: &QuestionTrace, header: &TraceFileHeader) -> Result<QuestionTrace, String> {
    let mut out = rec.clone();
    validate_record(&mut out, header)?;
    out.confidence = round9(out.confidence);
    out.attention.iter_mut().for_each(|w| *w = round9(*w));
    for step in &mut out.steps {
        step.embedding.iter_mut().for_each(|v| *v = round9(*v));
    }
    Ok(out)
}

/// Writes the header line and one canonical line per record.
pub fn write_traces<W: Write>(
    header: &TraceFileHeader,
    records: &[QuestionTrace],
    mut out: W,
) -> Result<(), TraceError> {
    validate_header(header).map_err(TraceError::BadHeader)?;
    let mut seen = BTreeSet::new();
    let mut lines = Vec::with_capacity(records.len());
    for (index, rec) in records.iter().enumerate() {
        let canon =
            canonicalize(rec, header).map_err(|message| TraceError::InvalidRecord { index, message })?;
        if !seen.insert(key_of(&canon)) {
            return Err(TraceError::InvalidRecord {
                index,
                message: duplicate_message(&canon),
            });
        }
        lines.push(serde_json::to_string(&canon).expect("validated record serializes"));
    }
    let head = serde_json::to_string(header).expect("header serializes");
    writeln!(out, "{head}")?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{Condition, Step};
    use crate::trace::Difficulty;

    fn header() -> TraceFileHeader {
        TraceFileHeader::new(2, "2024-01-01T00:00:00Z", "test")
    }

    fn record(id: &str) -> QuestionTrace {
        QuestionTrace {
            id: id.into(),
            model: "m".into(),
            difficulty: Difficulty::Easy,
            condition: Condition::Normal,
            true_answer: 1,
            predicted_answer: 1,
            confidence: 0.75,
            attention: vec![0.5, 0.25, 0.25],
            seq_len: 3,
            steps: vec![Step {
                text: "x = 1".into(),
                embedding: vec![1.0 / 3.0, -2.0],
            }],
        }
    }

    fn write_string(records: &[QuestionTrace]) -> String {
        let mut buf = Vec::new();
        write_traces(&header(), records, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn read_str(text: &str) -> Result<TraceFile, TraceError> {
        read_traces(text.as_bytes())
    }

    #[test]
    fn header_only_file() {
        let text = write_string(&[]);
        assert_eq!(text.lines().count(), 1);
        let file = read_str(&text).unwrap();
        assert!(file.records.is_empty());
        assert_eq!(file.header, header());
    }

    #[test]
    fn canonical_field_order_and_rounding() {
        let text = write_string(&[record("q1")]);
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with(r#"{"id":"q1","model":"m","difficulty":"easy","condition":"normal","true_answer":1"#));
        assert!(line.contains("0.333333333,"), "{line}");
        let head = text.lines().next().unwrap();
        assert!(head.starts_with(r#"{"format":"taptrace/1","embedding_dim":2"#));
    }

    #[test]
    fn write_read_write_is_stable() {
        let mut rec = record("q1");
        rec.attention = vec![0.1234567891234, 0.5, 0.3765432108766];
        let first = write_string(&[rec, record("q2")]);
        let back = read_str(&first).unwrap();
        assert!(back.renormalized.is_empty());
        assert_eq!(write_string(&back.records), first);
    }

    #[test]
    fn near_unit_mass_is_renormalized() {
        let mut rec = record("q1");
        rec.attention = vec![0.49995, 0.25, 0.25];
        let line = serde_json::to_string(&rec).unwrap();
        let text = format!("{}\n{line}\n", serde_json::to_string(&header()).unwrap());
        let file = read_str(&text).unwrap();
        assert_eq!(file.renormalized, vec![2]);
        let sum: f64 = file.records[0].attention.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    fn single_line_error(rec: &QuestionTrace) -> TraceError {
        let text = format!(
            "{}\n{}\n",
            serde_json::to_string(&header()).unwrap(),
            serde_json::to_string(rec).unwrap()
        );
        read_str(&text).unwrap_err()
    }

    #[test]
    fn invariant_violations_name_the_line() {
        let mut cases = Vec::new();
        let mut r = record("q");
        r.attention = vec![0.499, 0.25, 0.25];
        cases.push(r);
        let mut r = record("q");
        r.seq_len = 4;
        cases.push(r);
        let mut r = record("q");
        r.seq_len = 0;
        r.attention.clear();
        cases.push(r);
        let mut r = record("q");
        r.attention = vec![1.25, -0.25, 0.0];
        cases.push(r);
        let mut r = record("q");
        r.confidence = 1.5;
        cases.push(r);
        let mut r = record("q");
        r.predicted_answer = 4;
        cases.push(r);
        let mut r = record("q");
        r.true_answer = 9;
        cases.push(r);
        let mut r = record("q");
        r.steps[0].embedding = vec![1.0, 2.0, 3.0];
        cases.push(r);
        let mut r = record("");
        r.id.clear();
        cases.push(r);
        let mut r = record("q");
        r.model.clear();
        cases.push(r);
        for rec in cases {
            let err = single_line_error(&rec);
            assert!(matches!(err, TraceError::Invalid { line: 2, .. }), "{err}");
        }
    }

    #[test]
    fn duplicate_records_rejected() {
        let line = serde_json::to_string(&record("q")).unwrap();
        let text = format!("{}\n{line}\n{line}\n", serde_json::to_string(&header()).unwrap());
        let err = read_str(&text).unwrap_err();
        assert_eq!(err.line(), Some(3));
        let mut buf = Vec::new();
        assert!(write_traces(&header(), &[record("q"), record("q")], &mut buf).is_err());
    }

    #[test]
    fn header_and_syntax_errors() {
        assert!(matches!(read_str(""), Err(TraceError::BadHeader(_))));
        let bad = r#"{"format":"taptrace/2","embedding_dim":2,"created":"x","producer":"y"}"#;
        assert!(matches!(read_str(bad), Err(TraceError::BadHeader(_))));
        let zero = r#"{"format":"taptrace/1","embedding_dim":0,"created":"x","producer":"y"}"#;
        assert!(matches!(read_str(zero), Err(TraceError::BadHeader(_))));
        let ok = r#"{"format":"taptrace/1","embedding_dim":2,"created":"x","producer":"y"}"#;
        let file = read_str(ok).unwrap();
        assert_eq!(file.header.num_choices, 4);
        let text = format!("{ok}\n\n{{\"id\": 3}}\n");
        let err = read_str(&text).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 3, .. }), "{err}");
        let text = format!("{ok}\nnot json\n");
        assert_eq!(read_str(&text).unwrap_err().line(), Some(2));
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut value = serde_json::to_value(record("q")).unwrap();
        value["extra"] = serde_json::json!(1);
        let text = format!("{}\n{value}\n", serde_json::to_string(&header()).unwrap());
        assert!(matches!(read_str(&text), Err(TraceError::Malformed { line: 2, .. })));
    }

    #[test]
    fn round9_is_idempotent() {
        for x in [1.0 / 3.0, 2.0f64.sqrt() * 1e-7, 123456789.987, -0.000123456789123] {
            let r = round9(x);
            assert_eq!(round9(r), r);
            assert!(((r - x) / x).abs() < 1e-8);
        }
        assert_eq!(round9(0.0), 0.0);
    }
}
