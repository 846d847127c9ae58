//! Path-dependence measurements between paired solution traces produced
//! under the normal and the shuffled choice order.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Normal,
    Shuffled,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Normal => "normal",
            Condition::Shuffled => "shuffled",
        }
    }
}

/// One reasoning step: its text and its pooled hidden-state embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub text: String,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrace {
    pub question_id: String,
    pub condition: Condition,
    steps: Vec<Step>,
}

impl SolutionTrace {
    pub fn new(question_id: impl Into<String>, condition: Condition, steps: Vec<Step>) -> Result<Self> {
        let first = steps.first().ok_or(Error::EmptyInput("solution steps"))?;
        let dim = first.embedding.len();
        for step in &steps {
            if step.embedding.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: step.embedding.len(),
                });
            }
            if step.embedding.iter().any(|v| !v.is_finite()) {
                return Err(invalid("embedding", "values must be finite"));
            }
        }
        Ok(Self {
            question_id: question_id.into(),
            condition,
            steps,
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.text.as_str())
    }

    /// Mean step length in characters.
    pub fn mean_step_length(&self) -> f64 {
        let total: usize = self.steps.iter().map(|s| s.text.chars().count()).sum();
        total as f64 / self.steps.len() as f64
    }
}

fn cosine(a: &[f64], b: &[f64], step: usize) -> Result<f64> {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 {
        return Err(Error::ZeroNormEmbedding(step));
    }
    if nb == 0.0 {
        return Err(Error::ZeroNormEmbedding(step + 1));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean cosine similarity of consecutive step embeddings; `None` for a
/// single-step trace.
pub fn consistency(trace: &SolutionTrace) -> Result<Option<f64>> {
    let steps = trace.steps();
    if steps.len() < 2 {
        return Ok(None);
    }
    let mut sims = Vec::with_capacity(steps.len() - 1);
    for (k, pair) in steps.windows(2).enumerate() {
        sims.push(cosine(&pair[0].embedding, &pair[1].embedding, k)?);
    }
    Ok(Some(sims.iter().sum::<f64>() / sims.len() as f64))
}

/// Words counted as revision markers (matched whole-word, case-insensitive).
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionLexicon {
    words: Vec<String>,
}

impl Default for RevisionLexicon {
    fn default() -> Self {
        Self::new(["actually", "instead", "correction"])
    }
}

impl RevisionLexicon {
    pub fn new<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Self {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Every occurrence in `text`.
    pub fn count_in(&self, text: &str) -> usize {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .filter(|w| {
                let lower = w.to_lowercase();
                self.words.contains(&lower)
            })
            .count()
    }
}

/// Revision-marker count over all steps with the default lexicon.
pub fn count_revisions<'a>(step_texts: impl IntoIterator<Item = &'a str>) -> usize {
    count_revisions_with(step_texts, &RevisionLexicon::default())
}

pub fn count_revisions_with<'a>(
    step_texts: impl IntoIterator<Item = &'a str>,
    lexicon: &RevisionLexicon,
) -> usize {
    step_texts.into_iter().map(|t| lexicon.count_in(t)).sum()
}

/// `1/(1+steps) + 1/(1+revisions)`.
pub fn directness(num_steps: usize, num_revisions: usize) -> Result<f64> {
    if num_steps == 0 {
        return Err(invalid("num_steps", "directness needs at least one step"));
    }
    Ok(1.0 / (1.0 + num_steps as f64) + 1.0 / (1.0 + num_revisions as f64))
}

fn ensure_paired(normal: &SolutionTrace, shuffled: &SolutionTrace) -> Result<()> {
    if normal.question_id != shuffled.question_id {
        return Err(Error::IdMismatch {
            normal: normal.question_id.clone(),
            shuffled: shuffled.question_id.clone(),
        });
    }
    Ok(())
}

/// Mean step length (characters) of `normal` minus that of `shuffled`.
pub fn step_length_diff(normal: &SolutionTrace, shuffled: &SolutionTrace) -> Result<f64> {
    ensure_paired(normal, shuffled)?;
    Ok(normal.mean_step_length() - shuffled.mean_step_length())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub question_id: String,
    pub delta_steps: f64,
    /// `None` when either side has a single step.
    pub delta_consistency: Option<f64>,
    pub delta_directness: f64,
    pub l_diff: f64,
    pub revisions_normal: usize,
    pub revisions_shuffled: usize,
}

pub fn analyze_pair(normal: &SolutionTrace, shuffled: &SolutionTrace) -> Result<PathReport> {
    analyze_pair_with(normal, shuffled, &RevisionLexicon::default())
}

pub fn analyze_pair_with(
    normal: &SolutionTrace,
    shuffled: &SolutionTrace,
    lexicon: &RevisionLexicon,
) -> Result<PathReport> {
    ensure_paired(normal, shuffled)?;
    let (steps_n, steps_s) = (normal.steps().len(), shuffled.steps().len());
    let revisions_normal = count_revisions_with(normal.texts(), lexicon);
    let revisions_shuffled = count_revisions_with(shuffled.texts(), lexicon);
    let delta_consistency = match (consistency(normal)?, consistency(shuffled)?) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    Ok(PathReport {
        question_id: normal.question_id.clone(),
        delta_steps: (steps_n as f64 - steps_s as f64).abs(),
        delta_consistency,
        delta_directness: (directness(steps_n, revisions_normal)?
            - directness(steps_s, revisions_shuffled)?)
        .abs(),
        l_diff: step_length_diff(normal, shuffled)?,
        revisions_normal,
        revisions_shuffled,
    })
}

/// Unweighted means of per-question reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAggregate {
    pub pairs: usize,
    pub delta_steps: f64,
    /// Mean over questions where consistency is defined on both sides.
    pub delta_consistency: Option<f64>,
    pub consistency_excluded: usize,
    pub delta_directness: f64,
    pub l_diff: f64,
    pub revisions_normal: f64,
    pub revisions_shuffled: f64,
}

/// Order-independent mean: values are summed in sorted order.
fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

pub fn aggregate(reports: &[PathReport]) -> Result<PathAggregate> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("path reports"));
    }
    let consistency: Vec<f64> = reports.iter().filter_map(|r| r.delta_consistency).collect();
    let field = |f: fn(&PathReport) -> f64| mean(reports.iter().map(f)).unwrap_or(0.0);
    Ok(PathAggregate {
        pairs: reports.len(),
        delta_steps: field(|r| r.delta_steps),
        consistency_excluded: reports.len() - consistency.len(),
        delta_consistency: mean(consistency),
        delta_directness: field(|r| r.delta_directness),
        l_diff: field(|r| r.l_diff),
        revisions_normal: field(|r| r.revisions_normal as f64),
        revisions_shuffled: field(|r| r.revisions_shuffled as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(text: &str, embedding: &[f64]) -> Step {
        Step {
            text: text.into(),
            embedding: embedding.to_vec(),
        }
    }

    fn trace(id: &str, cond: Condition, steps: Vec<Step>) -> SolutionTrace {
        SolutionTrace::new(id, cond, steps).unwrap()
    }

    #[test]
    fn consistency_examples() {
        let same = trace(
            "q",
            Condition::Normal,
            vec![step("a", &[1.0, 2.0]), step("b", &[1.0, 2.0]), step("c", &[1.0, 2.0])],
        );
        assert!((consistency(&same).unwrap().unwrap() - 1.0).abs() < 1e-15);

        let ortho = trace("q", Condition::Normal, vec![step("a", &[1.0, 0.0]), step("b", &[0.0, 1.0])]);
        assert_eq!(consistency(&ortho).unwrap(), Some(0.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = trace("q", Condition::Normal, vec![step("a", &[1.0, 0.0]), step("b", &[h, h])]);
        assert!((consistency(&diag).unwrap().unwrap() - h).abs() < 1e-12);

        let single = trace("q", Condition::Normal, vec![step("a", &[1.0])]);
        assert_eq!(consistency(&single).unwrap(), None);

        let zero = trace("q", Condition::Normal, vec![step("a", &[1.0, 0.0]), step("b", &[0.0, 0.0])]);
        assert_eq!(consistency(&zero), Err(Error::ZeroNormEmbedding(1)));
    }

    #[test]
    fn trace_validation() {
        assert!(SolutionTrace::new("q", Condition::Normal, vec![]).is_err());
        assert!(SolutionTrace::new("q", Condition::Normal, vec![step("a", &[1.0]), step("b", &[1.0, 2.0])]).is_err());
        assert!(SolutionTrace::new("q", Condition::Normal, vec![step("a", &[f64::NAN])]).is_err());
    }

    #[test]
    fn revision_examples() {
        assert_eq!(count_revisions(Vec::<&str>::new()), 0);
        assert_eq!(count_revisions(["x = 3", "so y = 4"]), 0);
        assert_eq!(count_revisions(["Actually, we should instead try 7."]), 2);
        assert_eq!(count_revisions(["Correction: the discriminant is 49."]), 1);
        // whole words only
        assert_eq!(count_revisions(["factually, insteadfast corrections"]), 0);
        let lex = RevisionLexicon::new(["wait"]);
        assert_eq!(count_revisions_with(["Wait... wait, actually"], &lex), 2);
    }

    #[test]
    fn directness_examples() {
        assert_eq!(directness(1, 0).unwrap(), 1.5);
        assert!((directness(4, 1).unwrap() - 0.7).abs() < 1e-15);
        assert!((directness(9, 3).unwrap() - 0.35).abs() < 1e-15);
        assert!(directness(0, 0).is_err());
    }

    #[test]
    fn length_and_pairs() {
        let n = trace("q1", Condition::Normal, vec![step(&"a".repeat(20), &[1.0])]);
        let s = trace("q1", Condition::Shuffled, vec![step(&"b".repeat(10), &[1.0]), step(&"c".repeat(20), &[1.0])]);
        assert_eq!(step_length_diff(&n, &s).unwrap(), 5.0);
        assert_eq!(step_length_diff(&n, &n).unwrap(), 0.0);
        let other = trace("q2", Condition::Shuffled, vec![step("x", &[1.0])]);
        assert!(matches!(step_length_diff(&n, &other), Err(Error::IdMismatch { .. })));
        assert!(analyze_pair(&n, &other).is_err());
    }

    #[test]
    fn analyze_identical_and_shifted() {
        let steps: Vec<Step> = (0..5).map(|i| step("step", &[1.0, i as f64])).collect();
        let n = trace("q", Condition::Normal, steps.clone());
        let r = analyze_pair(&n, &n).unwrap();
        assert_eq!((r.delta_steps, r.delta_consistency, r.delta_directness, r.l_diff), (0.0, Some(0.0), 0.0, 0.0));

        let same: Vec<Step> = (0..5).map(|_| step("step", &[1.0, 1.0])).collect();
        let fewer: Vec<Step> = (0..3).map(|_| step("step", &[1.0, 1.0])).collect();
        let r = analyze_pair(
            &trace("q", Condition::Normal, same),
            &trace("q", Condition::Shuffled, fewer),
        )
        .unwrap();
        assert_eq!(r.delta_steps, 2.0);
        assert_eq!(r.delta_consistency, Some(0.0));
        assert_eq!(r.l_diff, 0.0);
    }

    #[test]
    fn aggregate_excludes_undefined_consistency() {
        let a = trace("q", Condition::Normal, vec![step("a", &[1.0])]);
        let b = trace("q", Condition::Normal, vec![step("a", &[1.0]), step("bb", &[1.0])]);
        let r1 = analyze_pair(&a, &b).unwrap();
        let r2 = analyze_pair(&b, &b).unwrap();
        let agg = aggregate(&[r1, r2]).unwrap();
        assert_eq!(agg.consistency_excluded, 1);
        assert_eq!(agg.delta_consistency, Some(0.0));
        assert_eq!(agg.delta_steps, 0.5);
        assert!(aggregate(&[]).is_err());
    }
}
