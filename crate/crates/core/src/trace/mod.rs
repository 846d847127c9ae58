//! The `taptrace/1` model-trace format: record types, validation, canonical
//! reading and writing, feature assembly for PCA, and seeded synthetic
//! generators with planted ground truth.

mod format;
pub mod rng;
pub mod synth;

pub use format::{
    canonicalize, read_traces, write_traces, TraceError, TraceFile, ATTENTION_SUM_TOLERANCE,
};
pub use synth::{generate_synthetic, planted_rank_matrix, synthetic_header, Preset, SyntheticSpec};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::path::{Condition, SolutionTrace, Step};
use crate::semantic::{AttentionDistribution, PredictionRecord};

pub const FORMAT_TAG: &str = "taptrace/1";
/// Attention is final-layer, averaged over heads, then over query positions.
pub const DEFAULT_POOLING: &str = "final-layer/head-mean/query-mean";
pub const DEFAULT_CHOICES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(invalid("difficulty", format!("unknown level `{other}`"))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFileHeader {
    pub format: String,
    pub embedding_dim: usize,
    pub created: String,
    pub producer: String,
    #[serde(default = "default_pooling")]
    pub pooling: String,
    #[serde(default = "default_choices")]
    pub num_choices: usize,
}

fn default_pooling() -> String {
    DEFAULT_POOLING.to_string()
}

fn default_choices() -> usize {
    DEFAULT_CHOICES
}

impl TraceFileHeader {
    pub fn new(embedding_dim: usize, created: impl Into<String>, producer: impl Into<String>) -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            embedding_dim,
            created: created.into(),
            producer: producer.into(),
            pooling: default_pooling(),
            num_choices: DEFAULT_CHOICES,
        }
    }
}

/// One model run on one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionTrace {
    pub id: String,
    pub model: String,
    pub difficulty: Difficulty,
    pub condition: Condition,
    pub true_answer: usize,
    pub predicted_answer: usize,
    pub confidence: f64,
    pub attention: Vec<f64>,
    pub seq_len: usize,
    pub steps: Vec<Step>,
}

impl QuestionTrace {
    pub fn prediction(&self) -> Result<PredictionRecord> {
        PredictionRecord::new(self.true_answer, self.predicted_answer, self.confidence)
    }

    pub fn attention_distribution(&self) -> Result<AttentionDistribution> {
        AttentionDistribution::new(self.attention.clone())
    }

    pub fn solution_trace(&self) -> Result<SolutionTrace> {
        SolutionTrace::new(self.id.clone(), self.condition, self.steps.clone())
    }

    /// `(model, difficulty, condition)` grouping key.
    pub fn group_key(&self) -> GroupKey {
        GroupKey {
            model: self.model.clone(),
            difficulty: self.difficulty,
            condition: self.condition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub model: String,
    pub difficulty: Difficulty,
    pub condition: Condition,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.model, self.difficulty, self.condition)
    }
}

/// Stacked attention vectors ready for PCA.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub matrix: DMatrix<f64>,
    pub padded: usize,
    pub truncated: usize,
}

/// Zero-pads or truncates each attention vector to `feature_len` and stacks
/// them row-wise.
pub fn feature_matrix<'a>(
    records: impl IntoIterator<Item = &'a QuestionTrace>,
    feature_len: usize,
) -> Result<FeatureMatrix> {
    if feature_len < 1 {
        return Err(invalid("feature_len", "must be at least 1"));
    }
    let records: Vec<&QuestionTrace> = records.into_iter().collect();
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "feature matrix needs at least 2 records, got {}",
            records.len()
        )));
    }
    let (mut padded, mut truncated) = (0, 0);
    let mut matrix = DMatrix::zeros(records.len(), feature_len);
    for (r, rec) in records.iter().enumerate() {
        let len = rec.attention.len();
        if len < feature_len {
            padded += 1;
        } else if len > feature_len {
            truncated += 1;
        }
        for (c, v) in rec.attention.iter().take(feature_len).enumerate() {
            matrix[(r, c)] = *v;
        }
    }
    Ok(FeatureMatrix {
        matrix,
        padded,
        truncated,
    })
}
