//! Seeded synthetic trace generators. Each preset plants a known quantity
//! that a downstream analysis must recover.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::format::{canonicalize, round9};
use super::rng::SplitMix64;
use super::{Difficulty, QuestionTrace, TraceFileHeader, DEFAULT_CHOICES};
use crate::constraints::{delta_contextual, DEFAULT_WINDOW};
use crate::error::{invalid, Error, Result};
use crate::path::{Condition, Step};
use crate::semantic::{shannon_entropy, AttentionDistribution};

pub const SYNTH_EMBEDDING_DIM: usize = 8;
pub const SYNTH_CREATED: &str = "1970-01-01T00:00:00Z";
pub const SYNTH_PRODUCER: &str = "tapkit-synth";
pub const SYNTH_MODEL: &str = "synthetic";

/// Spacing of the combined-constraint grid in the threshold preset.
pub const THRESHOLD_GRID: f64 = 0.01;
pub const THRESHOLD_SEQ_LEN: usize = 512;
/// Grid cells generated past the planted breakpoint.
const THRESHOLD_EXTRA_CELLS: usize = 8;
const PRE_SPIKE: f64 = 0.7;
const POST_SPIKE: f64 = 0.3;

const STEP_SHIFT_SEQ_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// Attention rows drawn from a `k`-dimensional subspace.
    RankK { k: usize, seq_len: usize },
    /// One group per grid value `x = 0.01·j`; the attention shape and the
    /// accuracy pattern change at `breakpoint`.
    Threshold { breakpoint: f64 },
    /// Normal/shuffled pairs; the shuffled solution has `shift` extra steps.
    StepShift { shift: usize, base_steps: usize },
    /// Attention with entropy `target` nats.
    EntropyLevel { target: f64, seq_len: usize },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::RankK { .. } => "rank-k",
            Preset::Threshold { .. } => "threshold",
            Preset::StepShift { .. } => "step-shift",
            Preset::EntropyLevel { .. } => "entropy-level",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub preset: Preset,
    /// Records per group (per question pair for step-shift).
    pub count: usize,
    pub seed: u64,
}

/// Header written with every synthetic file.
pub fn synthetic_header() -> TraceFileHeader {
    TraceFileHeader::new(SYNTH_EMBEDDING_DIM, SYNTH_CREATED, SYNTH_PRODUCER)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<QuestionTrace>> {
    if spec.count < 2 {
        return Err(invalid("count", format!("{} is below 2", spec.count)));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let records = match spec.preset {
        Preset::RankK { k, seq_len } => rank_k(k, seq_len, spec.count, &mut rng)?,
        Preset::Threshold { breakpoint } => threshold(breakpoint, spec.count, &mut rng)?,
        Preset::StepShift { shift, base_steps } => step_shift(shift, base_steps, spec.count, &mut rng)?,
        Preset::EntropyLevel { target, seq_len } => entropy_level(target, seq_len, spec.count, &mut rng)?,
    };
    let header = synthetic_header();
    records
        .iter()
        .map(|r| canonicalize(r, &header).map_err(|m| invalid("preset", m)))
        .collect()
}

/// Orthonormal cosine basis of `dim` positions, excluding the constant
/// vector; column `j` has frequency `j + 1`.
fn cosine_basis(dim: usize, k: usize) -> DMatrix<f64> {
    let scale = (2.0 / dim as f64).sqrt();
    DMatrix::from_fn(dim, k, |t, j| {
        scale * (PI * (j + 1) as f64 * (t as f64 + 0.5) / dim as f64).cos()
    })
}

/// `samples × k` coefficients with centred, mutually orthogonal columns of
/// squared norm `samples`, so every planted direction has variance one.
fn planted_coefficients(k: usize, samples: usize, rng: &mut SplitMix64) -> Result<DMatrix<f64>> {
    let mut c = DMatrix::from_fn(samples, k, |_, _| 0.0);
    for i in 0..samples {
        for j in 0..k {
            c[(i, j)] = rng.next_normal();
        }
    }
    for j in 0..k {
        let mean = c.column(j).mean();
        c.column_mut(j).add_scalar_mut(-mean);
    }
    for j in 0..k {
        for prev in 0..j {
            let proj = c.column(j).dot(&c.column(prev));
            let q = c.column(prev).clone_owned();
            c.column_mut(j).axpy(-proj, &q, 1.0);
        }
        let norm = c.column(j).norm();
        if norm < 1e-8 {
            return Err(invalid("k", "planted coefficients are degenerate"));
        }
        c.column_mut(j).scale_mut(1.0 / norm);
    }
    Ok(c * (samples as f64).sqrt())
}

fn check_rank(k: usize, samples: usize, dim: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if k >= dim {
        return Err(invalid("k", format!("{k} must be below the {dim} available dimensions")));
    }
    if samples <= k {
        return Err(invalid("count", format!("{samples} samples cannot span rank {k}")));
    }
    Ok(())
}

/// `samples × dim` rows lying in a `k`-dimensional subspace with equal
/// variance along each planted direction, plus i.i.d. noise of scale
/// `noise_sigma`.
pub fn planted_rank_matrix(
    k: usize,
    samples: usize,
    dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    check_rank(k, samples, dim)?;
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(invalid("noise_sigma", "must be a finite non-negative value"));
    }
    let mut rng = SplitMix64::new(seed);
    let coeffs = planted_coefficients(k, samples, &mut rng)?;
    let mut m = coeffs * cosine_basis(dim, k).transpose();
    if noise_sigma > 0.0 {
        m.iter_mut().for_each(|v| *v += noise_sigma * rng.next_normal());
    }
    Ok(m)
}

fn random_prediction(rng: &mut SplitMix64) -> (usize, usize, f64) {
    let choices = DEFAULT_CHOICES as u64;
    let truth = rng.below(choices);
    let predicted = if rng.next_f64() < 0.5 {
        truth
    } else {
        (truth + 1 + rng.below(choices - 1)) % choices
    };
    let confidence = 0.25 + 0.75 * rng.next_f64();
    (truth as usize, predicted as usize, confidence)
}

fn record(
    id: String,
    model: &str,
    difficulty: Difficulty,
    condition: Condition,
    prediction: (usize, usize, f64),
    attention: Vec<f64>,
    steps: Vec<Step>,
) -> QuestionTrace {
    QuestionTrace {
        id,
        model: model.to_string(),
        difficulty,
        condition,
        true_answer: prediction.0,
        predicted_answer: prediction.1,
        confidence: prediction.2,
        seq_len: attention.len(),
        attention,
        steps,
    }
}

fn rank_k(k: usize, seq_len: usize, count: usize, rng: &mut SplitMix64) -> Result<Vec<QuestionTrace>> {
    check_rank(k, count, seq_len)?;
    let coeffs = planted_coefficients(k, count, rng)?;
    let offsets = coeffs * cosine_basis(seq_len, k).transpose();
    let peak = offsets.amax();
    let p = seq_len as f64;
    // keep every weight inside [0.5/p, 1.5/p]
    let amplitude = 0.5 / (p * peak);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let attention = (0..seq_len).map(|t| 1.0 / p + amplitude * offsets[(i, t)]).collect();
        out.push(record(
            format!("rk-{i:04}"),
            SYNTH_MODEL,
            Difficulty::Easy,
            Condition::Normal,
            random_prediction(rng),
            attention,
            Vec::new(),
        ));
    }
    Ok(out)
}

/// Mass `q` on position `at`, the rest spread evenly.
fn spike(seq_len: usize, q: f64, at: usize) -> Vec<f64> {
    let rest = (1.0 - q) / (seq_len - 1) as f64;
    (0..seq_len).map(|t| if t == at { q } else { rest }).collect()
}

fn spike_entropy(seq_len: usize, q: f64) -> f64 {
    let rest = (1.0 - q) / (seq_len - 1) as f64;
    let head = if q > 0.0 { -q * q.ln() } else { 0.0 };
    let tail = if rest > 0.0 { -(1.0 - q) * rest.ln() } else { 0.0 };
    head + tail
}

fn threshold(breakpoint: f64, count: usize, rng: &mut SplitMix64) -> Result<Vec<QuestionTrace>> {
    if !(breakpoint.is_finite() && breakpoint > 2.0 * THRESHOLD_GRID) {
        return Err(invalid(
            "breakpoint",
            format!("{breakpoint} must exceed {} so two grid values precede it", 2.0 * THRESHOLD_GRID),
        ));
    }
    let planted_cell = breakpoint / THRESHOLD_GRID;
    let last = planted_cell.round() as usize + THRESHOLD_EXTRA_CELLS;
    let header = synthetic_header();

    // β and δ as the analysis will measure them from the stored attention
    let shape = |q: f64| -> Result<(Vec<f64>, f64)> {
        let mut rec = record(
            String::from("probe"),
            SYNTH_MODEL,
            Difficulty::Medium,
            Condition::Normal,
            (0, 0, 1.0),
            spike(THRESHOLD_SEQ_LEN, q, 0),
            Vec::new(),
        );
        rec = canonicalize(&rec, &header).map_err(|m| invalid("breakpoint", m))?;
        let dist = AttentionDistribution::new(rec.attention.clone())?;
        let bd = shannon_entropy(&dist) * delta_contextual(&dist, DEFAULT_WINDOW)?;
        Ok((rec.attention, bd))
    };
    let pre = shape(PRE_SPIKE)?;
    let post = shape(POST_SPIKE)?;
    let correct_pre = count / 2;

    let mut out = Vec::with_capacity(last * count);
    for j in 1..=last {
        let x = j as f64 * THRESHOLD_GRID;
        let before = (j as f64) < planted_cell - 1e-9;
        let (attention, bd) = if before { &pre } else { &post };
        let gamma = x / bd;
        let (n_correct, confidence) = if before {
            (correct_pre, gamma * count as f64 / correct_pre as f64)
        } else {
            (count, gamma)
        };
        if confidence > 1.0 {
            return Err(invalid(
                "breakpoint",
                format!("grid value {x} needs confidence {confidence} above 1"),
            ));
        }
        let model = format!("synth-{j:03}");
        for i in 0..count {
            let truth = rng.below(DEFAULT_CHOICES as u64) as usize;
            let prediction = if i < n_correct {
                (truth, truth, confidence)
            } else {
                ((truth + 1) % DEFAULT_CHOICES, truth, 0.25 + 0.75 * rng.next_f64())
            };
            out.push(record(
                format!("q{i:04}"),
                &model,
                Difficulty::Medium,
                Condition::Normal,
                prediction,
                attention.clone(),
                Vec::new(),
            ));
        }
    }
    Ok(out)
}

fn random_embedding(rng: &mut SplitMix64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..SYNTH_EMBEDDING_DIM).map(|_| rng.next_normal()).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

fn random_step(index: usize, rng: &mut SplitMix64) -> Step {
    let (a, b) = (rng.below(100), rng.below(100));
    Step {
        text: format!("step {}: x{index} = {a} * {b}", index + 1),
        embedding: random_embedding(rng),
    }
}

fn step_shift(
    shift: usize,
    base_steps: usize,
    count: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<QuestionTrace>> {
    if base_steps == 0 {
        return Err(invalid("base_steps", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        let n = base_steps + rng.below(3) as usize;
        let normal: Vec<Step> = (0..n).map(|k| random_step(k, rng)).collect();
        let mut shuffled = normal.clone();
        for k in n..n + shift {
            let mut step = random_step(k, rng);
            step.text = format!("Actually, {}", step.text);
            shuffled.push(step);
        }
        let id = format!("ss-{i:04}");
        let weights: Vec<f64> = (0..STEP_SHIFT_SEQ_LEN).map(|_| 0.05 + rng.next_f64()).collect();
        let attention = AttentionDistribution::normalized(weights)?.weights().to_vec();
        let prediction = random_prediction(rng);
        let shuffled_prediction = if shift == 0 { prediction } else { random_prediction(rng) };
        out.push(record(
            id.clone(),
            SYNTH_MODEL,
            Difficulty::Easy,
            Condition::Normal,
            prediction,
            attention.clone(),
            normal,
        ));
        out.push(record(
            id,
            SYNTH_MODEL,
            Difficulty::Easy,
            Condition::Shuffled,
            shuffled_prediction,
            attention,
            shuffled,
        ));
    }
    Ok(out)
}

/// Spike mass whose spike-family distribution over `seq_len` positions has
/// entropy `target`.
fn spike_for_entropy(seq_len: usize, target: f64) -> f64 {
    // entropy falls monotonically from ln(seq_len) at q = 1/seq_len to 0 at q = 1
    let (mut lo, mut hi) = (1.0 / seq_len as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spike_entropy(seq_len, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn entropy_level(target: f64, seq_len: usize, count: usize, rng: &mut SplitMix64) -> Result<Vec<QuestionTrace>> {
    if seq_len < 2 {
        return Err(invalid("seq_len", "entropy-level needs at least 2 positions"));
    }
    let max = (seq_len as f64).ln();
    if !(target.is_finite() && target >= 0.0) {
        return Err(invalid("target", format!("{target} is not a finite non-negative entropy")));
    }
    if target > max + 0.01 {
        return Err(Error::InvalidParameter {
            name: "target",
            reason: format!("{target} exceeds the maximum entropy {max} of {seq_len} positions"),
        });
    }
    let q = if target >= max { None } else { Some(spike_for_entropy(seq_len, target)) };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let attention = match q {
            None => vec![round9(1.0 / seq_len as f64); seq_len],
            Some(q) => spike(seq_len, q, rng.below(seq_len as u64) as usize),
        };
        out.push(record(
            format!("el-{i:04}"),
            SYNTH_MODEL,
            Difficulty::Easy,
            Condition::Normal,
            random_prediction(rng),
            attention,
            Vec::new(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{analyze_pair, SolutionTrace};
    use crate::semantic::effective_dimensionality;
    use crate::trace::feature_matrix;

    fn spec(preset: Preset, count: usize) -> SyntheticSpec {
        SyntheticSpec { preset, count, seed: 7 }
    }

    #[test]
    fn rank_k_attention_is_valid_and_recovers_rank() {
        let recs = generate_synthetic(&spec(Preset::RankK { k: 3, seq_len: 64 }, 500)).unwrap();
        assert_eq!(recs.len(), 500);
        for r in &recs {
            assert!(r.attention.iter().all(|w| *w > 0.0));
            assert!((r.attention.iter().sum::<f64>() - 1.0).abs() < 1e-7);
        }
        let fm = feature_matrix(&recs, 64).unwrap();
        assert_eq!(effective_dimensionality(&fm.matrix, 0.9).unwrap().d_eff, 3);
        let padded = feature_matrix(&recs, 128).unwrap();
        assert_eq!(padded.padded, 500);
        assert_eq!(effective_dimensionality(&padded.matrix, 0.9).unwrap().d_eff, 3);
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(Preset::StepShift { shift: 1, base_steps: 2 }, 5);
        assert_eq!(generate_synthetic(&s).unwrap(), generate_synthetic(&s).unwrap());
        let other = SyntheticSpec { seed: 8, ..s };
        assert_ne!(generate_synthetic(&s).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn step_shift_pairs() {
        let recs = generate_synthetic(&spec(Preset::StepShift { shift: 2, base_steps: 3 }, 10)).unwrap();
        for pair in recs.chunks(2) {
            let n = SolutionTrace::new(&pair[0].id, Condition::Normal, pair[0].steps.clone()).unwrap();
            let s = SolutionTrace::new(&pair[1].id, Condition::Shuffled, pair[1].steps.clone()).unwrap();
            assert_eq!(analyze_pair(&n, &s).unwrap().delta_steps, 2.0);
        }
        let same = generate_synthetic(&spec(Preset::StepShift { shift: 0, base_steps: 3 }, 4)).unwrap();
        for pair in same.chunks(2) {
            assert_eq!(pair[0].steps, pair[1].steps);
        }
    }

    #[test]
    fn entropy_level_hits_target() {
        let uniform = generate_synthetic(&spec(Preset::EntropyLevel { target: 8f64.ln(), seq_len: 8 }, 3)).unwrap();
        assert!(uniform.iter().all(|r| r.attention.iter().all(|w| (*w - 0.125).abs() < 1e-12)));
        for target in [0.0, 0.5, 1.7, 3.0] {
            let recs = generate_synthetic(&spec(Preset::EntropyLevel { target, seq_len: 32 }, 4)).unwrap();
            for r in recs {
                let h = shannon_entropy(&AttentionDistribution::new(r.attention).unwrap());
                assert!((h - target).abs() < 0.01, "{h} vs {target}");
            }
        }
        assert!(generate_synthetic(&spec(Preset::EntropyLevel { target: 3.0, seq_len: 8 }, 3)).is_err());
    }

    #[test]
    fn threshold_groups_cover_grid() {
        let recs = generate_synthetic(&spec(Preset::Threshold { breakpoint: 0.1 }, 4)).unwrap();
        assert_eq!(recs.len(), 18 * 4);
        assert_eq!(recs[0].model, "synth-001");
        assert!(generate_synthetic(&spec(Preset::Threshold { breakpoint: 0.02 }, 4)).is_err());
        assert!(generate_synthetic(&spec(Preset::Threshold { breakpoint: 2.0 }, 4)).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_synthetic(&spec(Preset::RankK { k: 3, seq_len: 64 }, 1)).is_err());
        assert!(generate_synthetic(&spec(Preset::RankK { k: 0, seq_len: 64 }, 10)).is_err());
        assert!(generate_synthetic(&spec(Preset::RankK { k: 64, seq_len: 64 }, 100)).is_err());
        assert!(generate_synthetic(&spec(Preset::RankK { k: 5, seq_len: 64 }, 5)).is_err());
        assert!(generate_synthetic(&spec(Preset::StepShift { shift: 1, base_steps: 0 }, 3)).is_err());
    }

    #[test]
    fn planted_matrix_has_equal_spectrum() {
        let m = planted_rank_matrix(4, 200, 16, 0.0, 3).unwrap();
        let d = effective_dimensionality(&m, 0.9).unwrap();
        assert_eq!(d.d_eff, 4);
        for ev in &d.eigenvalues[..4] {
            assert!((ev - 1.0).abs() < 1e-9);
        }
        assert!(d.eigenvalues[4] < 1e-12);
    }
}
