use clap::{Args, ValueEnum};

use tapkit::trace::{generate_synthetic, synthetic_header, write_traces, Preset, SyntheticSpec};

use crate::output::write_output;
use crate::{Cli, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    RankK,
    Threshold,
    StepShift,
    EntropyLevel,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub preset: PresetName,

    /// Records per group (question pairs for step-shift).
    #[arg(long, default_value_t = 20)]
    pub count: usize,

    /// Planted rank (rank-k).
    #[arg(long, default_value_t = 3)]
    pub k: usize,

    /// Attention positions (rank-k, entropy-level).
    #[arg(long, default_value_t = 64)]
    pub seq_len: usize,

    /// Planted combined-constraint threshold (threshold).
    #[arg(long, default_value_t = 0.1)]
    pub breakpoint: f64,

    /// Extra steps in the shuffled solution (step-shift).
    #[arg(long, default_value_t = 2)]
    pub shift: usize,

    /// Minimum steps in the normal solution (step-shift).
    #[arg(long, default_value_t = 3)]
    pub base_steps: usize,

    /// Attention entropy in nats (entropy-level).
    #[arg(long)]
    pub target: Option<f64>,

    /// Name of the trace file written under --out.
    #[arg(long, default_value = "traces.jsonl")]
    pub output: String,
}

pub fn run(cli: &Cli, args: &SynthArgs) -> CliResult<Vec<String>> {
    let seed = cli
        .seed
        .ok_or_else(|| CliError::Config("--seed is required for synth".into()))?;
    let preset = match args.preset {
        PresetName::RankK => Preset::RankK {
            k: args.k,
            seq_len: args.seq_len,
        },
        PresetName::Threshold => Preset::Threshold {
            breakpoint: args.breakpoint,
        },
        PresetName::StepShift => Preset::StepShift {
            shift: args.shift,
            base_steps: args.base_steps,
        },
        PresetName::EntropyLevel => Preset::EntropyLevel {
            target: args
                .target
                .ok_or_else(|| CliError::Config("--target is required for entropy-level".into()))?,
            seq_len: args.seq_len,
        },
    };
    let spec = SyntheticSpec {
        preset,
        count: args.count,
        seed,
    };
    let records = generate_synthetic(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let mut bytes = Vec::new();
    write_traces(&synthetic_header(), &records, &mut bytes).map_err(|e| CliError::Config(e.to_string()))?;
    let path = write_output(&cli.out, &args.output, &bytes)?;
    Ok(vec![format!(
        "wrote {} ({} records, preset {}, seed {seed})",
        path.display(),
        records.len(),
        preset.name()
    )])
}
