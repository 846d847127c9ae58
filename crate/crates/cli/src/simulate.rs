use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;

use tapkit::constraints::ConstraintTriple;
use tapkit::tap::{
    check_capacity_bound, simulate, write_trajectory_csv, ConstraintSchedule, HierarchyConfig,
    IntegrationForm, ResourceConfig, ResourcePlan, ResourceState, TapConfig, DEFAULT_CAP,
};

use crate::output::{open_input, write_output};
use crate::{Cli, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Classic,
    Sequence,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Min,
    Product,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,

    /// Initial possibility-space size.
    #[arg(long)]
    pub m0: f64,

    /// Constraint constant (classic mode).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Comma-separated constraint constants by combination size (sequence mode).
    #[arg(long, value_delimiter = ',')]
    pub alpha_seq: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: f64,

    #[arg(long, default_value_t = 10)]
    pub max_steps: u64,

    /// Resource ceiling C_max (bounded mode).
    #[arg(long)]
    pub cmax: Option<f64>,

    /// Constant memory cost per step.
    #[arg(long, default_value_t = 0.0)]
    pub mem: f64,

    /// Constant attention cost per step.
    #[arg(long, default_value_t = 0.0)]
    pub attn: f64,

    /// Constant hidden-state cost per step.
    #[arg(long, default_value_t = 0.0)]
    pub hidden: f64,

    /// CSV with columns mem,attn,hidden, one row per step (last row held).
    #[arg(long)]
    pub resource_file: Option<PathBuf>,

    /// Norm weights for mem,attn,hidden (default equal).
    #[arg(long, value_delimiter = ',')]
    pub resource_weights: Vec<f64>,

    #[arg(long, default_value_t = 1)]
    pub levels: usize,

    /// Per-level gain K.
    #[arg(long, default_value_t = 1.0)]
    pub gain_k: f64,

    /// Share of the raw increment routed to each level (default equal).
    #[arg(long, value_delimiter = ',')]
    pub level_gains: Vec<f64>,

    /// Normalised architectural constraint.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Normalised training constraint.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Normalised contextual constraint.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,

    #[arg(long, value_enum, default_value = "min")]
    pub form: Form,

    /// Capacity constant κ; checks m ≤ κ·C_max·ln C_max.
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct CostRow {
    mem: f64,
    attn: f64,
    hidden: f64,
}

fn config_err(flag: &str) -> impl Fn(tapkit::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{flag}: {e}"))
}

fn resource_plan(args: &SimulateArgs, c_max: f64) -> CliResult<ResourcePlan> {
    let config = match args.resource_weights.as_slice() {
        [] => ResourceConfig::balanced(c_max),
        [a, b, c] => ResourceConfig::new(c_max, *a, *b, *c),
        other => {
            return Err(CliError::Config(format!(
                "--resource-weights: expected 3 values, got {}",
                other.len()
            )))
        }
    }
    .map_err(config_err("--cmax/--resource-weights"))?;

    let trajectory = match &args.resource_file {
        None => vec![ResourceState::new(args.mem, args.attn, args.hidden).map_err(config_err("--mem/--attn/--hidden"))?],
        Some(path) => {
            let mut reader = csv::Reader::from_reader(open_input(path, "--resource-file")?);
            let mut states = Vec::new();
            for row in reader.deserialize::<CostRow>() {
                let row = row.map_err(|e| CliError::Config(format!("--resource-file {}: {e}", path.display())))?;
                states.push(ResourceState::new(row.mem, row.attn, row.hidden).map_err(config_err("--resource-file"))?);
            }
            if states.is_empty() {
                return Err(CliError::Config(format!("--resource-file {}: no rows", path.display())));
            }
            states
        }
    };
    Ok(ResourcePlan { config, trajectory })
}

fn build_config(args: &SimulateArgs) -> CliResult<TapConfig> {
    let schedule = match args.mode {
        Mode::Classic => {
            let alpha = args
                .alpha
                .ok_or_else(|| CliError::Config("--alpha is required in classic mode".into()))?;
            ConstraintSchedule::ConstantAlpha(alpha)
        }
        Mode::Sequence => {
            if args.alpha_seq.is_empty() {
                return Err(CliError::Config("--alpha-seq is required in sequence mode".into()));
            }
            ConstraintSchedule::AlphaSequence(args.alpha_seq.clone())
        }
        Mode::Bounded => {
            let triple = ConstraintTriple::normalized(args.beta, args.gamma, args.delta)
                .map_err(config_err("--beta/--gamma/--delta"))?;
            let form = match args.form {
                Form::Min => IntegrationForm::Min,
                Form::Product => IntegrationForm::Product,
            };
            ConstraintSchedule::Integrated {
                triples: vec![triple],
                form,
            }
        }
    };

    let (resources, hierarchy) = if args.mode == Mode::Bounded {
        let c_max = args
            .cmax
            .ok_or_else(|| CliError::Config("--cmax is required in bounded mode".into()))?;
        let hierarchy = if args.level_gains.is_empty() {
            HierarchyConfig::uniform(args.levels, args.gain_k)
        } else {
            HierarchyConfig::new(args.levels, args.gain_k, args.level_gains.clone())
        }
        .map_err(config_err("--levels/--gain-k/--level-gains"))?;
        (Some(resource_plan(args, c_max)?), Some(hierarchy))
    } else {
        (None, None)
    };

    Ok(TapConfig {
        m0: args.m0,
        schedule,
        resources,
        hierarchy,
        cap: args.cap,
        max_steps: args.max_steps,
        kappa: args.kappa,
    })
}

pub fn run(cli: &Cli, args: &SimulateArgs) -> CliResult<Vec<String>> {
    let cfg = build_config(args)?;
    let traj = simulate(&cfg).map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = Vec::new();
    write_trajectory_csv(&traj, &mut csv).map_err(|e| CliError::Config(e.to_string()))?;
    let path = write_output(&cli.out, "trajectory.csv", &csv)?;

    let mut lines = vec![format!("wrote {}", path.display())];
    lines.push(match traj.blow_up_step {
        Some(step) => format!("blow-up at step {step}"),
        None => format!("no blow-up within {} steps", cfg.max_steps),
    });
    if cfg.kappa.is_some() && cfg.resources.is_some() {
        let check = check_capacity_bound(&traj, &cfg).map_err(|e| CliError::Config(e.to_string()))?;
        lines.push(match check.first_violation {
            None => format!("capacity bound {} holds", check.limit),
            Some(t) => format!("capacity bound {} exceeded at step {t}", check.limit),
        });
    }
    Ok(lines)
}
