//! `onramp`: batch commands for training, evaluating, sweeping and replaying
//! on-ramp merging policies.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use onramp_core::eval_harness::Density;

use config::{Algo, FileConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "onramp",
    version,
    about = "On-ramp merging with social value orientation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write checkpoints, a JSONL log and a manifest.
    Train {
        #[command(flatten)]
        common: Common,
        /// Total environment steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Parallel training environments (PPO).
        #[arg(long)]
        envs: Option<usize>,
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        /// Continue the run in --out from its latest checkpoint (or --checkpoint).
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a checkpoint over a batch of merges at one density.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        merges: Option<usize>,
    },
    /// Evaluate several SVO checkpoints at one density, or one checkpoint at
    /// every density.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        merges: Option<usize>,
        /// `PHI=PATH`; repeat for each angle. Without it, --checkpoint is
        /// evaluated at every density preset.
        #[arg(long = "svo-checkpoint", value_parser = run::parse_svo_checkpoint)]
        svo_checkpoints: Vec<(f64, PathBuf)>,
    },
    /// Re-simulate one evaluation episode and write its trajectory CSV.
    Replay {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// SVO angle in radians, within [0, pi/2].
    #[arg(long)]
    svo: Option<f64>,
    /// Master seed; for eval and sweep the first episode seed, for replay
    /// the episode seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Traffic preset for evaluation; for `train`, the training traffic
    /// (default: 1080/360 veh/hr with half the right lane uncooperative).
    #[arg(long, value_parser = parse_density)]
    density: Option<Density>,
    /// Checkpoint to load (default: the latest checkpoint in --out).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disable multithreading. Results are identical either way.
    #[arg(long)]
    sequential: bool,
}

fn parse_density(s: &str) -> Result<Density, String> {
    s.parse().map_err(|e: onramp_core::Error| e.to_string())
}

impl Common {
    fn overrides(self) -> (Overrides, Option<PathBuf>) {
        let flags = Overrides {
            svo: self.svo,
            seed: self.seed,
            density: self.density,
            sequential: self.sequential,
            out: self.out,
            checkpoint: self.checkpoint,
            ..Overrides::default()
        };
        (flags, self.config)
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train {
            common,
            steps,
            envs,
            algo,
            resume,
        } => {
            let (mut flags, config) = common.overrides();
            if resume {
                let cfg = run::resume_config(&flags.out, steps, flags.checkpoint.take())?;
                return run::train(&cfg);
            }
            flags.steps = steps;
            flags.envs = envs;
            flags.algo = algo;
            let cfg = config::resolve("train", flags, FileConfig::load(config.as_deref())?)?;
            run::train(&cfg)
        }
        Command::Eval { common, merges } => {
            let (mut flags, config) = common.overrides();
            flags.merges = merges;
            run::eval(&config::resolve(
                "eval",
                flags,
                FileConfig::load(config.as_deref())?,
            )?)
        }
        Command::Sweep {
            common,
            merges,
            svo_checkpoints,
        } => {
            let (mut flags, config) = common.overrides();
            flags.merges = merges;
            let cfg = config::resolve("sweep", flags, FileConfig::load(config.as_deref())?)?;
            run::sweep(&cfg, &svo_checkpoints)
        }
        Command::Replay { common } => {
            let (flags, config) = common.overrides();
            run::replay(&config::resolve(
                "replay",
                flags,
                FileConfig::load(config.as_deref())?,
            )?)
        }
    }
}

/// Category for the error line: the first library error in the chain, else
/// I/O, else a generic failure.
fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<onramp_core::Error>() {
            return e.kind();
        }
    }
    for cause in err.chain() {
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() {
            return "json";
        }
    }
    "runtime"
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("error: kind=usage msg={}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error: kind={} msg={}",
                error_kind(&e),
                one_line(&format!("{e:#}"))
            );
            ExitCode::FAILURE
        }
    }
}
