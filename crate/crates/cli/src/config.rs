//! Run configuration: command-line flags override values from a JSON config
//! file, which override built-in defaults.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use onramp_core::eval_harness::{Density, DensityConfig};
use onramp_core::rl_core::DqnConfig;
use onramp_core::{PpoConfig, RewardConfig, ScenarioConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ppo,
    Dqn,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub svo: Option<f64>,
    pub steps: Option<u64>,
    pub envs: Option<usize>,
    pub seed: Option<u64>,
    pub density: Option<Density>,
    pub merges: Option<usize>,
    pub algo: Option<Algo>,
    pub sequential: Option<bool>,
    /// Training traffic, vehicles per hour. Without these, `train` uses the
    /// `density` preset if one is given, else the default training traffic.
    pub inflow_left: Option<f64>,
    pub inflow_right: Option<f64>,
    pub uncooperative_fraction: Option<f64>,
    pub reward: Option<RewardConfig>,
    pub ppo: Option<PpoConfig>,
    pub dqn: Option<DqnConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings shared by all commands; stored in every manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub svo_phi: f64,
    pub seed: u64,
    pub density: Density,
    pub merges: usize,
    pub algo: Algo,
    pub parallel: bool,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub resume: bool,
    /// Scenario used by training environments.
    pub training_scenario: ScenarioConfig,
    pub reward: RewardConfig,
    pub ppo: PpoConfig,
    pub dqn: DqnConfig,
}

/// Flag values as parsed by clap; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub svo: Option<f64>,
    pub steps: Option<u64>,
    pub envs: Option<usize>,
    pub seed: Option<u64>,
    pub density: Option<Density>,
    pub merges: Option<usize>,
    pub algo: Option<Algo>,
    pub sequential: bool,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub resume: bool,
}

pub fn resolve(command: &str, flags: Overrides, file: FileConfig) -> Result<RunConfig> {
    let svo_phi = flags.svo.or(file.svo).unwrap_or(FRAC_PI_4);
    let seed = flags.seed.or(file.seed).unwrap_or(0);
    let mut ppo = file.ppo.unwrap_or_default();
    let mut dqn = file.dqn.unwrap_or_default();
    if let Some(steps) = flags.steps.or(file.steps) {
        ppo.total_timesteps = steps;
        dqn.total_timesteps = steps;
    }
    if let Some(envs) = flags.envs.or(file.envs) {
        ppo.n_envs = envs;
    }
    let density = flags.density.or(file.density);
    let defaults = match density {
        Some(d) if command == "train" => DensityConfig::preset(d).scenario(svo_phi, seed),
        _ => ScenarioConfig::training(),
    };
    let training_scenario = ScenarioConfig {
        svo_phi,
        inflow_left: file.inflow_left.unwrap_or(defaults.inflow_left),
        inflow_right: file.inflow_right.unwrap_or(defaults.inflow_right),
        uncooperative_fraction: file
            .uncooperative_fraction
            .unwrap_or(defaults.uncooperative_fraction),
        seed,
    };
    let cfg = RunConfig {
        command: command.to_string(),
        svo_phi,
        seed,
        density: density.unwrap_or(Density::Medium),
        merges: flags.merges.or(file.merges).unwrap_or(100),
        algo: flags.algo.or(file.algo).unwrap_or(Algo::Ppo),
        parallel: !(flags.sequential || file.sequential.unwrap_or(false)),
        out: flags.out,
        checkpoint: flags.checkpoint,
        resume: flags.resume,
        training_scenario,
        reward: RewardConfig {
            phi: svo_phi,
            ..file.reward.unwrap_or_default()
        },
        ppo,
        dqn,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self) -> onramp_core::Result<()> {
        self.training_scenario.validate()?;
        self.reward.validate()?;
        if self.merges == 0 {
            return Err(onramp_core::Error::Config("merges must be positive".into()));
        }
        match self.algo {
            Algo::Ppo => self.ppo.validate(),
            Algo::Dqn => self.dqn.validate(),
        }
    }

    /// Checkpoint path for eval and replay: `--checkpoint`, else the latest
    /// checkpoint in the output directory.
    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out.join(crate::run::LATEST_CHECKPOINT))
    }
}
