//! Command implementations and the files they write.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use onramp_core::eval_harness::{
    density_sweep, replay_episode, run_evaluation, svo_sweep, write_records_csv, Density,
    DensityConfig, SweepTable,
};
use onramp_core::rl_core::{
    dqn_train, Algorithm, EvalPoint, LogRecord, Policy, PpoTrainer, TrainHooks, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
use onramp_core::seed::{derive_seed, STREAM_ENV_BUILD, STREAM_EVAL};
use onramp_core::{Checkpoint, MergeEnv, PpoConfig, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::config::{Algo, RunConfig};

pub const MANIFEST_FORMAT: &str = "onramp-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const LOG_FILE: &str = "train_log.jsonl";
/// Plot data: one row per update and per evaluation.
pub const CURVE_FILE: &str = "train_curve.csv";
const CURVE_HEADER: &str = "kind,timestep,mean_episode_reward,collision_pct,episodes";
pub const LATEST_CHECKPOINT: &str = "checkpoint.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub checkpoint_format: String,
    pub checkpoint_version: u32,
    pub argv: Vec<String>,
    pub config: RunConfig,
    /// Timesteps at which a training run was resumed.
    #[serde(default)]
    pub resumed_at: Vec<u64>,
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        Manifest {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            checkpoint_format: CHECKPOINT_FORMAT.to_string(),
            checkpoint_version: CHECKPOINT_VERSION,
            argv: std::env::args().collect(),
            config: config.clone(),
            resumed_at: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            bail!(onramp_core::Error::Config(format!(
                "{}: unsupported manifest {} v{}",
                path.display(),
                m.format,
                m.version
            )));
        }
        Ok(m)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

/// Scenario of the `k`-th training environment.
fn env_scenario(cfg: &RunConfig, k: usize) -> ScenarioConfig {
    ScenarioConfig {
        seed: derive_seed(cfg.seed, STREAM_ENV_BUILD, &[k as u64]),
        ..cfg.training_scenario
    }
}

fn make_env(cfg: &RunConfig, k: usize) -> onramp_core::Result<MergeEnv> {
    MergeEnv::new(env_scenario(cfg, k), cfg.reward)
}

/// Writes the JSONL log and checkpoints, and runs the periodic evaluation
/// on the medium-density benchmark.
struct CliHooks {
    out: PathBuf,
    log: BufWriter<File>,
    curve: BufWriter<File>,
    phi: f64,
    seed: u64,
    eval_episodes: usize,
    parallel: bool,
}

impl CliHooks {
    fn open(cfg: &RunConfig, eval_episodes: usize, append: bool) -> Result<Self> {
        let open = |name: &str| {
            let path = cfg.out.join(name);
            OpenOptions::new()
                .create(true)
                .write(true)
                .append(append)
                .truncate(!append)
                .open(&path)
                .with_context(|| format!("opening {}", path.display()))
        };
        let log = open(LOG_FILE)?;
        let mut curve = BufWriter::new(open(CURVE_FILE)?);
        if !append {
            writeln!(curve, "{CURVE_HEADER}")?;
        }
        fs::create_dir_all(cfg.out.join(CHECKPOINT_DIR))
            .with_context(|| format!("creating {}", cfg.out.join(CHECKPOINT_DIR).display()))?;
        Ok(CliHooks {
            out: cfg.out.clone(),
            log: BufWriter::new(log),
            curve,
            phi: cfg.svo_phi,
            seed: cfg.seed,
            eval_episodes,
            parallel: cfg.parallel,
        })
    }
}

impl TrainHooks for CliHooks {
    fn evaluate(
        &mut self,
        policy: &dyn Policy,
        timestep: u64,
    ) -> onramp_core::Result<Option<EvalPoint>> {
        if self.eval_episodes == 0 {
            return Ok(None);
        }
        let seed0 = derive_seed(self.seed, STREAM_EVAL, &[timestep]);
        let eval = run_evaluation(
            policy,
            DensityConfig::preset(Density::Medium),
            self.phi,
            self.eval_episodes,
            seed0,
            self.parallel,
        )?;
        let total: f64 = eval.records.iter().map(|r| r.episode_return).sum();
        Ok(Some(EvalPoint {
            mean_episode_reward: total / eval.records.len() as f64,
            collision_pct: eval.summary.collision_pct,
            episodes: eval.records.len(),
        }))
    }

    fn record(&mut self, record: &LogRecord) -> onramp_core::Result<()> {
        let line = serde_json::to_string(record)?;
        let row = match record {
            LogRecord::Update {
                timestep,
                mean_episode_reward,
                train_collision_pct,
                episodes,
                ..
            } => {
                eprintln!(
                    "step {timestep}: mean reward {} collisions {}",
                    fmt_opt(*mean_episode_reward),
                    fmt_opt(*train_collision_pct)
                );
                let cell = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
                format!(
                    "update,{timestep},{},{},{episodes}",
                    cell(*mean_episode_reward),
                    cell(*train_collision_pct)
                )
            }
            LogRecord::Eval {
                timestep,
                mean_episode_reward,
                eval_collision_pct,
                episodes,
            } => {
                eprintln!(
                    "step {timestep}: eval over {episodes} episodes, mean reward {mean_episode_reward:.3} collisions {eval_collision_pct:.1}%"
                );
                format!("eval,{timestep},{mean_episode_reward},{eval_collision_pct},{episodes}")
            }
        };
        let write = |w: &mut BufWriter<File>, name: &str, text: &str| {
            writeln!(w, "{text}")
                .and_then(|_| w.flush())
                .map_err(|e| onramp_core::Error::Io {
                    path: self.out.join(name),
                    source: e,
                })
        };
        write(&mut self.log, LOG_FILE, &line)?;
        write(&mut self.curve, CURVE_FILE, &row)
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint) -> onramp_core::Result<()> {
        let snapshot = self
            .out
            .join(CHECKPOINT_DIR)
            .join(format!("step_{:010}.json", checkpoint.timestep));
        checkpoint.save(&snapshot)?;
        checkpoint.save(&self.out.join(LATEST_CHECKPOINT))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    create_out(&cfg.out)?;
    let manifest_path = cfg.out.join("manifest.json");
    let final_ckpt = if cfg.resume {
        if cfg.algo != Algo::Ppo {
            bail!(onramp_core::Error::Config(
                "--resume is only supported for PPO".into()
            ));
        }
        let ckpt = load_checkpoint(&cfg.checkpoint_path())?;
        let mut manifest = Manifest::load(&manifest_path)?;
        manifest.resumed_at.push(ckpt.timestep);
        manifest.config.ppo.total_timesteps = cfg.ppo.total_timesteps;
        write_json(&manifest_path, &manifest)?;
        let mut hooks = CliHooks::open(cfg, cfg.ppo.eval_episodes, true)?;
        eprintln!(
            "resuming at step {} of {}",
            ckpt.timestep, cfg.ppo.total_timesteps
        );
        let mut trainer = PpoTrainer::resume(|k| make_env(cfg, k), cfg.ppo.clone(), &ckpt)?;
        trainer.set_parallel(cfg.parallel);
        trainer.run(&mut hooks)?
    } else {
        write_json(&manifest_path, &Manifest::new(cfg))?;
        match cfg.algo {
            Algo::Ppo => {
                let mut hooks = CliHooks::open(cfg, cfg.ppo.eval_episodes, false)?;
                let mut trainer = PpoTrainer::new(|k| make_env(cfg, k), cfg.ppo.clone(), cfg.seed)?;
                trainer.set_parallel(cfg.parallel);
                trainer.run(&mut hooks)?
            }
            Algo::Dqn => {
                let mut hooks = CliHooks::open(cfg, cfg.dqn.eval_episodes, false)?;
                dqn_train(make_env(cfg, 0)?, cfg.dqn.clone(), cfg.seed, &mut hooks)?
            }
        }
    };
    println!(
        "trained {} steps ({} updates); checkpoint {}",
        final_ckpt.timestep,
        final_ckpt.updates,
        cfg.out.join(LATEST_CHECKPOINT).display()
    );
    Ok(())
}

/// The configuration a resumed run continues with: the original run's
/// resolved settings, with only the step budget taken from the new flags.
pub fn resume_config(
    out: &Path,
    steps: Option<u64>,
    checkpoint: Option<PathBuf>,
) -> Result<RunConfig> {
    let manifest = Manifest::load(&out.join("manifest.json"))?;
    let mut cfg = manifest.config;
    if cfg.algo == Algo::Ppo {
        let ckpt = load_checkpoint(
            &checkpoint
                .clone()
                .unwrap_or_else(|| out.join(LATEST_CHECKPOINT)),
        )?;
        let saved: PpoConfig = serde_json::from_value(ckpt.config)
            .context("reading trainer config from checkpoint")?;
        cfg.ppo = saved;
    }
    if let Some(steps) = steps {
        cfg.ppo.total_timesteps = steps;
    }
    cfg.ppo.validate()?;
    cfg.out = out.to_path_buf();
    cfg.checkpoint = checkpoint;
    cfg.resume = true;
    Ok(cfg)
}

#[derive(Serialize)]
struct EvalReport<'a> {
    checkpoint: &'a Path,
    algorithm: Algorithm,
    checkpoint_timestep: u64,
    density: DensityConfig,
    phi: f64,
    seed0: u64,
    summary: onramp_core::EvaluationSummary,
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let path = cfg.checkpoint_path();
    let ckpt = load_checkpoint(&path)?;
    create_out(&cfg.out)?;
    let density = DensityConfig::preset(cfg.density);
    let eval = run_evaluation(
        ckpt.policy().as_ref(),
        density,
        cfg.svo_phi,
        cfg.merges,
        cfg.seed,
        cfg.parallel,
    )?;
    let stem = format!("eval-{}", cfg.density);
    write_json(
        &cfg.out.join(format!("{stem}.manifest.json")),
        &Manifest::new(cfg),
    )?;
    let csv_path = cfg.out.join(format!("{stem}.csv"));
    let csv = File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    write_records_csv(&eval.records, BufWriter::new(csv))?;
    let report = EvalReport {
        checkpoint: &path,
        algorithm: ckpt.algorithm,
        checkpoint_timestep: ckpt.timestep,
        density,
        phi: cfg.svo_phi,
        seed0: cfg.seed,
        summary: eval.summary,
    };
    write_json(&cfg.out.join(format!("{stem}.json")), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// `PHI=PATH` pair for an SVO sweep.
pub fn parse_svo_checkpoint(s: &str) -> Result<(f64, PathBuf), String> {
    let (phi, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected PHI=PATH, got {s:?}"))?;
    let phi: f64 = phi
        .trim()
        .parse()
        .map_err(|e| format!("bad angle {phi:?}: {e}"))?;
    Ok((phi, PathBuf::from(path.trim())))
}

pub fn sweep(cfg: &RunConfig, svo_checkpoints: &[(f64, PathBuf)]) -> Result<()> {
    create_out(&cfg.out)?;
    let table: SweepTable = if svo_checkpoints.is_empty() {
        let path = cfg.checkpoint_path();
        let policy = load_checkpoint(&path)?.policy();
        let presets: Vec<DensityConfig> = Density::ALL
            .iter()
            .map(|d| DensityConfig::preset(*d))
            .collect();
        density_sweep(
            policy.as_ref(),
            cfg.svo_phi,
            &presets,
            cfg.merges,
            cfg.seed,
            cfg.parallel,
        )?
    } else {
        let columns: Vec<(f64, Option<PathBuf>)> = svo_checkpoints
            .iter()
            .map(|(phi, p)| (*phi, Some(p.clone())))
            .collect();
        svo_sweep(
            &columns,
            DensityConfig::preset(cfg.density),
            cfg.merges,
            cfg.seed,
            cfg.parallel,
        )?
    };
    write_json(&cfg.out.join("sweep.manifest.json"), &Manifest::new(cfg))?;
    write_json(&cfg.out.join("sweep.json"), &table)?;
    let markdown = table.to_markdown();
    fs::write(cfg.out.join("sweep.md"), &markdown).context("writing sweep.md")?;
    fs::write(cfg.out.join("sweep.csv"), table.to_csv()).context("writing sweep.csv")?;
    print!("{markdown}");
    Ok(())
}

pub fn replay(cfg: &RunConfig) -> Result<()> {
    let ckpt = load_checkpoint(&cfg.checkpoint_path())?;
    create_out(&cfg.out)?;
    let scenario = DensityConfig::preset(cfg.density).scenario(cfg.svo_phi, cfg.seed);
    let replay = replay_episode(scenario, ckpt.policy().as_ref())?;
    let stem = format!("replay-{}-{}", cfg.density, cfg.seed);
    write_json(
        &cfg.out.join(format!("{stem}.manifest.json")),
        &Manifest::new(cfg),
    )?;
    let csv_path = cfg.out.join(format!("{stem}.csv"));
    let csv = File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    replay.write_csv(BufWriter::new(csv))?;
    write_json(&cfg.out.join(format!("{stem}.json")), &replay.record)?;
    println!(
        "episode seed {}: {:?} after {} steps, ego id {}; trajectory {}",
        cfg.seed,
        replay.record.outcome,
        replay.record.steps,
        replay.ego_id,
        csv_path.display()
    );
    Ok(())
}
