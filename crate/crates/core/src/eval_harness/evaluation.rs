use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    detect_conflict, gap_ratio, ttc_below_threshold, ttc_leading, ttc_trailing,
    CONFLICT_TAIL_SECONDS, GAP_RATIO_THRESHOLD,
};
use crate::mdp_env::{observe_vehicle, ActionId, MergeEnv, RewardConfig, Terminal};
use crate::rl_core::Policy;
use crate::scenario::ScenarioConfig;
use crate::traffic_sim::{EventKind, StepEvent, TrajectoryRecorder, STEPS_PER_SECOND};
use crate::{Error, Result};

/// Traffic keeps running this long after a merge so the post-merge
/// interaction can be checked for conflicts and collisions.
pub const POST_MERGE_SECONDS: f64 = 5.0;
pub const EVAL_UNCOOPERATIVE_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Easy,
    Medium,
    Hard,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Easy, Density::Medium, Density::Hard];
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Density::Easy => "easy",
            Density::Medium => "medium",
            Density::Hard => "hard",
        })
    }
}

impl FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Density::Easy),
            "medium" => Ok(Density::Medium),
            "hard" => Ok(Density::Hard),
            _ => Err(Error::Config(format!(
                "unknown density {s:?} (easy, medium, hard)"
            ))),
        }
    }
}

/// Test-time traffic level in vehicles per hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub name: Density,
    pub right_inflow: f64,
    pub left_inflow: f64,
}

impl DensityConfig {
    pub fn preset(name: Density) -> Self {
        let (right_inflow, left_inflow) = match name {
            Density::Easy => (405.0, 90.0),
            Density::Medium => (810.0, 180.0),
            Density::Hard => (1013.0, 225.0),
        };
        DensityConfig {
            name,
            right_inflow,
            left_inflow,
        }
    }

    /// Evaluation scenario at this density for a policy trained with `phi`.
    pub fn scenario(&self, phi: f64, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            svo_phi: phi,
            inflow_left: self.left_inflow,
            inflow_right: self.right_inflow,
            uncooperative_fraction: EVAL_UNCOOPERATIVE_FRACTION,
            seed,
        }
    }
}

/// One evaluation episode. Metric fields are set only for merged episodes;
/// the snapshot columns they were computed from are kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub episode: usize,
    pub episode_seed: u64,
    pub outcome: Terminal,
    pub steps: u64,
    pub episode_return: f64,
    pub zone_entry_clock: Option<f64>,
    pub merge_clock: Option<f64>,
    /// The ego merged but collided within the post-merge window.
    pub post_merge_collision: bool,
    pub conflict: bool,
    pub merge_velocity: Option<f64>,
    pub ttc_l1: Option<f64>,
    pub ttc_t1: Option<f64>,
    pub gap_ratio: Option<f64>,
    pub v_t1: Option<f64>,
    pub v_l1: Option<f64>,
    pub g_t1: Option<f64>,
    pub g_l1: Option<f64>,
    pub g0: Option<f64>,
    pub gc: Option<f64>,
    pub t1: Option<u64>,
    pub l1: Option<u64>,
}

/// Table row schema. Collision and conflict percentages are over all
/// episodes; velocity, TTC and gap-ratio statistics over merged episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub n_episodes: usize,
    pub n_merges: usize,
    pub n_collisions: usize,
    pub n_timeouts: usize,
    pub collision_pct: f64,
    pub conflict_pct: f64,
    pub mean_merge_velocity: f64,
    pub pct_ttc_l1_below_10s: f64,
    pub pct_ttc_t1_below_10s: f64,
    pub pct_gap_ratio_above_half: f64,
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Aggregate records in index order. Empty denominators give 0.
pub fn summarize(records: &[MergeRecord]) -> EvaluationSummary {
    let n = records.len();
    let merged: Vec<&MergeRecord> = records
        .iter()
        .filter(|r| r.outcome == Terminal::Merged)
        .collect();
    let m = merged.len();
    let count = |f: &dyn Fn(&MergeRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let count_merged = |f: &dyn Fn(&MergeRecord) -> bool| merged.iter().filter(|r| f(r)).count();
    let velocity_sum: f64 = merged.iter().map(|r| r.merge_velocity.unwrap()).sum();
    EvaluationSummary {
        n_episodes: n,
        n_merges: m,
        n_collisions: count(&|r| r.outcome == Terminal::Crashed),
        n_timeouts: count(&|r| r.outcome == Terminal::Timeout),
        collision_pct: pct(count(&|r| r.outcome == Terminal::Crashed), n),
        conflict_pct: pct(count(&|r| r.conflict), n),
        mean_merge_velocity: if m == 0 { 0.0 } else { velocity_sum / m as f64 },
        pct_ttc_l1_below_10s: pct(count_merged(&|r| ttc_below_threshold(r.ttc_l1.unwrap())), m),
        pct_ttc_t1_below_10s: pct(count_merged(&|r| ttc_below_threshold(r.ttc_t1.unwrap())), m),
        pct_gap_ratio_above_half: pct(
            count_merged(&|r| r.gap_ratio.unwrap() > GAP_RATIO_THRESHOLD),
            m,
        ),
    }
}

/// Drive a freshly reset environment to the end of its episode with the
/// greedy policy, then, after a merge, let traffic run for
/// [`POST_MERGE_SECONDS`] with no new ego.
pub fn run_episode(
    env: &mut MergeEnv,
    policy: &dyn Policy,
    episode: usize,
    mut recorder: Option<&mut TrajectoryRecorder>,
) -> Result<MergeRecord> {
    assert!(
        !env.is_done(),
        "run_episode needs a freshly reset environment"
    );
    let ego = env.ego_id();
    let mut events: Vec<StepEvent> = Vec::new();
    let mut total = 0.0;
    let mut steps = 0u64;
    let mut obs = env
        .state()
        .vehicle(ego)
        .map(|_| observe_vehicle(env.state(), ego));
    if let Some(r) = recorder.as_deref_mut() {
        r.record(env.state());
    }
    while !env.is_done() {
        let o = obs.expect("ego present while episode runs").to_array();
        let s = env
            .step(ActionId::new(policy.act(&o)))
            .map_err(|e| Error::Environment {
                env: episode,
                timestep: steps,
                source: Box::new(e),
            })?;
        steps += 1;
        total += s.reward;
        events.extend(s.events);
        obs = Some(s.observation);
        if let Some(r) = recorder.as_deref_mut() {
            r.record(env.state());
        }
    }
    let outcome = *env.outcome().expect("finished episode has an outcome");

    let mut post_merge_collision = false;
    if outcome.terminal == Terminal::Merged {
        let state = env.state_mut();
        state.set_ego_spawning(false);
        for k in 0..(POST_MERGE_SECONDS * STEPS_PER_SECOND as f64).round() as u64 {
            let ev = state.step_traffic().map_err(|e| Error::Environment {
                env: episode,
                timestep: steps + k,
                source: Box::new(e),
            })?;
            post_merge_collision |= ev
                .iter()
                .any(|e| e.kind == EventKind::Collision && e.involves(ego));
            events.extend_from_slice(ev);
            if let Some(r) = recorder.as_deref_mut() {
                r.record(state);
            }
        }
    }

    let zone = env.zone_entry_clock();
    let end_clock = env.state().clock();
    let snap = outcome.merge_snapshot;
    let conflict = match (zone, outcome.merge_clock, snap) {
        (Some(from), Some(merge), Some(s)) => {
            let parties: Vec<u64> = [Some(ego), s.t1, s.l1].into_iter().flatten().collect();
            detect_conflict(&events, &parties, from, merge + CONFLICT_TAIL_SECONDS)
        }
        (Some(from), _, _) => detect_conflict(&events, &[ego], from, end_clock),
        (None, _, _) => false,
    };
    let terminal = if post_merge_collision {
        Terminal::Crashed
    } else {
        outcome.terminal
    };
    let merged = terminal == Terminal::Merged;
    let metric = |f: &dyn Fn() -> f64| merged.then(f);
    let s = snap.filter(|_| merged);
    Ok(MergeRecord {
        episode,
        episode_seed: env.episode_seed(),
        outcome: terminal,
        steps,
        episode_return: total,
        zone_entry_clock: zone,
        merge_clock: outcome.merge_clock,
        post_merge_collision,
        conflict,
        merge_velocity: s.map(|s| s.v_ego),
        ttc_l1: s.and_then(|s| metric(&|| ttc_leading(s.g_l1, s.v_ego, s.v_l1))),
        ttc_t1: s.and_then(|s| metric(&|| ttc_trailing(s.g_t1, s.v_t1, s.v_ego))),
        gap_ratio: s.and_then(|s| metric(&|| gap_ratio(s.gc, s.g0))),
        v_t1: s.map(|s| s.v_t1),
        v_l1: s.map(|s| s.v_l1),
        g_t1: s.map(|s| s.g_t1),
        g_l1: s.map(|s| s.g_l1),
        g0: s.map(|s| s.g0),
        gc: s.map(|s| s.gc),
        t1: s.and_then(|s| s.t1),
        l1: s.and_then(|s| s.l1),
    })
}

/// Build the environment for one evaluation seed and run it.
pub fn evaluate_seed(
    scenario: ScenarioConfig,
    policy: &dyn Policy,
    episode: usize,
    recorder: Option<&mut TrajectoryRecorder>,
) -> Result<MergeRecord> {
    let mut env = MergeEnv::new(scenario, RewardConfig::with_phi(scenario.svo_phi))?;
    run_episode(&mut env, policy, episode, recorder)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub density: DensityConfig,
    pub phi: f64,
    pub seed0: u64,
    pub summary: EvaluationSummary,
    pub records: Vec<MergeRecord>,
}

/// `n` greedy episodes with seeds `seed0 + i`. Results are identical in
/// parallel and sequential mode.
pub fn run_evaluation(
    policy: &dyn Policy,
    density: DensityConfig,
    phi: f64,
    n: usize,
    seed0: u64,
    parallel: bool,
) -> Result<Evaluation> {
    let one = |i: usize| {
        evaluate_seed(
            density.scenario(phi, seed0.wrapping_add(i as u64)),
            policy,
            i,
            None,
        )
    };
    let records: Vec<MergeRecord> = if parallel {
        (0..n).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..n).map(one).collect::<Result<_>>()?
    };
    Ok(Evaluation {
        density,
        phi,
        seed0,
        summary: summarize(&records),
        records,
    })
}

pub fn write_records_csv<W: Write>(records: &[MergeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<MergeRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
