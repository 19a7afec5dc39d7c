use serde::{Deserialize, Serialize};

use super::action::{ActionId, ACTION_COUNT};
use super::observation::{observe_vehicle, Observation, OBS_DIM};
use super::reward::{merge_gap, reward, RewardConfig, RewardTiming};
use crate::rl_core::{Environment, Transition};
use crate::scenario::ScenarioConfig;
use crate::traffic_sim::{EventKind, Lane, RoadNetwork, SimState, StepEvent};
use crate::Result;

/// Human-only warm-up before the ego enters, so the highway is populated.
pub const WARMUP_STEPS: u64 = 600;
/// The lane change must start with at least this much parallel lane left.
pub const LANE_CHANGE_BUFFER: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Merged,
    Crashed,
    Timeout,
}

/// Quantities frozen at the instant the ego centre crossed into the highway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeSnapshot {
    pub v_ego: f64,
    pub v_t1: f64,
    pub v_l1: f64,
    pub g_t1: f64,
    pub g_l1: f64,
    pub g0: f64,
    pub gc: f64,
    pub t1: Option<u64>,
    pub l1: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub terminal: Terminal,
    pub merge_clock: Option<f64>,
    pub merge_snapshot: Option<MergeSnapshot>,
}

#[derive(Debug, Clone)]
pub struct EnvStep {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub outcome: Option<EpisodeOutcome>,
    pub events: Vec<StepEvent>,
}

/// One ego merge per episode on top of a fresh, warmed-up simulation.
#[derive(Debug, Clone)]
pub struct MergeEnv {
    scenario: ScenarioConfig,
    reward_cfg: RewardConfig,
    state: SimState,
    ego_id: u64,
    lane_change_used: bool,
    done: bool,
    last_obs: Observation,
    outcome: Option<EpisodeOutcome>,
    zone_entry_clock: Option<f64>,
    episode_seed: u64,
}

impl MergeEnv {
    /// Build an environment and reset it with `scenario.seed`.
    pub fn new(scenario: ScenarioConfig, reward_cfg: RewardConfig) -> Result<Self> {
        scenario.validate()?;
        reward_cfg.validate()?;
        let state = SimState::new(RoadNetwork::build(), scenario.spawn_config(), scenario.seed);
        let mut env = MergeEnv {
            scenario,
            reward_cfg,
            state,
            ego_id: 0,
            lane_change_used: false,
            done: true,
            last_obs: Observation::default(),
            outcome: None,
            zone_entry_clock: None,
            episode_seed: scenario.seed,
        };
        env.reset(scenario.seed)?;
        Ok(env)
    }

    /// Environment whose reward uses the scenario's SVO angle.
    pub fn from_scenario(scenario: ScenarioConfig) -> Result<Self> {
        Self::new(scenario, RewardConfig::with_phi(scenario.svo_phi))
    }

    /// Fresh simulation seeded with `seed`, 60 s of human traffic, then the
    /// ego on the ramp at 13 m/s.
    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let mut state = SimState::new(RoadNetwork::build(), self.scenario.spawn_config(), seed);
        for _ in 0..WARMUP_STEPS {
            state.step_traffic()?;
        }
        self.ego_id = state.insert_ego();
        self.state = state;
        self.lane_change_used = false;
        self.done = false;
        self.outcome = None;
        self.zone_entry_clock = None;
        self.episode_seed = seed;
        self.last_obs = observe_vehicle(&self.state, self.ego_id);
        Ok(self.last_obs)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SimState {
        &mut self.state
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward_cfg
    }

    pub fn ego_id(&self) -> u64 {
        self.ego_id
    }

    pub fn episode_seed(&self) -> u64 {
        self.episode_seed
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn outcome(&self) -> Option<&EpisodeOutcome> {
        self.outcome.as_ref()
    }

    /// Clock at which the ego front first reached the parallel lane.
    pub fn zone_entry_clock(&self) -> Option<f64> {
        self.zone_entry_clock
    }

    pub fn lane_change_used(&self) -> bool {
        self.lane_change_used
    }

    /// Whether a lane-change action would be accepted right now.
    pub fn can_change_lane(&self) -> bool {
        if self.lane_change_used {
            return false;
        }
        let Some(ego) = self.state.ego() else {
            return false;
        };
        let net = &self.state.network;
        ego.lane == Lane::Ramp
            && ego.lane_change.is_none()
            && ego.x >= net.parallel_start_x()
            && net.merge_end_x - ego.x >= LANE_CHANGE_BUFFER
    }

    /// Forward one action to the simulator. A lane change outside the
    /// allowed window (or a second one) is a 0 m/s² step.
    ///
    /// # Panics
    ///
    /// If the episode has finished.
    pub fn apply_action(&mut self, action: ActionId) -> Result<Vec<StepEvent>> {
        assert!(!self.done, "apply_action on a finished episode");
        let start_lane_change = action.is_lane_change() && self.can_change_lane();
        if start_lane_change {
            self.lane_change_used = true;
        }
        let accel = action.acceleration().unwrap_or(0.0);
        Ok(self.state.step(accel, start_lane_change)?.to_vec())
    }

    pub fn step(&mut self, action: ActionId) -> Result<EnvStep> {
        let events = self.apply_action(action)?;
        let id = self.ego_id;
        let clock = self.state.clock();

        if self.zone_entry_clock.is_none() {
            if let Some(ego) = self.state.vehicle(id) {
                if ego.x >= self.state.network.parallel_start_x() {
                    self.zone_entry_clock = Some(clock);
                }
            }
        }

        let has = |kind: EventKind| events.iter().any(|e| e.kind == kind && e.involves(id));
        let terminal = if has(EventKind::Collision) {
            Some(Terminal::Crashed)
        } else if has(EventKind::EgoMerged) {
            Some(Terminal::Merged)
        } else if has(EventKind::EgoTimeout) {
            Some(Terminal::Timeout)
        } else {
            None
        };

        let r = match (self.reward_cfg.timing, terminal) {
            (RewardTiming::EveryStep, _)
            | (RewardTiming::AtMerge, Some(Terminal::Merged | Terminal::Crashed)) => {
                reward(&self.state, id, &events, &self.reward_cfg)
            }
            (RewardTiming::AtMerge, _) => 0.0,
        };
        self.last_obs = observe_vehicle(&self.state, id);

        if let Some(terminal) = terminal {
            let merged = terminal == Terminal::Merged;
            let snapshot = merged.then(|| {
                let g = merge_gap(&self.state, id);
                MergeSnapshot {
                    v_ego: g.v_ego,
                    v_t1: g.v_t1,
                    v_l1: g.v_l1,
                    g_t1: g.tail_gap,
                    g_l1: g.head_gap,
                    g0: g.g0,
                    gc: g.gc,
                    t1: g.t1,
                    l1: g.l1,
                }
            });
            self.outcome = Some(EpisodeOutcome {
                terminal,
                merge_clock: merged.then_some(clock),
                merge_snapshot: snapshot,
            });
            self.done = true;
        }

        Ok(EnvStep {
            observation: self.last_obs,
            reward: r,
            done: self.done,
            outcome: self.outcome,
            events,
        })
    }
}

impl Environment for MergeEnv {
    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn action_count(&self) -> usize {
        ACTION_COUNT
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        Ok(MergeEnv::reset(self, seed)?.to_array().to_vec())
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        let s = MergeEnv::step(self, ActionId::new(action))?;
        Ok(Transition {
            observation: s.observation.to_array().to_vec(),
            reward: s.reward,
            done: s.done,
            crashed: s.outcome.is_some_and(|o| o.terminal == Terminal::Crashed),
        })
    }
}
