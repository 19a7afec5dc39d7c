use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::observation::neighbors;
use crate::traffic_sim::{EventKind, SimState, StepEvent};
use crate::{Error, Result};

/// When the environment pays the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTiming {
    /// Only on the terminal step: the utilities at the merge instant, or the
    /// crash penalty. Every other step pays 0.
    #[default]
    AtMerge,
    /// Every step in the merging zone.
    EveryStep,
}

/// Social value orientation and utility weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// SVO angle in radians, 0 (individualist) to pi/2 (altruist).
    pub phi: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    /// Head and tail gaps above this make the centring term vanish, meters.
    pub d: f64,
    pub crash_penalty: f64,
    pub timing: RewardTiming,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            phi: FRAC_PI_4,
            w1: 1.0 / 13.0,
            w2: 4.0 / 13.0,
            w3: 15.0 / 389.0,
            w4: 6.0 / 13.0,
            w5: 8.0 / 13.0,
            d: 40.0,
            crash_penalty: -20.0,
            timing: RewardTiming::AtMerge,
        }
    }
}

impl RewardConfig {
    pub fn with_phi(phi: f64) -> Self {
        RewardConfig {
            phi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=FRAC_PI_2).contains(&self.phi) {
            return Err(Error::Config(format!(
                "svo phi {} outside [0, pi/2]",
                self.phi
            )));
        }
        Ok(())
    }
}

/// Utility to the ego: prefers speed, but not faster than its leader.
/// `v_l1` should be the ego speed when there is no leader.
pub fn ego_utility(v_ego: f64, v_l1: f64, cfg: &RewardConfig) -> f64 {
    cfg.w1 * v_ego + cfg.w2 * (v_l1 - v_ego).min(0.0)
}

/// Utility to the surrounding vehicles: prefers large gaps, central
/// placement and not undercutting the trailing vehicle's speed.
///
/// # Panics
///
/// If `g0` is negative.
pub fn sv_utility(
    g0: f64,
    gc: f64,
    head_gap: f64,
    tail_gap: f64,
    v_ego: f64,
    v_t1: f64,
    cfg: &RewardConfig,
) -> f64 {
    assert!(g0 >= 0.0, "negative merging gap {g0}");
    let effective_gc = if head_gap > cfg.d && tail_gap > cfg.d {
        0.0
    } else {
        gc
    };
    cfg.w3 * g0 - cfg.w4 * effective_gc + cfg.w5 * (v_ego - v_t1).min(0.0)
}

/// Combine utilities by the SVO angle.
pub fn svo_combine(u_ego: f64, u_sv: f64, phi: f64) -> f64 {
    u_ego * phi.cos() + u_sv * phi.sin()
}

/// The gap the ego is merging into, with phantom vehicles at ego speed just
/// outside the network standing in for a missing leader or trailer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeGap {
    pub v_ego: f64,
    /// Bumper gap between the trailer's front and the leader's rear.
    pub g0: f64,
    /// Distance of the ego centre from the gap centre.
    pub gc: f64,
    /// Ego front to leader rear.
    pub head_gap: f64,
    /// Trailer front to ego rear.
    pub tail_gap: f64,
    pub v_l1: f64,
    pub v_t1: f64,
    pub l1: Option<u64>,
    pub t1: Option<u64>,
}

pub fn merge_gap(state: &SimState, ego_id: u64) -> MergeGap {
    let ego = state.vehicle(ego_id).expect("ego not in simulation");
    let nb = neighbors(state, ego_id);
    let (l1_rear, v_l1, l1) = match nb.leaders[0] {
        Some(n) => (ego.x + n.gap, n.speed, Some(n.id)),
        None => (state.network.highway_end_x(), ego.speed, None),
    };
    let (t1_front, v_t1, t1) = match nb.trailers[0] {
        Some(n) => (ego.rear() - n.gap, n.speed, Some(n.id)),
        None => (0.0, ego.speed, None),
    };
    let centre = 0.5 * (l1_rear + t1_front);
    MergeGap {
        v_ego: ego.speed,
        g0: l1_rear - t1_front,
        gc: (ego.center() - centre).abs(),
        head_gap: l1_rear - ego.x,
        tail_gap: ego.rear() - t1_front,
        v_l1,
        v_t1,
        l1,
        t1,
    }
}

/// Per-step reward for the ego `ego_id` after a step that emitted `events`.
///
/// Zero until the ego front reaches the parallel lane, the crash penalty on a
/// step where the ego collided, otherwise the SVO-weighted utilities of the
/// current gap.
pub fn reward(state: &SimState, ego_id: u64, events: &[StepEvent], cfg: &RewardConfig) -> f64 {
    let ego = state.vehicle(ego_id).expect("ego not in simulation");
    if ego.x < state.network.parallel_start_x() {
        return 0.0;
    }
    if events
        .iter()
        .any(|e| e.kind == EventKind::Collision && e.involves(ego_id))
    {
        return cfg.crash_penalty;
    }
    let gap = merge_gap(state, ego_id);
    let u_ego = ego_utility(gap.v_ego, gap.v_l1, cfg);
    let u_sv = sv_utility(
        gap.g0,
        gap.gc,
        gap.head_gap,
        gap.tail_gap,
        gap.v_ego,
        gap.v_t1,
        cfg,
    );
    svo_combine(u_ego, u_sv, cfg.phi)
}
