//! The merge as an episodic MDP: 14-value observation, 14 discrete actions
//! and the SVO-weighted reward.

mod action;
mod env;
mod observation;
mod reward;

pub use action::{ActionId, ACTION_COUNT, LANE_CHANGE_INDEX};
pub use env::{
    EnvStep, EpisodeOutcome, MergeEnv, MergeSnapshot, Terminal, LANE_CHANGE_BUFFER, WARMUP_STEPS,
};
pub use observation::{
    neighbors, observe, observe_vehicle, relevant_lane, Neighbor, Neighbors, Observation,
    GAP_SCALE, OBS_CLIP, OBS_DIM, POSITION_SCALE, SPEED_SCALE,
};
pub use reward::{
    ego_utility, merge_gap, reward, sv_utility, svo_combine, MergeGap, RewardConfig, RewardTiming,
};

#[cfg(test)]
mod tests;
