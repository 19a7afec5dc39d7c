use std::io::Write;

use super::evaluation::{run_episode, MergeRecord};
use crate::mdp_env::MergeEnv;
use crate::rl_core::Policy;
use crate::scenario::ScenarioConfig;
use crate::traffic_sim::{TrajectoryRecorder, TrajectoryRow};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Replay {
    pub ego_id: u64,
    pub record: MergeRecord,
    pub trajectory: TrajectoryRecorder,
}

impl Replay {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.trajectory.write_csv(out)
    }

    pub fn ego_rows(&self) -> impl Iterator<Item = &TrajectoryRow> {
        self.trajectory
            .rows
            .iter()
            .filter(move |r| r.id == self.ego_id)
    }
}

/// Re-run the episode seeded by `scenario.seed`, recording every vehicle at
/// every step from ego insertion to the end of the post-merge window.
pub fn replay_episode(scenario: ScenarioConfig, policy: &dyn Policy) -> Result<Replay> {
    let mut trajectory = TrajectoryRecorder::new();
    let mut env = MergeEnv::from_scenario(scenario)?;
    let ego_id = env.ego_id();
    let record = run_episode(&mut env, policy, 0, Some(&mut trajectory))?;
    Ok(Replay {
        ego_id,
        record,
        trajectory,
    })
}
