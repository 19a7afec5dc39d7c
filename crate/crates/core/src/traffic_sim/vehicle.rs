use serde::{Deserialize, Serialize};

use super::idm::DriverParams;
use super::network::Lane;

pub const VEHICLE_LENGTH: f64 = 5.0;

/// Steps taken by the ego lateral manoeuvre (2.0 s at 10 Hz).
pub const LANE_CHANGE_STEPS: u32 = 20;

/// An in-progress lateral manoeuvre tracing a cosine-eased S profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChange {
    pub from: Lane,
    pub to: Lane,
    pub steps_done: u32,
}

impl LaneChange {
    /// Lateral displacement from the centre of `from` after `steps_done`.
    pub fn displacement(&self, lane_width: f64) -> f64 {
        let phase = self.steps_done as f64 / LANE_CHANGE_STEPS as f64;
        0.5 * lane_width * (1.0 - (std::f64::consts::PI * phase).cos())
    }

    /// The centre has crossed the lane boundary at the half-way step.
    pub fn crossed(&self) -> bool {
        2 * self.steps_done >= LANE_CHANGE_STEPS
    }

    pub fn finished(&self) -> bool {
        self.steps_done >= LANE_CHANGE_STEPS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u64,
    pub lane: Lane,
    /// Front bumper position.
    pub x: f64,
    /// Offset from the centre of `lane`, positive to the left.
    pub y_offset: f64,
    pub speed: f64,
    pub length: f64,
    pub params: DriverParams,
    pub is_ego: bool,
    /// Set once an ego has handed control to the simulator.
    pub was_ego: bool,
    pub last_accel: f64,
    pub lane_change: Option<LaneChange>,
}

impl Vehicle {
    pub fn rear(&self) -> f64 {
        self.x - self.length
    }

    pub fn center(&self) -> f64 {
        self.x - 0.5 * self.length
    }

    /// Human-driven: not the active ego.
    pub fn is_human(&self) -> bool {
        !self.is_ego
    }

    /// The active ego, or a former ego now driven by the simulator.
    pub fn ego_lineage(&self) -> bool {
        self.is_ego || self.was_ego
    }
}
