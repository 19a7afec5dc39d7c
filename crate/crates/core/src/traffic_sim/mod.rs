//! Discrete-time microscopic simulator of a two-lane highway with a taper
//! and parallel on-ramp.
//!
//! Human vehicles follow the intelligent driver model and change lanes with a
//! MOBIL-style rule; cooperative right-lane drivers yield to a merging ego by
//! treating it as a virtual leader. The ego is commanded externally at 10 Hz.

mod idm;
mod network;
mod sim;
mod trajectory;
mod vehicle;

pub use idm::{idm_acceleration, DriverParams, MAX_DECEL};
pub use network::{Lane, RoadNetwork, Section};
pub use sim::{
    EventKind, InflowCounters, SimState, SpawnConfig, StepEvent, EGO_ACCEL_LIMIT, EGO_ENTRY_SPEED,
    EGO_TIMEOUT_STEPS, HARD_BRAKE_DECEL, HUMAN_ENTRY_SPEED, MOBIL_POLITENESS, MOBIL_THRESHOLD,
    SPAWN_MARGIN, STEPS_PER_SECOND,
};
pub use trajectory::{TrajectoryRecorder, TrajectoryRow, TRAJECTORY_HEADER};
pub use vehicle::{LaneChange, Vehicle, LANE_CHANGE_STEPS, VEHICLE_LENGTH};

/// Fixed road geometry.
pub fn build_network() -> RoadNetwork {
    RoadNetwork::build()
}
