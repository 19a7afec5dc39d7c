use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sim::SimState;
use crate::Result;

/// One vehicle at one instant.
///
/// `lane` is counted from the rightmost lane of the section the vehicle is
/// in. `lateral` is the absolute lateral position measured from the ramp
/// centre line, so a ramp-to-highway manoeuvre runs from 0 to one lane width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub clock: f64,
    pub id: u64,
    pub lane: u32,
    pub x: f64,
    pub y_offset: f64,
    pub speed: f64,
    pub accel: f64,
    pub lateral: f64,
}

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "clock", "id", "lane", "x", "y_offset", "speed", "accel", "lateral",
];

#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecorder {
    pub rows: Vec<TrajectoryRow>,
    /// Record only these vehicles when set.
    pub only: Option<Vec<u64>>,
}

impl TrajectoryRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, state: &SimState) {
        let clock = state.clock();
        for v in &state.vehicles {
            if let Some(ids) = &self.only {
                if !ids.contains(&v.id) {
                    continue;
                }
            }
            let (lane, _) = state.network.lane_index(v.lane, v.x);
            self.rows.push(TrajectoryRow {
                clock,
                id: v.id,
                lane,
                x: v.x,
                y_offset: v.y_offset,
                speed: v.speed,
                accel: v.last_accel,
                lateral: v.lane.lateral_slot() as f64 * state.network.lane_width + v.y_offset,
            });
        }
    }

    /// Write CSV. Floats use the shortest representation that round-trips,
    /// so identical trajectories give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRAJECTORY_HEADER)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.1}", r.clock),
                r.id.to_string(),
                r.lane.to_string(),
                r.x.to_string(),
                r.y_offset.to_string(),
                r.speed.to_string(),
                r.accel.to_string(),
                r.lateral.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
