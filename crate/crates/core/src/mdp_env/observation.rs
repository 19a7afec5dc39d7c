use serde::{Deserialize, Serialize};

use crate::traffic_sim::{Lane, SimState, Vehicle};

pub const OBS_DIM: usize = 14;
pub const SPEED_SCALE: f64 = 30.0;
pub const GAP_SCALE: f64 = 200.0;
pub const POSITION_SCALE: f64 = 275.0;
/// Normalised entries are clipped to this magnitude.
pub const OBS_CLIP: f64 = 1.5;

/// Ego-centred state vector, in order:
/// `[v_ego, v_t1, v_t2, v_l1, v_l2, v_ad, g_t1, g_t2, g_l1, g_l2, x, y, c, n]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub v_ego: f64,
    pub v_t1: f64,
    pub v_t2: f64,
    pub v_l1: f64,
    pub v_l2: f64,
    pub v_ad: f64,
    pub g_t1: f64,
    pub g_t2: f64,
    pub g_l1: f64,
    pub g_l2: f64,
    pub x: f64,
    pub y: f64,
    pub c: f64,
    pub n: f64,
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        [
            self.v_ego, self.v_t1, self.v_t2, self.v_l1, self.v_l2, self.v_ad, self.g_t1,
            self.g_t2, self.g_l1, self.g_l2, self.x, self.y, self.c, self.n,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u64,
    pub speed: f64,
    /// Bumper gap towards the ego side (to the ego for the first neighbour,
    /// to the first neighbour for the second). Negative when overlapping.
    pub gap: f64,
}

/// Vehicles around the ego in the lane it merges into (or its own lane once
/// merged). Leaders have their centre ahead of the ego centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbors {
    pub lane: Lane,
    pub leaders: [Option<Neighbor>; 2],
    pub trailers: [Option<Neighbor>; 2],
    pub adjacent: Option<Neighbor>,
}

/// The lane whose traffic matters to the ego: the adjacent highway lane
/// while on the ramp, its own lane afterwards.
pub fn relevant_lane(ego: &Vehicle) -> Lane {
    match ego.lane {
        Lane::Ramp => Lane::Right,
        lane => lane,
    }
}

pub fn neighbors(state: &SimState, ego_id: u64) -> Neighbors {
    let ego = state.vehicle(ego_id).expect("ego not in simulation");
    let lane = relevant_lane(ego);
    let centre = ego.center();
    let mut ahead: Vec<&Vehicle> = Vec::new();
    let mut behind: Vec<&Vehicle> = Vec::new();
    let mut adjacent: Option<&Vehicle> = None;
    for v in state
        .vehicles
        .iter()
        .filter(|v| v.lane == lane && v.id != ego_id)
    {
        if v.center() > centre {
            ahead.push(v);
        } else {
            behind.push(v);
        }
        if v.rear() < ego.x && ego.rear() < v.x {
            let closer =
                adjacent.is_none_or(|a| (v.center() - centre).abs() < (a.center() - centre).abs());
            if closer {
                adjacent = Some(v);
            }
        }
    }
    ahead.sort_by(|a, b| a.center().total_cmp(&b.center()).then(a.id.cmp(&b.id)));
    behind.sort_by(|a, b| b.center().total_cmp(&a.center()).then(b.id.cmp(&a.id)));

    let nb = |v: &Vehicle, gap: f64| Neighbor {
        id: v.id,
        speed: v.speed,
        gap,
    };
    let l1 = ahead.first().map(|v| nb(v, v.rear() - ego.x));
    let l2 = ahead.get(1).map(|v| nb(v, v.rear() - ahead[0].x));
    let t1 = behind.first().map(|v| nb(v, ego.rear() - v.x));
    let t2 = behind.get(1).map(|v| nb(v, behind[0].rear() - v.x));
    Neighbors {
        lane,
        leaders: [l1, l2],
        trailers: [t1, t2],
        adjacent: adjacent.map(|v| nb(v, 0.0)),
    }
}

fn clip(v: f64) -> f64 {
    v.clamp(-OBS_CLIP, OBS_CLIP)
}

/// Observation for vehicle `ego_id`, which may be the active ego or the
/// ego that has just merged.
pub fn observe_vehicle(state: &SimState, ego_id: u64) -> Observation {
    let ego = state.vehicle(ego_id).expect("ego not in simulation");
    let nb = neighbors(state, ego_id);
    let speed = |n: Option<Neighbor>| n.map_or(0.0, |n| clip(n.speed / SPEED_SCALE));
    let gap = |n: Option<Neighbor>| n.map_or(0.0, |n| clip(n.gap / GAP_SCALE));
    let (c, n) = state.network.lane_index(ego.lane, ego.x);
    Observation {
        v_ego: clip(ego.speed / SPEED_SCALE),
        v_t1: speed(nb.trailers[0]),
        v_t2: speed(nb.trailers[1]),
        v_l1: speed(nb.leaders[0]),
        v_l2: speed(nb.leaders[1]),
        v_ad: speed(nb.adjacent),
        g_t1: gap(nb.trailers[0]),
        g_t2: gap(nb.trailers[1]),
        g_l1: gap(nb.leaders[0]),
        g_l2: gap(nb.leaders[1]),
        x: clip((state.network.merge_end_x - ego.x) / POSITION_SCALE),
        y: clip(ego.y_offset / state.network.lane_width),
        c: c as f64,
        n: n as f64,
    }
}

/// Observation of the active ego.
///
/// # Panics
///
/// If there is no ego.
pub fn observe(state: &SimState) -> Observation {
    let id = state.ego().expect("observe called without an ego").id;
    observe_vehicle(state, id)
}
