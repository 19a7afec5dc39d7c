use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::idm::{idm_acceleration, DriverParams};
use super::network::{Lane, RoadNetwork};
use super::vehicle::{LaneChange, Vehicle, VEHICLE_LENGTH};
use crate::{Error, Result, DT};

pub const STEPS_PER_SECOND: u64 = 10;
/// Speed at which human vehicles enter the highway, m/s.
pub const HUMAN_ENTRY_SPEED: f64 = 26.0;
/// Speed at which the ego enters the ramp, m/s.
pub const EGO_ENTRY_SPEED: f64 = 13.0;
/// Ego actuation limit, m/s².
pub const EGO_ACCEL_LIMIT: f64 = 3.0;
/// Realised deceleration that counts as hard braking, m/s².
pub const HARD_BRAKE_DECEL: f64 = 3.0;
/// Episode length limit for an unmerged ego.
pub const EGO_TIMEOUT_STEPS: u64 = 1500;
/// Extra clearance over `min_gap` required to insert a new vehicle.
pub const SPAWN_MARGIN: f64 = 2.0;
pub const MOBIL_POLITENESS: f64 = 0.5;
pub const MOBIL_THRESHOLD: f64 = 0.2;
const DESIRED_SPEED_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collision,
    EgoMerged,
    EgoTimeout,
    Spawn,
    HardBrake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub kind: EventKind,
    pub vehicle_ids: Vec<u64>,
    pub clock: f64,
}

impl StepEvent {
    pub fn involves(&self, id: u64) -> bool {
        self.vehicle_ids.contains(&id)
    }
}

/// Per-second Bernoulli arrival probabilities and driver mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnConfig {
    pub p_right: f64,
    pub p_left: f64,
    /// Fraction of right-lane arrivals that never yield to the ego.
    pub uncooperative_fraction: f64,
}

impl SpawnConfig {
    pub fn training() -> Self {
        SpawnConfig {
            p_right: 0.3,
            p_left: 0.1,
            uncooperative_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflowCounters {
    /// Inserted vehicles, indexed right (0) and left (1).
    pub inserted: [u64; 2],
    pub suppressed: [u64; 2],
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub vehicles: Vec<Vehicle>,
    pub network: RoadNetwork,
    pub spawn: SpawnConfig,
    pub rng: ChaCha8Rng,
    /// Events emitted by the most recent step.
    pub events: Vec<StepEvent>,
    pub inflow: InflowCounters,
    step_count: u64,
    next_id: u64,
    ego_spawning: bool,
    ego_pending: bool,
    episode_start_step: u64,
    pending_removal: Vec<u64>,
}

impl SimState {
    pub fn new(network: RoadNetwork, spawn: SpawnConfig, seed: u64) -> Self {
        SimState {
            vehicles: Vec::new(),
            network,
            spawn,
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: Vec::new(),
            inflow: InflowCounters::default(),
            step_count: 0,
            next_id: 0,
            ego_spawning: false,
            ego_pending: true,
            episode_start_step: 0,
            pending_removal: Vec::new(),
        }
    }

    pub fn clock(&self) -> f64 {
        self.step_count as f64 * DT
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Clock at which the current (or last) ego entered the ramp.
    pub fn episode_start(&self) -> f64 {
        self.episode_start_step as f64 * DT
    }

    /// Let `spawn_step` insert a new ego whenever the previous one is done.
    pub fn set_ego_spawning(&mut self, enabled: bool) {
        self.ego_spawning = enabled;
    }

    pub fn ego(&self) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.is_ego)
    }

    pub fn vehicle(&self, id: u64) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    fn index_of(&self, id: u64) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    /// Place a human vehicle directly. Used for warm-starting scenes and tests.
    pub fn add_human(&mut self, lane: Lane, x: f64, speed: f64, params: DriverParams) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.vehicles.push(Vehicle {
            id,
            lane,
            x,
            y_offset: 0.0,
            speed,
            length: VEHICLE_LENGTH,
            params,
            is_ego: false,
            was_ego: false,
            last_accel: 0.0,
            lane_change: None,
        });
        id
    }

    /// Insert the ego with its front bumper at `x` on the ramp.
    ///
    /// # Panics
    ///
    /// If an ego already exists.
    pub fn insert_ego_at(&mut self, x: f64, speed: f64) -> u64 {
        assert!(self.ego().is_none(), "an ego already exists");
        let id = self.add_human(Lane::Ramp, x, speed, DriverParams::default());
        let idx = self.vehicles.len() - 1;
        self.vehicles[idx].is_ego = true;
        self.ego_pending = false;
        self.episode_start_step = self.step_count;
        id
    }

    /// Insert the ego at the ramp entry at the standard entry speed.
    pub fn insert_ego(&mut self) -> u64 {
        let x = self.network.ramp_entry_x();
        self.insert_ego_at(x, EGO_ENTRY_SPEED)
    }

    fn sample_params(&mut self, lane: Lane) -> DriverParams {
        let normal = Normal::new(HUMAN_ENTRY_SPEED, DESIRED_SPEED_STD).expect("valid normal");
        let desired_speed = loop {
            let s = normal.sample(&mut self.rng);
            if s > 0.0 {
                break s;
            }
        };
        let cooperative = match lane {
            Lane::Right => self.rng.random::<f64>() >= self.spawn.uncooperative_fraction,
            _ => true,
        };
        DriverParams {
            desired_speed,
            cooperative,
            ..DriverParams::default()
        }
    }

    /// Smallest bumper gap between a vehicle occupying `[front - length, front]`
    /// and anything already in `lane`.
    fn insertion_gap(&self, lane: Lane, front: f64, length: f64) -> f64 {
        self.vehicles
            .iter()
            .filter(|v| v.lane == lane)
            .map(|v| {
                if v.x >= front {
                    v.rear() - front
                } else {
                    (front - length) - v.x
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// One second of arrivals: per highway lane a Bernoulli draw, then the
    /// ego if none is active and spawning is enabled.
    pub fn spawn_step(&mut self) {
        let clock = self.clock();
        for (slot, lane) in [(0usize, Lane::Right), (1, Lane::Left)] {
            let p = if slot == 0 {
                self.spawn.p_right
            } else {
                self.spawn.p_left
            };
            if self.rng.random::<f64>() >= p {
                continue;
            }
            let params = self.sample_params(lane);
            if self.insertion_gap(lane, VEHICLE_LENGTH, VEHICLE_LENGTH)
                < params.min_gap + SPAWN_MARGIN
            {
                self.inflow.suppressed[slot] += 1;
                continue;
            }
            let id = self.add_human(lane, VEHICLE_LENGTH, HUMAN_ENTRY_SPEED, params);
            self.inflow.inserted[slot] += 1;
            self.events.push(StepEvent {
                kind: EventKind::Spawn,
                vehicle_ids: vec![id],
                clock,
            });
        }
        if self.ego_spawning && self.ego_pending && self.ego().is_none() {
            let id = self.insert_ego();
            self.events.push(StepEvent {
                kind: EventKind::Spawn,
                vehicle_ids: vec![id],
                clock,
            });
        }
    }

    /// Crashed or timed-out vehicles stay in the list until the next step but
    /// no longer take part in car following.
    fn is_removed(&self, id: u64) -> bool {
        self.pending_removal.contains(&id)
    }

    /// Nearest vehicle ahead of `x` in `lane`, ordered by (front, id).
    fn leader_in(&self, me: usize, lane: Lane, exclude: Option<usize>) -> Option<usize> {
        let key = (self.vehicles[me].x, self.vehicles[me].id);
        let mut best: Option<usize> = None;
        for (j, v) in self.vehicles.iter().enumerate() {
            if j == me || Some(j) == exclude || v.lane != lane || self.is_removed(v.id) {
                continue;
            }
            if (v.x, v.id) > key {
                match best {
                    Some(b) if (self.vehicles[b].x, self.vehicles[b].id) <= (v.x, v.id) => {}
                    _ => best = Some(j),
                }
            }
        }
        best
    }

    fn follower_in(&self, me: usize, lane: Lane) -> Option<usize> {
        let key = (self.vehicles[me].x, self.vehicles[me].id);
        let mut best: Option<usize> = None;
        for (j, v) in self.vehicles.iter().enumerate() {
            if j == me || v.lane != lane || self.is_removed(v.id) {
                continue;
            }
            if (v.x, v.id) < key {
                match best {
                    Some(b) if (self.vehicles[b].x, self.vehicles[b].id) >= (v.x, v.id) => {}
                    _ => best = Some(j),
                }
            }
        }
        best
    }

    /// Car-following leader of vehicle `me` as if it drove in `lane`:
    /// `(leader index, gap)`. Cooperative right-lane drivers also yield to an
    /// unmerged ego on the parallel lane ahead of them.
    fn following_target(
        &self,
        me: usize,
        lane: Lane,
        exclude: Option<usize>,
    ) -> Option<(usize, f64)> {
        let v = &self.vehicles[me];
        let mut best = self
            .leader_in(me, lane, exclude)
            .map(|j| (j, self.vehicles[j].rear() - v.x));
        if v.params.cooperative && !v.is_ego && lane == Lane::Right {
            if let Some(e) = self.vehicles.iter().position(|u| u.is_ego) {
                let ego = &self.vehicles[e];
                if ego.lane == Lane::Ramp
                    && ego.x >= self.network.parallel_start_x()
                    && ego.x > v.x
                    && Some(e) != exclude
                    && !self.is_removed(ego.id)
                {
                    let gap = ego.rear() - v.x;
                    if gap > 0.0 && best.is_none_or(|(_, g)| gap < g) {
                        best = Some((e, gap));
                    }
                }
            }
        }
        best
    }

    fn idm_in(&self, me: usize, lane: Lane, exclude: Option<usize>) -> f64 {
        let v = &self.vehicles[me];
        let leader = self
            .following_target(me, lane, exclude)
            .map(|(j, gap)| (self.vehicles[j].speed, gap));
        idm_acceleration(v.speed, leader, &v.params)
    }

    /// Leader a human vehicle follows, with the bumper gap to it.
    ///
    /// # Panics
    ///
    /// If `id` is unknown or is the active ego.
    pub fn effective_leader(&self, id: u64) -> Option<(u64, f64)> {
        let me = self.index_of(id).expect("unknown vehicle");
        assert!(
            !self.vehicles[me].is_ego,
            "the ego has no car-following leader"
        );
        self.following_target(me, self.vehicles[me].lane, None)
            .map(|(j, gap)| (self.vehicles[j].id, gap))
    }

    /// MOBIL decision for one vehicle; returns the lane to move to.
    fn mobil_target(&self, me: usize) -> Option<Lane> {
        let c = &self.vehicles[me];
        let target = c.lane.other_highway_lane()?;

        let new_leader = self.leader_in(me, target, None);
        if let Some(l) = new_leader {
            if self.vehicles[l].rear() - c.x <= 0.0 {
                return None;
            }
        }
        let new_follower = self.follower_in(me, target);
        if let Some(f) = new_follower {
            if c.rear() - self.vehicles[f].x <= 0.0 {
                return None;
            }
        }

        let a_c = self.idm_in(me, c.lane, None);
        let a_c_new = self.idm_in(me, target, None);
        if a_c_new < -c.params.comfortable_decel {
            return None;
        }

        let mut follower_delta = 0.0;
        if let Some(f) = new_follower {
            let fv = &self.vehicles[f];
            let a_n = self.idm_in(f, target, None);
            let a_n_new =
                idm_acceleration(fv.speed, Some((c.speed, c.rear() - fv.x)), &fv.params).min(a_n);
            if a_n_new < -fv.params.comfortable_decel {
                return None;
            }
            follower_delta += a_n_new - a_n;
        }
        if let Some(o) = self.follower_in(me, c.lane) {
            let a_o = self.idm_in(o, c.lane, None);
            let a_o_new = self.idm_in(o, c.lane, Some(me));
            follower_delta += a_o_new - a_o;
        }

        let incentive = a_c_new - a_c + MOBIL_POLITENESS * follower_delta;
        (incentive > MOBIL_THRESHOLD).then_some(target)
    }

    /// Evaluate the lane-change rule for every human highway vehicle, front
    /// to back, applying accepted changes immediately. Returns the number of
    /// changes made.
    pub fn human_lane_change(&mut self) -> usize {
        let mut order: Vec<usize> = (0..self.vehicles.len())
            .filter(|&i| {
                let v = &self.vehicles[i];
                v.is_human() && v.lane != Lane::Ramp && v.lane_change.is_none()
            })
            .collect();
        order.sort_by(|&a, &b| {
            let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
            vb.x.total_cmp(&va.x).then(vb.id.cmp(&va.id))
        });
        let mut changes = 0;
        for i in order {
            if let Some(lane) = self.mobil_target(i) {
                self.vehicles[i].lane = lane;
                changes += 1;
            }
        }
        changes
    }

    /// Advance one 0.1 s step with the ego commanded by `ego_accel` (clamped
    /// to ±3 m/s²). `ego_lane_change` starts the lateral manoeuvre; the caller
    /// is responsible for deciding whether it is allowed.
    ///
    /// # Panics
    ///
    /// If no ego exists.
    pub fn step(&mut self, ego_accel: f64, ego_lane_change: bool) -> Result<&[StepEvent]> {
        assert!(self.ego().is_some(), "step called without an ego");
        self.advance(Some((ego_accel, ego_lane_change)))?;
        Ok(&self.events)
    }

    /// Advance one step with no ego command: human traffic only, or an ego
    /// that has already handed over control.
    pub fn step_traffic(&mut self) -> Result<&[StepEvent]> {
        self.advance(None)?;
        Ok(&self.events)
    }

    fn flush_removals(&mut self) {
        if self.pending_removal.is_empty() {
            return;
        }
        let gone = std::mem::take(&mut self.pending_removal);
        self.vehicles.retain(|v| !gone.contains(&v.id));
    }

    fn advance(&mut self, ego_cmd: Option<(f64, bool)>) -> Result<()> {
        self.events.clear();
        self.flush_removals();

        let accels: Vec<f64> = (0..self.vehicles.len())
            .map(|i| {
                let v = &self.vehicles[i];
                if v.is_ego {
                    ego_cmd
                        .map_or(0.0, |(a, _)| a)
                        .clamp(-EGO_ACCEL_LIMIT, EGO_ACCEL_LIMIT)
                } else {
                    self.idm_in(i, v.lane, None)
                }
            })
            .collect();

        if let Some((_, true)) = ego_cmd {
            if let Some(ego) = self.vehicles.iter_mut().find(|v| v.is_ego) {
                if ego.lane_change.is_none() && ego.lane == Lane::Ramp {
                    ego.lane_change = Some(LaneChange {
                        from: Lane::Ramp,
                        to: Lane::Right,
                        steps_done: 0,
                    });
                }
            }
        }

        for (v, &a) in self.vehicles.iter_mut().zip(&accels) {
            let mut a = a;
            let mut speed = v.speed + a * DT;
            if speed < 0.0 {
                a = -v.speed / DT;
                speed = 0.0;
            }
            v.speed = speed;
            v.x += speed * DT;
            v.last_accel = a;
        }
        self.step_count += 1;
        let clock = self.clock();

        let lane_width = self.network.lane_width;
        for v in self.vehicles.iter_mut() {
            let Some(mut lc) = v.lane_change else {
                continue;
            };
            let was_crossed = lc.crossed();
            lc.steps_done += 1;
            if lc.crossed() && !was_crossed {
                v.lane = lc.to;
                if v.is_ego {
                    v.is_ego = false;
                    v.was_ego = true;
                    self.ego_pending = true;
                    self.events.push(StepEvent {
                        kind: EventKind::EgoMerged,
                        vehicle_ids: vec![v.id],
                        clock,
                    });
                }
            }
            let y = lc.displacement(lane_width);
            v.y_offset = if lc.crossed() { y - lane_width } else { y };
            if lc.finished() {
                v.lane_change = None;
                v.y_offset = 0.0;
            } else {
                v.lane_change = Some(lc);
            }
        }

        self.detect_collisions(clock)?;

        if self.step_count.is_multiple_of(STEPS_PER_SECOND) {
            self.human_lane_change();
            self.spawn_step();
        }

        for v in &self.vehicles {
            if v.last_accel <= -HARD_BRAKE_DECEL {
                self.events.push(StepEvent {
                    kind: EventKind::HardBrake,
                    vehicle_ids: vec![v.id],
                    clock,
                });
            }
        }

        if let Some(ego) = self.ego() {
            let id = ego.id;
            if !self.pending_removal.contains(&id)
                && self.step_count - self.episode_start_step >= EGO_TIMEOUT_STEPS
            {
                self.events.push(StepEvent {
                    kind: EventKind::EgoTimeout,
                    vehicle_ids: vec![id],
                    clock,
                });
                self.pending_removal.push(id);
                self.ego_pending = true;
            }
        }

        let end = self.network.highway_end_x();
        self.vehicles.retain(|v| v.x <= end);
        Ok(())
    }

    fn detect_collisions(&mut self, clock: f64) -> Result<()> {
        let n = self.vehicles.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&self.vehicles[i], &self.vehicles[j]);
                if a.lane != b.lane || !(a.rear() < b.x && b.rear() < a.x) {
                    continue;
                }
                let (follower, leader) = if (a.x, a.id) < (b.x, b.id) {
                    (a, b)
                } else {
                    (b, a)
                };
                if !follower.ego_lineage() && !leader.ego_lineage() {
                    return Err(Error::HumanCollision {
                        follower: follower.id,
                        leader: leader.id,
                        clock,
                    });
                }
                let ids = vec![follower.id, leader.id];
                for v in [follower, leader] {
                    if v.ego_lineage() && !self.pending_removal.contains(&v.id) {
                        self.pending_removal.push(v.id);
                    }
                }
                self.events.push(StepEvent {
                    kind: EventKind::Collision,
                    vehicle_ids: ids,
                    clock,
                });
            }
        }

        // An unmerged ego that runs out of ramp hits the end of the lane.
        if let Some(ego) = self.ego() {
            if ego.lane == Lane::Ramp
                && ego.lane_change.is_none()
                && ego.x > self.network.merge_end_x
            {
                let id = ego.id;
                self.events.push(StepEvent {
                    kind: EventKind::Collision,
                    vehicle_ids: vec![id],
                    clock,
                });
                if !self.pending_removal.contains(&id) {
                    self.pending_removal.push(id);
                }
            }
        }

        if self.events.iter().any(|e| {
            e.kind == EventKind::Collision && self.ego().is_some_and(|ego| e.involves(ego.id))
        }) {
            self.ego_pending = true;
        }
        Ok(())
    }
}
