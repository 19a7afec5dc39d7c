use serde::{Deserialize, Serialize};

/// A lane of the network.
///
/// `Ramp` is the on-ramp (taper followed by the parallel merging lane),
/// `Right` and `Left` are the two highway lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lane {
    Ramp,
    Right,
    Left,
}

impl Lane {
    /// Lateral slot counted from the ramp: ramp 0, right 1, left 2.
    pub fn lateral_slot(self) -> i32 {
        match self {
            Lane::Ramp => 0,
            Lane::Right => 1,
            Lane::Left => 2,
        }
    }

    pub fn other_highway_lane(self) -> Option<Lane> {
        match self {
            Lane::Right => Some(Lane::Left),
            Lane::Left => Some(Lane::Right),
            Lane::Ramp => None,
        }
    }
}

/// Longitudinal section of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    /// Highway upstream of the merging lane; the taper runs alongside it.
    Upstream,
    /// Parallel merging lane alongside the right highway lane.
    Merge,
    Downstream,
}

/// Fixed straight geometry.
///
/// All lanes share one longitudinal axis. The highway starts at x = 0; the
/// taper starts at `ramp_entry_x()` and ends where the parallel lane begins,
/// and the parallel lane ends at `merge_end_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub taper_length: f64,
    pub parallel_length: f64,
    pub upstream_highway_length: f64,
    pub downstream_highway_length: f64,
    pub highway_lane_count: usize,
    pub lane_width: f64,
    pub merge_end_x: f64,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        Self::build()
    }
}

impl RoadNetwork {
    pub fn build() -> Self {
        let upstream = 150.0;
        let parallel = 200.0;
        RoadNetwork {
            taper_length: 75.0,
            parallel_length: parallel,
            upstream_highway_length: upstream,
            downstream_highway_length: 150.0,
            highway_lane_count: 2,
            lane_width: 3.2,
            merge_end_x: upstream + parallel,
        }
    }

    pub fn parallel_start_x(&self) -> f64 {
        self.merge_end_x - self.parallel_length
    }

    pub fn ramp_entry_x(&self) -> f64 {
        self.parallel_start_x() - self.taper_length
    }

    pub fn highway_end_x(&self) -> f64 {
        self.merge_end_x + self.downstream_highway_length
    }

    /// Ramp length from entry to the end of the parallel lane.
    pub fn ramp_length(&self) -> f64 {
        self.merge_end_x - self.ramp_entry_x()
    }

    pub fn section_at(&self, x: f64) -> Section {
        if x < self.parallel_start_x() {
            Section::Upstream
        } else if x <= self.merge_end_x {
            Section::Merge
        } else {
            Section::Downstream
        }
    }

    /// Lane index counted from the rightmost lane of the section at `x`,
    /// and the number of lanes in that section.
    pub fn lane_index(&self, lane: Lane, x: f64) -> (u32, u32) {
        match (lane, self.section_at(x)) {
            (Lane::Ramp, Section::Upstream) => (0, 1),
            (Lane::Ramp, _) => (0, 3),
            (Lane::Right, Section::Merge) => (1, 3),
            (Lane::Left, Section::Merge) => (2, 3),
            (Lane::Right, _) => (0, 2),
            (Lane::Left, _) => (1, 2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_matches_fixed_layout() {
        let net = RoadNetwork::build();
        assert_eq!(net.parallel_length, 200.0);
        assert_eq!(net.taper_length, 75.0);
        assert_eq!(net.upstream_highway_length, 150.0);
        assert_eq!(net.downstream_highway_length, 150.0);
        assert_eq!(net.highway_lane_count, 2);
        assert_eq!(net.merge_end_x - net.ramp_entry_x(), 275.0);
        assert_eq!(net.highway_end_x(), 500.0);
    }

    #[test]
    fn lane_indices_by_section() {
        let net = RoadNetwork::build();
        assert_eq!(net.lane_index(Lane::Ramp, 100.0), (0, 1));
        assert_eq!(net.lane_index(Lane::Ramp, 200.0), (0, 3));
        assert_eq!(net.lane_index(Lane::Right, 200.0), (1, 3));
        assert_eq!(net.lane_index(Lane::Right, 400.0), (0, 2));
        assert_eq!(net.lane_index(Lane::Left, 20.0), (1, 2));
    }
}
