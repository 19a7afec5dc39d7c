use serde::{Deserialize, Serialize};

pub const ACTION_COUNT: usize = 14;
pub const LANE_CHANGE_INDEX: usize = 13;

/// One of the 14 discrete actions: accelerations -3.0..=+3.0 m/s² in
/// 0.5 m/s² steps (indices 0..=12) and the lane change (index 13).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionId(u8);

impl ActionId {
    pub const LANE_CHANGE: ActionId = ActionId(LANE_CHANGE_INDEX as u8);

    /// # Panics
    ///
    /// If `index >= 14`.
    pub fn new(index: usize) -> Self {
        Self::try_new(index).unwrap_or_else(|| panic!("action index {index} out of range"))
    }

    pub fn try_new(index: usize) -> Option<Self> {
        (index < ACTION_COUNT).then_some(ActionId(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_lane_change(self) -> bool {
        self.index() == LANE_CHANGE_INDEX
    }

    /// Commanded acceleration, or `None` for the lane change.
    pub fn acceleration(self) -> Option<f64> {
        (!self.is_lane_change()).then(|| -3.0 + 0.5 * self.0 as f64)
    }

    pub fn all() -> impl Iterator<Item = ActionId> {
        (0..ACTION_COUNT).map(ActionId::new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceleration_grid() {
        let accels: Vec<f64> = ActionId::all().filter_map(|a| a.acceleration()).collect();
        assert_eq!(accels.len(), 13);
        assert_eq!(accels[0], -3.0);
        assert_eq!(accels[6], 0.0);
        assert_eq!(accels[12], 3.0);
        assert!(accels.windows(2).all(|w| (w[1] - w[0] - 0.5).abs() < 1e-15));
        assert!(ActionId::new(13).is_lane_change());
        assert_eq!(ActionId::new(12).acceleration(), Some(3.0));
    }

    #[test]
    #[should_panic]
    fn out_of_range_index() {
        ActionId::new(14);
    }
}
