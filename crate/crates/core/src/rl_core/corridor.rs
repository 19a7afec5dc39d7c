//! Deterministic corridor used to sanity-check the learners.

use super::env::{Environment, Transition};
use crate::Result;

pub const CORRIDOR_LENGTH: usize = 10;
pub const CORRIDOR_STEP_LIMIT: u64 = 30;
pub const CORRIDOR_STEP_COST: f64 = 0.05;
pub const CORRIDOR_GOAL_REWARD: f64 = 1.0;

/// Return of the shortest path: eight costed steps then the goal.
pub const CORRIDOR_OPTIMAL_RETURN: f64 =
    CORRIDOR_GOAL_REWARD - (CORRIDOR_LENGTH - 2) as f64 * CORRIDOR_STEP_COST;

/// Ten cells in a row, start at the left end, goal at the right end.
/// Action 0 moves left (walls clamp), action 1 moves right. Observation is a
/// one-hot of the position; the seed is ignored.
#[derive(Debug, Clone, Default)]
pub struct Corridor {
    position: usize,
    steps: u64,
}

impl Corridor {
    pub fn new() -> Self {
        Self::default()
    }

    fn observation(&self) -> Vec<f64> {
        let mut o = vec![0.0; CORRIDOR_LENGTH];
        o[self.position] = 1.0;
        o
    }
}

impl Environment for Corridor {
    fn observation_dim(&self) -> usize {
        CORRIDOR_LENGTH
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self, _seed: u64) -> Result<Vec<f64>> {
        self.position = 0;
        self.steps = 0;
        Ok(self.observation())
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        assert!(action < 2, "corridor action {action} out of range");
        self.position = match action {
            0 => self.position.saturating_sub(1),
            _ => (self.position + 1).min(CORRIDOR_LENGTH - 1),
        };
        self.steps += 1;
        let goal = self.position == CORRIDOR_LENGTH - 1;
        Ok(Transition {
            observation: self.observation(),
            reward: if goal {
                CORRIDOR_GOAL_REWARD
            } else {
                -CORRIDOR_STEP_COST
            },
            done: goal || self.steps >= CORRIDOR_STEP_LIMIT,
            crashed: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_right_is_optimal() {
        let mut c = Corridor::new();
        c.reset(0).unwrap();
        let mut total = 0.0;
        loop {
            let t = c.step(1).unwrap();
            total += t.reward;
            if t.done {
                break;
            }
        }
        assert!((total - 0.6).abs() < 1e-12);
        assert!((CORRIDOR_OPTIMAL_RETURN - 0.6).abs() < 1e-12);
    }

    #[test]
    fn step_limit_ends_episode() {
        let mut c = Corridor::new();
        c.reset(0).unwrap();
        for k in 1..=CORRIDOR_STEP_LIMIT {
            let t = c.step(0).unwrap();
            assert_eq!(t.done, k == CORRIDOR_STEP_LIMIT);
        }
    }
}
