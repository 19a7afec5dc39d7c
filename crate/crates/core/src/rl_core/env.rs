use crate::Result;

/// One environment step as seen by a trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Terminal because of a collision; feeds the training collision rate.
    pub crashed: bool,
}

/// Episodic environment with a flat observation and a discrete action set.
pub trait Environment: Send {
    fn observation_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Start a new episode; the same seed reproduces the same episode.
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize) -> Result<Transition>;
}
