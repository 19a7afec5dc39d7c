use serde::{Deserialize, Serialize};

/// Hardest deceleration any vehicle can realise, m/s².
pub const MAX_DECEL: f64 = 9.0;

/// Behavioural parameters of a driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverParams {
    pub desired_speed: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub time_headway: f64,
    pub min_gap: f64,
    pub accel_exponent: f64,
    pub cooperative: bool,
}

impl Default for DriverParams {
    fn default() -> Self {
        DriverParams {
            desired_speed: 26.0,
            max_accel: 2.6,
            comfortable_decel: 4.5,
            time_headway: 1.0,
            min_gap: 2.5,
            accel_exponent: 4.0,
            cooperative: true,
        }
    }
}

impl DriverParams {
    /// Desired dynamic gap s*(v, Δv).
    pub fn desired_gap(&self, v: f64, v_leader: f64) -> f64 {
        self.min_gap
            + v * self.time_headway
            + v * (v - v_leader) / (2.0 * (self.max_accel * self.comfortable_decel).sqrt())
    }
}

/// Intelligent driver model acceleration.
///
/// `leader` is `(leader speed, bumper-to-bumper gap)`; `None` means a free
/// road. The result is clamped to `[-MAX_DECEL, max_accel]`.
///
/// # Panics
///
/// If the gap is not positive. Overlap is a collision and must be handled
/// before car following is evaluated.
pub fn idm_acceleration(v: f64, leader: Option<(f64, f64)>, p: &DriverParams) -> f64 {
    debug_assert!(v >= 0.0, "negative speed {v}");
    let free = 1.0 - (v / p.desired_speed).powf(p.accel_exponent);
    let interaction = match leader {
        None => 0.0,
        Some((v_leader, gap)) => {
            assert!(gap > 0.0, "IDM evaluated with non-positive gap {gap}");
            let s = p.desired_gap(v, v_leader).max(0.0) / gap;
            s * s
        }
    };
    (p.max_accel * (free - interaction)).clamp(-MAX_DECEL, p.max_accel)
}
