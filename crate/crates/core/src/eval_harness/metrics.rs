use crate::traffic_sim::{EventKind, StepEvent};

/// TTC threshold for the safety percentages.
pub const TTC_THRESHOLD: f64 = 10.0;
/// Gap-ratio threshold for the centrality percentage.
pub const GAP_RATIO_THRESHOLD: f64 = 0.5;
/// Conflicts are attributed up to this long after the merge.
pub const CONFLICT_TAIL_SECONDS: f64 = 5.0;

/// Time for the trailing vehicle to close the gap at constant speeds.
/// Non-positive means it is not closing; equal speeds give `+inf`.
pub fn ttc_trailing(g_t1: f64, v_t1: f64, v_ego: f64) -> f64 {
    closing_time(g_t1, v_t1 - v_ego)
}

/// Time for the ego to close the gap to its new leader.
pub fn ttc_leading(g_l1: f64, v_ego: f64, v_l1: f64) -> f64 {
    closing_time(g_l1, v_ego - v_l1)
}

fn closing_time(gap: f64, closing_speed: f64) -> f64 {
    if closing_speed == 0.0 {
        f64::INFINITY
    } else {
        gap / closing_speed
    }
}

/// Whether a TTC counts as a near miss: closing and under ten seconds.
pub fn ttc_below_threshold(ttc: f64) -> bool {
    ttc > 0.0 && ttc < TTC_THRESHOLD
}

/// Displacement of the ego centre from the gap centre as a fraction of the
/// whole gap.
///
/// # Panics
///
/// If `g0` is not positive.
pub fn gap_ratio(gc: f64, g0: f64) -> f64 {
    assert!(g0 > 0.0, "gap ratio with non-positive gap {g0}");
    gc / g0
}

/// Whether any of `parties` braked hard within `[from, until]` (seconds).
pub fn detect_conflict(events: &[StepEvent], parties: &[u64], from: f64, until: f64) -> bool {
    const EPS: f64 = 1e-9;
    events.iter().any(|e| {
        e.kind == EventKind::HardBrake
            && e.clock >= from - EPS
            && e.clock <= until + EPS
            && e.vehicle_ids.iter().any(|id| parties.contains(id))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brake(id: u64, clock: f64) -> StepEvent {
        StepEvent {
            kind: EventKind::HardBrake,
            vehicle_ids: vec![id],
            clock,
        }
    }

    #[test]
    fn ttc_examples() {
        assert_eq!(ttc_trailing(50.0, 28.0, 26.0), 25.0);
        assert_eq!(ttc_trailing(15.0, 29.0, 26.0), 5.0);
        assert!(ttc_below_threshold(ttc_trailing(15.0, 29.0, 26.0)));
        assert!(ttc_trailing(15.0, 20.0, 26.0) < 0.0);
        assert!(!ttc_below_threshold(ttc_trailing(15.0, 20.0, 26.0)));
        assert_eq!(ttc_leading(40.0, 28.0, 26.0), 20.0);
        assert_eq!(ttc_leading(9.0, 27.0, 26.0), 9.0);
        assert!(ttc_below_threshold(9.0));
        assert_eq!(ttc_leading(9.0, 26.0, 26.0), f64::INFINITY);
        assert!(!ttc_below_threshold(f64::INFINITY));
    }

    #[test]
    fn gap_ratio_examples() {
        assert_eq!(gap_ratio(0.0, 40.0), 0.0);
        assert_eq!(gap_ratio(30.0, 50.0), 0.6);
        assert_eq!(gap_ratio(10.0, 80.0), 0.125);
    }

    #[test]
    fn conflict_window_and_parties() {
        let ego = 1;
        let t1 = 2;
        let log = vec![brake(ego, 20.0)];
        assert!(detect_conflict(&log, &[ego], 15.0, 30.0));
        assert!(!detect_conflict(&log, &[ego], 21.0, 30.0));
        let log = vec![brake(t1, 33.0)];
        assert!(detect_conflict(
            &log,
            &[ego, t1],
            15.0,
            28.0 + CONFLICT_TAIL_SECONDS
        ));
        assert!(!detect_conflict(&log, &[ego], 15.0, 33.0));
        assert!(!detect_conflict(&[brake(9, 20.0)], &[ego, t1], 0.0, 99.0));
        assert!(!detect_conflict(&[], &[ego], 0.0, 99.0));
    }
}
