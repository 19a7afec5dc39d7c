use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use super::*;
use crate::scenario::ScenarioConfig;
use crate::traffic_sim::{DriverParams, EventKind, Lane, RoadNetwork, SimState, SpawnConfig};

fn quiet_state() -> SimState {
    SimState::new(
        RoadNetwork::build(),
        SpawnConfig {
            p_right: 0.0,
            p_left: 0.0,
            uncooperative_fraction: 0.0,
        },
        0,
    )
}

#[test]
fn ego_utility_hand_values() {
    let cfg = RewardConfig::default();
    assert!((ego_utility(26.0, 26.0, &cfg) - 2.0).abs() < 1e-12);
    assert!((ego_utility(26.0, 22.0, &cfg) - 10.0 / 13.0).abs() < 1e-12);
    assert_eq!(ego_utility(0.0, 10.0, &cfg), 0.0);
}

#[test]
fn sv_utility_hand_values() {
    let cfg = RewardConfig::default();
    let wide = sv_utility(80.0, 12.0, 41.0, 45.0, 26.0, 25.0, &cfg);
    assert!((wide - 1200.0 / 389.0).abs() < 1e-12);
    let tight = sv_utility(30.0, 10.0, 20.0, 5.0, 24.0, 26.0, &cfg);
    let expected = 450.0 / 389.0 - 60.0 / 13.0 - 16.0 / 13.0;
    assert!((tight - expected).abs() < 1e-12);
    assert!((tight + 4.69).abs() < 5e-3);
    // Centred merge: no centring penalty whatever d says.
    let centred = sv_utility(30.0, 0.0, 10.0, 10.0, 26.0, 26.0, &cfg);
    assert!((centred - 450.0 / 389.0).abs() < 1e-12);
}

#[test]
#[should_panic(expected = "negative merging gap")]
fn sv_utility_rejects_negative_gap() {
    sv_utility(-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, &RewardConfig::default());
}

#[test]
fn prosocial_combination() {
    let r = svo_combine(2.0, 1200.0 / 389.0, FRAC_PI_4);
    assert!((r - (2.0 + 1200.0 / 389.0) / SQRT_2).abs() < 1e-12);
    assert!((r - 3.595).abs() < 1e-3);
}

#[test]
fn svo_boundary_angles() {
    assert_eq!(svo_combine(2.0, 5.0, 0.0), 2.0);
    assert!((svo_combine(2.0, 5.0, FRAC_PI_2) - 5.0).abs() < 1e-15);
}

#[test]
fn reward_zero_on_taper_for_any_phi() {
    let mut s = quiet_state();
    let ego = s.insert_ego();
    for phi in [0.0, 0.3, FRAC_PI_4, FRAC_PI_2] {
        assert_eq!(reward(&s, ego, &[], &RewardConfig::with_phi(phi)), 0.0);
    }
}

#[test]
fn reward_is_crash_penalty_on_collision() {
    let mut s = quiet_state();
    let ego = s.insert_ego_at(300.0, 20.0);
    let events = vec![crate::traffic_sim::StepEvent {
        kind: EventKind::Collision,
        vehicle_ids: vec![ego],
        clock: 0.0,
    }];
    assert_eq!(reward(&s, ego, &events, &RewardConfig::default()), -20.0);
}

#[test]
fn reward_uses_phantoms_on_empty_road() {
    let mut s = quiet_state();
    let ego = s.insert_ego_at(250.0, 20.0);
    let g = merge_gap(&s, ego);
    assert_eq!(g.g0, 500.0);
    assert_eq!(g.v_l1, 20.0);
    assert_eq!(g.v_t1, 20.0);
    let cfg = RewardConfig::default();
    let expected = svo_combine(cfg.w1 * 20.0, cfg.w3 * 500.0, cfg.phi);
    assert!((reward(&s, ego, &[], &cfg) - expected).abs() < 1e-12);
}

#[test]
fn empty_highway_observation() {
    let mut s = quiet_state();
    s.insert_ego();
    let o = observe(&s);
    let a = o.to_array();
    assert_eq!(a.len(), OBS_DIM);
    assert!((o.v_ego - 13.0 / 30.0).abs() < 1e-15);
    assert_eq!(&a[1..10], &[0.0; 9]);
    assert!((o.x - 1.0).abs() < 1e-15);
    assert_eq!((o.y, o.c, o.n), (0.0, 0.0, 1.0));
}

#[test]
fn single_leader_observation() {
    let mut s = quiet_state();
    s.insert_ego_at(200.0, 20.0);
    s.add_human(Lane::Right, 235.0, 26.0, DriverParams::default());
    let o = observe(&s);
    assert!((o.g_l1 - 30.0 / GAP_SCALE).abs() < 1e-15);
    assert!((o.v_l1 - 26.0 / SPEED_SCALE).abs() < 1e-15);
    assert_eq!((o.g_l2, o.v_l2), (0.0, 0.0));
    assert_eq!((o.c, o.n), (0.0, 3.0));
}

#[test]
fn adjacent_vehicle_velocity() {
    let mut s = quiet_state();
    s.insert_ego_at(200.0, 20.0);
    s.add_human(Lane::Right, 202.0, 24.0, DriverParams::default());
    let o = observe(&s);
    assert!((o.v_ad - 24.0 / SPEED_SCALE).abs() < 1e-15);
}

#[test]
fn merged_ego_observes_own_lane() {
    let mut s = quiet_state();
    let ego = s.insert_ego_at(200.0, 20.0);
    s.add_human(Lane::Left, 240.0, 26.0, DriverParams::default());
    let lead = s.add_human(Lane::Right, 260.0, 26.0, DriverParams::default());
    for k in 0..10 {
        s.step(0.0, k == 0).unwrap();
    }
    assert_eq!(s.vehicle(ego).unwrap().lane, Lane::Right);
    let nb = neighbors(&s, ego);
    assert_eq!(nb.lane, Lane::Right);
    assert_eq!(nb.leaders[0].map(|n| n.id), Some(lead));
}

fn env(seed: u64) -> MergeEnv {
    MergeEnv::new(
        ScenarioConfig {
            seed,
            ..ScenarioConfig::training()
        },
        RewardConfig::default(),
    )
    .unwrap()
}

#[test]
fn reset_is_deterministic() {
    let mut a = env(3);
    let mut b = env(99);
    assert_eq!(a.reset(42).unwrap(), b.reset(42).unwrap());
    assert_ne!(a.reset(43).unwrap(), b.reset(42).unwrap());
}

#[test]
fn scenario_sets_uncooperative_fraction() {
    assert_eq!(env(1).state().spawn.uncooperative_fraction, 0.5);
    let e = MergeEnv::from_scenario(ScenarioConfig::evaluation()).unwrap();
    assert_eq!(e.state().spawn.uncooperative_fraction, 0.25);
}

#[test]
fn max_acceleration_action() {
    let mut e = env(5);
    let v0 = e.state().ego().unwrap().speed;
    e.step(ActionId::new(12)).unwrap();
    let ego = e.state().ego().unwrap();
    assert_eq!(ego.last_accel, 3.0);
    assert!((ego.speed - v0 - 0.3).abs() < 1e-12);
}

#[test]
fn lane_change_on_taper_is_a_noop() {
    let mut e = env(5);
    let v0 = e.state().ego().unwrap().speed;
    e.step(ActionId::LANE_CHANGE).unwrap();
    let ego = e.state().ego().unwrap();
    assert_eq!(ego.speed, v0);
    assert!(ego.lane_change.is_none());
    assert!(!e.lane_change_used());
}

#[test]
fn lane_change_accepted_once() {
    let mut e = env(5);
    let start = e.state().network.parallel_start_x();
    while e.state().ego().unwrap().x < start {
        e.step(ActionId::new(12)).unwrap();
    }
    assert!(e.can_change_lane());
    e.step(ActionId::LANE_CHANGE).unwrap();
    assert!(e.lane_change_used());
    assert!(e.state().ego().unwrap().lane_change.is_some());
    let v = e.state().ego().unwrap().speed;
    e.step(ActionId::LANE_CHANGE).unwrap();
    if let Some(ego) = e.state().ego() {
        assert_eq!(ego.speed, v);
    }
}

#[test]
fn lane_change_refused_near_lane_end() {
    let mut e = env(5);
    let ego = e.ego_id();
    let end = e.state().network.merge_end_x;
    let s = e.state_mut();
    let idx = s.vehicles.iter().position(|v| v.id == ego).unwrap();
    s.vehicles[idx].x = end - 4.0;
    s.vehicles[idx].speed = 0.0;
    assert!(!e.can_change_lane());
    e.step(ActionId::LANE_CHANGE).unwrap();
    assert!(!e.lane_change_used());
}

#[test]
fn episodes_end_with_exactly_one_terminal() {
    for seed in 0..6u64 {
        let mut e = env(seed);
        let mut k = 0usize;
        loop {
            let a = if k > 60 && k.is_multiple_of(5) {
                13
            } else {
                (k * 7 + seed as usize) % 13
            };
            let s = e.step(ActionId::new(a)).unwrap();
            assert!(s.observation.to_array().iter().all(|v| v.is_finite()));
            k += 1;
            if s.done {
                let o = s.outcome.unwrap();
                assert_eq!(o.merge_snapshot.is_some(), o.terminal == Terminal::Merged);
                assert_eq!(o.merge_clock.is_some(), o.terminal == Terminal::Merged);
                break;
            }
            assert!(s.outcome.is_none());
        }
    }
}

fn run_to_end(timing: RewardTiming, seed: u64) -> Vec<(EnvStep, f64)> {
    let mut e = MergeEnv::new(
        ScenarioConfig {
            seed,
            ..ScenarioConfig::training()
        },
        RewardConfig {
            timing,
            ..RewardConfig::default()
        },
    )
    .unwrap();
    let ego = e.ego_id();
    let mut out = Vec::new();
    loop {
        let s = e
            .step(ActionId::new(if out.len() > 50 { 13 } else { 12 }))
            .unwrap();
        let formula = reward(e.state(), ego, &s.events, e.reward_config());
        let done = s.done;
        out.push((s, formula));
        if done {
            return out;
        }
    }
}

#[test]
fn merge_timing_pays_only_on_terminal_step() {
    let steps = run_to_end(RewardTiming::AtMerge, 4);
    let (last, rest) = steps.split_last().unwrap();
    assert!(rest.iter().all(|(s, _)| s.reward == 0.0));
    assert_eq!(last.0.reward, last.1);
    assert_ne!(last.0.reward, 0.0);
}

#[test]
fn every_step_timing_pays_the_formula_each_step() {
    let steps = run_to_end(RewardTiming::EveryStep, 4);
    assert!(steps.iter().all(|(s, f)| s.reward == *f));
    assert!(steps.iter().filter(|(s, _)| s.reward != 0.0).count() > 1);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn sv_utility_monotone(g0 in 0.0f64..400.0, dg in 0.0f64..50.0, gc in 0.0f64..100.0, dc in 0.0f64..50.0,
                               head in -10.0f64..100.0, tail in -10.0f64..100.0, v in 0.0f64..30.0, vt in 0.0f64..30.0) {
            let cfg = RewardConfig::default();
            let base = sv_utility(g0, gc, head, tail, v, vt, &cfg);
            prop_assert!(sv_utility(g0 + dg, gc, head, tail, v, vt, &cfg) >= base);
            prop_assert!(sv_utility(g0, gc + dc, head, tail, v, vt, &cfg) <= base);
        }

        #[test]
        fn observation_entries_bounded(seed in 0u64..500, actions in proptest::collection::vec(0usize..14, 1..120)) {
            let mut e = env(seed);
            for a in actions {
                let s = e.step(ActionId::new(a)).unwrap();
                let arr = s.observation.to_array();
                prop_assert!(arr.iter().all(|v| v.is_finite()));
                prop_assert!(arr[..12].iter().all(|v| v.abs() <= OBS_CLIP));
                if s.done { break; }
            }
        }

        #[test]
        fn lane_change_acceptance_window(seed in 0u64..200, actions in proptest::collection::vec(0usize..14, 1..200)) {
            let mut e = env(seed);
            for a in actions {
                let allowed = e.can_change_lane();
                let before = e.lane_change_used();
                let (x, end, start) = {
                    let ego = e.state().ego().unwrap();
                    (ego.x, e.state().network.merge_end_x, e.state().network.parallel_start_x())
                };
                let s = e.step(ActionId::new(a)).unwrap();
                if e.lane_change_used() && !before {
                    prop_assert!(allowed && a == 13);
                    prop_assert!(x >= start && end - x >= LANE_CHANGE_BUFFER);
                }
                if s.done { break; }
            }
        }
    }
}
