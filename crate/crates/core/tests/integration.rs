use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use onramp_core::eval_harness::{
    read_records_csv, replay_episode, run_evaluation, svo_sweep, write_records_csv, Density,
    DensityConfig,
};
use onramp_core::mdp_env::Terminal;
use onramp_core::rl_core::{
    dqn_train, evaluate_policy, train, Corridor, DqnConfig, NoHooks, Policy, PpoTrainer,
    CORRIDOR_OPTIMAL_RETURN,
};
use onramp_core::traffic_sim::LANE_CHANGE_STEPS;
use onramp_core::{Checkpoint, MergeEnv, PpoConfig, ScenarioConfig, DT};
use proptest::prelude::*;

/// Accelerate to highway speed, then request the lane change every step.
struct Scripted;

impl Policy for Scripted {
    fn act(&self, obs: &[f64]) -> usize {
        if obs[0] * 30.0 < 24.0 {
            12
        } else {
            13
        }
    }
}

fn small_ppo(steps: u64) -> PpoConfig {
    PpoConfig {
        n_envs: 3,
        horizon: 64,
        total_timesteps: steps,
        eval_interval: 0,
        ..PpoConfig::default()
    }
}

fn merge_env(k: usize) -> onramp_core::Result<MergeEnv> {
    MergeEnv::from_scenario(ScenarioConfig {
        seed: k as u64,
        ..ScenarioConfig::training()
    })
}

#[test]
fn parallel_and_sequential_training_agree() {
    let a = train(merge_env, small_ppo(384), 5, false, &mut NoHooks).unwrap();
    let b = train(merge_env, small_ppo(384), 5, true, &mut NoHooks).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn resumed_trainer_restores_network_and_optimizer() {
    let mut first = PpoTrainer::new(merge_env, small_ppo(384), 9).unwrap();
    first.iterate().unwrap();
    let saved = first.checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    saved.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    let mut resumed = PpoTrainer::resume(merge_env, small_ppo(384), &loaded).unwrap();
    assert_eq!(resumed.timestep(), saved.timestep);
    assert_eq!(resumed.updates(), 1);
    assert_eq!(
        resumed.checkpoint().to_json().unwrap(),
        saved.to_json().unwrap()
    );
    let end = resumed.run(&mut NoHooks).unwrap();
    assert_eq!(end.timestep, 384);
    assert_eq!(end.updates, 2);
}

#[test]
fn resume_rejects_dqn_checkpoints() {
    let cfg = DqnConfig {
        total_timesteps: 300,
        learning_starts: 50,
        eval_interval: 0,
        ..DqnConfig::default()
    };
    let ckpt = dqn_train(merge_env(0).unwrap(), cfg, 1, &mut NoHooks).unwrap();
    assert!(PpoTrainer::resume(merge_env, small_ppo(384), &ckpt).is_err());
}

#[test]
fn dqn_learns_the_corridor() {
    let cfg = DqnConfig {
        total_timesteps: 20_000,
        learning_rate: 1e-3,
        buffer_size: 10_000,
        learning_starts: 500,
        target_update_interval: 500,
        exploration_fraction: 0.3,
        train_freq: 1,
        eval_interval: 0,
        ..DqnConfig::default()
    };
    let ckpt = dqn_train(Corridor::new(), cfg, 3, &mut NoHooks).unwrap();
    let point =
        evaluate_policy(|_| Ok(Corridor::new()), ckpt.policy().as_ref(), 1, 0, false).unwrap();
    assert!((point.mean_episode_reward - CORRIDOR_OPTIMAL_RETURN).abs() < 1e-9);
}

#[test]
fn evaluation_is_identical_in_parallel_and_sequential_mode() {
    let d = DensityConfig::preset(Density::Hard);
    let a = run_evaluation(&Scripted, d, FRAC_PI_4, 20, 100, false).unwrap();
    let b = run_evaluation(&Scripted, d, FRAC_PI_4, 20, 100, true).unwrap();
    assert_eq!(a, b);
}

#[test]
fn record_csv_round_trips() {
    let eval = run_evaluation(
        &Scripted,
        DensityConfig::preset(Density::Medium),
        0.3,
        15,
        7,
        true,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_records_csv(&eval.records, &mut buf).unwrap();
    assert_eq!(read_records_csv(buf.as_slice()).unwrap(), eval.records);
}

#[test]
fn replayed_merge_traces_a_monotone_s_curve() {
    let density = DensityConfig::preset(Density::Easy);
    let (replay, seed) = (0..50)
        .map(|seed| {
            (
                replay_episode(density.scenario(FRAC_PI_4, seed), &Scripted).unwrap(),
                seed,
            )
        })
        .find(|(r, _)| r.record.outcome == Terminal::Merged)
        .expect("a scripted merge in light traffic");
    let merge_clock = replay.record.merge_clock.unwrap();
    let horizon = merge_clock + LANE_CHANGE_STEPS as f64 * DT;
    let lateral: Vec<f64> = replay
        .ego_rows()
        .filter(|r| r.clock <= horizon)
        .map(|r| r.lateral)
        .collect();
    let start = lateral[0];
    let end = *lateral.last().unwrap();
    assert!(
        (end - start).abs() > 3.0,
        "seed {seed}: lateral moved {start} -> {end}"
    );
    let sign = (end - start).signum();
    for w in lateral.windows(2) {
        assert!(
            sign * (w[1] - w[0]) >= -1e-12,
            "seed {seed}: lateral not monotone"
        );
    }
    let again = replay_episode(density.scenario(FRAC_PI_4, seed), &Scripted).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    replay.write_csv(&mut x).unwrap();
    again.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn svo_sweep_keeps_going_past_a_missing_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train(merge_env, small_ppo(192), 2, false, &mut NoHooks).unwrap();
    let good = dir.path().join("good.json");
    ckpt.save(&good).unwrap();
    let columns = [
        (0.0, Some(PathBuf::from("/nonexistent/phi0.json"))),
        (FRAC_PI_4, Some(good)),
        (std::f64::consts::FRAC_PI_2, None),
    ];
    let table = svo_sweep(&columns, DensityConfig::preset(Density::Easy), 3, 0, true).unwrap();
    assert!(table.columns[0].summary.is_none() && table.columns[0].error.is_some());
    assert_eq!(table.columns[1].summary.unwrap().n_episodes, 3);
    assert!(table.columns[2].error.is_some());
    let md = table.to_markdown();
    assert!(md.contains("phi=0.7854"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn summary_counts_are_consistent(seed0 in 0u64..1_000_000, n in 1usize..8, density in 0usize..3) {
        let d = DensityConfig::preset(Density::ALL[density]);
        let eval = run_evaluation(&Scripted, d, FRAC_PI_4, n, seed0, false).unwrap();
        let s = eval.summary;
        prop_assert_eq!(s.n_episodes, n);
        prop_assert_eq!(s.n_merges + s.n_collisions + s.n_timeouts, n);
        for pct in [s.collision_pct, s.conflict_pct, s.pct_ttc_l1_below_10s, s.pct_ttc_t1_below_10s, s.pct_gap_ratio_above_half] {
            prop_assert!((0.0..=100.0).contains(&pct));
        }
        for r in &eval.records {
            prop_assert_eq!(r.merge_velocity.is_some(), r.outcome == Terminal::Merged);
            if let Some(g) = r.gap_ratio {
                prop_assert!(g >= 0.0);
            }
        }
    }
}
