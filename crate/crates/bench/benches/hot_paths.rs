use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use onramp_bench::{network, warmed_env, BatchData};
use onramp_core::mdp_env::{observe, ActionId};
use onramp_core::rl_core::{ppo_objective, PpoConfig};

fn sim_step(c: &mut Criterion) {
    let env = warmed_env(11);
    c.bench_function("sim_step_traffic", |b| {
        b.iter_batched(
            || env.state().clone(),
            |mut s| {
                for _ in 0..10 {
                    s.step_traffic().unwrap();
                }
                s
            },
            criterion::BatchSize::SmallInput,
        )
    });
    c.bench_function("env_step", |b| {
        b.iter_batched(
            || env.clone(),
            |mut e| {
                for _ in 0..10 {
                    if e.is_done() {
                        break;
                    }
                    black_box(e.step(ActionId::new(8)).unwrap());
                }
                e
            },
            criterion::BatchSize::SmallInput,
        )
    });
    c.bench_function("observe", |b| b.iter(|| black_box(observe(env.state()))));
}

fn network_paths(c: &mut Criterion) {
    let net = network(3);
    let obs = [0.5; 14];
    c.bench_function("policy_forward", |b| {
        b.iter(|| black_box(net.forward(black_box(&obs))))
    });
    let data = BatchData::synthetic(64);
    let cfg = PpoConfig::default();
    c.bench_function("ppo_minibatch_gradient", |b| {
        let mut grads = net.mlp.zeros_like();
        b.iter(|| {
            grads.fill(0.0);
            black_box(ppo_objective(&net, &data.view(), &cfg, Some(&mut grads)))
        })
    });
}

criterion_group!(benches, sim_step, network_paths);
criterion_main!(benches);
