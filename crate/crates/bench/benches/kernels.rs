use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;
use symmarl::autodiff::ParamStore;
use symmarl::envs::{nav_step, NavConfig};
use symmarl::graph::{build_state_action_graph, edge_attr_spec, state_attr_spec, state_feature_spec, GraphConfig};
use symmarl::group::{allowed_paths, cg_tensor_product, CgPath, IrrepSpec};
use symmarl::marl::{Maddpg, Transition, TrainingConfig};
use symmarl::nn::{e3mp_forward, E3mpLayer};
use symmarl_bench::{random_sv, rng, states, transitions};

fn cg(c: &mut Criterion) {
    let mut r = rng(0);
    let spec: IrrepSpec = "16x0e+4x1o".parse().unwrap();
    let (a, b) = (random_sv(&mut r, &spec), random_sv(&mut r, &"1x0e+1x1o".parse().unwrap()));
    let paths: Vec<CgPath> = allowed_paths(&spec, b.spec(), &spec)
        .into_iter()
        .map(|(ia, ib, io, _)| {
            let n = spec.blocks()[ia].0 * b.spec().blocks()[ib].0 * spec.blocks()[io].0;
            CgPath { a_block: ia, b_block: ib, out_block: io, weights: (0..n).map(|_| r.random_range(-1.0..1.0)).collect() }
        })
        .collect();
    c.bench_function("cg_tensor_product 16x0e+4x1o", |bch| bch.iter(|| cg_tensor_product(black_box(&a), black_box(&b), &spec, &paths).unwrap()));
}

fn e3mp(c: &mut Criterion) {
    let mut r = rng(1);
    let env = NavConfig::new(3);
    let (s, a) = states(&env, 1, 2).remove(0);
    let graph = build_state_action_graph(&s, Some(&a), &GraphConfig::default()).unwrap();
    let mut store = ParamStore::new();
    let hidden: IrrepSpec = "16x0e+4x1o".parse().unwrap();
    let layer = E3mpLayer::new(&mut store, &mut r, "l", &state_feature_spec(true), &edge_attr_spec(), &state_attr_spec(), &hidden).unwrap();
    c.bench_function("e3mp_forward N=3", |bch| bch.iter(|| e3mp_forward(&layer, &store, black_box(&graph)).unwrap()));
}

fn critic(c: &mut Criterion) {
    let cfg = TrainingConfig::default();
    let m = Maddpg::new(cfg.clone()).unwrap();
    let data = transitions(&cfg.env, cfg.batch_size, 3);
    let batch: Vec<&Transition> = data.iter().collect();
    let sa: Vec<_> = batch.iter().map(|t| &t.state).collect();
    let actions: Vec<_> = batch.iter().map(|t| t.action.clone()).collect();
    let mut g = c.benchmark_group("critic batch 32");
    g.bench_function("forward", |bch| bch.iter(|| m.q_values(black_box(&sa), &actions).unwrap()));
    g.bench_function("forward+backward", |bch| bch.iter(|| m.critic_gradient(black_box(&batch)).unwrap()));
    g.bench_function("update", |bch| bch.iter_batched(|| m.clone(), |mut l| l.update(&batch).unwrap(), BatchSize::SmallInput));
    g.finish();
}

fn env_step(c: &mut Criterion) {
    for n in [3, 6] {
        let env = NavConfig::new(n);
        let (s, a) = states(&env, 1, 4).remove(0);
        c.bench_function(&format!("nav_step N={n}"), |bch| bch.iter(|| nav_step(&env, black_box(&s), black_box(&a)).unwrap()));
    }
}

criterion_group!(benches, cg, e3mp, critic, env_step);
criterion_main!(benches);
