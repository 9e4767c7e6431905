mod common;

use std::sync::Arc;

use common::{param_gradcheck, rng};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use symmarl::autodiff::{ParamStore, Tape, Tensor};
use symmarl::group::{self, GroupElement, Irrep, IrrepSpec, SteerableVector, Vec3};
use symmarl::nn::{
    actor_forward, critic_forward, e3mp_forward, E3mpLayer, EuclideanGraph, GraphBatch, IrrepBatch, SegnnActor,
    SegnnCritic, SegnnSpec,
};

fn feat_spec() -> IrrepSpec {
    "2x0e+2x1o".parse().unwrap()
}

fn attr_spec() -> IrrepSpec {
    "2x0e".parse().unwrap()
}

fn edge_spec() -> IrrepSpec {
    IrrepSpec::single(1, Irrep::VECTOR)
}

fn random_sv(r: &mut ChaCha8Rng, spec: &IrrepSpec) -> SteerableVector {
    SteerableVector::new(spec.clone(), (0..spec.dim()).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn complete_graph(r: &mut ChaCha8Rng, n: usize) -> EuclideanGraph {
    let positions: Vec<Vec3> = (0..n)
        .map(|_| [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)])
        .collect();
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let edge_attributes = edges
        .iter()
        .map(|&(u, v)| SteerableVector::new(edge_spec(), group::sub(&positions[u], &positions[v]).to_vec()).unwrap())
        .collect();
    let node_features = (0..n).map(|_| random_sv(r, &feat_spec())).collect();
    let node_attributes = (0..n)
        .map(|i| SteerableVector::new(attr_spec(), if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).unwrap())
        .collect();
    EuclideanGraph::new(positions, edges, node_features, node_attributes, edge_attributes).unwrap()
}

fn spec(layers: usize) -> SegnnSpec {
    SegnnSpec {
        input: feat_spec(),
        node_attr: attr_spec(),
        edge_attr: edge_spec(),
        hidden: "8x0e+3x1o".parse().unwrap(),
        layers,
    }
}

fn sample_g(r: &mut ChaCha8Rng, k: usize) -> GroupElement {
    if k == 0 {
        GroupElement::reflection_xy().with_translation([3.0, -1.0, 2.0])
    } else {
        GroupElement::random(r, 10.0)
    }
}

#[test]
fn e3mp_layer_is_equivariant() {
    let mut r = rng(11);
    let mut store = ParamStore::new();
    let layer = E3mpLayer::new(&mut store, &mut r, "l", &feat_spec(), &edge_spec(), &attr_spec(), &"8x0e+3x1o".parse().unwrap()).unwrap();
    let graph = complete_graph(&mut r, 6);
    let out = e3mp_forward(&layer, &store, &graph).unwrap();
    assert_eq!(out.positions, graph.positions);
    assert_eq!(out.edges, graph.edges);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let g = sample_g(&mut r, k);
        let lhs = e3mp_forward(&layer, &store, &graph.transform(&g).unwrap()).unwrap();
        let rhs = out.transform(&g).unwrap();
        for (a, b) in lhs.node_features.iter().zip(&rhs.node_features) {
            worst = worst.max(a.max_abs_diff(b));
        }
    }
    assert!(worst < 1e-9, "equivariance error {worst:e}");
}

#[test]
fn e3mp_ignores_translations() {
    let mut r = rng(12);
    let mut store = ParamStore::new();
    let layer = E3mpLayer::new(&mut store, &mut r, "l", &feat_spec(), &edge_spec(), &attr_spec(), &"8x0e+3x1o".parse().unwrap()).unwrap();
    let graph = complete_graph(&mut r, 5);
    let moved = graph.transform(&GroupElement::translation_only([5.0, -2.0, 7.0])).unwrap();
    let a = e3mp_forward(&layer, &store, &graph).unwrap();
    let b = e3mp_forward(&layer, &store, &moved).unwrap();
    for (x, y) in a.node_features.iter().zip(&b.node_features) {
        assert!(x.max_abs_diff(y) < 1e-12);
    }
}

#[test]
fn isolated_vertex_uses_update_path_only() {
    let mut r = rng(13);
    let mut store = ParamStore::new();
    let layer = E3mpLayer::new(&mut store, &mut r, "l", &feat_spec(), &edge_spec(), &attr_spec(), &"8x0e+3x1o".parse().unwrap()).unwrap();
    let g = EuclideanGraph::new(
        vec![[0.3, 0.1, 0.0]],
        vec![],
        vec![random_sv(&mut r, &feat_spec())],
        vec![SteerableVector::new(attr_spec(), vec![1.0, 0.0]).unwrap()],
        vec![],
    )
    .unwrap();
    let out = e3mp_forward(&layer, &store, &g).unwrap();
    assert!(out.node_features[0].data().iter().all(|v| v.is_finite()));
}

#[test]
fn critic_is_invariant() {
    let mut r = rng(14);
    let mut store = ParamStore::new();
    let critic = SegnnCritic::new(&mut store, &mut r, "q", spec(2)).unwrap();
    let graph = complete_graph(&mut r, 6);
    let q = critic_forward(&critic, &store, &graph).unwrap();
    for k in 0..100 {
        let g = sample_g(&mut r, k);
        let qg = critic_forward(&critic, &store, &graph.transform(&g).unwrap()).unwrap();
        assert!((q - qg).abs() < 1e-9);
    }
}

#[test]
fn zero_critic_returns_its_bias() {
    let mut r = rng(15);
    let mut store = ParamStore::new();
    let critic = SegnnCritic::new(&mut store, &mut r, "q", spec(2)).unwrap();
    for id in store.ids().collect::<Vec<_>>() {
        store.value_mut(id).fill(0.0);
    }
    *store.value_mut(critic.bias_id()) = Tensor::scalar(0.7);
    for n in [1, 3, 6] {
        let graph = complete_graph(&mut r, n);
        assert_eq!(critic_forward(&critic, &store, &graph).unwrap(), 0.7);
    }
}

#[test]
fn critic_ignores_order_of_identical_vertices() {
    let mut r = rng(16);
    let mut store = ParamStore::new();
    let critic = SegnnCritic::new(&mut store, &mut r, "q", spec(2)).unwrap();
    let mut graph = complete_graph(&mut r, 4);
    let shared = graph.node_features[0].clone();
    for f in &mut graph.node_features {
        *f = shared.clone();
    }
    for a in &mut graph.node_attributes {
        *a = graph_attr();
    }
    let q = critic_forward(&critic, &store, &graph).unwrap();
    // Swap the positions of vertices 0 and 2 and rebuild edge attributes.
    let mut swapped = graph.clone();
    swapped.positions.swap(0, 2);
    for (k, &(u, v)) in swapped.edges.iter().enumerate() {
        swapped.edge_attributes[k] =
            SteerableVector::new(edge_spec(), group::sub(&swapped.positions[u], &swapped.positions[v]).to_vec()).unwrap();
    }
    let qs = critic_forward(&critic, &store, &swapped).unwrap();
    assert!((q - qs).abs() < 1e-12);
}

fn graph_attr() -> SteerableVector {
    SteerableVector::new(attr_spec(), vec![1.0, 0.0]).unwrap()
}

#[test]
fn actor_is_equivariant_and_translation_blind() {
    let mut r = rng(17);
    let mut store = ParamStore::new();
    let actor = SegnnActor::new(&mut store, &mut r, "pi", spec(2), 1.0).unwrap();
    let graph = complete_graph(&mut r, 6);
    for self_vertex in [0, 3] {
        let a = actor_forward(&actor, &store, &graph, self_vertex).unwrap();
        assert!(group::norm(&a) <= 1.0 + 1e-12);
        for k in 0..100 {
            let g = sample_g(&mut r, k);
            let ag = actor_forward(&actor, &store, &graph.transform(&g).unwrap(), self_vertex).unwrap();
            let expect = g.apply_vector(&a);
            for c in 0..3 {
                assert!((ag[c] - expect[c]).abs() < 1e-9);
            }
        }
        let moved = graph.transform(&GroupElement::translation_only([4.0, 4.0, -9.0])).unwrap();
        let at = actor_forward(&actor, &store, &moved, self_vertex).unwrap();
        for c in 0..3 {
            assert!((at[c] - a[c]).abs() < 1e-12);
        }
    }
    assert!(actor_forward(&actor, &store, &graph, 6).is_err());
}

#[test]
fn zero_actor_outputs_zero() {
    let mut r = rng(18);
    let mut store = ParamStore::new();
    let actor = SegnnActor::new(&mut store, &mut r, "pi", spec(1), 1.0).unwrap();
    for id in store.ids().collect::<Vec<_>>() {
        store.value_mut(id).fill(0.0);
    }
    let a = actor_forward(&actor, &store, &complete_graph(&mut r, 4), 1).unwrap();
    assert_eq!(a, [0.0; 3]);
}

#[test]
fn planar_mirror_symmetric_input_gives_planar_action() {
    let mut r = rng(19);
    let mut store = ParamStore::new();
    let actor = SegnnActor::new(&mut store, &mut r, "pi", spec(2), 1.0).unwrap();
    let mut graph = complete_graph(&mut r, 5);
    for p in &mut graph.positions {
        p[2] = 0.0;
    }
    for (k, &(u, v)) in graph.edges.clone().iter().enumerate() {
        graph.edge_attributes[k] =
            SteerableVector::new(edge_spec(), group::sub(&graph.positions[u], &graph.positions[v]).to_vec()).unwrap();
    }
    for f in &mut graph.node_features {
        // vectors at offsets 2..5 and 5..8
        f.data_mut()[4] = 0.0;
        f.data_mut()[7] = 0.0;
    }
    let a = actor_forward(&actor, &store, &graph, 2).unwrap();
    assert!(a[2].abs() < 1e-15);
    assert!(a[0].abs() + a[1].abs() > 0.0);
}

#[test]
fn batched_graphs_match_single_graphs() {
    let mut r = rng(20);
    let mut store = ParamStore::new();
    let critic = SegnnCritic::new(&mut store, &mut r, "q", spec(2)).unwrap();
    let graphs: Vec<EuclideanGraph> = [3, 6, 1, 4].iter().map(|&n| complete_graph(&mut r, n)).collect();
    let refs: Vec<&EuclideanGraph> = graphs.iter().collect();
    let (batch, fspec, feats) = GraphBatch::from_graphs(&refs).unwrap();
    let mut tape = Tape::new();
    let f = IrrepBatch::from_flat(&mut tape, &fspec, batch.num_nodes(), &feats).unwrap();
    let q = critic.forward(&mut tape, &store, &batch, &f).unwrap();
    for (k, g) in graphs.iter().enumerate() {
        let single = critic_forward(&critic, &store, g).unwrap();
        assert!((tape.value(q).get(k, 0) - single).abs() < 1e-12);
    }
}

#[test]
fn critic_loss_gradients_match_finite_differences() {
    let mut r = rng(21);
    let mut store = ParamStore::new();
    let critic = SegnnCritic::new(&mut store, &mut r, "q", spec(2)).unwrap();
    let graphs: Vec<EuclideanGraph> = (0..3).map(|_| complete_graph(&mut r, 4)).collect();
    let targets = Tensor::column(vec![0.3, -1.2, 0.8]);
    let refs: Vec<&EuclideanGraph> = graphs.iter().collect();
    let (batch, fspec, feats) = GraphBatch::from_graphs(&refs).unwrap();
    let loss = |s: &ParamStore| {
        let mut tape = Tape::new();
        let f = IrrepBatch::from_flat(&mut tape, &fspec, batch.num_nodes(), &feats).unwrap();
        let q = critic.forward(&mut tape, s, &batch, &f).unwrap();
        let y = tape.constant(targets.clone());
        let d = tape.sub(q, y).unwrap();
        let sq = tape.square(d);
        let l = tape.mean(sq);
        (tape, l)
    };
    let err = param_gradcheck(&mut r, &store, 60, &loss);
    assert!(err < 1e-5, "relative error {err:e}");
}

#[test]
fn actor_rejects_out_of_range_selection() {
    let mut r = rng(22);
    let mut store = ParamStore::new();
    let actor = SegnnActor::new(&mut store, &mut r, "pi", spec(1), 1.0).unwrap();
    let g = complete_graph(&mut r, 3);
    let (batch, fspec, feats) = GraphBatch::from_graphs(&[&g]).unwrap();
    let mut tape = Tape::new();
    let f = IrrepBatch::from_flat(&mut tape, &fspec, batch.num_nodes(), &feats).unwrap();
    assert!(actor.forward(&mut tape, &store, &batch, &f, &Arc::from(vec![3usize])).is_err());
}
