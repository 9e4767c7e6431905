mod common;

use common::{gradcheck, op_cases, rand_tensor, rng};
use rand::Rng;
use std::sync::Arc;
use symmarl::autodiff::{ParamStore, Tape, Tensor};

#[test]
fn every_op_matches_central_differences() {
    let mut r = rng(2024);
    for (name, make) in op_cases() {
        for _ in 0..20 {
            let (inputs, f) = make(&mut r);
            let err = gradcheck(&mut r, &inputs, f.as_ref());
            assert!(err < 1e-5, "{name}: relative gradient error {err:e}");
        }
    }
}

#[test]
fn sum_of_products_gradient_is_other_factor() {
    // d/dA sum(A ∘ B) = B
    let mut r = rng(5);
    let a = rand_tensor(&mut r, 3, 4);
    let b = rand_tensor(&mut r, 3, 4);
    let mut tape = Tape::new();
    let va = tape.variable(a);
    let vb = tape.constant(b.clone());
    let p = tape.mul(va, vb).unwrap();
    let l = tape.sum(p);
    let g = tape.backward(l).unwrap();
    assert!(g.get(va).unwrap().max_abs_diff(&b) < 1e-15);
}

#[test]
fn backward_is_linear_in_the_loss() {
    let mut r = rng(6);
    let mut store = ParamStore::new();
    let w = store.add("w", rand_tensor(&mut r, 4, 3));
    let x = rand_tensor(&mut r, 5, 4);

    let build = |store: &ParamStore, tape: &mut Tape, which: u8| {
        let wv = tape.param(store, w);
        let xv = tape.constant(x.clone());
        let h = tape.matmul(xv, wv).unwrap();
        let l1 = {
            let t = tape.tanh(h);
            tape.sum(t)
        };
        let l2 = {
            let s = tape.square(h);
            tape.mean(s)
        };
        match which {
            1 => l1,
            2 => l2,
            _ => tape.add(l1, l2).unwrap(),
        }
    };

    let mut separate = store.clone();
    for which in [1, 2] {
        let mut tape = Tape::new();
        let l = build(&separate, &mut tape, which);
        let g = tape.backward(l).unwrap();
        separate.accumulate(&tape, &g);
    }
    let mut joint = store.clone();
    let mut tape = Tape::new();
    let l = build(&joint, &mut tape, 0);
    let g = tape.backward(l).unwrap();
    joint.accumulate(&tape, &g);

    let (a, b) = (separate.flat_grad(), joint.flat_grad());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn gather_and_scatter_are_adjoint() {
    let mut r = rng(7);
    for _ in 0..50 {
        let (rows, cols, e) = (r.random_range(1..6), r.random_range(1..4), r.random_range(1..10));
        let idx: Arc<[usize]> = (0..e).map(|_| r.random_range(0..rows)).collect();
        let x = rand_tensor(&mut r, e, cols);
        let y = rand_tensor(&mut r, rows, cols);
        let mut tape = Tape::new();
        let (vx, vy) = (tape.constant(x.clone()), tape.constant(y.clone()));
        let sx = tape.scatter_add_rows(vx, idx.clone(), rows).unwrap();
        let gy = tape.gather_rows(vy, idx).unwrap();
        let lhs = tape.value(sx).dot(&y);
        let rhs = x.dot(tape.value(gy));
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

#[test]
fn repeated_backward_accumulates() {
    let mut store = ParamStore::new();
    let id = store.add("x", Tensor::scalar(3.0));
    let mut tape = Tape::new();
    let x = tape.param(&store, id);
    let y = tape.mul(x, x).unwrap();
    for _ in 0..3 {
        let g = tape.backward(y).unwrap();
        store.accumulate(&tape, &g);
    }
    assert_eq!(store.grad(id).item().unwrap(), 18.0);
}
