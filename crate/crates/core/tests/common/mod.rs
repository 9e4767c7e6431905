//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use symmarl::autodiff::{Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_tensor(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

/// Builds `out = f(inputs)` and contracts it with a fixed random projection so
/// every output entry contributes to a scalar.
fn projected_loss(
    inputs: &[Tensor],
    projection: &Tensor,
    f: &dyn Fn(&mut Tape, &[Var]) -> Var,
    as_variables: bool,
) -> (Tape, Vec<Var>, Var) {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| if as_variables { tape.variable(t.clone()) } else { tape.constant(t.clone()) })
        .collect();
    let out = f(&mut tape, &vars);
    let p = tape.constant(projection.clone());
    let prod = tape.mul(out, p).expect("projection shape");
    let loss = tape.sum(prod);
    (tape, vars, loss)
}

/// Max over inputs of `‖analytic − numeric‖∞ / max(‖numeric‖∞, 1e-8)`, with
/// the numeric gradient from central differences.
pub fn gradcheck(
    rng: &mut impl Rng,
    inputs: &[Tensor],
    f: &dyn Fn(&mut Tape, &[Var]) -> Var,
) -> f64 {
    let probe = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars);
        tape.value(out).clone()
    };
    let projection = {
        let data = (0..probe.len()).map(|_| rng.random_range(0.5..1.5)).collect();
        Tensor::new(probe.shape().to_vec(), data).unwrap()
    };
    let (tape, vars, loss) = projected_loss(inputs, &projection, f, true);
    let grads = tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (k, input) in inputs.iter().enumerate() {
        let analytic = grads
            .get(vars[k])
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(input.shape()));
        let mut numeric = vec![0.0; input.len()];
        for e in 0..input.len() {
            let eval = |delta: f64| {
                let mut perturbed = inputs.to_vec();
                perturbed[k].data_mut()[e] += delta;
                let (t, _, l) = projected_loss(&perturbed, &projection, f, false);
                t.value(l).item().unwrap()
            };
            numeric[e] = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
        }
        let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        let err = analytic
            .data()
            .iter()
            .zip(&numeric)
            .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
        worst = worst.max(err / scale);
    }
    worst
}

pub type OpCase = (&'static str, Box<dyn Fn(&mut ChaCha8Rng) -> (Vec<Tensor>, Box<dyn Fn(&mut Tape, &[Var]) -> Var>)>);

/// One random instance generator per registered op.
pub fn op_cases() -> Vec<OpCase> {
    fn case(
        name: &'static str,
        g: impl Fn(&mut ChaCha8Rng) -> (Vec<Tensor>, Box<dyn Fn(&mut Tape, &[Var]) -> Var>) + 'static,
    ) -> OpCase {
        (name, Box::new(g))
    }
    vec![
        case("matmul", |r| {
            let (m, k, n) = (r.random_range(1..5), r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, k), rand_tensor(r, k, n)], Box::new(|t, v| t.matmul(v[0], v[1]).unwrap()))
        }),
        case("add", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n), rand_tensor(r, m, n)], Box::new(|t, v| t.add(v[0], v[1]).unwrap()))
        }),
        case("sub", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n), rand_tensor(r, m, n)], Box::new(|t, v| t.sub(v[0], v[1]).unwrap()))
        }),
        case("multiply", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n), rand_tensor(r, m, n)], Box::new(|t, v| t.mul(v[0], v[1]).unwrap()))
        }),
        case("mul_col", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n), rand_tensor(r, m, 1)], Box::new(|t, v| t.mul_col(v[0], v[1]).unwrap()))
        }),
        case("add_row", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n), rand_tensor(r, 1, n)], Box::new(|t, v| t.add_row(v[0], v[1]).unwrap()))
        }),
        case("scale", |r| {
            let k = r.random_range(-2.0..2.0);
            (vec![rand_tensor(r, 3, 2)], Box::new(move |t, v| t.scale(v[0], k)))
        }),
        case("concat", |r| {
            let m = r.random_range(1..5);
            let (a, b, c) = (r.random_range(1..4), r.random_range(1..4), r.random_range(1..4));
            (
                vec![rand_tensor(r, m, a), rand_tensor(r, m, b), rand_tensor(r, m, c)],
                Box::new(|t, v| t.concat(&[v[0], v[1], v[2]]).unwrap()),
            )
        }),
        case("slice", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(2..7));
            let start = r.random_range(0..n - 1);
            let len = r.random_range(1..=n - start);
            (vec![rand_tensor(r, m, n)], Box::new(move |t, v| t.slice_cols(v[0], start, len).unwrap()))
        }),
        case("select_cols", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..6));
            let cols: Arc<[usize]> = (0..r.random_range(1..8)).map(|_| r.random_range(0..n)).collect();
            (vec![rand_tensor(r, m, n)], Box::new(move |t, v| t.select_cols(v[0], cols.clone()).unwrap()))
        }),
        case("sum", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n)], Box::new(|t, v| t.sum(v[0])))
        }),
        case("mean", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n)], Box::new(|t, v| t.mean(v[0])))
        }),
        case("gather_rows", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            let idx: Arc<[usize]> = (0..r.random_range(1..9)).map(|_| r.random_range(0..m)).collect();
            (vec![rand_tensor(r, m, n)], Box::new(move |t, v| t.gather_rows(v[0], idx.clone()).unwrap()))
        }),
        case("scatter_add_rows", |r| {
            let (e, n, rows) = (r.random_range(1..9), r.random_range(1..5), r.random_range(1..5));
            let idx: Arc<[usize]> = (0..e).map(|_| r.random_range(0..rows)).collect();
            (
                vec![rand_tensor(r, e, n)],
                Box::new(move |t, v| t.scatter_add_rows(v[0], idx.clone(), rows).unwrap()),
            )
        }),
        case("relu", |r| (vec![rand_tensor(r, 3, 4)], Box::new(|t, v| t.relu(v[0])))),
        case("tanh", |r| (vec![rand_tensor(r, 3, 4)], Box::new(|t, v| t.tanh(v[0])))),
        case("sigmoid", |r| (vec![rand_tensor(r, 3, 4)], Box::new(|t, v| t.sigmoid(v[0])))),
        case("square", |r| (vec![rand_tensor(r, 3, 4)], Box::new(|t, v| t.square(v[0])))),
        case("l2_norm_rows", |r| {
            let (m, n) = (r.random_range(1..5), r.random_range(1..5));
            (vec![rand_tensor(r, m, n)], Box::new(|t, v| t.l2_norm_rows(v[0], 1e-12).unwrap()))
        }),
        case("row_outer", |r| {
            let (m, a, b) = (r.random_range(1..5), r.random_range(1..4), r.random_range(1..4));
            (vec![rand_tensor(r, m, a), rand_tensor(r, m, b)], Box::new(|t, v| t.row_outer(v[0], v[1]).unwrap()))
        }),
        case("clip_norm_rows", |r| {
            // Rows on both sides of the clipping radius.
            let mut x = rand_tensor(r, 4, 3);
            for (i, v) in x.data_mut().iter_mut().enumerate() {
                if i >= 6 {
                    *v *= 3.0;
                }
            }
            (vec![x], Box::new(|t, v| t.clip_norm_rows(v[0], 0.8).unwrap()))
        }),
    ]
}

/// Relative error between the tape gradient of a scalar loss and central
/// differences on `samples` randomly chosen parameter entries.
pub fn param_gradcheck(
    rng: &mut impl Rng,
    store: &symmarl::autodiff::ParamStore,
    samples: usize,
    loss: &dyn Fn(&symmarl::autodiff::ParamStore) -> (Tape, Var),
) -> f64 {
    let mut analytic = store.clone();
    analytic.zero_grad();
    let (tape, l) = loss(&analytic);
    let g = tape.backward(l).unwrap();
    analytic.accumulate(&tape, &g);
    let ids: Vec<_> = store.ids().collect();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1e-8;
    let mut pairs = Vec::new();
    for _ in 0..samples {
        let id = ids[rng.random_range(0..ids.len())];
        let e = rng.random_range(0..store.value(id).len());
        let eval = |delta: f64| {
            let mut s = store.clone();
            s.value_mut(id).data_mut()[e] += delta;
            let (t, l) = loss(&s);
            t.value(l).item().unwrap()
        };
        let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
        scale = scale.max(numeric.abs());
        pairs.push((analytic.grad(id).data()[e], numeric));
    }
    for (a, n) in pairs {
        worst = worst.max((a - n).abs());
    }
    worst / scale
}
