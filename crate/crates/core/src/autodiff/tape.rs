use std::sync::Arc;

use super::param::{ParamId, ParamStore};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    SelectCols(Var, Arc<[usize]>),
    Sum(Var),
    Mean(Var),
    GatherRows(Var, Arc<[usize]>),
    ScatterAddRows(Var, Arc<[usize]>),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Square(Var),
    L2NormRows(Var),
    RowOuter(Var, Var),
    ClipNormRows(Var, f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of a forward computation. Creation order is a valid
/// topological order, so the backward pass is a single reverse sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(Var, u64, ParamId)>,
}

/// Gradients of a scalar with respect to every leaf on the tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

fn shape_err<T>(op: &'static str, a: &Tensor, b: &Tensor) -> Result<T> {
    Err(Error::Shape {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    })
}

fn require_matrix(op: &'static str, t: &Tensor) -> Result<()> {
    if t.is_matrix() {
        Ok(())
    } else {
        Err(Error::Shape {
            op,
            lhs: t.shape().to_vec(),
            rhs: vec![],
        })
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A leaf that never receives gradients.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// A leaf whose gradient is reported by [`Tape::backward`].
    pub fn variable(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Leaf bound to a parameter; [`ParamStore::accumulate`] picks its gradient up.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let v = self.push(store.value(id).clone(), Op::Leaf, true);
        self.params.push((v, store.uid(), id));
        v
    }

    pub(crate) fn param_leaves(&self) -> &[(Var, u64, ParamId)] {
        &self.params
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        require_matrix("matmul", ta)?;
        require_matrix("matmul", tb)?;
        if ta.cols() != tb.rows() {
            return shape_err("matmul", ta, tb);
        }
        let (m, n, c) = gemm(ta, false, tb, false);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::matrix(m, n, c)?, Op::MatMul(a, b), rg))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return shape_err(op, ta, tb);
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("add", a, b, |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("sub", a, b, |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::Sub(a, b), rg))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("multiply", a, b, |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::Mul(a, b), rg))
    }

    /// `x [r,c] * s [r,1]`, scaling each row of `x` by the matching entry of `s`.
    pub fn mul_col(&mut self, x: Var, s: Var) -> Result<Var> {
        let (tx, ts) = (self.value(x), self.value(s));
        require_matrix("mul_col", tx)?;
        if ts.shape() != [tx.rows(), 1] {
            return shape_err("mul_col", tx, ts);
        }
        let c = tx.cols();
        let mut data = tx.data().to_vec();
        for (r, row) in data.chunks_mut(c).enumerate() {
            let k = ts.data()[r];
            row.iter_mut().for_each(|v| *v *= k);
        }
        let t = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(s);
        Ok(self.push(t, Op::MulCol(x, s), rg))
    }

    /// `x [r,c] + b [1,c]` with `b` broadcast over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        require_matrix("add_row", tx)?;
        if tb.shape() != [1, tx.cols()] {
            return shape_err("add_row", tx, tb);
        }
        let c = tx.cols();
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(c) {
            row.iter_mut().zip(tb.data()).for_each(|(v, b)| *v += b);
        }
        let t = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(t, Op::AddRow(x, b), rg))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let t = self.value(x).map(|v| v * k);
        let rg = self.rg(x);
        self.push(t, Op::Scale(x, k), rg)
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of zero tensors".into()))?;
        let rows = self.value(*first).rows();
        for &p in parts {
            let t = self.value(p);
            require_matrix("concat", t)?;
            if t.rows() != rows {
                return shape_err("concat", self.value(*first), t);
            }
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        let t = Tensor::matrix(rows, total, data)?;
        Ok(self.push(t, Op::Concat(parts.to_vec()), rg))
    }

    /// Columns `start..start + len`.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = self.value(x);
        require_matrix("slice", tx)?;
        if len == 0 || start + len > tx.cols() {
            return Err(Error::Shape {
                op: "slice",
                lhs: tx.shape().to_vec(),
                rhs: vec![start, len],
            });
        }
        let mut data = Vec::with_capacity(tx.rows() * len);
        for r in 0..tx.rows() {
            data.extend_from_slice(&tx.row_slice(r)[start..start + len]);
        }
        let t = Tensor::matrix(tx.rows(), len, data)?;
        let rg = self.rg(x);
        Ok(self.push(t, Op::SliceCols(x, start), rg))
    }

    /// Arbitrary column selection (repeats allowed).
    pub fn select_cols(&mut self, x: Var, cols: Arc<[usize]>) -> Result<Var> {
        let tx = self.value(x);
        require_matrix("select_cols", tx)?;
        if cols.is_empty() || cols.iter().any(|&c| c >= tx.cols()) {
            return Err(Error::Shape {
                op: "select_cols",
                lhs: tx.shape().to_vec(),
                rhs: cols.to_vec(),
            });
        }
        let mut data = Vec::with_capacity(tx.rows() * cols.len());
        for r in 0..tx.rows() {
            let row = tx.row_slice(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        let t = Tensor::matrix(tx.rows(), cols.len(), data)?;
        let rg = self.rg(x);
        Ok(self.push(t, Op::SelectCols(x, cols), rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Mean(x), rg)
    }

    /// `out[j] = x[idx[j]]`.
    pub fn gather_rows(&mut self, x: Var, idx: Arc<[usize]>) -> Result<Var> {
        let tx = self.value(x);
        require_matrix("gather_rows", tx)?;
        if idx.is_empty() || idx.iter().any(|&i| i >= tx.rows()) {
            return Err(Error::Shape {
                op: "gather_rows",
                lhs: tx.shape().to_vec(),
                rhs: vec![idx.len()],
            });
        }
        let mut data = Vec::with_capacity(idx.len() * tx.cols());
        for &i in idx.iter() {
            data.extend_from_slice(tx.row_slice(i));
        }
        let t = Tensor::matrix(idx.len(), tx.cols(), data)?;
        let rg = self.rg(x);
        Ok(self.push(t, Op::GatherRows(x, idx), rg))
    }

    /// `out[idx[j]] += x[j]` into a zero matrix with `rows` rows.
    pub fn scatter_add_rows(&mut self, x: Var, idx: Arc<[usize]>, rows: usize) -> Result<Var> {
        let tx = self.value(x);
        require_matrix("scatter_add_rows", tx)?;
        if idx.len() != tx.rows() || rows == 0 || idx.iter().any(|&i| i >= rows) {
            return Err(Error::Shape {
                op: "scatter_add_rows",
                lhs: tx.shape().to_vec(),
                rhs: vec![idx.len(), rows],
            });
        }
        let c = tx.cols();
        let mut data = vec![0.0; rows * c];
        for (j, &i) in idx.iter().enumerate() {
            let src = tx.row_slice(j);
            data[i * c..(i + 1) * c]
                .iter_mut()
                .zip(src)
                .for_each(|(d, s)| *d += s);
        }
        let t = Tensor::matrix(rows, c, data)?;
        let rg = self.rg(x);
        Ok(self.push(t, Op::ScatterAddRows(x, idx), rg))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| if v > 0.0 { v } else { 0.0 });
        let rg = self.rg(x);
        self.push(t, Op::Relu(x), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let t = self.value(x).map(f64::tanh);
        let rg = self.rg(x);
        self.push(t, Op::Tanh(x), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let t = self.value(x).map(sigmoid);
        let rg = self.rg(x);
        self.push(t, Op::Sigmoid(x), rg)
    }

    pub fn square(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| v * v);
        let rg = self.rg(x);
        self.push(t, Op::Square(x), rg)
    }

    /// Row norms `sqrt(Σ x² + eps)` as a `[r,1]` column.
    pub fn l2_norm_rows(&mut self, x: Var, eps: f64) -> Result<Var> {
        let tx = self.value(x);
        require_matrix("l2_norm_rows", tx)?;
        let data = (0..tx.rows())
            .map(|r| (tx.row_slice(r).iter().map(|v| v * v).sum::<f64>() + eps).sqrt())
            .collect();
        let t = Tensor::column(data);
        let rg = self.rg(x);
        Ok(self.push(t, Op::L2NormRows(x), rg))
    }

    /// Per-row Kronecker product: `out[r, i*n + j] = a[r,i] * b[r,j]`.
    pub fn row_outer(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        require_matrix("row_outer", ta)?;
        require_matrix("row_outer", tb)?;
        if ta.rows() != tb.rows() {
            return shape_err("row_outer", ta, tb);
        }
        let (m, n) = (ta.cols(), tb.cols());
        let mut data = Vec::with_capacity(ta.rows() * m * n);
        for r in 0..ta.rows() {
            let (ra, rb) = (ta.row_slice(r), tb.row_slice(r));
            for &x in ra {
                data.extend(rb.iter().map(|&y| x * y));
            }
        }
        let t = Tensor::matrix(ta.rows(), m * n, data)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::RowOuter(a, b), rg))
    }

    /// Rescales rows whose Euclidean norm exceeds `max_norm` back onto the ball.
    pub fn clip_norm_rows(&mut self, x: Var, max_norm: f64) -> Result<Var> {
        let tx = self.value(x);
        require_matrix("clip_norm_rows", tx)?;
        let c = tx.cols();
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(c) {
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > max_norm {
                let k = max_norm / n;
                row.iter_mut().for_each(|v| *v *= k);
            }
        }
        let t = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x);
        Ok(self.push(t, Op::ClipNormRows(x, max_norm), rg))
    }

    /// Reverse sweep from a one-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(lt.shape(), 1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(node, &g, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn accum(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn backprop_node(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if self.rg(*a) {
                    let (m, n, d) = gemm(g, false, tb, true);
                    self.accum(grads, *a, Tensor::matrix(m, n, d)?);
                }
                if self.rg(*b) {
                    let (m, n, d) = gemm(ta, true, g, false);
                    self.accum(grads, *b, Tensor::matrix(m, n, d)?);
                }
            }
            Op::Add(a, b) => {
                self.accum(grads, *a, g.clone());
                self.accum(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accum(grads, *a, g.clone());
                self.accum(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if self.rg(*a) {
                    self.accum(grads, *a, hadamard(g, tb));
                }
                if self.rg(*b) {
                    self.accum(grads, *b, hadamard(g, ta));
                }
            }
            Op::MulCol(x, s) => {
                let (tx, ts) = (self.value(*x), self.value(*s));
                let c = tx.cols();
                if self.rg(*x) {
                    let mut d = g.data().to_vec();
                    for (r, row) in d.chunks_mut(c).enumerate() {
                        let k = ts.data()[r];
                        row.iter_mut().for_each(|v| *v *= k);
                    }
                    self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
                }
                if self.rg(*s) {
                    let d = (0..tx.rows())
                        .map(|r| dot(g.row_slice(r), tx.row_slice(r)))
                        .collect();
                    self.accum(grads, *s, Tensor::column(d));
                }
            }
            Op::AddRow(x, b) => {
                self.accum(grads, *x, g.clone());
                if self.rg(*b) {
                    let c = g.cols();
                    let mut d = vec![0.0; c];
                    for row in g.data().chunks(c) {
                        d.iter_mut().zip(row).for_each(|(a, v)| *a += v);
                    }
                    self.accum(grads, *b, Tensor::row(d));
                }
            }
            Op::Scale(x, k) => self.accum(grads, *x, g.map(|v| v * k)),
            Op::Concat(parts) => {
                let rows = g.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.rg(p) {
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            d.extend_from_slice(&g.row_slice(r)[offset..offset + w]);
                        }
                        self.accum(grads, p, Tensor::matrix(rows, w, d)?);
                    }
                    offset += w;
                }
            }
            Op::SliceCols(x, start) => {
                let tx = self.value(*x);
                let c = tx.cols();
                let w = g.cols();
                let mut d = vec![0.0; tx.len()];
                for r in 0..tx.rows() {
                    d[r * c + start..r * c + start + w].copy_from_slice(g.row_slice(r));
                }
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::SelectCols(x, cols) => {
                let tx = self.value(*x);
                let c = tx.cols();
                let mut d = vec![0.0; tx.len()];
                for r in 0..tx.rows() {
                    let gr = g.row_slice(r);
                    for (j, &src) in cols.iter().enumerate() {
                        d[r * c + src] += gr[j];
                    }
                }
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::Sum(x) => {
                let gv = g.data()[0];
                self.accum(grads, *x, Tensor::filled(self.value(*x).shape(), gv));
            }
            Op::Mean(x) => {
                let tx = self.value(*x);
                let gv = g.data()[0] / tx.len() as f64;
                self.accum(grads, *x, Tensor::filled(tx.shape(), gv));
            }
            Op::GatherRows(x, idx) => {
                let tx = self.value(*x);
                let c = tx.cols();
                let mut d = vec![0.0; tx.len()];
                for (j, &i) in idx.iter().enumerate() {
                    d[i * c..(i + 1) * c]
                        .iter_mut()
                        .zip(g.row_slice(j))
                        .for_each(|(a, v)| *a += v);
                }
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::ScatterAddRows(x, idx) => {
                let tx = self.value(*x);
                let mut d = Vec::with_capacity(tx.len());
                for &i in idx.iter() {
                    d.extend_from_slice(g.row_slice(i));
                }
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::Relu(x) => {
                let tx = self.value(*x);
                let d = g
                    .data()
                    .iter()
                    .zip(tx.data())
                    .map(|(&gv, &xv)| if xv > 0.0 { gv } else { 0.0 })
                    .collect();
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::Tanh(x) => {
                let d = g.data().iter().zip(y.data()).map(|(&gv, &yv)| gv * (1.0 - yv * yv)).collect();
                self.accum(grads, *x, Tensor::new(y.shape().to_vec(), d)?);
            }
            Op::Sigmoid(x) => {
                let d = g.data().iter().zip(y.data()).map(|(&gv, &yv)| gv * yv * (1.0 - yv)).collect();
                self.accum(grads, *x, Tensor::new(y.shape().to_vec(), d)?);
            }
            Op::Square(x) => {
                let tx = self.value(*x);
                self.accum(grads, *x, hadamard(g, &tx.map(|v| 2.0 * v)));
            }
            Op::L2NormRows(x) => {
                let tx = self.value(*x);
                let c = tx.cols();
                let mut d = tx.data().to_vec();
                for (r, row) in d.chunks_mut(c).enumerate() {
                    let k = g.data()[r] / y.data()[r];
                    row.iter_mut().for_each(|v| *v *= k);
                }
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::RowOuter(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, n) = (ta.cols(), tb.cols());
                let rows = ta.rows();
                if self.rg(*a) {
                    let mut d = vec![0.0; rows * m];
                    for r in 0..rows {
                        let (gr, rb) = (g.row_slice(r), tb.row_slice(r));
                        for i in 0..m {
                            d[r * m + i] = dot(&gr[i * n..(i + 1) * n], rb);
                        }
                    }
                    self.accum(grads, *a, Tensor::matrix(rows, m, d)?);
                }
                if self.rg(*b) {
                    let mut d = vec![0.0; rows * n];
                    for r in 0..rows {
                        let (gr, ra) = (g.row_slice(r), ta.row_slice(r));
                        let out = &mut d[r * n..(r + 1) * n];
                        for (i, &av) in ra.iter().enumerate() {
                            out.iter_mut()
                                .zip(&gr[i * n..(i + 1) * n])
                                .for_each(|(o, gv)| *o += av * gv);
                        }
                    }
                    self.accum(grads, *b, Tensor::matrix(rows, n, d)?);
                }
            }
            Op::ClipNormRows(x, max_norm) => {
                let tx = self.value(*x);
                let c = tx.cols();
                let mut d = g.data().to_vec();
                for (r, row) in d.chunks_mut(c).enumerate() {
                    let xr = tx.row_slice(r);
                    let n = xr.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > *max_norm {
                        let k = max_norm / n;
                        let proj = dot(xr, row) / (n * n);
                        row.iter_mut()
                            .zip(xr)
                            .for_each(|(gv, &xv)| *gv = k * (*gv - proj * xv));
                    }
                }
                self.accum(grads, *x, Tensor::new(tx.shape().to_vec(), d)?);
            }
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn hadamard(a: &Tensor, b: &Tensor) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Tensor::new(a.shape().to_vec(), data).expect("equal shapes")
}
