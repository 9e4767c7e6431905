use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use super::tape::{Gradients, Tape};
use super::tensor::Tensor;
use crate::error::{Error, Result};

static NEXT_STORE_UID: AtomicU64 = AtomicU64::new(1);

fn next_uid() -> u64 {
    NEXT_STORE_UID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// A trainable tensor and its gradient accumulator.
#[derive(Clone, Debug)]
pub struct Parameter {
    pub value: Tensor,
    pub grad: Tensor,
}

/// Named parameters of one network.
///
/// Every store carries a unique id so that a tape holding leaves from several
/// stores (e.g. actor output fed into a critic) routes gradients correctly.
#[derive(Debug)]
pub struct ParamStore {
    uid: u64,
    names: Vec<String>,
    params: Vec<Parameter>,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl Clone for ParamStore {
    fn clone(&self) -> Self {
        Self {
            uid: next_uid(),
            names: self.names.clone(),
            params: self.params.clone(),
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self {
            uid: next_uid(),
            names: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn uid(&self) -> u64 {
        self.uid
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(!name.contains(char::is_whitespace));
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        let grad = Tensor::zeros(value.shape());
        self.names.push(name);
        self.params.push(Parameter { value, grad });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Adds the gradients of this store's leaves on `tape` into the accumulators.
    pub fn accumulate(&mut self, tape: &Tape, grads: &Gradients) {
        for &(var, uid, id) in tape.param_leaves() {
            if uid != self.uid {
                continue;
            }
            if let Some(g) = grads.get(var) {
                self.params[id.0].grad.add_assign(g);
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn flat_grad(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.grad.data().iter().copied()).collect()
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.grad.data().iter().map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    fn check_layout(&self, other: &ParamStore) -> Result<()> {
        if self.names != other.names {
            return Err(Error::InvalidArgument("parameter names differ".into()));
        }
        for (a, b) in self.params.iter().zip(&other.params) {
            if a.value.shape() != b.value.shape() {
                return Err(Error::Shape {
                    op: "param_copy",
                    lhs: a.value.shape().to_vec(),
                    rhs: b.value.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// `self ← tau·online + (1 − tau)·self`.
    pub fn soft_update_from(&mut self, online: &ParamStore, tau: f64) -> Result<()> {
        self.check_layout(online)?;
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            if tau == 1.0 {
                t.value = o.value.clone();
                continue;
            }
            for (tv, ov) in t.value.data_mut().iter_mut().zip(o.value.data()) {
                *tv = tau * ov + (1.0 - tau) * *tv;
            }
        }
        Ok(())
    }

    /// Textual checkpoint: one `name<TAB>shape<TAB>values` line per parameter.
    /// Values use the shortest round-trip decimal form, so load(save(p)) == p.
    pub fn to_checkpoint_string(&self) -> String {
        let mut out = String::from("# symmarl-params v1\n");
        for (name, p) in self.names.iter().zip(&self.params) {
            let shape: Vec<String> = p.value.shape().iter().map(usize::to_string).collect();
            let _ = write!(out, "{name}\t{}\t", shape.join("x"));
            let vals: Vec<String> = p.value.data().iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&vals.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Self> {
        let mut store = ParamStore::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("checkpoint line {}: {what}", lineno + 1));
            let mut fields = line.split('\t');
            let name = fields.next().ok_or_else(|| bad("missing name"))?;
            let shape = fields.next().ok_or_else(|| bad("missing shape"))?;
            let values = fields.next().ok_or_else(|| bad("missing values"))?;
            let shape: Vec<usize> = shape
                .split('x')
                .map(|d| d.parse().map_err(|_| bad("bad shape")))
                .collect::<Result<_>>()?;
            let data: Vec<f64> = values
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|v| v.parse().map_err(|_| bad("bad value")))
                .collect::<Result<_>>()?;
            store.add(name, Tensor::new(shape, data)?);
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_string())?;
        Ok(())
    }

    /// Overwrites values from a checkpoint file; names and shapes must match.
    pub fn load_into(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let loaded = ParamStore::from_checkpoint_str(&text)?;
        self.check_layout(&loaded)?;
        for (p, l) in self.params.iter_mut().zip(loaded.params) {
            p.value = l.value;
        }
        Ok(())
    }
}
