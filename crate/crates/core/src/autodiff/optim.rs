use super::param::ParamStore;
use super::tensor::Tensor;

/// Stochastic gradient descent with classical momentum:
/// `v ← μ·v + g`, `θ ← θ − lr·v`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
    pub momentum: f64,
    /// Rescale the whole gradient when its global norm exceeds this.
    pub max_grad_norm: Option<f64>,
    velocity: Vec<Tensor>,
}

impl Sgd {
    pub fn new(lr: f64, momentum: f64) -> Self {
        Self {
            lr,
            momentum,
            max_grad_norm: None,
            velocity: Vec::new(),
        }
    }

    pub fn with_max_grad_norm(mut self, max: Option<f64>) -> Self {
        self.max_grad_norm = max;
        self
    }

    /// Applies the accumulated gradients, then zeroes them.
    pub fn step(&mut self, store: &mut ParamStore) {
        let scale = clip_scale(store, self.max_grad_norm);
        if self.velocity.len() != store.len() {
            self.velocity = store
                .params_mut()
                .iter()
                .map(|p| Tensor::zeros(p.value.shape()))
                .collect();
        }
        for (p, v) in store.params_mut().iter_mut().zip(&mut self.velocity) {
            for ((vel, g), w) in v
                .data_mut()
                .iter_mut()
                .zip(p.grad.data())
                .zip(p.value.data_mut().iter_mut())
            {
                *vel = self.momentum * *vel + scale * g;
                *w -= self.lr * *vel;
            }
        }
        store.zero_grad();
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_grad_norm: Option<f64>,
    t: i32,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_grad_norm: None,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn with_max_grad_norm(mut self, max: Option<f64>) -> Self {
        self.max_grad_norm = max;
        self
    }

    /// Applies the accumulated gradients, then zeroes them.
    pub fn step(&mut self, store: &mut ParamStore) {
        let scale = clip_scale(store, self.max_grad_norm);
        if self.m.len() != store.len() {
            let zeros: Vec<Tensor> = store.params_mut().iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.m = zeros.clone();
            self.v = zeros;
            self.t = 0;
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, m), v) in store.params_mut().iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grads = p.grad.data();
            let values = p.value.data_mut();
            for (((w, g), m), v) in values.iter_mut().zip(grads).zip(m.data_mut()).zip(v.data_mut()) {
                let g = scale * g;
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *w -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            }
        }
        store.zero_grad();
    }
}

fn clip_scale(store: &ParamStore, max: Option<f64>) -> f64 {
    match max {
        Some(max) => {
            let n = store.grad_norm();
            if n > max {
                max / n
            } else {
                1.0
            }
        }
        None => 1.0,
    }
}

/// Either optimizer behind one interface.
#[derive(Clone, Debug)]
pub enum Optimizer {
    Sgd(Sgd),
    Adam(Adam),
}

impl Optimizer {
    pub fn step(&mut self, store: &mut ParamStore) {
        match self {
            Optimizer::Sgd(o) => o.step(store),
            Optimizer::Adam(o) => o.step(store),
        }
    }
}
