//! Synthetic 8-class experiment: dataset generation, a one-hidden-layer
//! network whose hidden weight is frozen and adapted, and a full-batch
//! training loop with per-epoch loss/accuracy capture.
//!
//! The hidden weight never receives gradient directly; the only way to
//! change the hidden-layer map is through the adapter parameters. The
//! input and output projections are fixed at init by default so the two
//! comparison arms differ in nothing but the adapter (they can be made
//! trainable with `train_outer`).

use std::time::Instant;

use crate::adapter::Adapter;
use crate::error::{Error, Result};
use crate::linalg::{matmul, randn_matrix, Matrix, Rng};

pub const INPUT_DIM: usize = 2;
pub const HIDDEN_DIM: usize = 64;
pub const NUM_CLASSES: usize = 8;

// Sub-streams of the model seed for the three weight matrices.
const STREAM_W_IN: u64 = 1;
const STREAM_W_HIDDEN: u64 = 2;
const STREAM_W_OUT: u64 = 3;

/// Points on a ring of class centers with isotropic Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<u8>,
    pub class_centers: [[f64; 2]; NUM_CLASSES],
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Batch-major input matrix, one row per sample.
    pub fn inputs(&self) -> Matrix {
        let mut x = Matrix::zeros(self.len(), INPUT_DIM);
        for (i, p) in self.points.iter().enumerate() {
            x.set(i, 0, p[0]);
            x.set(i, 1, p[1]);
        }
        x
    }

    /// CSV export: `x,y,label` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label\n");
        for (p, l) in self.points.iter().zip(&self.labels) {
            out.push_str(&format!("{},{},{}\n", p[0], p[1], l));
        }
        out
    }
}

/// Class centers equally spaced on a circle of `radius`; each point is its
/// center plus N(0, sigma^2 I) noise. Deterministic in `seed`.
pub fn gen_synthetic(
    seed: u64,
    samples_per_class: usize,
    radius: f64,
    noise_sigma: f64,
) -> SyntheticDataset {
    assert!(samples_per_class >= 1, "samples_per_class must be >= 1");
    let mut class_centers = [[0.0; 2]; NUM_CLASSES];
    for (k, c) in class_centers.iter_mut().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / NUM_CLASSES as f64;
        c[0] = radius * theta.cos();
        c[1] = radius * theta.sin();
    }
    let mut rng = Rng::stream(seed, 0xDA7A);
    let total = NUM_CLASSES * samples_per_class;
    let mut points = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for k in 0..NUM_CLASSES {
        for _ in 0..samples_per_class {
            let dx = noise_sigma * rng.next_normal();
            let dy = noise_sigma * rng.next_normal();
            points.push([class_centers[k][0] + dx, class_centers[k][1] + dy]);
            labels.push(k as u8);
        }
    }
    SyntheticDataset {
        points,
        labels,
        class_centers,
        noise_sigma,
        seed,
    }
}

/// Two-layer classifier with a frozen, adapter-augmented hidden weight:
/// `x -> relu(x W_in) -> relu(h1 (W_hidden + delta_w)) -> h2 W_out`.
#[derive(Debug, Clone)]
pub struct ToyModel {
    /// `2 x 64`, fixed unless `train_outer`.
    pub w_in: Matrix,
    /// `64 x 64`, always frozen; only the adapter moves the hidden map.
    pub w_hidden: Matrix,
    /// `64 x 8`, fixed unless `train_outer`.
    pub w_out: Matrix,
    pub adapter: Adapter,
    pub train_outer: bool,
}

impl ToyModel {
    pub fn new(seed: u64, adapter: Adapter, train_outer: bool) -> ToyModel {
        let scale = |m: Matrix, fan_in: usize| m.scale(1.0 / (fan_in as f64).sqrt());
        let w_in = scale(
            randn_matrix(&mut Rng::stream(seed, STREAM_W_IN), INPUT_DIM, HIDDEN_DIM),
            INPUT_DIM,
        );
        let w_hidden = scale(
            randn_matrix(&mut Rng::stream(seed, STREAM_W_HIDDEN), HIDDEN_DIM, HIDDEN_DIM),
            HIDDEN_DIM,
        );
        let w_out = scale(
            randn_matrix(&mut Rng::stream(seed, STREAM_W_OUT), HIDDEN_DIM, NUM_CLASSES),
            HIDDEN_DIM,
        );
        ToyModel {
            w_in,
            w_hidden,
            w_out,
            adapter,
            train_outer,
        }
    }

    /// Class logits for a batch of inputs.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let effective = self.w_hidden.add(&self.adapter.delta_w()?)?;
        let h1 = relu(&matmul(x, &self.w_in)?);
        let h2 = relu(&matmul(&h1, &effective)?);
        matmul(&h2, &self.w_out)
    }

    /// Total number of parameters the optimizer sees.
    pub fn trainable_param_count(&self) -> usize {
        let outer = if self.train_outer {
            self.w_in.data().len() + self.w_out.data().len()
        } else {
            0
        };
        self.adapter.param_count() + outer
    }
}

fn relu(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Elementwise product with the ReLU activation mask of `pre`.
fn relu_backward(pre: &Matrix, upstream: &Matrix) -> Matrix {
    let mut out = upstream.clone();
    for (v, p) in out.data_mut().iter_mut().zip(pre.data()) {
        if *p <= 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Mean softmax cross-entropy and its logit gradient `(softmax - onehot)/N`.
fn softmax_ce(logits: &Matrix, labels: &[u8]) -> (f64, Matrix) {
    let n = logits.rows();
    let c = logits.cols();
    let mut grad = Matrix::zeros(n, c);
    let mut loss = 0.0;
    for i in 0..n {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &v in row {
            sum += (v - max).exp();
        }
        let log_z = max + sum.ln();
        let y = labels[i] as usize;
        loss += log_z - row[y];
        for j in 0..c {
            let p = (row[j] - log_z).exp();
            grad.set(i, j, (p - if j == y { 1.0 } else { 0.0 }) / n as f64);
        }
    }
    (loss / n as f64, grad)
}

/// Argmax-prediction accuracy (ties break toward the lower class index).
fn accuracy(logits: &Matrix, labels: &[u8]) -> f64 {
    let mut correct = 0usize;
    for i in 0..logits.rows() {
        let row = logits.row(i);
        let mut best = 0usize;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        if best == labels[i] as usize {
            correct += 1;
        }
    }
    correct as f64 / logits.rows() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl Optimizer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        }
    }
}

/// Adam state over one flat parameter vector.
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    fn new(len: usize) -> AdamState {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grad[i];
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    pub wall_clock_secs: f64,
}

impl TrainLog {
    pub fn final_accuracy(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.accuracy)
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.loss)
    }

    /// CSV export: `epoch,loss,accuracy` with a header row. Wall-clock is
    /// deliberately excluded so the file is deterministic.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.loss, r.accuracy));
        }
        out
    }
}

/// Full gradient of the batch loss with respect to the flat trainable
/// parameter vector, plus the loss and accuracy at the current point.
///
/// Layout of the flat vector: adapter params, then `w_in`, then `w_out`
/// (outer blocks present only when `train_outer`).
fn loss_and_grad(
    model: &ToyModel,
    x: &Matrix,
    labels: &[u8],
) -> Result<(f64, f64, Vec<f64>)> {
    let effective = model.w_hidden.add(&model.adapter.delta_w()?)?;
    let h1_pre = matmul(x, &model.w_in)?;
    let h1 = relu(&h1_pre);
    let h2_pre = matmul(&h1, &effective)?;
    let h2 = relu(&h2_pre);
    let logits = matmul(&h2, &model.w_out)?;
    let (loss, g_logits) = softmax_ce(&logits, labels);
    let acc = accuracy(&logits, labels);

    let g_h2 = matmul(&g_logits, &model.w_out.transpose())?;
    let g_h2_pre = relu_backward(&h2_pre, &g_h2);
    // Gradient at the effective hidden weight; the frozen base absorbs
    // none of it, the adapter maps it onto its own parameters.
    let g_effective = matmul(&h1.transpose(), &g_h2_pre)?;
    let mut grad = model.adapter.grad_params(&g_effective)?;

    if model.train_outer {
        let g_h1 = matmul(&g_h2_pre, &effective.transpose())?;
        let g_h1_pre = relu_backward(&h1_pre, &g_h1);
        let g_w_in = matmul(&x.transpose(), &g_h1_pre)?;
        let g_w_out = matmul(&h2.transpose(), &g_logits)?;
        grad.extend_from_slice(g_w_in.data());
        grad.extend_from_slice(g_w_out.data());
    }
    Ok((loss, acc, grad))
}

fn gather_params(model: &ToyModel) -> Vec<f64> {
    let mut p = model.adapter.params();
    if model.train_outer {
        p.extend_from_slice(model.w_in.data());
        p.extend_from_slice(model.w_out.data());
    }
    p
}

fn scatter_params(model: &mut ToyModel, p: &[f64]) {
    let na = model.adapter.param_count();
    model.adapter.set_params(&p[..na]);
    if model.train_outer {
        let ni = model.w_in.data().len();
        model.w_in.data_mut().copy_from_slice(&p[na..na + ni]);
        model.w_out.data_mut().copy_from_slice(&p[na + ni..]);
    }
}

/// Loss, accuracy, and the flat parameter gradient on the full dataset.
/// Exposed so external gradient checks can exercise the exact path the
/// training loop uses.
pub fn batch_loss_grad(
    model: &ToyModel,
    data: &SyntheticDataset,
) -> Result<(f64, f64, Vec<f64>)> {
    loss_and_grad(model, &data.inputs(), &data.labels)
}

/// Flat view of everything the optimizer would train, in the same layout
/// as the gradient from [`batch_loss_grad`].
pub fn flat_params(model: &ToyModel) -> Vec<f64> {
    gather_params(model)
}

pub fn set_flat_params(model: &mut ToyModel, p: &[f64]) {
    scatter_params(model, p)
}

/// Full-batch training on softmax cross-entropy. The frozen hidden base is
/// bit-exact before and after. Aborts with the failing epoch if the loss
/// ever becomes non-finite.
pub fn train(
    model: &mut ToyModel,
    data: &SyntheticDataset,
    epochs: usize,
    lr: f64,
    optimizer: Optimizer,
) -> Result<TrainLog> {
    assert!(epochs >= 1, "epochs must be >= 1");
    let start = Instant::now();
    let x = data.inputs();
    let mut params = gather_params(model);
    let mut adam = AdamState::new(params.len());
    let mut records = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, acc, grad) = loss_and_grad(model, &x, &data.labels)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        records.push(EpochRecord {
            epoch,
            loss,
            accuracy: acc,
        });
        match optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam => adam.step(&mut params, &grad, lr),
        }
        scatter_params(model, &params);
    }
    Ok(TrainLog {
        records,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Deterministic full-dataset loss and accuracy without touching the model.
pub fn evaluate(model: &ToyModel, data: &SyntheticDataset) -> Result<(f64, f64)> {
    let logits = model.logits(&data.inputs())?;
    let (loss, _) = softmax_ce(&logits, &data.labels);
    Ok((loss, accuracy(&logits, &data.labels)))
}
