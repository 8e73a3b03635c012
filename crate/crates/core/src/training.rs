//! Losses, regulariser, optimisers and the mini-batch training loop.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::sigmoid;
use crate::integrator::Trajectory;
use crate::network::{gradient_norm_audit, NetParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    BinaryClassification,
    TrajectoryL2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Weight `λ ≥ 0` of the squared-norm regulariser.
    pub regularizer_weight: f64,
}

/// Sigmoid + binary cross-entropy on a scalar logit.
///
/// Returns the loss and its gradient with respect to the logit.
pub fn loss_classification(output: &[f64], label: u8) -> Result<(f64, Vec<f64>)> {
    let &[o] = output else {
        return Err(Error::Shape(format!(
            "classification expects a scalar output, got {} values",
            output.len()
        )));
    };
    if !o.is_finite() {
        return Err(Error::NonFinite(format!("network output {o}")));
    }
    if label > 1 {
        return Err(Error::InvalidArgument(format!("label must be 0 or 1, got {label}")));
    }
    let y = f64::from(label);
    // max(o, 0) − o y + log(1 + e^{−|o|}) is stable for large |o|.
    let loss = o.max(0.0) - o * y + (-o.abs()).exp().ln_1p();
    Ok((loss, vec![sigmoid(o) - y]))
}

/// Mean squared Euclidean deviation over grid points,
/// `L = (1/n) Σᵢ ‖x̂ᵢ − xᵢ‖²`, and `∂L/∂x̂ᵢ` for every predicted state.
pub fn loss_trajectory(predicted: &Trajectory, observed: &Trajectory) -> Result<(f64, Vec<Vec<f64>>)> {
    if predicted.len() != observed.len() || predicted.is_empty() {
        return Err(Error::Shape(format!(
            "grid mismatch: {} predicted vs {} observed points",
            predicted.len(),
            observed.len()
        )));
    }
    for (a, b) in predicted.times.iter().zip(&observed.times) {
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            return Err(Error::Shape(format!("grid mismatch at t = {a} vs {b}")));
        }
    }
    let n = predicted.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(predicted.len());
    for (p, o) in predicted.states.iter().zip(&observed.states) {
        let (zp, zo) = (p.to_vec(), o.to_vec());
        if zp.len() != zo.len() {
            return Err(Error::Shape("state dimensions differ".into()));
        }
        let diff: Vec<f64> = zp.iter().zip(&zo).map(|(a, b)| a - b).collect();
        loss += diff.iter().map(|d| d * d).sum::<f64>();
        grads.push(diff.iter().map(|d| 2.0 * d / n).collect());
    }
    Ok((loss / n, grads))
}

/// `λ Σ ‖u_{n,j}‖²` over all layer-stage parameters (the read-out is not
/// regularised). Gradients use the flat layout of [`NetParams::to_flat`].
pub fn regularizer(params: &NetParams, lambda: f64) -> (f64, Vec<f64>) {
    let flat = params.to_flat();
    let hidden = params.hidden_param_count();
    let mut grads = vec![0.0; flat.len()];
    if lambda == 0.0 {
        return (0.0, grads);
    }
    let mut value = 0.0;
    for (g, u) in grads.iter_mut().zip(&flat).take(hidden) {
        value += u * u;
        *g = 2.0 * lambda * u;
    }
    (lambda * value, grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::InvalidArgument(format!("unknown optimizer `{other}` (expected sgd or adam)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate must be >= 0, got {learning_rate}")));
        }
        Ok(Self {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_count
    }

    /// One descent step on a flat parameter vector.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i} is {}", grads[i])));
        }
        self.step_count += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (u, g) in params.iter_mut().zip(grads) {
                    *u -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                if self.first_moment.len() != params.len() {
                    self.first_moment = vec![0.0; params.len()];
                    self.second_moment = vec![0.0; params.len()];
                }
                let t = self.step_count as i32;
                let c1 = 1.0 - self.beta1.powi(t);
                let c2 = 1.0 - self.beta2.powi(t);
                for (((u, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first_moment)
                    .zip(&mut self.second_moment)
                {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *u -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
                }
            }
        }
        Ok(())
    }
}

/// Applies one optimiser step to the network parameters.
pub fn optimizer_step(state: &mut OptimizerState, params: &mut NetParams, grads: &[f64]) -> Result<()> {
    let mut flat = params.to_flat();
    state.step(&mut flat, grads)?;
    params.set_flat(&flat)
}

/// A supervised problem the training loop can iterate over.
pub trait Objective {
    fn sample_count(&self) -> usize;

    /// Loss of one training sample; adds its parameter gradient into `grads`.
    fn sample_loss_grad(&self, net: &NetParams, index: usize, grads: &mut [f64]) -> Result<f64>;

    /// Held-out metric (accuracy in percent or an L2 error).
    fn test_metric(&self, net: &NetParams) -> Result<f64>;

    /// Network inputs at which the gradient-norm audit is run each epoch.
    fn audit_inputs(&self, net: &NetParams) -> Vec<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub test_metric: f64,
    pub min_layer_norm: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    /// Test metric of the untrained network.
    pub initial_test_metric: f64,
    pub epochs: Vec<EpochMetrics>,
}

impl Metrics {
    pub fn final_test_metric(&self) -> f64 {
        self.epochs.last().map_or(self.initial_test_metric, |e| e.test_metric)
    }

    pub fn min_layer_norm(&self) -> f64 {
        self.epochs.iter().map(|e| e.min_layer_norm).fold(f64::INFINITY, f64::min)
    }

    /// `epoch,loss,test_metric,min_layer_norm,seconds`. Wall-clock time is
    /// non-deterministic, so it is only written when `with_timing` is set;
    /// otherwise the column is left empty.
    pub fn write_csv<W: Write>(&self, mut w: W, with_timing: bool) -> Result<()> {
        writeln!(w, "epoch,loss,test_metric,min_layer_norm,seconds")?;
        for e in &self.epochs {
            let secs = if with_timing { format!("{:.6}", e.seconds) } else { String::new() };
            writeln!(
                w,
                "{},{:e},{:e},{:e},{}",
                e.epoch, e.loss, e.test_metric, e.min_layer_norm, secs
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, with_timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, with_timing).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Loss growth factor (relative to the first batch) treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

fn min_layer_norm<O: Objective + ?Sized>(net: &NetParams, objective: &O) -> Result<f64> {
    let mut m = f64::INFINITY;
    for x in objective.audit_inputs(net) {
        m = m.min(gradient_norm_audit(net, &x)?.min_layer_norm());
    }
    Ok(m)
}

/// Mini-batch training with per-epoch shuffling keyed by `seed`.
///
/// Batch gradients are the mean of the per-sample gradients, accumulated in
/// sample order, plus the regulariser gradient.
pub fn train<O: Objective + ?Sized>(
    mut net: NetParams,
    objective: &O,
    optimizer: &mut OptimizerState,
    options: &TrainOptions,
) -> Result<(NetParams, Metrics)> {
    if options.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be >= 1".into()));
    }
    if options.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    if !(options.lambda.is_finite() && options.lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {}", options.lambda)));
    }
    let count = objective.sample_count();
    if count == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut order: Vec<usize> = (0..count).collect();
    let mut metrics = Metrics {
        initial_test_metric: objective.test_metric(&net)?,
        epochs: Vec::with_capacity(options.epochs),
    };
    let mut reference_loss: Option<f64> = None;
    let started = Instant::now();
    let mut grads = vec![0.0; net.param_count()];

    for epoch in 1..=options.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(options.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let mut data_loss = 0.0;
            for &i in batch {
                data_loss += objective.sample_loss_grad(&net, i, &mut grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            data_loss *= scale;
            grads.iter_mut().for_each(|g| *g *= scale);
            let (reg, reg_grads) = regularizer(&net, options.lambda);
            for (g, r) in grads.iter_mut().zip(&reg_grads) {
                *g += r;
            }
            let loss = data_loss + reg;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss,
                    limit: f64::INFINITY,
                });
            }
            let reference = *reference_loss.get_or_insert(loss);
            let limit = DIVERGENCE_FACTOR * reference;
            if reference > 0.0 && loss > limit {
                return Err(Error::Diverged { epoch, loss, limit });
            }
            optimizer_step(optimizer, &mut net, &grads)?;
            epoch_loss += loss;
            batches += 1;
        }
        metrics.epochs.push(EpochMetrics {
            epoch,
            loss: epoch_loss / batches as f64,
            test_metric: objective.test_metric(&net)?,
            min_layer_norm: min_layer_norm(&net, objective)?,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((net, metrics))
}
