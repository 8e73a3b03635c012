//! Learning the Kepler force from trajectory data.
//!
//! The network maps a position `q` to an estimate of the force `ṗ = f(q)`.
//! Trajectories are produced by integrating `q̇ = p`, `ṗ = net(q)` with the
//! same tableau the network is built from, and gradients flow back through
//! both the integration steps and the network layers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Defaults, RunConfig, TrainConfig};
use super::datasets::{gen_kepler, KeplerDataset};
use super::{stream_seed, Outcome, Report};
use crate::error::{Error, Result};
use crate::integrator::{sweep_step, PhaseState, Trajectory};
use crate::network::{backward_into, forward, ForwardTape, NetParams, NetSpec};
use crate::tableau::SubStep;
use crate::training::{loss_trajectory, train, Objective, OptimizerState, TrainOptions};

const AUDIT_SAMPLES: usize = 4;

/// Half phase dimension of the force network. Positions are zero-padded to
/// this width on input.
pub const FORCE_NET_WIDTH: usize = 8;

fn pad(q: &[f64], width: usize) -> Vec<f64> {
    let mut x = vec![0.0; width];
    x[..q.len()].copy_from_slice(q);
    x
}

/// A trajectory of the learned dynamics plus the network tapes of every
/// force evaluation, in evaluation order.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub trajectory: Trajectory,
    tapes: Vec<ForwardTape>,
    dt: f64,
}

/// Integrates `q̇ = p`, `ṗ = net(q)` for `points − 1` steps of size `dt`.
pub fn rollout(net: &NetParams, state0: &PhaseState, dt: f64, points: usize) -> Result<Rollout> {
    let n = net.output_dim();
    if net.dim() < n || state0.dim() != n || state0.p.len() != n {
        return Err(Error::Shape(format!(
            "force network must map R^{n} into R^{n} (input width {}, state dimension {})",
            net.dim(),
            state0.dim()
        )));
    }
    let width = net.dim();
    let scheme = net.scheme();
    let mut times = Vec::with_capacity(points);
    let mut states = Vec::with_capacity(points);
    let mut tapes = Vec::with_capacity(points.saturating_sub(1) * scheme.stages());
    let mut state = state0.clone();
    times.push(0.0);
    states.push(state.clone());
    for k in 1..points {
        sweep_step(scheme, dt, 0.0, &mut state.q, &mut state.p, |sub, x, _t, out| {
            match sub {
                SubStep::Drift(_) => out.copy_from_slice(x),
                SubStep::Kick(_) => {
                    let (y, tape) = forward(net, &pad(x, width))?;
                    out.copy_from_slice(&y);
                    tapes.push(tape);
                }
            }
            Ok(())
        })?;
        if state.q.iter().chain(&state.p).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "learned dynamics blew up at step {k} (dt = {dt}); reduce the learning rate or step size"
            )));
        }
        times.push(k as f64 * dt);
        states.push(state.clone());
    }
    Ok(Rollout {
        trajectory: Trajectory { times, states },
        tapes,
        dt,
    })
}

/// Backpropagates per-point adjoints `∂L/∂x_k` through the rollout. Adds the
/// parameter gradient into `grads` and returns `∂L/∂x_0`.
pub fn rollout_backward(
    net: &NetParams,
    roll: &Rollout,
    state_grads: &[Vec<f64>],
    grads: &mut [f64],
) -> Result<Vec<f64>> {
    let n = net.output_dim();
    let points = roll.trajectory.len();
    if state_grads.len() != points || state_grads.iter().any(|g| g.len() != 2 * n) {
        return Err(Error::Shape("one 2n-vector of adjoints per trajectory point expected".into()));
    }
    let scheme = net.scheme();
    let subs: Vec<SubStep> = scheme.substeps().collect();
    let mut lambda = vec![0.0; 2 * n];
    let mut tape_idx = roll.tapes.len();
    let mut go = vec![0.0; n];
    for k in (1..points).rev() {
        for (l, g) in lambda.iter_mut().zip(&state_grads[k]) {
            *l += g;
        }
        for sub in subs.iter().rev() {
            let (lq, lp) = lambda.split_at_mut(n);
            match *sub {
                SubStep::Drift(i) => {
                    let s = roll.dt * scheme.q_weight(i);
                    for (p, q) in lp.iter_mut().zip(lq.iter()) {
                        *p += s * q;
                    }
                }
                SubStep::Kick(i) => {
                    tape_idx -= 1;
                    let s = roll.dt * scheme.p_weight(i);
                    for (g, p) in go.iter_mut().zip(lp.iter()) {
                        *g = s * p;
                    }
                    let back = backward_into(net, &roll.tapes[tape_idx], &go, grads)?;
                    for (q, b) in lq.iter_mut().zip(&back[..n]) {
                        *q += b;
                    }
                }
            }
        }
    }
    for (l, g) in lambda.iter_mut().zip(&state_grads[0]) {
        *l += g;
    }
    Ok(lambda)
}

fn spacing(traj: &Trajectory) -> Result<f64> {
    match traj.times.as_slice() {
        [t0, t1, ..] => Ok(t1 - t0),
        _ => Err(Error::InvalidArgument("trajectory needs at least two points".into())),
    }
}

/// Root-mean-square state error of the learned dynamics along `observed`,
/// started from its first state.
pub fn trajectory_error(net: &NetParams, observed: &Trajectory) -> Result<f64> {
    let roll = rollout(net, &observed.states[0], spacing(observed)?, observed.len())?;
    let (mse, _) = loss_trajectory(&roll.trajectory, observed)?;
    Ok(mse.sqrt())
}

/// Error of the zero-force model (`ṗ = 0`, straight-line motion).
pub fn free_drift_error(observed: &Trajectory) -> Result<f64> {
    let dt = spacing(observed)?;
    let z0 = &observed.states[0];
    let mut total = 0.0;
    for (k, z) in observed.states.iter().enumerate() {
        let t = k as f64 * dt;
        for i in 0..z0.dim() {
            let dq = z0.q[i] + t * z0.p[i] - z.q[i];
            let dp = z0.p[i] - z.p[i];
            total += dq * dq + dp * dp;
        }
    }
    Ok((total / observed.len() as f64).sqrt())
}

pub struct KeplerObjective<'a> {
    pub data: &'a KeplerDataset,
}

impl Objective for KeplerObjective<'_> {
    fn sample_count(&self) -> usize {
        self.data.trajectories.len()
    }

    fn sample_loss_grad(&self, net: &NetParams, index: usize, grads: &mut [f64]) -> Result<f64> {
        let obs = &self.data.trajectories[index];
        let roll = rollout(net, &obs.states[0], spacing(obs)?, obs.len())?;
        let (loss, state_grads) = loss_trajectory(&roll.trajectory, obs)?;
        rollout_backward(net, &roll, &state_grads, grads)?;
        Ok(loss)
    }

    fn test_metric(&self, net: &NetParams) -> Result<f64> {
        trajectory_error(net, &self.data.test)
    }

    fn audit_inputs(&self, net: &NetParams) -> Vec<Vec<f64>> {
        self.data
            .trajectories
            .iter()
            .take(AUDIT_SAMPLES)
            .map(|t| pad(&t.states[0].q, net.dim()))
            .collect()
    }
}

/// Force network with a zero read-out, so training starts from `ṗ = 0`.
pub fn kepler_net(cfg: &RunConfig) -> Result<NetParams> {
    let spec = NetSpec {
        tableau: cfg.tableau,
        layers: cfg.layers,
        n: FORCE_NET_WIDTH,
        m: 2,
        h: cfg.step_size,
        activation: cfg.activation,
        share_stages: cfg.share_stages,
    };
    let mut net = NetParams::random(spec, &mut ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, 1)))?;
    // Untrained model is the free-drift baseline.
    net.output_mut().weight.as_mut_slice().fill(0.0);
    Ok(net)
}

pub fn run_kepler(config: &TrainConfig) -> Result<Outcome> {
    let cfg = config.resolve(&Defaults::KEPLER)?;
    let data = gen_kepler(cfg.seed)?;
    run_kepler_on(&cfg, &data)
}

pub fn run_kepler_on(cfg: &RunConfig, data: &KeplerDataset) -> Result<Outcome> {
    let net = kepler_net(cfg)?;
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate)?;
    let options = TrainOptions {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lambda: cfg.lambda,
        seed: stream_seed(cfg.seed, 2),
    };
    let (net, metrics) = train(net, &KeplerObjective { data }, &mut opt, &options)?;
    let report = Report {
        tableau: cfg.tableau,
        test_metric: metrics.final_test_metric(),
        min_layer_norm: metrics.min_layer_norm(),
    };
    Ok(Outcome {
        config: *cfg,
        net,
        metrics,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::TableauKind;

    #[test]
    fn zero_net_reproduces_free_drift() {
        let data = gen_kepler(0).unwrap();
        assert_eq!(data.point_count(), 2000);
        let cfg = TrainConfig::with_tableau(TableauKind::Sprk3)
            .resolve(&Defaults::KEPLER)
            .unwrap();
        let net = NetParams::zeros(*kepler_net(&cfg).unwrap().spec()).unwrap();
        let learned = trajectory_error(&net, &data.test).unwrap();
        let baseline = free_drift_error(&data.test).unwrap();
        assert!((learned - baseline).abs() <= 1e-12 * baseline);
        assert!(baseline > 0.1);
    }

    #[test]
    fn rollout_rejects_mismatched_output() {
        let cfg = TrainConfig::with_tableau(TableauKind::Euler1)
            .resolve(&Defaults::CLASSIFICATION)
            .unwrap();
        let net = super::super::classify::classification_net(&cfg).unwrap();
        let z0 = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert!(rollout(&net, &z0, 0.1, 3).is_err());
    }
}
