use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Defaults, RunConfig, TrainConfig};
use super::datasets::{gen_classification, ClassificationDataset};
use super::{stream_seed, Outcome, Report};
use crate::error::Result;
use crate::network::{backward_into, forward, predict, NetParams, NetSpec};
use crate::training::{loss_classification, train, Objective, OptimizerState, TrainOptions};

/// Number of training inputs at which the gradient-norm audit runs.
const AUDIT_SAMPLES: usize = 4;

pub struct ClassificationObjective<'a> {
    pub data: &'a ClassificationDataset,
}

impl Objective for ClassificationObjective<'_> {
    fn sample_count(&self) -> usize {
        self.data.train.len()
    }

    fn sample_loss_grad(&self, net: &NetParams, index: usize, grads: &mut [f64]) -> Result<f64> {
        let i = self.data.train[index];
        let (out, tape) = forward(net, &self.data.features[i])?;
        let (loss, g) = loss_classification(&out, self.data.labels[i])?;
        backward_into(net, &tape, &g, grads)?;
        Ok(loss)
    }

    fn test_metric(&self, net: &NetParams) -> Result<f64> {
        accuracy(net, self.data, &self.data.test)
    }

    fn audit_inputs(&self, _net: &NetParams) -> Vec<Vec<f64>> {
        self.data
            .train
            .iter()
            .take(AUDIT_SAMPLES)
            .map(|&i| self.data.features[i].to_vec())
            .collect()
    }
}

/// Percentage of `indices` whose logit sign matches the label.
pub fn accuracy(net: &NetParams, data: &ClassificationDataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for &i in indices {
        let logit = predict(net, &data.features[i])?[0];
        if (logit > 0.0) == (data.labels[i] == 1) {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / indices.len() as f64)
}

pub fn classification_net(cfg: &RunConfig) -> Result<NetParams> {
    let spec = NetSpec {
        tableau: cfg.tableau,
        layers: cfg.layers,
        n: 2,
        m: 1,
        h: cfg.step_size,
        activation: cfg.activation,
        share_stages: cfg.share_stages,
    };
    NetParams::random(spec, &mut ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, 1)))
}

/// Trains a classifier on the concentric-circles data for `config`.
pub fn run_classification(config: &TrainConfig) -> Result<Outcome> {
    let cfg = config.resolve(&Defaults::CLASSIFICATION)?;
    let data = gen_classification(cfg.seed);
    run_classification_on(&cfg, &data)
}

pub fn run_classification_on(cfg: &RunConfig, data: &ClassificationDataset) -> Result<Outcome> {
    let net = classification_net(cfg)?;
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate)?;
    let options = TrainOptions {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lambda: cfg.lambda,
        seed: stream_seed(cfg.seed, 2),
    };
    let (net, metrics) = train(net, &ClassificationObjective { data }, &mut opt, &options)?;
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
