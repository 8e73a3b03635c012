use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Activation;
use crate::tableau::TableauKind;
use crate::training::OptimizerKind;

/// Training configuration as read from disk. Every key is optional; missing
/// keys fall back to the defaults of the experiment being run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub tableau: Option<TableauKind>,
    pub layers: Option<usize>,
    pub step_size: Option<f64>,
    pub activation: Option<Activation>,
    pub share_stages: Option<bool>,
    pub optimizer: Option<OptimizerKind>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Json,
    Toml,
}

impl TrainConfig {
    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self> {
        match format {
            ConfigFormat::Json => Ok(serde_json::from_str(text)?),
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::Parse(e.to_string())),
        }
    }

    /// `.toml` files are parsed as TOML, everything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("toml") => ConfigFormat::Toml,
            _ => ConfigFormat::Json,
        };
        Self::parse(&text, format)
    }

    pub fn with_tableau(tableau: TableauKind) -> Self {
        Self {
            tableau: Some(tableau),
            ..Self::default()
        }
    }

    /// Fills missing keys from `defaults`. A tableau must be named either
    /// here or in the defaults.
    pub fn resolve(&self, defaults: &Defaults) -> Result<RunConfig> {
        let tableau = self
            .tableau
            .or(defaults.tableau)
            .ok_or_else(|| Error::InvalidArgument("config must name a tableau".into()))?;
        let cfg = RunConfig {
            tableau,
            layers: self.layers.unwrap_or(defaults.layers),
            step_size: self.step_size.unwrap_or(defaults.step_size),
            activation: self.activation.unwrap_or(defaults.activation),
            share_stages: self.share_stages.unwrap_or(defaults.share_stages),
            optimizer: self.optimizer.unwrap_or(defaults.optimizer),
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            epochs: self.epochs.unwrap_or(defaults.epochs),
            batch_size: self.batch_size.unwrap_or(defaults.batch_size),
            lambda: self.lambda.unwrap_or(defaults.lambda),
            seed: self.seed.unwrap_or(defaults.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-experiment fallback values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub tableau: Option<TableauKind>,
    pub layers: usize,
    pub step_size: f64,
    pub activation: Activation,
    pub share_stages: bool,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Defaults {
    pub const CLASSIFICATION: Defaults = Defaults {
        tableau: None,
        layers: 12,
        step_size: 0.5,
        activation: Activation::Tanh,
        share_stages: true,
        optimizer: OptimizerKind::Adam,
        learning_rate: 1e-2,
        epochs: 100,
        batch_size: 32,
        lambda: 0.0,
        seed: 0,
    };

    pub const KEPLER: Defaults = Defaults {
        tableau: None,
        layers: 4,
        step_size: 1.0,
        activation: Activation::Tanh,
        share_stages: true,
        optimizer: OptimizerKind::Adam,
        learning_rate: 1e-2,
        epochs: 270,
        batch_size: 27,
        lambda: 0.0,
        seed: 0,
    };
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tableau: TableauKind,
    pub layers: usize,
    pub step_size: f64,
    pub activation: Activation,
    pub share_stages: bool,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidArgument("layers must be >= 1".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidArgument(format!("step_size must be > 0, got {}", self.step_size)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be >= 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_toml_agree() {
        let j = TrainConfig::parse(
            r#"{"tableau": "sprk3", "layers": 6, "optimizer": "sgd", "lambda": 0.001}"#,
            ConfigFormat::Json,
        )
        .unwrap();
        let t = TrainConfig::parse(
            "tableau = \"sprk3\"\nlayers = 6\noptimizer = \"sgd\"\nlambda = 0.001\n",
            ConfigFormat::Toml,
        )
        .unwrap();
        assert_eq!(j, t);
        let cfg = j.resolve(&Defaults::CLASSIFICATION).unwrap();
        assert_eq!(cfg.tableau, TableauKind::Sprk3);
        assert_eq!(cfg.layers, 6);
        assert_eq!(cfg.epochs, 100);
    }

    #[test]
    fn unknown_keys_and_missing_tableau_rejected() {
        assert!(TrainConfig::parse(r#"{"tableau": "sprk2", "depth": 3}"#, ConfigFormat::Json).is_err());
        assert!(TrainConfig::parse(r#"{"tableau": "rk4"}"#, ConfigFormat::Json).is_err());
        assert!(TrainConfig::default().resolve(&Defaults::KEPLER).is_err());
        let bad = TrainConfig {
            step_size: Some(-1.0),
            ..TrainConfig::with_tableau(TableauKind::Euler1)
        };
        assert!(bad.resolve(&Defaults::KEPLER).is_err());
    }
}
