//! Datasets, the classification and Kepler experiments, convergence tables
//! and tableau certificates.

pub mod classify;
pub mod config;
pub mod convergence;
pub mod datasets;
pub mod kepler;
pub mod verify;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use classify::{run_classification, run_classification_on};
pub use config::{ConfigFormat, Defaults, RunConfig, TrainConfig};
pub use convergence::{run_convergence, write_convergence_csv, ConvergenceRow};
pub use datasets::{gen_classification, gen_kepler, ClassificationDataset, KeplerDataset};
pub use kepler::{run_kepler, run_kepler_on};
pub use verify::{run_verify, Certificate};

use crate::error::Result;
use crate::network::NetParams;
use crate::tableau::TableauKind;
use crate::training::Metrics;

/// Summary written to `report.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tableau: TableauKind,
    pub test_metric: f64,
    pub min_layer_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: RunConfig,
    pub net: NetParams,
    pub metrics: Metrics,
    pub report: Report,
}

impl Outcome {
    /// Writes `metrics.csv`, `model.json` and `report.json` into `dir`.
    pub fn write_to(&self, dir: &Path, with_timing: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.metrics
            .write_csv(BufWriter::new(File::create(dir.join("metrics.csv"))?), with_timing)?;
        self.net.save(&dir.join("model.json"))?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report)?)?;
        Ok(())
    }
}

/// Independent RNG seeds for the dataset (`stream = 0`), the initial weights
/// and the batch shuffling, all derived from one user seed.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}
