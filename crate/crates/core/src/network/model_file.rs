//! JSON model files. Every `f64` is stored as the hex string of its IEEE-754
//! bit pattern (`"0x3fb999999999999a"`), so a save/load cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LayerParams, NetParams, NetSpec, OutputLayer};
use crate::error::{Error, Result};
use crate::hamiltonian::{Activation, NetworkFieldParams};
use crate::linalg::Mat;
use crate::tableau::TableauKind;

fn hex(v: f64) -> String {
    format!("{:#018x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    let digits = s
        .strip_prefix("0x")
        .ok_or_else(|| Error::Parse(format!("expected 0x-prefixed bit pattern, got {s:?}")))?;
    u64::from_str_radix(digits, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

fn hex_vec(v: &[f64]) -> Vec<String> {
    v.iter().copied().map(hex).collect()
}

fn unhex_vec(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| unhex(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageFile {
    pub w1: Vec<String>,
    pub w2: Vec<String>,
    pub beta1: Vec<String>,
    pub beta2: Vec<String>,
    pub eta1: Vec<String>,
    pub eta2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub tableau: TableauKind,
    pub h: String,
    pub layers: usize,
    pub n: usize,
    pub m: usize,
    pub activation: Activation,
    pub share_stages: bool,
    /// `stages[layer][stored_stage]`
    pub stages: Vec<Vec<StageFile>>,
    /// `W₀`, row-major.
    pub w0: Vec<String>,
    pub b0: Vec<String>,
}

impl ModelFile {
    pub fn from_net(net: &NetParams) -> Self {
        let spec = net.spec();
        ModelFile {
            tableau: spec.tableau,
            h: hex(spec.h),
            layers: spec.layers,
            n: spec.n,
            m: spec.m,
            activation: spec.activation,
            share_stages: spec.share_stages,
            stages: net
                .layers()
                .iter()
                .map(|l| {
                    l.stages
                        .iter()
                        .map(|sp| StageFile {
                            w1: hex_vec(sp.w1.as_slice()),
                            w2: hex_vec(sp.w2.as_slice()),
                            beta1: hex_vec(&sp.beta1),
                            beta2: hex_vec(&sp.beta2),
                            eta1: hex_vec(&sp.eta1),
                            eta2: hex_vec(&sp.eta2),
                        })
                        .collect()
                })
                .collect(),
            w0: hex_vec(net.output().weight.as_slice()),
            b0: hex_vec(&net.output().bias),
        }
    }

    pub fn to_net(&self) -> Result<NetParams> {
        let spec = NetSpec {
            tableau: self.tableau,
            layers: self.layers,
            n: self.n,
            m: self.m,
            h: unhex(&self.h)?,
            activation: self.activation,
            share_stages: self.share_stages,
        };
        let n = self.n;
        let layers = self
            .stages
            .iter()
            .map(|l| {
                let stages = l
                    .iter()
                    .map(|sf| {
                        Ok(NetworkFieldParams {
                            w1: Mat::from_row_slice(n, n, &unhex_vec(&sf.w1)?)?,
                            w2: Mat::from_row_slice(n, n, &unhex_vec(&sf.w2)?)?,
                            beta1: unhex_vec(&sf.beta1)?,
                            beta2: unhex_vec(&sf.beta2)?,
                            eta1: unhex_vec(&sf.eta1)?,
                            eta2: unhex_vec(&sf.eta2)?,
                            activation: self.activation,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(LayerParams { stages })
            })
            .collect::<Result<Vec<_>>>()?;
        let output = OutputLayer {
            weight: Mat::from_row_slice(self.m, 2 * n, &unhex_vec(&self.w0)?)?,
            bias: unhex_vec(&self.b0)?,
        };
        NetParams::from_parts(spec, layers, output)
    }
}

impl NetParams {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from_net(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.to_net()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
