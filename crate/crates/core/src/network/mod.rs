//! The SPRK network.
//!
//! Each layer is one explicit SPRK step of the network Hamiltonian, with the
//! per-stage parameters acting as the controls of that stage. The input
//! `x ∈ ℝⁿ` is embedded as `(q₀, p₀) = (0, x)` and the output is the affine
//! map `W₀ (q_N, p_N) + b₀`.
//!
//! All trainable parameters have a canonical flat layout (see
//! [`NetParams::to_flat`]); gradients produced by [`backward`] use the same
//! layout so optimisers can work on plain slices.

mod audit;
mod closed_form;
mod model_file;

use rand::Rng;

pub use audit::{gradient_norm_audit, layer_jacobians, NormAudit};
pub use closed_form::{closed_form_terms, uap_closed_form, ClosedFormTerm};
pub use model_file::ModelFile;

use crate::error::{Error, Result};
use crate::hamiltonian::{Activation, NetworkFieldParams};
use crate::integrator::{sweep_step, PhaseState};
use crate::linalg::Mat;
use crate::tableau::{ExplicitSprk, SubStep, TableauKind};

/// Per-layer parameters: one [`NetworkFieldParams`] per stage, or a single
/// set aliased across all stages when stages are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub stages: Vec<NetworkFieldParams>,
}

/// Affine read-out `W₀ z + b₀` with `W₀ ∈ ℝ^{m×2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputLayer {
    pub weight: Mat,
    pub bias: Vec<f64>,
}

/// Architecture description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetSpec {
    pub tableau: TableauKind,
    pub layers: usize,
    /// Half phase dimension (= input dimension).
    pub n: usize,
    /// Output dimension.
    pub m: usize,
    pub h: f64,
    pub activation: Activation,
    pub share_stages: bool,
}

impl NetSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Shape("network dimensions must be positive".into()));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be > 0, got {}", self.h)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    spec: NetSpec,
    scheme: ExplicitSprk,
    layers: Vec<LayerParams>,
    output: OutputLayer,
    generation: u64,
}

impl NetParams {
    /// All parameters zero (the network is the identity on phase space).
    pub fn zeros(spec: NetSpec) -> Result<Self> {
        spec.validate()?;
        let scheme = ExplicitSprk::builtin(spec.tableau);
        let stored = if spec.share_stages { 1 } else { scheme.stages() };
        let layers = (0..spec.layers)
            .map(|_| LayerParams {
                stages: vec![NetworkFieldParams::zeros(spec.n, spec.activation); stored],
            })
            .collect();
        Ok(Self {
            spec,
            scheme,
            layers,
            output: OutputLayer {
                weight: Mat::zeros(spec.m, 2 * spec.n),
                bias: vec![0.0; spec.m],
            },
            generation: 0,
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`; biases and `η` zero.
    pub fn random<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let n = spec.n;
        let r_hidden = (6.0 / (2 * n) as f64).sqrt();
        for layer in &mut net.layers {
            for sp in &mut layer.stages {
                for w in sp.w1.as_mut_slice().iter_mut().chain(sp.w2.as_mut_slice()) {
                    *w = rng.random_range(-r_hidden..r_hidden);
                }
            }
        }
        let r_out = (6.0 / (spec.m + 2 * n) as f64).sqrt();
        for w in net.output.weight.as_mut_slice() {
            *w = rng.random_range(-r_out..r_out);
        }
        Ok(net)
    }

    /// Read-out `W₀ = [I 0]`, `b₀ = 0` (requires `m = n`): the output is `q_N`.
    pub fn set_identity_output(&mut self) -> Result<()> {
        let (n, m) = (self.spec.n, self.spec.m);
        if n != m {
            return Err(Error::Shape(format!("identity read-out needs m = n, got m = {m}, n = {n}")));
        }
        let mut w = Mat::zeros(m, 2 * n);
        for i in 0..n {
            w[(i, i)] = 1.0;
        }
        self.output = OutputLayer {
            weight: w,
            bias: vec![0.0; m],
        };
        self.generation += 1;
        Ok(())
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn scheme(&self) -> &ExplicitSprk {
        &self.scheme
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn output_dim(&self) -> usize {
        self.spec.m
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn output(&self) -> &OutputLayer {
        &self.output
    }

    /// Mutable access to one stored parameter set; invalidates tapes.
    pub fn stored_stage_mut(&mut self, layer: usize, stored: usize) -> &mut NetworkFieldParams {
        self.generation += 1;
        &mut self.layers[layer].stages[stored]
    }

    pub fn output_mut(&mut self) -> &mut OutputLayer {
        self.generation += 1;
        &mut self.output
    }

    /// Parameter sets stored per layer (1 when stages are shared).
    pub fn stored_stages(&self) -> usize {
        if self.spec.share_stages {
            1
        } else {
            self.scheme.stages()
        }
    }

    fn stored_index(&self, stage: usize) -> usize {
        if self.spec.share_stages {
            0
        } else {
            stage
        }
    }

    /// Parameters driving stage `stage` of layer `layer`.
    pub fn stage_params(&self, layer: usize, stage: usize) -> &NetworkFieldParams {
        &self.layers[layer].stages[self.stored_index(stage)]
    }

    fn block_len(&self) -> usize {
        let n = self.spec.n;
        2 * n * n + 4 * n
    }

    /// Offset of a stored parameter set in the flat layout.
    pub(crate) fn block_offset(&self, layer: usize, stored: usize) -> usize {
        (layer * self.stored_stages() + stored) * self.block_len()
    }

    /// Number of layer-stage parameters (excludes the read-out).
    pub fn hidden_param_count(&self) -> usize {
        self.depth() * self.stored_stages() * self.block_len()
    }

    pub fn param_count(&self) -> usize {
        self.hidden_param_count() + self.spec.m * (2 * self.spec.n + 1)
    }

    /// Flat layout: for each layer and stored stage `W₁, W₂, β₁, β₂, η₁, η₂`
    /// (matrices row-major), then `W₀` row-major and `b₀`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for sp in &layer.stages {
                out.extend_from_slice(sp.w1.as_slice());
                out.extend_from_slice(sp.w2.as_slice());
                out.extend_from_slice(&sp.beta1);
                out.extend_from_slice(&sp.beta2);
                out.extend_from_slice(&sp.eta1);
                out.extend_from_slice(&sp.eta2);
            }
        }
        out.extend_from_slice(self.output.weight.as_slice());
        out.extend_from_slice(&self.output.bias);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let n = self.spec.n;
        let mut rest = flat;
        let mut take = |len: usize| {
            let (head, tail) = rest.split_at(len);
            rest = tail;
            head
        };
        for layer in &mut self.layers {
            for sp in &mut layer.stages {
                sp.w1.as_mut_slice().copy_from_slice(take(n * n));
                sp.w2.as_mut_slice().copy_from_slice(take(n * n));
                sp.beta1.copy_from_slice(take(n));
                sp.beta2.copy_from_slice(take(n));
                sp.eta1.copy_from_slice(take(n));
                sp.eta2.copy_from_slice(take(n));
            }
        }
        let m = self.spec.m;
        self.output.weight.as_mut_slice().copy_from_slice(take(m * 2 * n));
        self.output.bias.copy_from_slice(take(m));
        self.generation += 1;
        Ok(())
    }

    pub(crate) fn from_parts(
        spec: NetSpec,
        layers: Vec<LayerParams>,
        output: OutputLayer,
    ) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        if layers.len() != spec.layers
            || layers.iter().any(|l| l.stages.len() != net.stored_stages())
        {
            return Err(Error::Shape("layer/stage counts do not match the network shape".into()));
        }
        for sp in layers.iter().flat_map(|l| &l.stages) {
            sp.validate()?;
            if sp.dim() != spec.n || sp.activation != spec.activation {
                return Err(Error::Shape("stage parameters inconsistent with the network shape".into()));
            }
        }
        if output.weight.rows() != spec.m
            || output.weight.cols() != 2 * spec.n
            || output.bias.len() != spec.m
        {
            return Err(Error::Shape("read-out inconsistent with the network shape".into()));
        }
        net.layers = layers;
        net.output = output;
        Ok(net)
    }
}

/// Feature augmentation `x ↦ (q, p) = (0, x)`.
pub fn augment(x: &[f64]) -> PhaseState {
    PhaseState {
        q: vec![0.0; x.len()],
        p: x.to_vec(),
    }
}

/// Values cached by one half-step of the forward pass.
#[derive(Debug, Clone, Copy)]
struct SubRecord<'a> {
    layer: usize,
    sub: SubStep,
    /// `P` for a drift, `Q` for a kick.
    input: &'a [f64],
    /// `σ(W x + β)`
    act: &'a [f64],
    /// `σ'(W x + β)`
    dact: &'a [f64],
}

/// Everything the backward pass needs, recorded during [`forward`].
#[derive(Debug, Clone)]
pub struct ForwardTape {
    generation: u64,
    n: usize,
    depth: usize,
    subs: Vec<(usize, SubStep)>,
    /// Per half-step blocks of `n` values, in evaluation order.
    inputs: Vec<f64>,
    acts: Vec<f64>,
    dacts: Vec<f64>,
    /// Phase state after every layer; `states[0]` is the augmented input.
    states: Vec<PhaseState>,
    output: Vec<f64>,
}

impl ForwardTape {
    fn records(&self) -> impl DoubleEndedIterator<Item = SubRecord<'_>> + '_ {
        let n = self.n;
        self.subs.iter().enumerate().map(move |(r, &(layer, sub))| SubRecord {
            layer,
            sub,
            input: &self.inputs[r * n..(r + 1) * n],
            act: &self.acts[r * n..(r + 1) * n],
            dact: &self.dacts[r * n..(r + 1) * n],
        })
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn final_state(&self) -> &PhaseState {
        self.states.last().expect("tape holds at least the input state")
    }

    /// `z_0, …, z_N`.
    pub fn states(&self) -> &[PhaseState] {
        &self.states
    }
}

/// Runs the network on `x` and records the tape.
pub fn forward(params: &NetParams, x: &[f64]) -> Result<(Vec<f64>, ForwardTape)> {
    let n = params.dim();
    if x.len() != n {
        return Err(Error::Shape(format!("input has {} entries, network expects {n}", x.len())));
    }
    let mut state = augment(x);
    let mut states = Vec::with_capacity(params.depth() + 1);
    states.push(state.clone());
    let records = params.depth() * 2 * params.scheme.stages();
    let mut subs = Vec::with_capacity(records);
    let mut inputs = Vec::with_capacity(records * n);
    let mut acts = Vec::with_capacity(records * n);
    let mut dacts = Vec::with_capacity(records * n);
    let mut pre = vec![0.0; n];
    let mut act = vec![0.0; n];
    for layer in 0..params.depth() {
        sweep_step(
            &params.scheme,
            params.h(),
            0.0,
            &mut state.q,
            &mut state.p,
            |sub, x, _t, out| {
                let sp = match sub {
                    SubStep::Drift(i) | SubStep::Kick(i) => params.stage_params(layer, i),
                };
                match sub {
                    SubStep::Drift(_) => sp.drift_into(x, &mut pre, &mut act, out),
                    SubStep::Kick(_) => sp.kick_into(x, &mut pre, &mut act, out),
                }
                subs.push((layer, sub));
                inputs.extend_from_slice(x);
                acts.extend_from_slice(&act);
                dacts.extend(pre.iter().map(|z| sp.activation.derivative(*z)));
                Ok(())
            },
        )?;
        states.push(state.clone());
    }
    let z = state.to_vec();
    let mut output = params.output.weight.mul_vec(&z);
    for (o, b) in output.iter_mut().zip(&params.output.bias) {
        *o += b;
    }
    let tape = ForwardTape {
        generation: params.generation,
        n,
        depth: params.depth(),
        subs,
        inputs,
        acts,
        dacts,
        states,
        output: output.clone(),
    };
    Ok((output, tape))
}

/// Output only.
pub fn predict(params: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    forward(params, x).map(|(y, _)| y)
}

fn check_tape(params: &NetParams, tape: &ForwardTape) -> Result<()> {
    if tape.generation != params.generation {
        return Err(Error::StaleTape(format!(
            "tape recorded at parameter generation {}, parameters are at {}",
            tape.generation, params.generation
        )));
    }
    if tape.n != params.dim() || tape.depth != params.depth() {
        return Err(Error::StaleTape("tape shape does not match the network".into()));
    }
    Ok(())
}

/// Reverse-mode pass. Adds `∂L/∂θ` into `grads` (flat layout of
/// [`NetParams::to_flat`]) and returns `∂L/∂x`.
pub fn backward_into(
    params: &NetParams,
    tape: &ForwardTape,
    grad_output: &[f64],
    grads: &mut [f64],
) -> Result<Vec<f64>> {
    check_tape(params, tape)?;
    let (n, m) = (params.dim(), params.output_dim());
    if grad_output.len() != m {
        return Err(Error::Shape(format!("output gradient has {} entries, expected {m}", grad_output.len())));
    }
    if grads.len() != params.param_count() {
        return Err(Error::Shape(format!(
            "gradient buffer has {} entries, expected {}",
            grads.len(),
            params.param_count()
        )));
    }

    // Read-out.
    let z = tape.final_state().to_vec();
    let out_off = params.hidden_param_count();
    for i in 0..m {
        for j in 0..2 * n {
            grads[out_off + i * 2 * n + j] += grad_output[i] * z[j];
        }
        grads[out_off + m * 2 * n + i] += grad_output[i];
    }
    let mut lambda = vec![0.0; 2 * n];
    params.output.weight.tr_mul_vec_into(grad_output, &mut lambda);
    let (lq, lp) = lambda.split_at_mut(n);

    let mut v = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut back = vec![0.0; n];
    let h = params.h();
    let nn = n * n;
    for rec in tape.records().rev() {
        let stage = match rec.sub {
            SubStep::Drift(i) | SubStep::Kick(i) => i,
        };
        let sp = params.stage_params(rec.layer, stage);
        let base = params.block_offset(rec.layer, params.stored_index(stage));
        match rec.sub {
            SubStep::Drift(i) => {
                // Q' = Q + s (W₂ᵀσ(W₂P + β₂) + η₂)
                let s = h * params.scheme.q_weight(i);
                for (vk, l) in v.iter_mut().zip(lq.iter()) {
                    *vk = s * l;
                }
                accumulate_field_grads(
                    &sp.w2,
                    &v,
                    rec.input,
                    rec.act,
                    rec.dact,
                    &mut u,
                    &mut delta,
                    &mut grads[base + nn..base + 2 * nn],
                );
                for k in 0..n {
                    grads[base + 2 * nn + n + k] += delta[k];
                    grads[base + 2 * nn + 3 * n + k] += v[k];
                }
                sp.w2.tr_mul_vec_into(&delta, &mut back);
                for (l, b) in lp.iter_mut().zip(&back) {
                    *l += b;
                }
            }
            SubStep::Kick(i) => {
                // P' = P + s (−W₁ᵀσ(W₁Q + β₁) + η₁)
                let s = h * params.scheme.p_weight(i);
                for k in 0..n {
                    let vk = s * lp[k];
                    grads[base + 2 * nn + 2 * n + k] += vk;
                    v[k] = -vk;
                }
                accumulate_field_grads(
                    &sp.w1,
                    &v,
                    rec.input,
                    rec.act,
                    rec.dact,
                    &mut u,
                    &mut delta,
                    &mut grads[base..base + nn],
                );
                for k in 0..n {
                    grads[base + 2 * nn + k] += delta[k];
                }
                sp.w1.tr_mul_vec_into(&delta, &mut back);
                for (l, b) in lq.iter_mut().zip(&back) {
                    *l += b;
                }
            }
        }
    }
    Ok(lp.to_vec())
}

/// For `y = Wᵀσ(W x + β)` with upstream adjoint `v`: adds `∂/∂W` into
/// `grad_w` and leaves `δ = σ' ⊙ (W v)` (the adjoint of the pre-activation)
/// in `delta`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn accumulate_field_grads(
    w: &Mat,
    v: &[f64],
    x: &[f64],
    act: &[f64],
    dact: &[f64],
    u: &mut [f64],
    delta: &mut [f64],
    grad_w: &mut [f64],
) {
    let n = v.len();
    w.mul_vec_into(v, u);
    for k in 0..n {
        delta[k] = dact[k] * u[k];
    }
    for k in 0..n {
        let row = &mut grad_w[k * n..(k + 1) * n];
        for l in 0..n {
            row[l] += act[k] * v[l] + delta[k] * x[l];
        }
    }
}

/// Convenience wrapper returning fresh gradient buffers.
pub fn backward(params: &NetParams, tape: &ForwardTape, grad_output: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut grads = vec![0.0; params.param_count()];
    let input_grad = backward_into(params, tape, grad_output, &mut grads)?;
    Ok((grads, input_grad))
}
