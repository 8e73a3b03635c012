//! Separable, possibly non-autonomous Hamiltonian systems
//! `H(q, p, t) = H₁(q, t) + H₂(p, t)`, represented by their two vector fields
//! `f(p, t) = ∂H/∂p` and `g(q, t) = −∂H/∂q`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Mat};

/// Guard on `|q|` below which the Kepler field refuses to evaluate.
pub const KEPLER_SINGULARITY_GUARD: f64 = 1e-8;

/// A separable Hamiltonian system.
///
/// `velocity` may only depend on `(p, t)` and `force` only on `(q, t)`.
pub trait SeparableHamiltonian {
    /// Half-dimension `n` of the phase space.
    fn dim(&self) -> usize;

    /// `out = f(p, t) = ∂H/∂p`
    fn velocity(&self, p: &[f64], t: f64, out: &mut [f64]) -> Result<()>;

    /// `out = g(q, t) = −∂H/∂q`
    fn force(&self, q: &[f64], t: f64, out: &mut [f64]) -> Result<()>;

    /// `∂f/∂p`
    fn velocity_jacobian(&self, p: &[f64], t: f64) -> Result<Mat>;

    /// `∂g/∂q`
    fn force_jacobian(&self, q: &[f64], t: f64) -> Result<Mat>;

    fn energy(&self, _q: &[f64], _p: &[f64], _t: f64) -> Option<f64> {
        None
    }
}

/// Coordinate-wise activation used by the network Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }

    /// Antiderivative: `log cosh` for tanh, softplus for sigmoid.
    pub fn antiderivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let a = x.abs();
                a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
            }
            Activation::Sigmoid => softplus(x),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation `{other}` (expected tanh or sigmoid)"
            ))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Parameters of the network Hamiltonian
/// `H = 1ᵀσ̃(W₁q + β₁) + 1ᵀσ̃(W₂p + β₂) − η₁ᵀq + η₂ᵀp`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFieldParams {
    pub w1: Mat,
    pub w2: Mat,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub eta1: Vec<f64>,
    pub eta2: Vec<f64>,
    pub activation: Activation,
}

impl NetworkFieldParams {
    pub fn zeros(n: usize, activation: Activation) -> Self {
        Self {
            w1: Mat::zeros(n, n),
            w2: Mat::zeros(n, n),
            beta1: vec![0.0; n],
            beta2: vec![0.0; n],
            eta1: vec![0.0; n],
            eta2: vec![0.0; n],
            activation,
        }
    }

    pub fn dim(&self) -> usize {
        self.beta1.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let square = |m: &Mat| m.rows() == n && m.cols() == n;
        if !square(&self.w1)
            || !square(&self.w2)
            || self.beta2.len() != n
            || self.eta1.len() != n
            || self.eta2.len() != n
        {
            return Err(Error::Shape(format!(
                "network field parameters inconsistent with n = {n}"
            )));
        }
        Ok(())
    }

    /// Number of scalar parameters (`2n² + 4n`).
    pub fn len(&self) -> usize {
        let n = self.dim();
        2 * n * n + 4 * n
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// Drift term `W₂ᵀσ(W₂p + β₂) + η₂`. Fills `pre` with the pre-activation
    /// and `act` with `σ(pre)` so callers can cache them.
    #[inline]
    pub fn drift_into(&self, p: &[f64], pre: &mut [f64], act: &mut [f64], out: &mut [f64]) {
        self.w2.mul_vec_into(p, pre);
        for ((a, z), b) in act.iter_mut().zip(pre.iter_mut()).zip(&self.beta2) {
            *z += b;
            *a = self.activation.eval(*z);
        }
        self.w2.tr_mul_vec_into(act, out);
        for (o, e) in out.iter_mut().zip(&self.eta2) {
            *o += e;
        }
    }

    /// Kick term `−W₁ᵀσ(W₁q + β₁) + η₁`.
    #[inline]
    pub fn kick_into(&self, q: &[f64], pre: &mut [f64], act: &mut [f64], out: &mut [f64]) {
        self.w1.mul_vec_into(q, pre);
        for ((a, z), b) in act.iter_mut().zip(pre.iter_mut()).zip(&self.beta1) {
            *z += b;
            *a = self.activation.eval(*z);
        }
        self.w1.tr_mul_vec_into(act, out);
        for (o, e) in out.iter_mut().zip(&self.eta1) {
            *o = -*o + e;
        }
    }

    /// `Wᵀ diag(σ'(W x + β)) W`, scaled by `sign`.
    fn weighted_gram(&self, w: &Mat, beta: &[f64], x: &[f64], sign: f64) -> Mat {
        let n = self.dim();
        let mut pre = w.mul_vec(x);
        for (z, b) in pre.iter_mut().zip(beta) {
            *z = self.activation.derivative(*z + b);
        }
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += w[(k, i)] * pre[k] * w[(k, j)];
                }
                out[(i, j)] = sign * acc;
            }
        }
        out
    }

    pub fn drift_jacobian(&self, p: &[f64]) -> Mat {
        self.weighted_gram(&self.w2, &self.beta2, p, 1.0)
    }

    pub fn kick_jacobian(&self, q: &[f64]) -> Mat {
        self.weighted_gram(&self.w1, &self.beta1, q, -1.0)
    }

    pub fn energy(&self, q: &[f64], p: &[f64]) -> f64 {
        let sig = |w: &Mat, beta: &[f64], x: &[f64]| -> f64 {
            w.mul_vec(x)
                .iter()
                .zip(beta)
                .map(|(z, b)| self.activation.antiderivative(z + b))
                .sum()
        };
        sig(&self.w1, &self.beta1, q) + sig(&self.w2, &self.beta2, p)
            - crate::linalg::dot(&self.eta1, q)
            + crate::linalg::dot(&self.eta2, p)
    }
}

/// The network Hamiltonian with time-independent parameters.
#[derive(Debug, Clone)]
pub struct NetworkField {
    params: NetworkFieldParams,
}

pub fn network_field(params: NetworkFieldParams) -> Result<NetworkField> {
    params.validate()?;
    Ok(NetworkField { params })
}

impl NetworkField {
    pub fn params(&self) -> &NetworkFieldParams {
        &self.params
    }
}

impl SeparableHamiltonian for NetworkField {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn velocity(&self, p: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        let (mut pre, mut act) = (vec![0.0; n], vec![0.0; n]);
        self.params.drift_into(p, &mut pre, &mut act, out);
        Ok(())
    }

    fn force(&self, q: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        let (mut pre, mut act) = (vec![0.0; n], vec![0.0; n]);
        self.params.kick_into(q, &mut pre, &mut act, out);
        Ok(())
    }

    fn velocity_jacobian(&self, p: &[f64], _t: f64) -> Result<Mat> {
        Ok(self.params.drift_jacobian(p))
    }

    fn force_jacobian(&self, q: &[f64], _t: f64) -> Result<Mat> {
        Ok(self.params.kick_jacobian(q))
    }

    fn energy(&self, q: &[f64], p: &[f64], _t: f64) -> Option<f64> {
        Some(self.params.energy(q, p))
    }
}

/// Planar Kepler-type problem `q' = p`, `p' = −π/(4|q|^{3/2}) q`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kepler;

pub fn kepler_field() -> Kepler {
    Kepler
}

impl Kepler {
    fn guard(q: &[f64]) -> Result<f64> {
        let r = norm2(q);
        if !(r >= KEPLER_SINGULARITY_GUARD) {
            return Err(Error::Singularity {
                norm: r,
                guard: KEPLER_SINGULARITY_GUARD,
            });
        }
        Ok(r)
    }
}

impl SeparableHamiltonian for Kepler {
    fn dim(&self) -> usize {
        2
    }

    fn velocity(&self, p: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(p);
        Ok(())
    }

    fn force(&self, q: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        let r = Self::guard(q)?;
        let k = -PI / (4.0 * r * r.sqrt());
        for (o, x) in out.iter_mut().zip(q) {
            *o = k * x;
        }
        Ok(())
    }

    fn velocity_jacobian(&self, _p: &[f64], _t: f64) -> Result<Mat> {
        Ok(Mat::identity(2))
    }

    fn force_jacobian(&self, q: &[f64], _t: f64) -> Result<Mat> {
        // g = −(π/4) r^{-3/2} q  ⇒  ∂g/∂q = −(π/4) r^{-3/2} (I − (3/2) q qᵀ / r²)
        let r = Self::guard(q)?;
        let k = -PI / (4.0 * r * r.sqrt());
        let mut m = Mat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[(i, j)] = k * (delta - 1.5 * q[i] * q[j] / (r * r));
            }
        }
        Ok(m)
    }

    fn energy(&self, q: &[f64], p: &[f64], _t: f64) -> Option<f64> {
        Some(0.5 * crate::linalg::dot(p, p) + 0.5 * PI * norm2(q).sqrt())
    }
}

/// `H = ½(1 + sin t) p² + ½(1 + ½ cos t) q²` in one degree of freedom.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonAutonomousOscillator;

pub fn test_field_nonautonomous() -> NonAutonomousOscillator {
    NonAutonomousOscillator
}

impl NonAutonomousOscillator {
    fn mass_coeff(t: f64) -> f64 {
        1.0 + t.sin()
    }

    fn spring_coeff(t: f64) -> f64 {
        1.0 + 0.5 * t.cos()
    }
}

impl SeparableHamiltonian for NonAutonomousOscillator {
    fn dim(&self) -> usize {
        1
    }

    fn velocity(&self, p: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        out[0] = Self::mass_coeff(t) * p[0];
        Ok(())
    }

    fn force(&self, q: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        out[0] = -Self::spring_coeff(t) * q[0];
        Ok(())
    }

    fn velocity_jacobian(&self, _p: &[f64], t: f64) -> Result<Mat> {
        Ok(Mat::diag(&[Self::mass_coeff(t)]))
    }

    fn force_jacobian(&self, _q: &[f64], t: f64) -> Result<Mat> {
        Ok(Mat::diag(&[-Self::spring_coeff(t)]))
    }

    fn energy(&self, q: &[f64], p: &[f64], t: f64) -> Option<f64> {
        Some(0.5 * Self::mass_coeff(t) * p[0] * p[0] + 0.5 * Self::spring_coeff(t) * q[0] * q[0])
    }
}

/// `H = ½|p|² + ½|q|²`.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicOscillator {
    pub dim: usize,
}

impl SeparableHamiltonian for HarmonicOscillator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity(&self, p: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(p);
        Ok(())
    }

    fn force(&self, q: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        for (o, x) in out.iter_mut().zip(q) {
            *o = -x;
        }
        Ok(())
    }

    fn velocity_jacobian(&self, _p: &[f64], _t: f64) -> Result<Mat> {
        Ok(Mat::identity(self.dim))
    }

    fn force_jacobian(&self, _q: &[f64], _t: f64) -> Result<Mat> {
        Ok(Mat::diag(&vec![-1.0; self.dim]))
    }

    fn energy(&self, q: &[f64], p: &[f64], _t: f64) -> Option<f64> {
        Some(0.5 * (crate::linalg::dot(p, p) + crate::linalg::dot(q, q)))
    }
}
