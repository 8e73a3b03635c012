use super::{forward, ForwardTape, NetParams};
use crate::error::Result;
use crate::integrator::{apply_drift_jacobian, apply_kick_jacobian, symplectic_residual};
use crate::linalg::Mat;
use crate::tableau::SubStep;

/// Spectral norms of the layer-to-layer state Jacobians.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAudit {
    /// `‖∂z_{k+1}/∂z_k‖` for `k = 0..N`.
    pub layer_norms: Vec<f64>,
    /// `‖∂z_N/∂z_k‖ = ‖Π_{i=k}^{N-1} ∂z_{i+1}/∂z_i‖` for `k = 0..N`.
    pub suffix_norms: Vec<f64>,
    /// `max |DᵀJD − J|` per layer.
    pub symplectic_residuals: Vec<f64>,
}

impl NormAudit {
    pub fn min_layer_norm(&self) -> f64 {
        self.layer_norms.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_suffix_norm(&self) -> f64 {
        self.suffix_norms.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `∂z_{k+1}/∂z_k` for every layer, rebuilt from the cached activations.
pub fn layer_jacobians(params: &NetParams, tape: &ForwardTape) -> Result<Vec<Mat>> {
    super::check_tape(params, tape)?;
    let n = params.dim();
    let h = params.h();
    let mut out: Vec<Mat> = (0..params.depth()).map(|_| Mat::identity(2 * n)).collect();
    for rec in tape.records() {
        let d = &mut out[rec.layer];
        match rec.sub {
            SubStep::Drift(i) => {
                let sp = params.stage_params(rec.layer, i);
                let jf = gram(&sp.w2, rec.dact, 1.0);
                apply_drift_jacobian(d, h * params.scheme.q_weight(i), &jf);
            }
            SubStep::Kick(i) => {
                let sp = params.stage_params(rec.layer, i);
                let jg = gram(&sp.w1, rec.dact, -1.0);
                apply_kick_jacobian(d, h * params.scheme.p_weight(i), &jg);
            }
        }
    }
    Ok(out)
}

/// `sign · Wᵀ diag(d) W`
fn gram(w: &Mat, d: &[f64], sign: f64) -> Mat {
    let n = w.cols();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..w.rows() {
                acc += w[(k, i)] * d[k] * w[(k, j)];
            }
            out[(i, j)] = sign * acc;
        }
    }
    out
}

/// Per-layer and suffix-product spectral norms of the state Jacobians at `x`.
pub fn gradient_norm_audit(params: &NetParams, x: &[f64]) -> Result<NormAudit> {
    let (_, tape) = forward(params, x)?;
    let jacs = layer_jacobians(params, &tape)?;
    let layer_norms = jacs.iter().map(Mat::spectral_norm).collect();
    let symplectic_residuals = jacs
        .iter()
        .map(symplectic_residual)
        .collect::<Result<Vec<_>>>()?;
    let mut suffix_norms = vec![0.0; jacs.len()];
    let mut acc: Option<Mat> = None;
    for (k, j) in jacs.iter().enumerate().rev() {
        let prod = match acc {
            None => j.clone(),
            Some(ref a) => a.matmul(j),
        };
        suffix_norms[k] = prod.spectral_norm();
        acc = Some(prod);
    }
    Ok(NormAudit {
        layer_norms,
        suffix_norms,
        symplectic_residuals,
    })
}
