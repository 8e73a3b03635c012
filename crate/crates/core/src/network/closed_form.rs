//! Closed-form evaluation of the network under restricted parameters.
//!
//! With `W₁ = 0`, `β₁ = 0` and `η₂ = 0` in every stage the momentum only
//! receives constant kicks `h B_i η₁`, so `p` is known in closed form at every
//! drift, and the position becomes a one-hidden-layer sum
//! `q_N = Σ_j K_j σ(V_j p₀ + d_j)` with `K_j = h b_i W₂ᵀ`, `V_j = W₂` and
//! `d_j = W₂ s_j + β₂`, where `s_j` is the accumulated kick before drift `j`.

use super::NetParams;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::tableau::SubStep;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormTerm {
    pub k: Mat,
    pub v: Mat,
    pub d: Vec<f64>,
}

fn check_restriction(params: &NetParams) -> Result<()> {
    for (l, layer) in params.layers().iter().enumerate() {
        for (s, sp) in layer.stages.iter().enumerate() {
            if !sp.w1.is_zero() || sp.beta1.iter().any(|v| *v != 0.0) || sp.eta2.iter().any(|v| *v != 0.0) {
                return Err(Error::RestrictionViolated(format!(
                    "layer {l}, stage set {s}: W1, beta1 and eta2 must vanish"
                )));
            }
        }
    }
    Ok(())
}

/// The terms `(K_j, V_j, d_j)` and the total momentum shift `p_N − p₀`.
pub fn closed_form_terms(params: &NetParams) -> Result<(Vec<ClosedFormTerm>, Vec<f64>)> {
    check_restriction(params)?;
    let n = params.dim();
    let h = params.h();
    let scheme = params.scheme();
    let mut shift = vec![0.0; n];
    let mut terms = Vec::new();
    for layer in 0..params.depth() {
        for sub in scheme.substeps() {
            match sub {
                SubStep::Drift(i) => {
                    let sp = params.stage_params(layer, i);
                    let mut k = sp.w2.transpose();
                    let scale = h * scheme.q_weight(i);
                    k.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
                    let mut d = sp.w2.mul_vec(&shift);
                    for (dk, b) in d.iter_mut().zip(&sp.beta2) {
                        *dk += b;
                    }
                    terms.push(ClosedFormTerm {
                        k,
                        v: sp.w2.clone(),
                        d,
                    });
                }
                SubStep::Kick(i) => {
                    let sp = params.stage_params(layer, i);
                    let scale = h * scheme.p_weight(i);
                    for (s, e) in shift.iter_mut().zip(&sp.eta1) {
                        *s += scale * e;
                    }
                }
            }
        }
    }
    Ok((terms, shift))
}

/// Network output computed from the closed-form sum, without running the
/// layered recursion.
pub fn uap_closed_form(params: &NetParams, x: &[f64]) -> Result<Vec<f64>> {
    let n = params.dim();
    if x.len() != n {
        return Err(Error::Shape(format!("input has {} entries, network expects {n}", x.len())));
    }
    let (terms, shift) = closed_form_terms(params)?;
    let act = params.spec().activation;
    let mut q = vec![0.0; n];
    for term in &terms {
        let mut z = term.v.mul_vec(x);
        for (zk, dk) in z.iter_mut().zip(&term.d) {
            *zk = act.eval(*zk + dk);
        }
        for (qk, c) in q.iter_mut().zip(term.k.mul_vec(&z)) {
            *qk += c;
        }
    }
    let mut z = q;
    z.extend(x.iter().zip(&shift).map(|(a, b)| a + b));
    let out = params.output();
    let mut y = out.weight.mul_vec(&z);
    for (yk, b) in y.iter_mut().zip(&out.bias) {
        *yk += b;
    }
    Ok(y)
}
