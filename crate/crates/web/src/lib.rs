//! Browser bindings for a few SPRK operations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use sprk::experiments::{run_convergence, write_convergence_csv};
use sprk::hamiltonian::kepler_field;
use sprk::integrator::integrate;
use sprk::network::{gradient_norm_audit, NetParams, NetSpec};
use sprk::{Activation, ExplicitSprk, PhaseState, SeparableHamiltonian, TableauKind};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Integrates the Kepler problem from `(q1, q2, p1, p2)`. Returns flat
/// `(q1, q2, energy error)` triples, one per step including the start.
#[wasm_bindgen]
pub fn kepler_orbit(tableau: &str, h: f64, steps: usize, q1: f64, q2: f64, p1: f64, p2: f64) -> Result<Vec<f64>, JsValue> {
    let kind: TableauKind = tableau.parse().map_err(js_err)?;
    let sys = kepler_field();
    let z0 = PhaseState::new(vec![q1, q2], vec![p1, p2]).map_err(js_err)?;
    let traj = integrate(&sys, &z0, 0.0, h, steps, &ExplicitSprk::builtin(kind)).map_err(js_err)?;
    let e0 = sys.energy(&z0.q, &z0.p, 0.0).unwrap_or(0.0);
    let mut out = Vec::with_capacity(3 * traj.states.len());
    for z in &traj.states {
        out.extend([z.q[0], z.q[1], sys.energy(&z.q, &z.p, 0.0).unwrap_or(f64::NAN) - e0]);
    }
    Ok(out)
}

/// Convergence table of the built-in tableaux as CSV.
#[wasm_bindgen]
pub fn convergence_csv() -> Result<String, JsValue> {
    let rows = run_convergence().map_err(js_err)?;
    let mut buf = Vec::new();
    write_convergence_csv(&rows, &mut buf).map_err(js_err)?;
    String::from_utf8(buf).map_err(js_err)
}

/// Per-layer state-Jacobian spectral norms of a randomly initialised
/// network, evaluated at `(x1, x2)`.
#[wasm_bindgen]
pub fn layer_norms(tableau: &str, layers: usize, h: f64, seed: u64, x1: f64, x2: f64) -> Result<Vec<f64>, JsValue> {
    let spec = NetSpec {
        tableau: tableau.parse().map_err(js_err)?,
        layers,
        n: 2,
        m: 1,
        h,
        activation: Activation::Tanh,
        share_stages: false,
    };
    let net = NetParams::random(spec, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(js_err)?;
    Ok(gradient_norm_audit(&net, &[x1, x2]).map_err(js_err)?.layer_norms)
}
