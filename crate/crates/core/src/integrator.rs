//! Explicit SPRK time stepping for separable Hamiltonians.

use std::io::Write;

use crate::error::{Error, Result};
use crate::hamiltonian::SeparableHamiltonian;
use crate::linalg::Mat;
use crate::tableau::{ExplicitSprk, SubStep, TableauKind};

/// A phase-space point `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Shape(format!(
                "q has {} entries, p has {}",
                q.len(),
                p.len()
            )));
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `(q, p)` concatenated.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut z = self.q.clone();
        z.extend_from_slice(&self.p);
        z
    }

    pub fn from_slice(z: &[f64]) -> Result<Self> {
        if z.len() % 2 != 0 {
            return Err(Error::Shape(format!("odd phase dimension {}", z.len())));
        }
        let n = z.len() / 2;
        Ok(Self {
            q: z[..n].to_vec(),
            p: z[n..].to_vec(),
        })
    }
}

/// States on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&PhaseState> {
        self.states.last()
    }

    /// CSV with header `t,q1..qn,p1..pn` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.states.first().map_or(0, PhaseState::dim);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("q{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(t)
                .chain(&s.q)
                .chain(&s.p)
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Parses the format written by [`Trajectory::write_csv`].
    pub fn from_csv_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trajectory CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") || cols.len() % 2 != 1 {
            return Err(Error::Parse(format!("bad trajectory header `{header}`")));
        }
        let n = (cols.len() - 1) / 2;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
            if vals.len() != 2 * n + 1 {
                return Err(Error::Parse(format!("row {} has {} fields", lineno + 2, vals.len())));
            }
            times.push(vals[0]);
            states.push(PhaseState::from_slice(&vals[1..])?);
        }
        Ok(Self { times, states })
    }
}

/// The canonical symplectic matrix `J = [[0, I], [−I, 0]]` of size `2n`.
pub fn symplectic_matrix(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

fn check_step(h: f64) -> Result<()> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be finite and >= 0, got {h}")));
    }
    Ok(())
}

/// Drives one explicit step. `eval(sub, x, t_i, out)` must write `f(x, t_i)`
/// for a drift (`x = P`) and `g(x, t_i)` for a kick (`x = Q`). The state is
/// updated in place.
pub(crate) fn sweep_step<E>(
    scheme: &ExplicitSprk,
    h: f64,
    t: f64,
    q: &mut [f64],
    p: &mut [f64],
    mut eval: E,
) -> Result<()>
where
    E: FnMut(SubStep, &[f64], f64, &mut [f64]) -> Result<()>,
{
    let mut buf = vec![0.0; q.len()];
    for sub in scheme.substeps() {
        match sub {
            SubStep::Drift(i) => {
                eval(sub, p, t + scheme.q_node(i) * h, &mut buf)?;
                let hb = h * scheme.q_weight(i);
                for (x, v) in q.iter_mut().zip(&buf) {
                    *x += hb * v;
                }
            }
            SubStep::Kick(i) => {
                eval(sub, q, t + scheme.p_node(i) * h, &mut buf)?;
                let hb = h * scheme.p_weight(i);
                for (x, v) in p.iter_mut().zip(&buf) {
                    *x += hb * v;
                }
            }
        }
    }
    Ok(())
}

/// One explicit SPRK step of size `h` from time `t`.
pub fn sprk_step<H: SeparableHamiltonian + ?Sized>(
    system: &H,
    state: &PhaseState,
    t: f64,
    h: f64,
    scheme: &ExplicitSprk,
) -> Result<PhaseState> {
    check_step(h)?;
    if state.dim() != system.dim() || state.p.len() != system.dim() {
        return Err(Error::Shape(format!(
            "state dimension {} does not match system dimension {}",
            state.dim(),
            system.dim()
        )));
    }
    let mut next = state.clone();
    sweep_step(
        scheme,
        h,
        t,
        &mut next.q,
        &mut next.p,
        |sub, x, ti, out| match sub {
            SubStep::Drift(_) => system.velocity(x, ti, out),
            SubStep::Kick(_) => system.force(x, ti, out),
        },
    )?;
    Ok(next)
}

/// `n_steps` steps on the uniform grid `t0 + k h`.
pub fn integrate<H: SeparableHamiltonian + ?Sized>(
    system: &H,
    state0: &PhaseState,
    t0: f64,
    h: f64,
    n_steps: usize,
    scheme: &ExplicitSprk,
) -> Result<Trajectory> {
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(t0);
    states.push(state0.clone());
    for k in 0..n_steps {
        let t = t0 + k as f64 * h;
        let next = sprk_step(system, &states[k], t, h, scheme).map_err(|e| Error::StepFailed {
            step: k,
            source: Box::new(e),
        })?;
        times.push(t0 + (k + 1) as f64 * h);
        states.push(next);
    }
    Ok(Trajectory { times, states })
}

/// Endpoint of an integration without storing the trajectory.
pub fn integrate_endpoint<H: SeparableHamiltonian + ?Sized>(
    system: &H,
    state0: &PhaseState,
    t0: f64,
    h: f64,
    n_steps: usize,
    scheme: &ExplicitSprk,
) -> Result<PhaseState> {
    let mut state = state0.clone();
    for k in 0..n_steps {
        state = sprk_step(system, &state, t0 + k as f64 * h, h, scheme).map_err(|e| {
            Error::StepFailed {
                step: k,
                source: Box::new(e),
            }
        })?;
    }
    Ok(state)
}

/// `D ← [[I, s·Jf], [0, I]] D` for a drift half-step with coefficient `s`.
pub(crate) fn apply_drift_jacobian(d: &mut Mat, s: f64, jf: &Mat) {
    let n = jf.rows();
    let cols = d.cols();
    for r in 0..n {
        for c in 0..cols {
            let mut acc = 0.0;
            for k in 0..n {
                acc += jf[(r, k)] * d[(n + k, c)];
            }
            d[(r, c)] += s * acc;
        }
    }
}

/// `D ← [[I, 0], [s·Jg, I]] D` for a kick half-step with coefficient `s`.
pub(crate) fn apply_kick_jacobian(d: &mut Mat, s: f64, jg: &Mat) {
    let n = jg.rows();
    let cols = d.cols();
    for r in 0..n {
        for c in 0..cols {
            let mut acc = 0.0;
            for k in 0..n {
                acc += jg[(r, k)] * d[(k, c)];
            }
            d[(n + r, c)] += s * acc;
        }
    }
}

/// Analytic Jacobian `∂(q₁, p₁)/∂(q₀, p₀)` of one SPRK step, obtained by
/// chaining the shear matrices of the half-steps.
pub fn step_jacobian<H: SeparableHamiltonian + ?Sized>(
    system: &H,
    state: &PhaseState,
    t: f64,
    h: f64,
    scheme: &ExplicitSprk,
) -> Result<Mat> {
    check_step(h)?;
    let n = system.dim();
    let mut d = Mat::identity(2 * n);
    let mut q = state.q.clone();
    let mut p = state.p.clone();
    let mut buf = vec![0.0; n];
    for sub in scheme.substeps() {
        match sub {
            SubStep::Drift(i) => {
                let ti = t + scheme.q_node(i) * h;
                let s = h * scheme.q_weight(i);
                apply_drift_jacobian(&mut d, s, &system.velocity_jacobian(&p, ti)?);
                system.velocity(&p, ti, &mut buf)?;
                for (x, v) in q.iter_mut().zip(&buf) {
                    *x += s * v;
                }
            }
            SubStep::Kick(i) => {
                let ti = t + scheme.p_node(i) * h;
                let s = h * scheme.p_weight(i);
                apply_kick_jacobian(&mut d, s, &system.force_jacobian(&q, ti)?);
                system.force(&q, ti, &mut buf)?;
                for (x, v) in p.iter_mut().zip(&buf) {
                    *x += s * v;
                }
            }
        }
    }
    Ok(d)
}

/// `max |DᵀJD − J|`.
pub fn symplectic_residual(d: &Mat) -> Result<f64> {
    if !d.is_square() || d.rows() % 2 != 0 {
        return Err(Error::Shape(format!(
            "symplectic residual needs a square even-dimensional matrix, got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let j = symplectic_matrix(d.rows() / 2);
    Ok(d.transpose().matmul(&j).matmul(d).sub(&j).max_abs())
}

/// Result of an empirical convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub slope: f64,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Error floor below which the largest-step error is considered saturated.
pub const SATURATION_FLOOR: f64 = 1e-13;

/// Refinement factor of the reference solution relative to the finest step.
pub const REFERENCE_REFINEMENT: usize = 64;

/// Default halving sequence used by convergence studies over `[0, 1]`.
pub const DEFAULT_STEPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

fn steps_over(t_end: f64, h: f64) -> Result<usize> {
    let n = (t_end / h).round();
    if n < 1.0 || ((n * h - t_end).abs() > 1e-9 * t_end.abs().max(1.0)) {
        return Err(Error::InvalidArgument(format!(
            "step {h} does not divide the interval length {t_end}"
        )));
    }
    Ok(n as usize)
}

/// Measures the convergence order of `scheme` on `[t0, t0 + t_end]` against a
/// fourth-order reference computed with `64×` finer steps than the smallest
/// entry of `steps`.
pub fn estimate_order<H: SeparableHamiltonian + ?Sized>(
    system: &H,
    state0: &PhaseState,
    t0: f64,
    t_end: f64,
    scheme: &ExplicitSprk,
    steps: &[f64],
) -> Result<OrderEstimate> {
    if steps.len() < 2 {
        return Err(Error::InvalidArgument("need at least two step sizes".into()));
    }
    for w in steps.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "step set must be a halving sequence, found {} then {}",
                w[0], w[1]
            )));
        }
    }
    let h_min = steps[steps.len() - 1];
    let h_ref = h_min / REFERENCE_REFINEMENT as f64;
    let reference = integrate_endpoint(
        system,
        state0,
        t0,
        h_ref,
        steps_over(t_end, h_ref)?,
        &ExplicitSprk::builtin(TableauKind::Sprk4),
    )?
    .to_vec();

    let mut errors = Vec::with_capacity(steps.len());
    for &h in steps {
        let end = integrate_endpoint(system, state0, t0, h, steps_over(t_end, h)?, scheme)?;
        let err = end
            .to_vec()
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        errors.push(err);
    }
    if errors[0] < SATURATION_FLOOR {
        return Err(Error::Saturated(SATURATION_FLOOR));
    }
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(OrderEstimate {
        slope: least_squares_slope(&xs, &ys),
        steps: steps.to_vec(),
        errors,
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
