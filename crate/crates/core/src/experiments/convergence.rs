use std::io::Write;

use crate::error::{Error, Result};
use crate::hamiltonian::test_field_nonautonomous;
use crate::integrator::{estimate_order, PhaseState, DEFAULT_STEPS};
use crate::tableau::{ExplicitSprk, TableauKind};

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub tableau: TableauKind,
    /// `None` when the error saturated at the largest step.
    pub slope: Option<f64>,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Start point of the convergence study on the non-autonomous test system.
pub fn convergence_initial_state() -> PhaseState {
    PhaseState {
        q: vec![1.0],
        p: vec![0.5],
    }
}

/// Empirical orders of all built-in tableaux on `[0, 1]` with the default
/// halving sequence.
pub fn run_convergence() -> Result<Vec<ConvergenceRow>> {
    let system = test_field_nonautonomous();
    let z0 = convergence_initial_state();
    TableauKind::ALL
        .iter()
        .map(|&kind| {
            let scheme = ExplicitSprk::builtin(kind);
            match estimate_order(&system, &z0, 0.0, 1.0, &scheme, &DEFAULT_STEPS) {
                Ok(est) => Ok(ConvergenceRow {
                    tableau: kind,
                    slope: Some(est.slope),
                    steps: est.steps,
                    errors: est.errors,
                }),
                Err(Error::Saturated(_)) => Ok(ConvergenceRow {
                    tableau: kind,
                    slope: None,
                    steps: DEFAULT_STEPS.to_vec(),
                    errors: Vec::new(),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// `tableau,nominal_order,slope,status,h,error,...` with one `h,error` pair
/// per step size.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> Result<()> {
    let pairs = rows.iter().map(|r| r.steps.len()).max().unwrap_or(0);
    write!(w, "tableau,nominal_order,slope,status")?;
    for k in 1..=pairs {
        write!(w, ",h{k},error{k}")?;
    }
    writeln!(w)?;
    for r in rows {
        let (slope, status) = match r.slope {
            Some(s) => (format!("{s:.6}"), "ok"),
            None => (String::new(), "saturated"),
        };
        write!(w, "{},{},{slope},{status}", r.tableau, r.tableau.nominal_order())?;
        for (k, h) in r.steps.iter().enumerate() {
            match r.errors.get(k) {
                Some(e) => write!(w, ",{h},{e:.6e}")?,
                None => write!(w, ",{h},")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
