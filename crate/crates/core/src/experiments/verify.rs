use std::fmt;

use crate::error::{Error, Result};
use crate::hamiltonian::test_field_nonautonomous;
use crate::integrator::{estimate_order, DEFAULT_STEPS};
use crate::tableau::{ConditionReport, PrkTableau, TableauKind, MAX_ALGEBRAIC_ORDER};

use super::convergence::convergence_initial_state;

/// Slack allowed between the measured slope and the claimed order.
pub fn slope_tolerance(order: usize) -> f64 {
    if order >= 4 {
        0.4
    } else {
        0.3
    }
}

/// Outcome of certifying one tableau.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub name: String,
    pub tableau: PrkTableau,
    pub conditions: ConditionReport,
    /// Order the tableau is held to: the nominal order of a built-in,
    /// otherwise the highest algebraically verified order.
    pub claimed_order: usize,
    /// `None` if the tableau cannot be stepped explicitly.
    pub slope: Option<f64>,
    pub passed: bool,
}

/// Exact condition checks followed by an empirical convergence run.
pub fn run_verify(tableau: &PrkTableau, builtin: Option<TableauKind>) -> Result<Certificate> {
    let conditions = tableau.certify();
    let claimed_order = match builtin {
        Some(kind) => kind.nominal_order(),
        None => conditions.order.max_verified_order.max(1),
    };
    let algebraic = claimed_order.min(MAX_ALGEBRAIC_ORDER);

    let slope = match tableau.to_explicit() {
        Ok(scheme) => {
            let system = test_field_nonautonomous();
            let z0 = convergence_initial_state();
            match estimate_order(&system, &z0, 0.0, 1.0, &scheme, &DEFAULT_STEPS) {
                Ok(est) => Some(est.slope),
                Err(Error::Saturated(_)) => None,
                Err(e) => return Err(e),
            }
        }
        Err(Error::NotExplicit | Error::NotSymplectic(_)) => None,
        Err(e) => return Err(e),
    };

    let slope_ok = slope.is_some_and(|s| s >= claimed_order as f64 - slope_tolerance(claimed_order));
    let passed = conditions.symplectic.symplectic
        && conditions.order.nodes_consistent
        && conditions.order.max_verified_order >= algebraic
        && slope_ok;
    Ok(Certificate {
        name: tableau.name().unwrap_or("custom").to_string(),
        tableau: tableau.clone(),
        conditions,
        claimed_order,
        slope,
        passed,
    })
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.tableau.stages();
        writeln!(f, "tableau: {} ({s} stages)", self.name)?;
        writeln!(f, "symplectic residuals b_i A_ij + B_j a_ji - b_i B_j:")?;
        for row in &self.conditions.symplectic.residuals {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        writeln!(
            f,
            "symplectic: {}",
            if self.conditions.symplectic.symplectic { "yes" } else { "no" }
        )?;
        let (dq, dp) = self.tableau.node_residuals();
        let fmt_vec = |v: &[crate::tableau::Rational]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        writeln!(f, "node residuals c: [{}]", fmt_vec(&dq))?;
        writeln!(f, "node residuals C: [{}]", fmt_vec(&dp))?;
        writeln!(f, "order conditions:")?;
        for c in &self.conditions.order.conditions {
            writeln!(
                f,
                "  order {} {:<18} target {:>5} computed {:>8} residual {}",
                c.order, c.label, c.target, c.computed, c.residual
            )?;
        }
        writeln!(f, "algebraic order verified: {}", self.conditions.order.max_verified_order)?;
        writeln!(f, "claimed order: {}", self.claimed_order)?;
        match self.slope {
            Some(v) => writeln!(f, "empirical slope: {v:.4}")?,
            None => writeln!(f, "empirical slope: n/a")?,
        }
        write!(f, "result: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}
