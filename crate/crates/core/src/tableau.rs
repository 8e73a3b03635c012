//! Partitioned Runge-Kutta tableaux.
//!
//! A PRK method for a separable system `q' = f(p, t)`, `p' = g(q, t)` uses one
//! tableau `(a, b, c)` for the `q` equation and another `(A, B, C)` for the
//! `p` equation. All tableau algebra here is carried out in exact rational
//! arithmetic; floating-point coefficients are only produced when a tableau
//! is turned into a steppable [`ExplicitSprk`].
//!
//! Nodes always satisfy the cross-coupled relation `c_i = Σ_j A_ij` and
//! `C_i = Σ_j a_ij` unless a caller supplies nodes explicitly through
//! [`PrkTableau::with_nodes`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest stage count accepted by the library.
pub const MAX_STAGES: usize = 16;

/// Highest order checked algebraically; order 4 is certified empirically.
pub const MAX_ALGEBRAIC_ORDER: usize = 3;

fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The built-in explicit schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableauKind {
    /// Symplectic Euler: kick `p` with the old `q`, then drift `q` with the
    /// new `p` (the Hamiltonian-net update).
    Euler1,
    /// Störmer-Verlet in kick-drift-kick form.
    Sprk2,
    Sprk3,
    Sprk4,
}

impl TableauKind {
    pub const ALL: [TableauKind; 4] = [
        TableauKind::Euler1,
        TableauKind::Sprk2,
        TableauKind::Sprk3,
        TableauKind::Sprk4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableauKind::Euler1 => "euler1",
            TableauKind::Sprk2 => "sprk2",
            TableauKind::Sprk3 => "sprk3",
            TableauKind::Sprk4 => "sprk4",
        }
    }

    /// Classical order of the scheme.
    pub fn nominal_order(self) -> usize {
        match self {
            TableauKind::Euler1 => 1,
            TableauKind::Sprk2 => 2,
            TableauKind::Sprk3 => 3,
            TableauKind::Sprk4 => 4,
        }
    }

    pub fn tableau(self) -> PrkTableau {
        builtin_tableau(self)
    }
}

impl fmt::Display for TableauKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableauKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableauKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownTableau {
                name: s.to_string(),
                expected: TableauKind::ALL.map(TableauKind::name).join(", "),
            })
    }
}

/// Order in which the two half-updates of an explicit stage are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// `Q += h b_i f(P)` then `P += h B_i g(Q)`; `a` is lower triangular with
    /// diagonal, `A` strictly lower triangular.
    DriftFirst,
    /// `P += h B_i g(Q)` then `Q += h b_i f(P)`; roles of `a` and `A` swapped.
    KickFirst,
}

/// A partitioned Butcher tableau with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PrkTableau {
    name: Option<String>,
    /// `b`: weights of the `q` update.
    q_weights: Vec<Rational>,
    /// `B`: weights of the `p` update.
    p_weights: Vec<Rational>,
    /// `a`
    q_coeffs: Vec<Vec<Rational>>,
    /// `A`
    p_coeffs: Vec<Vec<Rational>>,
    /// `c`: time nodes of the `f` evaluations.
    q_nodes: Vec<Rational>,
    /// `C`: time nodes of the `g` evaluations.
    p_nodes: Vec<Rational>,
}

fn row_sums(m: &[Vec<Rational>]) -> Vec<Rational> {
    m.iter()
        .map(|row| row.iter().fold(Rational::zero(), |acc, v| acc + v))
        .collect()
}

impl PrkTableau {
    /// General tableau; nodes are derived as `c = rowsum(A)`, `C = rowsum(a)`.
    pub fn new(
        q_weights: Vec<Rational>,
        p_weights: Vec<Rational>,
        q_coeffs: Vec<Vec<Rational>>,
        p_coeffs: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let q_nodes = row_sums(&p_coeffs);
        let p_nodes = row_sums(&q_coeffs);
        Self::with_nodes(q_weights, p_weights, q_coeffs, p_coeffs, q_nodes, p_nodes)
    }

    /// Tableau with caller-supplied nodes (which may violate the node
    /// condition; [`PrkTableau::check_order_conditions`] reports that).
    pub fn with_nodes(
        q_weights: Vec<Rational>,
        p_weights: Vec<Rational>,
        q_coeffs: Vec<Vec<Rational>>,
        p_coeffs: Vec<Vec<Rational>>,
        q_nodes: Vec<Rational>,
        p_nodes: Vec<Rational>,
    ) -> Result<Self> {
        let s = q_weights.len();
        if s == 0 || s > MAX_STAGES {
            return Err(Error::InvalidTableau(format!(
                "stage count {s} outside 1..={MAX_STAGES}"
            )));
        }
        let square = |m: &Vec<Vec<Rational>>| m.len() == s && m.iter().all(|r| r.len() == s);
        if p_weights.len() != s
            || q_nodes.len() != s
            || p_nodes.len() != s
            || !square(&q_coeffs)
            || !square(&p_coeffs)
        {
            return Err(Error::InvalidTableau(format!(
                "arrays inconsistent with s = {s}"
            )));
        }
        Ok(Self {
            name: None,
            q_weights,
            p_weights,
            q_coeffs,
            p_coeffs,
            q_nodes,
            p_nodes,
        })
    }

    /// Explicit tableau of the given sweep orientation built from the two
    /// weight vectors alone.
    pub fn explicit(sweep: Sweep, q_weights: Vec<Rational>, p_weights: Vec<Rational>) -> Result<Self> {
        let s = q_weights.len();
        if p_weights.len() != s {
            return Err(Error::InvalidTableau("b and B differ in length".into()));
        }
        let lower = |w: &[Rational], with_diag: bool| -> Vec<Vec<Rational>> {
            (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| {
                            if j < i || (with_diag && j == i) {
                                w[j].clone()
                            } else {
                                Rational::zero()
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let (a, big_a) = match sweep {
            Sweep::DriftFirst => (lower(&q_weights, true), lower(&p_weights, false)),
            Sweep::KickFirst => (lower(&q_weights, false), lower(&p_weights, true)),
        };
        Self::new(q_weights, p_weights, a, big_a)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn stages(&self) -> usize {
        self.q_weights.len()
    }

    pub fn q_weights(&self) -> &[Rational] {
        &self.q_weights
    }

    pub fn p_weights(&self) -> &[Rational] {
        &self.p_weights
    }

    pub fn q_coeffs(&self) -> &[Vec<Rational>] {
        &self.q_coeffs
    }

    pub fn p_coeffs(&self) -> &[Vec<Rational>] {
        &self.p_coeffs
    }

    pub fn q_nodes(&self) -> &[Rational] {
        &self.q_nodes
    }

    pub fn p_nodes(&self) -> &[Rational] {
        &self.p_nodes
    }

    /// Detects which explicit layout (if any) the coefficient matrices follow.
    pub fn sweep(&self) -> Option<Sweep> {
        let s = self.stages();
        let matches = |m: &[Vec<Rational>], w: &[Rational], with_diag: bool| {
            (0..s).all(|i| {
                (0..s).all(|j| {
                    let expected = if j < i || (with_diag && j == i) {
                        w[j].clone()
                    } else {
                        Rational::zero()
                    };
                    m[i][j] == expected
                })
            })
        };
        if matches(&self.q_coeffs, &self.q_weights, true)
            && matches(&self.p_coeffs, &self.p_weights, false)
        {
            Some(Sweep::DriftFirst)
        } else if matches(&self.q_coeffs, &self.q_weights, false)
            && matches(&self.p_coeffs, &self.p_weights, true)
        {
            Some(Sweep::KickFirst)
        } else {
            None
        }
    }

    /// Residuals `b_i A_ij + B_j a_ji − b_i B_j`.
    pub fn check_symplectic(&self) -> SymplecticReport {
        let s = self.stages();
        let (b, bb, a, aa) = (&self.q_weights, &self.p_weights, &self.q_coeffs, &self.p_coeffs);
        let residuals: Vec<Vec<Rational>> = (0..s)
            .map(|i| {
                (0..s)
                    .map(|j| &b[i] * &aa[i][j] + &bb[j] * &a[j][i] - &b[i] * &bb[j])
                    .collect()
            })
            .collect();
        let symplectic = residuals.iter().flatten().all(Zero::is_zero);
        SymplecticReport {
            residuals,
            symplectic,
        }
    }

    /// `computed − target` for `c_i = Σ_j A_ij` and `C_i = Σ_j a_ij`.
    pub fn node_residuals(&self) -> (Vec<Rational>, Vec<Rational>) {
        let c = row_sums(&self.p_coeffs);
        let cc = row_sums(&self.q_coeffs);
        (
            self.q_nodes.iter().zip(&c).map(|(n, t)| n - t).collect(),
            self.p_nodes.iter().zip(&cc).map(|(n, t)| n - t).collect(),
        )
    }

    pub fn nodes_consistent(&self) -> bool {
        let (dq, dp) = self.node_residuals();
        dq.iter().chain(&dp).all(Zero::is_zero)
    }

    /// Evaluates the order conditions up to `p_max` (capped at
    /// [`MAX_ALGEBRAIC_ORDER`]) for both the `q` and the `p` chain.
    pub fn check_order_conditions(&self, p_max: usize) -> Result<OrderReport> {
        if p_max == 0 || p_max > MAX_ALGEBRAIC_ORDER {
            return Err(Error::InvalidArgument(format!(
                "p_max must be in 1..={MAX_ALGEBRAIC_ORDER}, got {p_max}"
            )));
        }
        let nodes_ok = self.nodes_consistent();
        let checked = if nodes_ok { p_max } else { 1 };
        let mut conditions = Vec::new();
        for order in 1..=checked {
            self.push_conditions(order, &mut conditions);
        }
        let mut max_verified_order = 0;
        for order in 1..=checked {
            if conditions
                .iter()
                .filter(|c| c.order == order)
                .all(|c| c.residual.is_zero())
            {
                max_verified_order = order;
            } else {
                break;
            }
        }
        Ok(OrderReport {
            nodes_consistent: nodes_ok,
            conditions,
            max_verified_order,
        })
    }

    fn push_conditions(&self, order: usize, out: &mut Vec<OrderCondition>) {
        let s = self.stages();
        let (b, bb) = (&self.q_weights, &self.p_weights);
        let (a, aa) = (&self.q_coeffs, &self.p_coeffs);
        let (c, cc) = (&self.q_nodes, &self.p_nodes);
        let sum = |f: &dyn Fn(usize) -> Rational| (0..s).fold(Rational::zero(), |acc, i| acc + f(i));
        let mut push = |label: &str, target: Rational, computed: Rational| {
            out.push(OrderCondition {
                order,
                label: label.to_string(),
                residual: &computed - &target,
                target,
                computed,
            });
        };
        match order {
            1 => {
                push("sum b_i", Rational::one(), sum(&|i| b[i].clone()));
                push("sum B_i", Rational::one(), sum(&|i| bb[i].clone()));
            }
            2 => {
                push("sum b_i c_i", rat(1, 2), sum(&|i| &b[i] * &c[i]));
                push("sum B_i C_i", rat(1, 2), sum(&|i| &bb[i] * &cc[i]));
            }
            3 => {
                push("sum b_i c_i^2", rat(1, 3), sum(&|i| &b[i] * &c[i] * &c[i]));
                push(
                    "sum b_i A_ij C_j",
                    rat(1, 6),
                    sum(&|i| sum(&|j| &b[i] * &aa[i][j] * &cc[j])),
                );
                push("sum B_i C_i^2", rat(1, 3), sum(&|i| &bb[i] * &cc[i] * &cc[i]));
                push(
                    "sum B_i a_ij c_j",
                    rat(1, 6),
                    sum(&|i| sum(&|j| &bb[i] * &a[i][j] * &c[j])),
                );
            }
            _ => unreachable!("order capped by caller"),
        }
    }

    /// Symplecticity plus order conditions up to order 3.
    pub fn certify(&self) -> ConditionReport {
        let symplectic = self.check_symplectic();
        let order = self
            .check_order_conditions(MAX_ALGEBRAIC_ORDER)
            .expect("order within bounds");
        ConditionReport { symplectic, order }
    }

    /// Floating-point stepping coefficients; fails unless the tableau is
    /// explicit and symplectic.
    pub fn to_explicit(&self) -> Result<ExplicitSprk> {
        let sweep = self.sweep().ok_or(Error::NotExplicit)?;
        let report = self.check_symplectic();
        if !report.symplectic {
            return Err(Error::NotSymplectic(report.max_abs_residual().to_string()));
        }
        Ok(ExplicitSprk {
            name: self.name.clone(),
            sweep,
            q_weights: self.q_weights.iter().map(rat_to_f64).collect(),
            p_weights: self.p_weights.iter().map(rat_to_f64).collect(),
            q_nodes: self.q_nodes.iter().map(rat_to_f64).collect(),
            p_nodes: self.p_nodes.iter().map(rat_to_f64).collect(),
        })
    }

    pub fn to_json(&self) -> TableauJson {
        let fmt_vec = |v: &[Rational]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        TableauJson {
            s: self.stages(),
            b: fmt_vec(&self.q_weights),
            big_b: fmt_vec(&self.p_weights),
            a: self.q_coeffs.iter().map(|r| fmt_vec(r)).collect(),
            big_a: self.p_coeffs.iter().map(|r| fmt_vec(r)).collect(),
        }
    }

    pub fn from_json(doc: &TableauJson) -> Result<Self> {
        let parse_vec = |v: &[String]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        let parse_mat = |m: &[Vec<String>]| m.iter().map(|r| parse_vec(r)).collect::<Result<Vec<_>>>();
        let t = Self::new(
            parse_vec(&doc.b)?,
            parse_vec(&doc.big_b)?,
            parse_mat(&doc.a)?,
            parse_mat(&doc.big_a)?,
        )?;
        if t.stages() != doc.s {
            return Err(Error::InvalidTableau(format!(
                "declared s = {} but weights have {} entries",
                doc.s,
                t.stages()
            )));
        }
        Ok(t)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: TableauJson = serde_json::from_str(s)?;
        Self::from_json(&doc)
    }
}

/// Parses `"7/24"`, `"-3"` or `"0"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let parsed = match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
            let d = BigInt::from_str(d.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("{s:?}: zero denominator")));
            }
            Rational::new(n, d)
        }
        None => Rational::from_integer(
            BigInt::from_str(t).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?,
        ),
    };
    Ok(parsed)
}

/// On-disk tableau document. Nodes are never stored; they are recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableauJson {
    pub s: usize,
    pub b: Vec<String>,
    #[serde(rename = "B")]
    pub big_b: Vec<String>,
    pub a: Vec<Vec<String>>,
    #[serde(rename = "A")]
    pub big_a: Vec<Vec<String>>,
}

/// Returns the built-in tableau.
pub fn builtin_tableau(kind: TableauKind) -> PrkTableau {
    let r = |v: &[(i64, i64)]| v.iter().map(|&(n, d)| rat(n, d)).collect::<Vec<_>>();
    let (sweep, b, bb) = match kind {
        TableauKind::Euler1 => (Sweep::KickFirst, r(&[(1, 1)]), r(&[(1, 1)])),
        TableauKind::Sprk2 => (Sweep::DriftFirst, r(&[(0, 1), (1, 1)]), r(&[(1, 2), (1, 2)])),
        TableauKind::Sprk3 => (
            Sweep::DriftFirst,
            r(&[(7, 24), (3, 4), (-1, 24)]),
            r(&[(2, 3), (-2, 3), (1, 1)]),
        ),
        TableauKind::Sprk4 => (
            Sweep::DriftFirst,
            r(&[(7, 48), (3, 8), (-1, 48), (-1, 48), (3, 8), (7, 48)]),
            r(&[(1, 3), (-1, 3), (1, 1), (-1, 3), (1, 3), (0, 1)]),
        ),
    };
    PrkTableau::explicit(sweep, b, bb)
        .expect("built-in tableau is well formed")
        .named(kind.name())
}

/// Looks a built-in tableau up by name.
pub fn builtin_by_name(name: &str) -> Result<PrkTableau> {
    Ok(builtin_tableau(name.parse()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticReport {
    pub residuals: Vec<Vec<Rational>>,
    pub symplectic: bool,
}

impl SymplecticReport {
    pub fn max_abs_residual(&self) -> Rational {
        self.residuals
            .iter()
            .flatten()
            .map(Signed::abs)
            .fold(Rational::zero(), |m, v| if v > m { v } else { m })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCondition {
    pub order: usize,
    pub label: String,
    pub target: Rational,
    pub computed: Rational,
    pub residual: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub nodes_consistent: bool,
    pub conditions: Vec<OrderCondition>,
    /// Largest `p ≤ 3` for which every condition of order `≤ p` is exact.
    pub max_verified_order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub symplectic: SymplecticReport,
    pub order: OrderReport,
}

/// Floating-point view of an explicit symplectic tableau, ready for stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitSprk {
    name: Option<String>,
    sweep: Sweep,
    q_weights: Vec<f64>,
    p_weights: Vec<f64>,
    q_nodes: Vec<f64>,
    p_nodes: Vec<f64>,
}

/// One half-update of an explicit stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubStep {
    /// `Q += h b_i f(P, t + c_i h)`
    Drift(usize),
    /// `P += h B_i g(Q, t + C_i h)`
    Kick(usize),
}

impl ExplicitSprk {
    pub fn builtin(kind: TableauKind) -> Self {
        kind.tableau().to_explicit().expect("built-in tableaux are explicit and symplectic")
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn stages(&self) -> usize {
        self.q_weights.len()
    }

    pub fn sweep(&self) -> Sweep {
        self.sweep
    }

    pub fn q_weight(&self, i: usize) -> f64 {
        self.q_weights[i]
    }

    pub fn p_weight(&self, i: usize) -> f64 {
        self.p_weights[i]
    }

    pub fn q_node(&self, i: usize) -> f64 {
        self.q_nodes[i]
    }

    pub fn p_node(&self, i: usize) -> f64 {
        self.p_nodes[i]
    }

    /// The `2s` half-updates in execution order.
    pub fn substeps(&self) -> impl Iterator<Item = SubStep> + '_ {
        let sweep = self.sweep;
        (0..self.stages()).flat_map(move |i| match sweep {
            Sweep::DriftFirst => [SubStep::Drift(i), SubStep::Kick(i)],
            Sweep::KickFirst => [SubStep::Kick(i), SubStep::Drift(i)],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        rat(n, d)
    }

    #[test]
    fn builtin_weights_match_published_values() {
        let t = builtin_tableau(TableauKind::Sprk3);
        assert_eq!(t.q_weights(), &[r(7, 24), r(3, 4), r(-1, 24)]);
        assert_eq!(t.p_weights(), &[r(2, 3), r(-2, 3), r(1, 1)]);

        let t = builtin_tableau(TableauKind::Sprk4);
        assert_eq!(
            t.q_weights(),
            &[r(7, 48), r(3, 8), r(-1, 48), r(-1, 48), r(3, 8), r(7, 48)]
        );
        assert_eq!(
            t.p_weights(),
            &[r(1, 3), r(-1, 3), r(1, 1), r(-1, 3), r(1, 3), r(0, 1)]
        );

        let t = builtin_tableau(TableauKind::Sprk2);
        assert_eq!(t.q_weights(), &[r(0, 1), r(1, 1)]);
        assert_eq!(t.p_weights(), &[r(1, 2), r(1, 2)]);
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let err = builtin_by_name("rk4").unwrap_err();
        let msg = err.to_string();
        for k in TableauKind::ALL {
            assert!(msg.contains(k.name()), "{msg}");
        }
    }

    #[test]
    fn euler1_is_symplectic_by_hand() {
        let t = builtin_tableau(TableauKind::Euler1);
        let rep = t.check_symplectic();
        assert!(rep.symplectic);
        assert_eq!(rep.residuals, vec![vec![r(0, 1)]]);
        assert_eq!(t.sweep(), Some(Sweep::KickFirst));
    }

    #[test]
    fn tampered_one_stage_is_not_symplectic() {
        let one = || vec![r(1, 1)];
        let t = PrkTableau::new(one(), one(), vec![one()], vec![one()]).unwrap();
        let rep = t.check_symplectic();
        assert!(!rep.symplectic);
        assert_eq!(rep.residuals[0][0], r(1, 1));
        assert_eq!(t.sweep(), None);
    }

    #[test]
    fn euler1_order_two_fails_with_half_residuals() {
        let rep = builtin_tableau(TableauKind::Euler1)
            .check_order_conditions(2)
            .unwrap();
        assert_eq!(rep.max_verified_order, 1);
        let get = |label: &str| rep.conditions.iter().find(|c| c.label == label).unwrap();
        // Kick first: c_1 = A_11 = 1 and C_1 = a_11 = 0.
        assert_eq!(get("sum b_i c_i").computed, r(1, 1));
        assert_eq!(get("sum b_i c_i").residual, r(1, 2));
        assert_eq!(get("sum B_i C_i").computed, r(0, 1));
        assert_eq!(get("sum B_i C_i").residual, r(-1, 2));
    }

    #[test]
    fn drift_first_euler_reports_mirrored_residuals() {
        let t = PrkTableau::explicit(Sweep::DriftFirst, vec![r(1, 1)], vec![r(1, 1)]).unwrap();
        assert!(t.check_symplectic().symplectic);
        let rep = t.check_order_conditions(2).unwrap();
        let get = |label: &str| rep.conditions.iter().find(|c| c.label == label).unwrap();
        assert_eq!(get("sum b_i c_i").residual, r(-1, 2));
        assert_eq!(get("sum B_i C_i").residual, r(1, 2));
    }

    #[test]
    fn node_violation_skips_higher_orders() {
        let base = builtin_tableau(TableauKind::Sprk2);
        let zero = || vec![r(0, 1), r(0, 1)];
        let t = PrkTableau::with_nodes(
            base.q_weights().to_vec(),
            base.p_weights().to_vec(),
            base.q_coeffs().to_vec(),
            base.p_coeffs().to_vec(),
            zero(),
            zero(),
        )
        .unwrap();
        assert!(!t.nodes_consistent());
        let rep = t.check_order_conditions(3).unwrap();
        assert!(!rep.nodes_consistent);
        assert!(rep.conditions.iter().all(|c| c.order == 1));
        assert_eq!(rep.max_verified_order, 1);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("7/24").unwrap(), r(7, 24));
        assert_eq!(parse_rational("-1/24").unwrap(), r(-1, 24));
        assert_eq!(parse_rational(" 3 ").unwrap(), r(3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn stage_count_bounds() {
        assert!(PrkTableau::explicit(Sweep::DriftFirst, vec![], vec![]).is_err());
        let w = vec![r(1, 17); 17];
        assert!(PrkTableau::explicit(Sweep::DriftFirst, w.clone(), w).is_err());
    }

    #[test]
    fn substep_order_follows_sweep() {
        let e = ExplicitSprk::builtin(TableauKind::Euler1);
        assert_eq!(e.substeps().collect::<Vec<_>>(), vec![SubStep::Kick(0), SubStep::Drift(0)]);
        let e = ExplicitSprk::builtin(TableauKind::Sprk2);
        assert_eq!(
            e.substeps().collect::<Vec<_>>(),
            vec![SubStep::Drift(0), SubStep::Kick(0), SubStep::Drift(1), SubStep::Kick(1)]
        );
    }
}
