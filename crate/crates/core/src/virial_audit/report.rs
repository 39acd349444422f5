use std::collections::BTreeMap;

use serde::Serialize;

use super::schrodinger::{
    attribute_gap, theta_ddot_commutator, theta_dot_commutator, theta_s_dot_formula, theta_sampled,
    GapAttribution, VirialExpansion, VirialTerms,
};
use super::util::{convergence_order, first_difference, second_difference};
use crate::error::Result;
use crate::fields::ScalarField;
use crate::flows::{CayleyStepper, SolverOptions};
use crate::multipliers::{sample, AuxMultiplier, RadialProfile};
use crate::operators::Hamiltonian;

/// Artifact version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Named values per grid, residuals kept apart from the terms.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub identity: String,
    pub scenario: String,
    pub version: String,
    pub grids: Vec<usize>,
    pub spacings: Vec<f64>,
    pub terms: BTreeMap<String, Vec<f64>>,
    pub residuals: BTreeMap<String, Vec<f64>>,
    pub slopes: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl AuditReport {
    pub fn new(identity: &str, scenario: &str) -> Self {
        Self {
            identity: identity.into(),
            scenario: scenario.into(),
            version: VERSION.into(),
            grids: Vec::new(),
            spacings: Vec::new(),
            terms: BTreeMap::new(),
            residuals: BTreeMap::new(),
            slopes: BTreeMap::new(),
            notes: Vec::new(),
            pass: false,
        }
    }

    pub fn push_grid(&mut self, n: usize, h: f64) {
        self.grids.push(n);
        self.spacings.push(h);
    }

    pub fn term(&mut self, name: &str, v: f64) {
        self.terms.entry(name.into()).or_default().push(v);
    }

    pub fn residual(&mut self, name: &str, v: f64) {
        self.residuals.entry(name.into()).or_default().push(v);
    }

    /// Fit the order of every residual sequence against the grid spacings.
    pub fn fit_slopes(&mut self) {
        if self.spacings.len() < 2 {
            return;
        }
        for (k, v) in &self.residuals {
            if v.len() == self.spacings.len() {
                self.slopes.insert(k.clone(), convergence_order(&self.spacings, v));
            }
        }
    }

    /// Rows `grid,h,<name>...` over terms and residuals.
    pub fn to_csv(&self) -> String {
        let mut cols: Vec<(&String, &Vec<f64>)> = self.terms.iter().collect();
        cols.extend(self.residuals.iter());
        let mut s = String::from("grid,h");
        for (k, _) in &cols {
            s.push(',');
            s.push_str(k);
        }
        s.push('\n');
        for (r, (n, h)) in self.grids.iter().zip(&self.spacings).enumerate() {
            s.push_str(&format!("{n},{h}"));
            for (_, v) in &cols {
                match v.get(r) {
                    Some(x) => s.push_str(&format!(",{x:.15e}")),
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// The three evaluations of `Θ̈` (and of `Θ̇`) at one snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct ThreeWay {
    pub t: f64,
    pub theta: f64,
    pub fd: f64,
    pub commutator: f64,
    pub expanded: VirialTerms,
    pub gap: GapAttribution,
    pub theta_dot_fd: f64,
    pub theta_dot_commutator: f64,
    pub theta_dot_formula: f64,
    pub max_solver_residual: f64,
}

impl ThreeWay {
    pub fn residual_commutator_vs_fd(&self) -> f64 {
        (self.commutator - self.fd).abs()
    }

    pub fn residual_expanded_vs_commutator(&self) -> f64 {
        (self.expanded.total - self.commutator).abs()
    }
}

/// Run Crank–Nicolson from `u0` to step `n0 + 1` and evaluate `Θ̈` at step `n0`
/// by second difference, by commutator, and by the expanded identity.
pub fn three_way(
    h: &Hamiltonian,
    u0: &ScalarField,
    phi: &RadialProfile,
    aux: Option<&AuxMultiplier>,
    dt: f64,
    n0: usize,
    solver: SolverOptions,
) -> Result<ThreeWay> {
    let n0 = n0.max(1);
    let stepper = CayleyStepper::new(h, dt, solver)?;
    let phi_field = sample(*h.grid(), phi);
    let mut series = vec![theta_sampled(u0, &phi_field)];
    let mut u = u0.clone();
    let mut at = None;
    let mut max_res: f64 = 0.0;
    for n in 1..=n0 + 1 {
        let (next, st) = stepper.step(&u)?;
        max_res = max_res.max(st.residual);
        u = next;
        series.push(theta_sampled(&u, &phi_field));
        if n == n0 {
            at = Some(u.clone());
        }
    }
    let u = at.expect("n0 ≥ 1");
    let expanded = VirialExpansion::new(h, phi)?.terms(&u, aux)?;
    let commutator = theta_ddot_commutator(&u, &phi_field, h);
    Ok(ThreeWay {
        t: n0 as f64 * dt,
        theta: series[n0],
        fd: second_difference(&series, dt, n0).expect("interior"),
        commutator,
        gap: attribute_gap(&expanded, commutator),
        expanded,
        theta_dot_fd: first_difference(&series, dt, n0).expect("interior"),
        theta_dot_commutator: theta_dot_commutator(&u, &phi_field, h),
        theta_dot_formula: theta_s_dot_formula(&u, phi, h)?,
        max_solver_residual: max_res,
    })
}

/// Record one grid's three-way values into `report`.
pub fn record_three_way(report: &mut AuditReport, n: usize, hspacing: f64, tw: &ThreeWay) {
    report.push_grid(n, hspacing);
    report.term("fd", tw.fd);
    report.term("commutator", tw.commutator);
    report.term("expanded", tw.expanded.total);
    for (name, v) in tw.expanded.named() {
        report.term(name, v);
    }
    if let Some(aux) = tw.expanded.aux {
        report.term("combined_printed", aux.combined_printed);
        report.term("combined_corrected", aux.combined_corrected);
        report.term("inpart_printed", aux.inpart_printed);
    }
    if let Some(q) = tw.expanded.origin_charge {
        report.term("origin_charge", q);
    }
    report.residual("commutator_vs_fd", tw.residual_commutator_vs_fd());
    report.residual("expanded_vs_commutator", tw.residual_expanded_vs_commutator());
    report.residual("theta_dot_formula_vs_commutator", (tw.theta_dot_formula - tw.theta_dot_commutator).abs());
    if let Some(aux) = tw.expanded.aux {
        report.residual("combined_corrected_vs_commutator", (aux.combined_corrected - tw.commutator).abs());
    }
    if let Some(iso) = &tw.gap.isolated {
        report.notes.push(format!("N = {n}: expanded-vs-commutator gap isolated to `{iso}`"));
    }
}
