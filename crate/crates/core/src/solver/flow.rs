//! Explicit gradient flow for the chart Monge-Ampère energy.
//!
//! The flow advances u by
//!
//! ```text
//! u_t = sqrt(1+|x|²) · [ log det_c D²u - log RHS(x, u, Du) ]
//! ```
//!
//! which is energy descent for J_ε. Steps are accepted only when the energy
//! does not increase (beyond a tiny slack), so the time step adapts itself to
//! the explicit stability limit without a CFL formula.

use crate::error::{Error, Result};
use crate::functionals::{eval_jeps_with, eval_jf_with};
use crate::grid::{differentiate, DerivedQuantities, Grid, ScalarField};
use crate::problem::ProblemParams;
use crate::solver::elliptic::{log_residual, Rhs, SolverOptions};
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Time stepping controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Steady state declared when sup |u_t| falls below this.
    pub tol_steady: f64,
    /// Energy may increase per accepted step by at most this slack
    /// (floating-point headroom, not a physical allowance).
    pub energy_slack: f64,
    /// Hard cap on the adaptive step.
    pub dt_max: f64,
    /// Give up when t exceeds this.
    pub t_max: f64,
    pub max_steps: usize,
    /// Record every k-th accepted step in the history (1 = all).
    pub history_stride: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol_steady: 1e-6,
            energy_slack: 1e-8,
            dt_max: 1.0,
            t_max: 1e4,
            max_steps: 2_000_000,
            history_stride: 1,
        }
    }
}

/// One accepted-step record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub t: f64,
    pub j_eps: f64,
    pub sup_grad: f64,
    pub sup_ut: f64,
    pub min_u: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowReport {
    /// True when sup |u_t| reached tol_steady.
    pub steady: bool,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub final_time: f64,
    pub final_sup_ut: f64,
    pub final_residual: f64,
    /// Worst energy increase over all accepted steps (should be <= slack).
    pub max_energy_increase: f64,
    /// Growth-condition ratio sup_s p ∫_s^0 F / (-s)^p for general F flows.
    pub growth_ratio: Option<f64>,
}

/// Flow state; `history` holds one entry per recorded accepted step.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub history: Vec<HistoryEntry>,
}

impl FlowState {
    /// Writes the run history as `t,J_eps,sup_grad,sup_ut,min_u,residual`.
    pub fn dump_history_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "t,J_eps,sup_grad,sup_ut,min_u,residual")?;
        for e in &self.history {
            writeln!(
                f,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.t, e.j_eps, e.sup_grad, e.sup_ut, e.min_u, e.residual
            )?;
        }
        Ok(())
    }
}

/// Nonlinearity driving the flow: the power-law master equation, or a general
/// positive F(u) replacing (ε-u)^{p-1} in the critical setting.
pub enum FlowNonlinearity<'a> {
    Power,
    General(&'a (dyn Fn(f64) -> f64 + Sync)),
}

struct FlowProblem<'a> {
    grid: &'a Arc<Grid>,
    params: &'a ProblemParams,
    nonlinearity: &'a FlowNonlinearity<'a>,
    conf: Vec<f64>,
    opts_newton: SolverOptions,
}

impl FlowProblem<'_> {
    /// Velocity field conf·(log det_c - log RHS) and its monitors.
    fn velocity(
        &self,
        u: &ScalarField,
        d: &DerivedQuantities,
    ) -> Result<(Vec<f64>, f64, f64, f64)> {
        let n = self.grid.n_interior();
        match self.nonlinearity {
            FlowNonlinearity::Power => {
                let res = log_residual(u, d, &Rhs::Standard(self.params), &self.opts_newton)?;
                let mut v = vec![0.0; n];
                let mut sup_ut = 0.0f64;
                for i in 0..n {
                    v[i] = self.conf[i] * res.r[i];
                    sup_ut = sup_ut.max(v[i].abs());
                }
                let sup_grad =
                    (0..n).map(|i| d.ux[i].hypot(d.uy[i])).fold(0.0f64, f64::max);
                Ok((v, sup_ut, res.linf, sup_grad))
            }
            FlowNonlinearity::General(f) => {
                let np = self.params.n as f64 - self.params.p;
                let mut v = vec![0.0; n];
                let mut sup_ut = 0.0f64;
                let mut linf = 0.0f64;
                for i in 0..n {
                    let fi = f(u.values[i]);
                    if fi <= 0.0 || !fi.is_finite() {
                        return Err(Error::Domain(format!(
                            "nonlinearity F(u) = {fi} at node {i}"
                        )));
                    }
                    let rhs_i = self.params.g(self.grid.coords[i])
                        * fi
                        * d.rho2[i].powf(np / 2.0);
                    let l1 = d.eig_min[i].max(self.opts_newton.clamp);
                    let l2 = (d.uxx[i] + d.uyy[i] - d.eig_min[i]).max(self.opts_newton.clamp);
                    let r = (l1 * l2).ln() - rhs_i.ln();
                    linf = linf.max(r.abs());
                    v[i] = self.conf[i] * r;
                    sup_ut = sup_ut.max(v[i].abs());
                }
                let sup_grad =
                    (0..n).map(|i| d.ux[i].hypot(d.uy[i])).fold(0.0f64, f64::max);
                Ok((v, sup_ut, linf, sup_grad))
            }
        }
    }

    fn energy(&self, u: &ScalarField, d: &DerivedQuantities) -> Result<f64> {
        match self.nonlinearity {
            FlowNonlinearity::Power => eval_jeps_with(u, d, self.params),
            FlowNonlinearity::General(f) => eval_jf_with(u, d, self.params, f),
        }
    }
}

/// Initial time step 0.1·Δx² / max_i conf_i·λ_max(H⁻¹): the explicit limit of
/// the linearization at the initial data.
fn initial_dt(grid: &Grid, u: &ScalarField, conf: &[f64]) -> f64 {
    let d = differentiate(u);
    let mut stiff = 1.0f64;
    for i in 0..grid.n_interior() {
        let l1 = d.eig_min[i].max(1e-6);
        stiff = stiff.max(conf[i] / l1);
    }
    0.1 * grid.dx * grid.dx / stiff
}

/// Runs the gradient flow from `u0` (or the scaled default guess) until
/// steady state, t_max, or the step budget. Fails with `FlowStall` when the
/// accepted step underflows 1e-14.
pub fn flow_run(
    grid: &Arc<Grid>,
    params: &ProblemParams,
    u0: &ScalarField,
    nonlinearity: FlowNonlinearity,
    opts: &FlowOptions,
) -> Result<(FlowState, FlowReport)> {
    params.validate()?;
    if !u0.is_admissible() {
        return Err(Error::Domain("flow initial data must be strictly negative".into()));
    }
    if matches!(nonlinearity, FlowNonlinearity::Power) && params.p == 0.0 {
        return Err(Error::InvalidConfig(
            "the power-law flow needs p != 0 for its energy".into(),
        ));
    }
    let conf: Vec<f64> = grid
        .coords
        .iter()
        .map(|&[x, y]| (1.0 + x * x + y * y).sqrt())
        .collect();
    let problem = FlowProblem {
        grid,
        params,
        nonlinearity: &nonlinearity,
        conf,
        opts_newton: SolverOptions::default(),
    };
    let mut u = u0.clone();
    let d0 = differentiate(&u);
    let mut energy = problem.energy(&u, &d0)?;
    let mut dt = initial_dt(grid, &u, &problem.conf);
    let mut t = 0.0;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut history = Vec::new();
    let mut max_energy_increase = 0.0f64;
    let mut steady = false;
    let (mut vel, mut sup_ut, mut residual, mut sup_grad) = problem.velocity(&u, &d0)?;
    history.push(HistoryEntry {
        t,
        j_eps: energy,
        sup_grad,
        sup_ut,
        min_u: u.min(),
        residual,
    });
    loop {
        if sup_ut <= opts.tol_steady {
            steady = true;
            break;
        }
        if t >= opts.t_max || accepted + rejected >= opts.max_steps {
            break;
        }
        if dt < 1e-14 {
            return Err(Error::FlowStall(format!(
                "time step underflow at t = {t} (sup u_t = {sup_ut:.3e})"
            )));
        }
        let trial_vals: Vec<f64> =
            u.values.iter().zip(&vel).map(|(v, w)| v + dt * w).collect();
        let trial = ScalarField::from_values(grid.clone(), trial_vals);
        let td = differentiate(&trial);
        let trial_energy = if trial.is_admissible() {
            problem.energy(&trial, &td).ok()
        } else {
            None
        };
        match trial_energy {
            Some(e_new) if e_new <= energy + opts.energy_slack => {
                max_energy_increase = max_energy_increase.max(e_new - energy);
                t += dt;
                u = trial;
                energy = e_new;
                accepted += 1;
                let out = problem.velocity(&u, &td)?;
                vel = out.0;
                sup_ut = out.1;
                residual = out.2;
                sup_grad = out.3;
                if accepted % opts.history_stride == 0 {
                    history.push(HistoryEntry {
                        t,
                        j_eps: energy,
                        sup_grad,
                        sup_ut,
                        min_u: u.min(),
                        residual,
                    });
                }
                dt = (dt * 1.2).min(opts.dt_max);
            }
            _ => {
                rejected += 1;
                dt *= 0.5;
            }
        }
    }
    let growth_ratio = match nonlinearity {
        FlowNonlinearity::General(f) => Some(growth_ratio(f, u.min(), params.p)),
        FlowNonlinearity::Power => None,
    };
    let report = FlowReport {
        steady,
        steps_accepted: accepted,
        steps_rejected: rejected,
        final_time: t,
        final_sup_ut: sup_ut,
        final_residual: residual,
        max_energy_increase,
        growth_ratio,
    };
    Ok((FlowState { u, t, dt, history }, report))
}

/// Growth-condition monitor for general F: sup over the run's value range of
/// p ∫_s^0 F(σ) dσ / (-s)^p. Subcritical growth keeps this bounded.
fn growth_ratio(f: &(dyn Fn(f64) -> f64 + Sync), min_u: f64, p: f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 1..=64 {
        let s = min_u * k as f64 / 64.0;
        let acc = crate::functionals::gauss_integral(&|x| f(x), s, 0.0);
        worst = worst.max(p * acc / (-s).powf(p));
    }
    worst
}
