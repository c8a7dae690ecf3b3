//! Damped Newton solver for the chart Monge-Ampère Dirichlet problem and the
//! continuation schemes built on it.
//!
//! The Newton iteration acts on the logarithmic residual
//! R_i = log det_c(D²u)_i - log RHS_i(u), where det_c clamps the Hessian
//! eigenvalues from below so concave trial iterates produce a finite residual
//! instead of a crash. The linearization uses the same clamped decomposition,
//! so Jacobian and residual stay algebraically consistent.

use crate::error::{Error, Result};
use crate::functionals::{eval_jeps, rayleigh_lambda, FunctionalReport};
use crate::grid::{differentiate, DerivedQuantities, Grid, ScalarField};
use crate::problem::{rhs_eval, rhs_log_gradient, ProblemParams};
use crate::solver::linsys::BandMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

/// Newton iteration controls. The defaults are the tolerances frozen into the
/// acceptance tests; change them only for experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence on the sup norm of the log-residual.
    pub tol_newton: f64,
    /// A node counts as a convexity violation when its smallest Hessian
    /// eigenvalue falls below this (slightly negative) threshold.
    pub tol_convex: f64,
    pub max_iters: usize,
    /// Eigenvalue clamp inside log det.
    pub clamp: f64,
    /// Smallest admissible line-search step.
    pub step_min: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_newton: 1e-9,
            tol_convex: -1e-8,
            max_iters: 200,
            clamp: 1e-10,
            step_min: 1e-12,
        }
    }
}

/// Outcome of one Newton solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Final sup norm of the log-residual.
    pub residual: f64,
    /// Nodes whose smallest Hessian eigenvalue is below tol_convex.
    pub convexity_violations: usize,
    /// Set when the damped step shrank below step_min without progress.
    pub line_search_failed: bool,
    /// Residual sup norm after each iteration.
    pub residual_history: Vec<f64>,
    pub functionals: Option<FunctionalReport>,
    /// Wall time is observational only and excluded from serialized reports
    /// so that report files are bit-reproducible.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Right-hand side family the Newton core can linearize.
pub(crate) enum Rhs<'a> {
    /// The master equation g (ε-u)^{p-1} ρ^{n-q}.
    Standard(&'a ProblemParams),
    /// Frozen per-node values F_i (inner eigenvalue iteration).
    Fixed(&'a [f64]),
    /// Continuation family g (1-su)^{p-1} ρ^{n-p} at parameter s.
    Continuation { params: &'a ProblemParams, s: f64 },
}

impl Rhs<'_> {
    fn eval(&self, i: usize, grid: &Grid, u: f64, du: [f64; 2]) -> Result<f64> {
        let x = grid.coords[i];
        match self {
            Rhs::Standard(p) => rhs_eval(x, u, du, p),
            Rhs::Fixed(v) => Ok(v[i]),
            Rhs::Continuation { params, s } => {
                let slack = 1.0 - s * u;
                if slack <= 0.0 {
                    return Err(Error::Domain(format!("1 - s u <= 0 at node {i}")));
                }
                let ustar = x[0] * du[0] + x[1] * du[1] - u;
                let rho2 = du[0] * du[0] + du[1] * du[1] + ustar * ustar;
                if rho2 <= 0.0 {
                    return Err(Error::Domain(format!("rho^2 = 0 at node {i}")));
                }
                Ok(params.g(x)
                    * slack.powf(params.p - 1.0)
                    * rho2.powf((params.n as f64 - params.p) / 2.0))
            }
        }
    }

    /// (∂/∂u, ∂/∂Du) of log RHS.
    fn log_gradient(&self, i: usize, grid: &Grid, u: f64, du: [f64; 2]) -> (f64, [f64; 2]) {
        let x = grid.coords[i];
        match self {
            Rhs::Standard(p) => rhs_log_gradient(x, u, du, p),
            Rhs::Fixed(_) => (0.0, [0.0, 0.0]),
            Rhs::Continuation { params, s } => {
                let slack = 1.0 - s * u;
                let ustar = x[0] * du[0] + x[1] * du[1] - u;
                let rho2 = du[0] * du[0] + du[1] * du[1] + ustar * ustar;
                let np = params.n as f64 - params.p;
                let d_u = -s * (params.p - 1.0) / slack - np * ustar / rho2;
                let d_dux = np * (du[0] + ustar * x[0]) / rho2;
                let d_duy = np * (du[1] + ustar * x[1]) / rho2;
                (d_u, [d_dux, d_duy])
            }
        }
    }
}

/// Clamped spectral decomposition of a symmetric 2x2 Hessian.
struct ClampedHessian {
    /// Clamped eigenvalues, ascending.
    lam: [f64; 2],
    /// Raw (unclamped) eigenvalues, ascending.
    raw: [f64; 2],
    /// Columns are the eigenvectors.
    vecs: [[f64; 2]; 2],
}

fn clamp_hessian(uxx: f64, uxy: f64, uyy: f64, clamp: f64) -> ClampedHessian {
    let mid = 0.5 * (uxx + uyy);
    let half_gap = (0.25 * (uxx - uyy) * (uxx - uyy) + uxy * uxy).sqrt();
    let (l1, l2) = (mid - half_gap, mid + half_gap);
    // Eigenvector of l2: pick the better-conditioned column of (H - l1 I).
    let (v2x, v2y) = if (uxx - l1).abs() >= (uyy - l1).abs() {
        (uxx - l1, uxy)
    } else {
        (uxy, uyy - l1)
    };
    let norm = (v2x * v2x + v2y * v2y).sqrt();
    let v2 = if norm > 0.0 { [v2x / norm, v2y / norm] } else { [0.0, 1.0] };
    let v1 = [-v2[1], v2[0]];
    ClampedHessian {
        lam: [l1.max(clamp), l2.max(clamp)],
        raw: [l1, l2],
        vecs: [v1, v2],
    }
}

/// Softening floor of the Newton residual: below this eigenvalue the log is
/// continued linearly (slope 1/SOFT_FLOOR), giving a consistent descent
/// direction out of concave configurations. The reported residual still uses
/// the hard clamp from `SolverOptions::clamp`.
const SOFT_FLOOR: f64 = 1e-4;

/// Linear continuation of ln λ below the softening floor.
fn soft_log(lam: f64) -> f64 {
    if lam >= SOFT_FLOOR {
        lam.ln()
    } else {
        SOFT_FLOOR.ln() + (lam - SOFT_FLOOR) / SOFT_FLOOR
    }
}

pub(crate) struct ResidualData {
    /// Spec residual per node (hard eigenvalue clamp inside log det).
    pub r: Vec<f64>,
    pub linf: f64,
    /// Softened residual per node; the Newton iteration and line search act
    /// on this one so that the Jacobian matches exactly.
    pub r_soft: Vec<f64>,
    pub l2_soft: f64,
    pub violations: usize,
}

/// Log-residual of a trial field; fails only when the RHS itself is
/// inadmissible at some node (e.g. ε - u <= 0), never on concavity.
pub(crate) fn log_residual(
    u: &ScalarField,
    d: &DerivedQuantities,
    rhs: &Rhs,
    opts: &SolverOptions,
) -> Result<ResidualData> {
    let grid = &u.grid;
    let n = grid.n_interior();
    let mut r = vec![0.0; n];
    let mut r_soft = vec![0.0; n];
    let mut linf = 0.0f64;
    let mut l2_soft = 0.0;
    let mut violations = 0;
    for i in 0..n {
        let ch = clamp_hessian(d.uxx[i], d.uxy[i], d.uyy[i], opts.clamp);
        if d.eig_min[i] < opts.tol_convex {
            violations += 1;
        }
        let rhs_i = rhs.eval(i, grid, u.values[i], [d.ux[i], d.uy[i]])?;
        if rhs_i <= 0.0 || !rhs_i.is_finite() {
            return Err(Error::Domain(format!("RHS = {rhs_i} at node {i}")));
        }
        let log_rhs = rhs_i.ln();
        r[i] = (ch.lam[0] * ch.lam[1]).ln() - log_rhs;
        r_soft[i] = soft_log(ch.raw[0]) + soft_log(ch.raw[1]) - log_rhs;
        linf = linf.max(r[i].abs());
        l2_soft += r_soft[i] * r_soft[i];
    }
    Ok(ResidualData { r, linf, r_soft, l2_soft: (l2_soft / n as f64).sqrt(), violations })
}

fn assemble_jacobian(
    u: &ScalarField,
    d: &DerivedQuantities,
    rhs: &Rhs,
    opts: &SolverOptions,
) -> BandMatrix {
    let grid = &u.grid;
    let n = grid.n_interior();
    let bw = grid.bandwidth();
    let mut jac = BandMatrix::new(n, bw, bw);
    for i in 0..n {
        let ch = clamp_hessian(d.uxx[i], d.uxy[i], d.uyy[i], opts.clamp);
        // d soft_logdet / dH = Σ_k f'(λ_k) v_k v_kᵀ, with f' = 1/max(λ, floor)
        // matching the softened residual exactly.
        let mut m = [[0.0f64; 2]; 2];
        for k in 0..2 {
            let v = ch.vecs[k];
            let w = 1.0 / ch.raw[k].max(SOFT_FLOOR);
            m[0][0] += w * v[0] * v[0];
            m[0][1] += w * v[0] * v[1];
            m[1][1] += w * v[1] * v[1];
        }
        for &(c, w) in &grid.rows_uxx[i] {
            jac.add(i, c as usize, m[0][0] * w);
        }
        for &(c, w) in &grid.rows_uyy[i] {
            jac.add(i, c as usize, m[1][1] * w);
        }
        for &(c, w) in &grid.rows_uxy[i] {
            jac.add(i, c as usize, 2.0 * m[0][1] * w);
        }
        let (d_u, d_du) = rhs.log_gradient(i, grid, u.values[i], [d.ux[i], d.uy[i]]);
        jac.add(i, i, -d_u);
        for &(c, w) in &grid.rows_ux[i] {
            jac.add(i, c as usize, -d_du[0] * w);
        }
        for &(c, w) in &grid.rows_uy[i] {
            jac.add(i, c as usize, -d_du[1] * w);
        }
    }
    jac
}

/// Damped Newton iteration shared by all right-hand side families.
pub(crate) fn newton_core(
    rhs: &Rhs,
    u0: &ScalarField,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveReport)> {
    let start = Instant::now();
    let mut u = u0.clone();
    let mut d = differentiate(&u);
    let mut res = log_residual(&u, &d, rhs, opts)?;
    let mut history = vec![res.linf];
    let mut line_search_failed = false;
    let mut iterations = 0;
    while res.linf > opts.tol_newton && iterations < opts.max_iters {
        iterations += 1;
        let jac = assemble_jacobian(&u, &d, rhs, opts);
        let neg_r: Vec<f64> = res.r_soft.iter().map(|v| -v).collect();
        let dir = jac.solve(&neg_r)?;
        // Backtracking on the mean-square softened residual.
        let mut t = 1.0;
        let mut accepted = None;
        while t >= opts.step_min {
            let trial_vals: Vec<f64> =
                u.values.iter().zip(&dir).map(|(v, s)| v + t * s).collect();
            let trial = ScalarField::from_values(u.grid.clone(), trial_vals);
            let td = differentiate(&trial);
            match log_residual(&trial, &td, rhs, opts) {
                Ok(tr) if tr.l2_soft <= res.l2_soft * (1.0 - 1e-4 * t) => {
                    accepted = Some((trial, td, tr));
                    break;
                }
                _ => t *= 0.5,
            }
        }
        match accepted {
            Some((trial, td, tr)) => {
                u = trial;
                d = td;
                res = tr;
            }
            None => {
                line_search_failed = true;
                break;
            }
        }
        history.push(res.linf);
    }
    let converged = res.linf <= opts.tol_newton && res.violations == 0;
    let report = SolveReport {
        converged,
        iterations,
        residual: res.linf,
        convexity_violations: res.violations,
        line_search_failed,
        residual_history: history,
        functionals: None,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((u, report))
}

/// Admissible initial guess vanishing on the boundary: the discrete torsion
/// function (Δu = 2 with zero trace, solved with the grid's own stencils),
/// rescaled so the log-residual is balanced at the deepest node. On a disk
/// this is exactly the paraboloid (|x|²-R²)/2.
pub fn default_initial_guess(grid: &Arc<Grid>, params: &ProblemParams) -> ScalarField {
    let n = grid.n_interior();
    let bw = grid.bandwidth();
    let mut lap = BandMatrix::new(n, bw, bw);
    for i in 0..n {
        for &(c, w) in &grid.rows_uxx[i] {
            lap.add(i, c as usize, w);
        }
        for &(c, w) in &grid.rows_uyy[i] {
            lap.add(i, c as usize, w);
        }
    }
    let vals = lap
        .solve(&vec![2.0; n])
        .expect("Shortley-Weller Laplacian is an M-matrix, hence regular");
    let shape = ScalarField::from_values(grid.clone(), vals);
    debug_assert!(shape.is_admissible());
    // One-dimensional balance of log det(m·D²q) against log RHS(m·q) at the
    // deepest node; bisection over log m when the balance changes sign.
    let d = differentiate(&shape);
    let i0 = (0..n)
        .min_by(|&a, &b| shape.values[a].total_cmp(&shape.values[b]))
        .unwrap();
    let rhs = Rhs::Standard(params);
    let balance = |m: f64| -> f64 {
        let detc = (m * m * d.det[i0]).max(1e-300);
        match rhs.eval(i0, grid, m * shape.values[i0], [m * d.ux[i0], m * d.uy[i0]]) {
            Ok(v) if v > 0.0 => detc.ln() - v.ln(),
            _ => f64::NAN,
        }
    };
    let mut lo = -20.0f64;
    let mut hi = 20.0f64;
    let (blo, bhi) = (balance(lo.exp()), balance(hi.exp()));
    let m = if blo.is_finite() && bhi.is_finite() && blo * bhi < 0.0 {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if balance(mid.exp()).is_sign_negative() == blo.is_sign_negative() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    } else {
        1.0
    };
    shape.scaled(m)
}

/// Scales an admissible field until J_ε < 0, as the descent flow requires.
/// Shrinking works in every regime with q > p because the negative density
/// term dominates at small amplitude.
pub fn ensure_negative_energy(u: &ScalarField, params: &ProblemParams) -> Result<ScalarField> {
    let mut field = u.clone();
    for _ in 0..60 {
        if eval_jeps(&field, params)? < 0.0 {
            return Ok(field);
        }
        field = field.scaled(0.5);
    }
    Err(Error::Calibration(
        "could not reach J_eps < 0 by shrinking the initial field".into(),
    ))
}

/// Solves det D²u = g (ε-u)^{p-1} ρ^{n-q} with zero boundary data by damped
/// Newton, from `u0` or the default initial guess.
pub fn newton_solve(
    grid: &Arc<Grid>,
    params: &ProblemParams,
    u0: Option<&ScalarField>,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveReport)> {
    params.validate()?;
    if params.n != 3 {
        return Err(Error::InvalidConfig(
            "grid solves are for n = 3 (two-dimensional charts)".into(),
        ));
    }
    let guess = match u0 {
        Some(f) => f.clone(),
        None => default_initial_guess(grid, params),
    };
    if !guess.is_admissible() {
        return Err(Error::Domain("initial guess must be strictly negative".into()));
    }
    let (u, mut report) = newton_core(&Rhs::Standard(params), &guess, opts)?;
    if report.converged {
        report.functionals = FunctionalReport::evaluate(&u, params).ok();
    }
    Ok((u, report))
}

/// Solves det D²u = F with frozen per-node values F (no dependence on u).
/// Used by the eigenvalue iteration and available for experiments.
pub fn newton_solve_fixed_rhs(
    grid: &Arc<Grid>,
    values: &[f64],
    u0: &ScalarField,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveReport)> {
    if values.len() != grid.n_interior() {
        return Err(Error::InvalidConfig("fixed RHS length mismatch".into()));
    }
    if values.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidConfig("fixed RHS must be strictly positive".into()));
    }
    newton_core(&Rhs::Fixed(values), u0, opts)
}

/// Regularization continuation: solves at each ε in `eps_values` (descending),
/// warm-starting from the previous solution. Stops at the first failure and
/// returns the prefix solved so far.
pub fn eps_continuation(
    grid: &Arc<Grid>,
    params: &ProblemParams,
    eps_values: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<(f64, ScalarField, SolveReport)>> {
    if eps_values.is_empty() {
        return Err(Error::InvalidConfig("eps schedule is empty".into()));
    }
    if eps_values.windows(2).any(|w| w[1] >= w[0]) || eps_values.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidConfig(
            "eps schedule must be strictly decreasing and positive".into(),
        ));
    }
    let mut out = Vec::new();
    let mut warm: Option<ScalarField> = None;
    for &eps in eps_values {
        let step = ProblemParams { eps, ..params.clone() };
        let (u, report) = newton_solve(grid, &step, warm.as_ref(), opts)?;
        let converged = report.converged;
        out.push((eps, u.clone(), report));
        if !converged {
            break;
        }
        warm = Some(u);
    }
    Ok(out)
}

/// Results of the eigenvalue fixed-point iteration for p = q.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenReport {
    pub lambda: f64,
    pub lambda_history: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
}

/// Solves the eigenvalue problem det D²u = λ g (-u)^{p-1} ρ^{n-p} for p = q
/// by a normalized inverse-power iteration: freeze the right-hand side at the
/// current iterate and Rayleigh value, solve the fixed-RHS Monge-Ampère
/// problem, renormalize to sup norm one.
pub fn eigen_solve(
    grid: &Arc<Grid>,
    params: &ProblemParams,
    u0: Option<&ScalarField>,
    opts: &SolverOptions,
) -> Result<(f64, ScalarField, EigenReport)> {
    params.validate()?;
    if params.p != params.q || params.p < 1.0 {
        return Err(Error::InvalidRegime(format!(
            "eigen solve requires p = q >= 1, got p = {}, q = {}",
            params.p, params.q
        )));
    }
    let mut u = match u0 {
        Some(f) => f.clone(),
        None => default_initial_guess(grid, params),
    };
    if !u.is_admissible() {
        return Err(Error::Domain("initial guess must be strictly negative".into()));
    }
    u = u.scaled(1.0 / u.linf());
    let mut lambda = rayleigh_lambda(&u, params)?;
    let mut history = vec![lambda];
    let tol_lambda = 1e-8;
    let mut converged = false;
    let mut outer = 0;
    let np = params.n as f64 - params.p;
    while outer < 100 {
        outer += 1;
        let d = differentiate(&u);
        let mut fixed = vec![0.0; grid.n_interior()];
        for i in 0..grid.n_interior() {
            fixed[i] = lambda
                * params.g(grid.coords[i])
                * (-u.values[i]).powf(params.p - 1.0)
                * d.rho2[i].powf(np / 2.0);
        }
        let (v, inner) = newton_core(&Rhs::Fixed(&fixed), &u, opts)?;
        if !inner.converged {
            return Err(Error::NonConvergence(format!(
                "inner Monge-Ampère solve failed at outer iteration {outer} \
                 (residual {:.3e})",
                inner.residual
            )));
        }
        u = v.scaled(1.0 / v.linf());
        let next = rayleigh_lambda(&u, params)?;
        let delta = (next - lambda).abs();
        lambda = next;
        history.push(lambda);
        if delta < tol_lambda {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(
            "eigen iteration did not settle within 100 outer iterations".into(),
        ));
    }
    let report =
        EigenReport { lambda, lambda_history: history, outer_iterations: outer, converged };
    Ok((lambda, u, report))
}

/// One sample of the s-continuation branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationSample {
    pub s: f64,
    pub sup_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub samples: Vec<ContinuationSample>,
    /// Extrapolated blow-up parameter S from the reciprocal sup norms of the
    /// last solved samples; S^{p-1} estimates the principal eigenvalue.
    pub s_critical: Option<f64>,
}

/// Traces det D²u = g (1-su)^{p-1} ρ^{n-p} along increasing s >= 0, warm
/// starting each step. The sup norm grows toward the blow-up parameter S;
/// the report extrapolates S from the reciprocal norms.
pub fn s_continuation(
    grid: &Arc<Grid>,
    params: &ProblemParams,
    s_values: &[f64],
    opts: &SolverOptions,
) -> Result<(ContinuationReport, Vec<ScalarField>)> {
    params.validate()?;
    if params.p != params.q || params.p <= 1.0 {
        return Err(Error::InvalidRegime(
            "s-continuation requires p = q > 1".into(),
        ));
    }
    if s_values.is_empty() || s_values.windows(2).any(|w| w[1] <= w[0]) || s_values[0] < 0.0 {
        return Err(Error::InvalidConfig(
            "s schedule must be nonnegative and strictly increasing".into(),
        ));
    }
    let mut samples = Vec::new();
    let mut fields = Vec::new();
    let mut warm: Option<ScalarField> = None;
    for &s in s_values {
        let rhs = Rhs::Continuation { params, s };
        let guess = match &warm {
            Some(f) => f.clone(),
            None => default_initial_guess(
                grid,
                // The s = 0 member has the algebra of a (p=1, q=p) problem.
                &ProblemParams {
                    p: 1.0,
                    q: params.p,
                    eps: 0.0,
                    ..params.clone()
                },
            ),
        };
        let (u, report) = newton_core(&rhs, &guess, opts)?;
        samples.push(ContinuationSample {
            s,
            sup_norm: u.linf(),
            converged: report.converged,
        });
        if !report.converged {
            break;
        }
        warm = Some(u.clone());
        fields.push(u);
    }
    // Fit 1/‖u_s‖ ≈ β (S - s) through the last few converged samples.
    let good: Vec<&ContinuationSample> =
        samples.iter().filter(|s| s.converged).collect();
    let s_critical = if good.len() >= 3 {
        let tail = &good[good.len() - 3.min(good.len())..];
        let k = tail.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for smp in tail {
            let y = 1.0 / smp.sup_norm;
            sx += smp.s;
            sy += y;
            sxx += smp.s * smp.s;
            sxy += smp.s * y;
        }
        let beta = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        let alpha = (sy - beta * sx) / k;
        if beta < 0.0 {
            Some(-alpha / beta)
        } else {
            None
        }
    } else {
        None
    };
    Ok((ContinuationReport { samples, s_critical }, fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::grid::build_grid;
    use crate::oracle::{radial_eigen, radial_solve, RadialOptions};

    fn disk(n: usize) -> Arc<Grid> {
        build_grid(ConvexDomain::disk(1.0).unwrap(), n).unwrap()
    }

    /// Golden case n=3, p=1, q=3, g=1 on the unit disk: u = (|x|²-1)/2.
    #[test]
    fn golden_paraboloid() {
        let grid = disk(65);
        let params = ProblemParams::constant_density(3, 1.0, 3.0, 0.0, 1.0).unwrap();
        let opts = SolverOptions::default();
        let (u, report) = newton_solve(&grid, &params, None, &opts).unwrap();
        assert!(report.converged, "residual {}", report.residual);
        let exact =
            ScalarField::from_fn(grid.clone(), |x| (x[0] * x[0] + x[1] * x[1] - 1.0) / 2.0);
        let err = u.linf_diff(&exact);
        assert!(err < 2e-3, "L_inf error {err}");
        assert_eq!(report.convexity_violations, 0);
    }

    /// Convergence under refinement at roughly second order, measured on a
    /// non-quadratic solution (the golden paraboloid is reproduced exactly by
    /// the stencils, so it cannot measure an order).
    #[test]
    fn refinement_order_vs_oracle() {
        let params = ProblemParams::constant_density(3, 0.0, 3.0, 0.1, 1.0).unwrap();
        let opts = SolverOptions::default();
        let prof = radial_solve(3, 0.0, 3.0, 0.1, |_| 1.0, 1.0, &RadialOptions::default())
            .unwrap();
        let mut errs = Vec::new();
        for &n in &[33usize, 65] {
            let grid = disk(n);
            let (u, report) = newton_solve(&grid, &params, None, &opts).unwrap();
            assert!(report.converged);
            let mut worst = 0.0f64;
            for i in 0..grid.n_interior() {
                let r = (grid.coords[i][0].powi(2) + grid.coords[i][1].powi(2)).sqrt();
                worst = worst.max((u.values[i] - prof.sample(r)).abs());
            }
            errs.push(worst);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.5, "observed order {order} from errors {errs:?}");
    }

    /// Independence from the initial guess (uniqueness in the subcritical
    /// regime): three different admissible starts land on the same solution.
    #[test]
    fn initial_data_independence() {
        let grid = disk(49);
        let params = ProblemParams::constant_density(3, 1.0, 4.0, 0.0, 1.0).unwrap();
        let opts = SolverOptions::default();
        // All starts vanish on the boundary, as the zero-trace stencils
        // assume.
        let starts = [
            default_initial_guess(&grid, &params),
            ScalarField::from_fn(grid.clone(), |x| {
                0.2 * (x[0] * x[0] + x[1] * x[1] - 1.0)
            }),
            ScalarField::from_fn(grid.clone(), |x| {
                3.0 * ((x[0] * x[0] + x[1] * x[1]).powi(2) - 1.0) / 4.0
            }),
        ];
        let mut sols = Vec::new();
        for s in &starts {
            let (u, report) = newton_solve(&grid, &params, Some(s), &opts).unwrap();
            assert!(report.converged);
            sols.push(u);
        }
        assert!(sols[0].linf_diff(&sols[1]) < 1e-8);
        assert!(sols[0].linf_diff(&sols[2]) < 1e-8);
    }

    /// Singular regime p=0, q=3 against the radial oracle.
    #[test]
    fn singular_solution_matches_oracle() {
        let grid = disk(97);
        let params = ProblemParams::constant_density(3, 0.0, 3.0, 0.1, 1.0).unwrap();
        let opts = SolverOptions::default();
        let (u, report) = newton_solve(&grid, &params, None, &opts).unwrap();
        assert!(report.converged);
        let prof = radial_solve(3, 0.0, 3.0, 0.1, |_| 1.0, 1.0, &RadialOptions::default())
            .unwrap();
        let mut worst = 0.0f64;
        for i in 0..grid.n_interior() {
            let r = (grid.coords[i][0].powi(2) + grid.coords[i][1].powi(2)).sqrt();
            worst = worst.max((u.values[i] - prof.sample(r)).abs());
        }
        assert!(worst < 3e-3, "PDE vs oracle {worst}");
    }

    /// ε-continuation produces monotonically deepening solutions.
    #[test]
    fn eps_continuation_monotone() {
        let grid = disk(49);
        let params = ProblemParams::constant_density(3, 0.0, 3.0, 0.1, 1.0).unwrap();
        let opts = SolverOptions::default();
        let out =
            eps_continuation(&grid, &params, &[0.1, 0.05, 0.02, 0.01], &opts).unwrap();
        assert_eq!(out.len(), 4);
        for w in out.windows(2) {
            assert!(w[1].2.converged);
            assert!(w[1].1.linf() > w[0].1.linf());
        }
        // Rejects a non-decreasing schedule.
        assert!(eps_continuation(&grid, &params, &[0.1, 0.1], &opts).is_err());
    }

    /// Eigenvalue problem p = q = 2 against the radial shooting oracle, with
    /// two different starts agreeing.
    #[test]
    fn eigen_matches_oracle() {
        let grid = disk(65);
        let params = ProblemParams::constant_density(3, 2.0, 2.0, 0.0, 1.0).unwrap();
        let opts = SolverOptions::default();
        let (lam, u, rep) = eigen_solve(&grid, &params, None, &opts).unwrap();
        assert!(rep.converged);
        let (lam_oracle, _) =
            radial_eigen(3, 2.0, |_| 1.0, 1.0, &RadialOptions::default()).unwrap();
        assert!(
            (lam - lam_oracle).abs() / lam_oracle < 0.02,
            "lambda {lam} vs oracle {lam_oracle}"
        );
        // Second start: uniformly convex paraboloid/quartic mixture (a pure
        // quartic has det D²u = 0 at the center and is not admissible as a
        // Newton start).
        let mixed = ScalarField::from_fn(grid.clone(), |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            0.6 * (r2 - 1.0) / 2.0 + 0.4 * (r2 * r2 - 1.0) / 4.0
        });
        let (lam2, u2, _) = eigen_solve(&grid, &params, Some(&mixed), &opts).unwrap();
        assert!((lam - lam2).abs() < 1e-6, "{lam} vs {lam2}");
        assert!(u.linf_diff(&u2) < 1e-4);
    }

    /// Blow-up extrapolation: S^{p-1} approximates the principal eigenvalue
    /// for p = 2.
    #[test]
    fn s_continuation_blowup() {
        let grid = disk(49);
        let params = ProblemParams::constant_density(3, 2.0, 2.0, 0.0, 1.0).unwrap();
        let opts = SolverOptions::default();
        let (lam, _, _) = eigen_solve(&grid, &params, None, &opts).unwrap();
        let s_max = lam * 0.98;
        let s_values: Vec<f64> = (0..8).map(|k| s_max * k as f64 / 7.0).collect();
        let (report, _) = s_continuation(&grid, &params, &s_values, &opts).unwrap();
        let s_crit = report.s_critical.expect("extrapolation available");
        // S^{p-1} = S for p = 2.
        assert!(
            (s_crit - lam).abs() / lam < 0.05,
            "S = {s_crit} vs lambda = {lam}"
        );
        for w in report.samples.windows(2) {
            assert!(w[1].sup_norm > w[0].sup_norm, "norms must grow along s");
        }
    }

    /// Dirichlet data and regime violations are rejected up front.
    #[test]
    fn input_validation() {
        let grid = disk(33);
        let opts = SolverOptions::default();
        let params = ProblemParams::constant_density(3, 1.0, 3.0, 0.0, 1.0).unwrap();
        // Positive initial data.
        let bad = ScalarField::from_fn(grid.clone(), |_| 1.0);
        assert!(newton_solve(&grid, &params, Some(&bad), &opts).is_err());
        // Eigen requires p = q.
        assert!(eigen_solve(&grid, &params, None, &opts).is_err());
        // s-continuation requires p = q > 1 and increasing schedule.
        let crit = ProblemParams::constant_density(3, 2.0, 2.0, 0.0, 1.0).unwrap();
        assert!(s_continuation(&grid, &crit, &[0.5, 0.2], &opts).is_err());
    }
}
