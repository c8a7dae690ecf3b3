//! Variational functionals in chart form. The chart conformal factors cancel
//! in every formula below, so all integrals are plain weighted sums over the
//! grid with the Euclidean-side density g.

use crate::error::{Error, Result};
use crate::grid::{differentiate, integrate, DerivedQuantities, ScalarField};
use crate::problem::ProblemParams;
use serde::{Deserialize, Serialize};

/// Snapshot of every functional value for one field, as stored in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    pub v_q: f64,
    pub j_eps: f64,
    pub i_eps: f64,
    /// Scale-invariant volume-entropy integral ∫(-u) det D²u ρ^{-n} dx.
    pub invariant_i0: f64,
    /// Rayleigh quotient p V_p / ∫(-u)^p g; only meaningful when p = q.
    pub rayleigh: Option<f64>,
}

impl FunctionalReport {
    pub fn evaluate(u: &ScalarField, params: &ProblemParams) -> Result<Self> {
        let d = differentiate(u);
        let v_q = eval_vq_with(u, &d, params.n, params.q)?;
        let j_eps = eval_jeps_with(u, &d, params)?;
        let i_eps = j_eps + eps_shift(u, params)?;
        let invariant_i0 = eval_invariant_i0_with(u, &d, params.n)?;
        let rayleigh = if params.p == params.q {
            rayleigh_lambda(u, params).ok()
        } else {
            None
        };
        Ok(FunctionalReport {
            p: params.p,
            q: params.q,
            eps: params.eps,
            v_q,
            j_eps,
            i_eps,
            invariant_i0,
            rayleigh,
        })
    }
}

fn check_admissible(u: &ScalarField) -> Result<()> {
    if !u.is_admissible() {
        return Err(Error::Domain(
            "field is not admissible: interior values must be strictly negative".into(),
        ));
    }
    Ok(())
}

/// Pointwise ρ^{q-n} weight; fails when ρ² vanishes (degenerate field) and
/// q != n.
fn rho_pow(rho2: f64, expo: f64) -> Result<f64> {
    if expo == 0.0 {
        return Ok(1.0);
    }
    if rho2 <= 0.0 {
        return Err(Error::Domain("rho^2 vanished inside the domain".into()));
    }
    Ok(rho2.powf(expo / 2.0))
}

/// Dual volume V_q(u) = (1/q) ∫ ρ^{q-n} (-u) det D²u dx.
pub fn eval_vq(u: &ScalarField, n: usize, q: f64) -> Result<f64> {
    let d = differentiate(u);
    eval_vq_with(u, &d, n, q)
}

pub(crate) fn eval_vq_with(u: &ScalarField, d: &DerivedQuantities, n: usize, q: f64) -> Result<f64> {
    if q == 0.0 {
        return Err(Error::InvalidConfig("V_q is undefined at q = 0".into()));
    }
    check_admissible(u)?;
    let grid = &u.grid;
    let mut vals = vec![0.0; grid.n_interior()];
    for i in 0..grid.n_interior() {
        vals[i] = rho_pow(d.rho2[i], q - n as f64)? * (-u.values[i]) * d.det[i];
    }
    Ok(integrate(grid, &vals) / q)
}

/// First variation δV_q(u)[ψ] = -∫ ρ^{q-n} ψ det D²u dx.
pub fn first_variation_vq(u: &ScalarField, psi: &ScalarField, n: usize, q: f64) -> Result<f64> {
    check_admissible(u)?;
    let d = differentiate(u);
    let grid = &u.grid;
    let mut vals = vec![0.0; grid.n_interior()];
    for i in 0..grid.n_interior() {
        vals[i] = -rho_pow(d.rho2[i], q - n as f64)? * psi.values[i] * d.det[i];
    }
    Ok(integrate(grid, &vals))
}

/// Regularized energy J_ε(u) = V_q(u) - (1/p) ∫ (ε-u)^p g dx.
pub fn eval_jeps(u: &ScalarField, params: &ProblemParams) -> Result<f64> {
    let d = differentiate(u);
    eval_jeps_with(u, &d, params)
}

pub(crate) fn eval_jeps_with(u: &ScalarField, d: &DerivedQuantities, params: &ProblemParams) -> Result<f64> {
    if params.p == 0.0 {
        return Err(Error::InvalidConfig("J_eps is undefined at p = 0".into()));
    }
    let v_q = eval_vq_with(u, d, params.n, params.q)?;
    let grid = &u.grid;
    let mut vals = vec![0.0; grid.n_interior()];
    for i in 0..grid.n_interior() {
        let slack = params.eps - u.values[i];
        if slack <= 0.0 {
            return Err(Error::Domain("eps - u <= 0 inside the domain".into()));
        }
        vals[i] = slack.powf(params.p) * params.g(grid.coords[i]);
    }
    Ok(v_q - integrate(grid, &vals) / params.p)
}

fn eps_shift(u: &ScalarField, params: &ProblemParams) -> Result<f64> {
    if params.p == 0.0 {
        return Err(Error::InvalidConfig("I_eps is undefined at p = 0".into()));
    }
    let grid = &u.grid;
    let vals: Vec<f64> = grid
        .coords
        .iter()
        .map(|&x| params.eps.powf(params.p) * params.g(x))
        .collect();
    Ok(integrate(grid, &vals) / params.p)
}

/// Shifted energy I_ε(u) = J_ε(u) + (1/p) ∫ ε^p g dx; normalized so that
/// I_ε(0) = 0.
pub fn eval_ieps(u: &ScalarField, params: &ProblemParams) -> Result<f64> {
    Ok(eval_jeps(u, params)? + eps_shift(u, params)?)
}

/// General-nonlinearity energy J_F(u) = V_p(u) - ∫ g(x) ∫_u^0 F(s) ds dx,
/// used by critical flows with a user nonlinearity F > 0.
///
/// The inner integral uses 16-point Gauss-Legendre quadrature, which is
/// exact to rounding for smooth F on the short intervals that occur here.
pub fn eval_jf(
    u: &ScalarField,
    params: &ProblemParams,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let d = differentiate(u);
    eval_jf_with(u, &d, params, f)
}

pub(crate) fn eval_jf_with(
    u: &ScalarField,
    d: &DerivedQuantities,
    params: &ProblemParams,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    let v_p = eval_vq_with(u, d, params.n, params.p)?;
    let grid = &u.grid;
    let mut vals = vec![0.0; grid.n_interior()];
    for i in 0..grid.n_interior() {
        vals[i] = params.g(grid.coords[i]) * gauss_integral(&f, u.values[i], 0.0);
    }
    Ok(v_p - integrate(grid, &vals))
}

/// ∫_a^b f by 16-point Gauss-Legendre.
pub(crate) fn gauss_integral(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // Abscissas/weights for [-1, 1]; symmetric halves.
    const X: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.7554044083550030,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const W: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..8 {
        acc += W[k] * (f(mid + half * X[k]) + f(mid - half * X[k]));
    }
    acc * half
}

/// Scale-invariant integral I₀(u) = ∫ (-u) det D²u ρ^{-n} dx. Homogeneous of
/// degree zero: replacing u by t·u leaves it unchanged.
pub fn eval_invariant_i0(u: &ScalarField, n: usize) -> Result<f64> {
    let d = differentiate(u);
    eval_invariant_i0_with(u, &d, n)
}

fn eval_invariant_i0_with(u: &ScalarField, d: &DerivedQuantities, n: usize) -> Result<f64> {
    check_admissible(u)?;
    let grid = &u.grid;
    let mut vals = vec![0.0; grid.n_interior()];
    for i in 0..grid.n_interior() {
        vals[i] = rho_pow(d.rho2[i], -(n as f64))? * (-u.values[i]) * d.det[i];
    }
    Ok(integrate(grid, &vals))
}

/// Rayleigh quotient λ(u) = p V_p(u) / ∫ (-u)^p g dx for the eigenvalue
/// problem p = q.
pub fn rayleigh_lambda(u: &ScalarField, params: &ProblemParams) -> Result<f64> {
    check_admissible(u)?;
    let v_p = eval_vq(u, params.n, params.p)?;
    let grid = &u.grid;
    let vals: Vec<f64> = (0..grid.n_interior())
        .map(|i| (-u.values[i]).powf(params.p) * params.g(grid.coords[i]))
        .collect();
    let denom = integrate(grid, &vals);
    if denom <= 1e-300 {
        return Err(Error::Domain("Rayleigh denominator vanished".into()));
    }
    Ok(params.p * v_p / denom)
}
