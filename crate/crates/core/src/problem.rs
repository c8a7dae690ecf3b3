//! Problem parameters, regime classification and the pointwise right-hand side
//! of the master equation det D²u = g(x) (ε-u)^{p-1} [|Du|² + (x·Du-u)²]^{(n-q)/2}.

use crate::error::{Error, Result};
use crate::geometry::{DensitySide, DensitySpec, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// q > p >= 1: unique solution, gradient flow exists for all time.
    Subcritical,
    /// p > q >= n: mountain-pass regime; solves run from user initial data.
    Supercritical,
    /// p = q >= 1: scale-invariant eigenvalue problem.
    Critical,
    /// p < 1, q >= n: singular right-hand side, ε-regularization required.
    Singular,
}

/// Exponents, regularization and density defining one PDE instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Ambient dimension n; the chart dimension is n-1 (2 for grid solves).
    pub n: usize,
    pub p: f64,
    pub q: f64,
    /// Regularization ε >= 0; must be positive whenever p < 1.
    pub eps: f64,
    /// Euclidean-side density g.
    pub density: DensitySpec,
}

impl ProblemParams {
    pub fn new(n: usize, p: f64, q: f64, eps: f64, density: DensitySpec) -> Result<Self> {
        let params = ProblemParams { n, p, q, eps, density };
        params.validate()?;
        Ok(params)
    }

    pub fn constant_density(n: usize, p: f64, q: f64, eps: f64, g: f64) -> Result<Self> {
        Self::new(n, p, q, eps, DensitySpec::constant(DensitySide::EuclideanG, g)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {}", self.n)));
        }
        if self.density.side != DensitySide::EuclideanG {
            return Err(Error::InvalidConfig(
                "params carry the euclidean-side density; pull back spherical densities first"
                    .into(),
            ));
        }
        self.density.validate()?;
        if self.eps < 0.0 || !self.eps.is_finite() {
            return Err(Error::InvalidConfig(format!("eps must be >= 0, got {}", self.eps)));
        }
        if self.p < 1.0 && self.eps == 0.0 {
            return Err(Error::InvalidRegime(
                "p < 1 has a singular right-hand side; a regularization eps > 0 is required"
                    .into(),
            ));
        }
        self.regime()?;
        Ok(())
    }

    /// Regime classification; fails outside the solvable table:
    /// subcritical q>p>=1, supercritical p>q>=n, critical p=q>=1,
    /// singular p<1 and q>=n.
    pub fn regime(&self) -> Result<Regime> {
        let (p, q, n) = (self.p, self.q, self.n as f64);
        if p < 1.0 {
            if q >= n {
                Ok(Regime::Singular)
            } else {
                Err(Error::InvalidRegime(format!(
                    "p = {p} < 1 requires q >= n (= {n}), got q = {q}"
                )))
            }
        } else if q > p {
            Ok(Regime::Subcritical)
        } else if p == q {
            Ok(Regime::Critical)
        } else if q >= n {
            Ok(Regime::Supercritical)
        } else {
            Err(Error::InvalidRegime(format!(
                "supercritical p = {p} > q = {q} requires q >= n (= {n})"
            )))
        }
    }

    pub fn g(&self, x: Point) -> f64 {
        self.density.eval(x)
    }
}

/// Pointwise right-hand side g(x)·(ε-u)^{p-1}·(ρ²)^{(n-q)/2} with
/// ρ² = |Du|² + (x·Du - u)².
///
/// Signals a domain error when ε-u <= 0 or ρ² = 0.
pub fn rhs_eval(x: Point, u: f64, du: [f64; 2], params: &ProblemParams) -> Result<f64> {
    let slack = params.eps - u;
    if slack <= 0.0 {
        return Err(Error::Domain(format!("eps - u = {slack} <= 0 at x = {x:?}")));
    }
    let ustar = x[0] * du[0] + x[1] * du[1] - u;
    let rho2 = du[0] * du[0] + du[1] * du[1] + ustar * ustar;
    if rho2 <= 0.0 {
        return Err(Error::Domain(format!("rho^2 = 0 at x = {x:?}")));
    }
    Ok(params.g(x) * slack.powf(params.p - 1.0) * rho2.powf((params.n as f64 - params.q) / 2.0))
}

/// Gradient of log RHS with respect to (u, Du) at a point; companion of
/// `rhs_eval` for consistent Jacobians along the same algebraic path.
pub fn rhs_log_gradient(
    x: Point,
    u: f64,
    du: [f64; 2],
    params: &ProblemParams,
) -> (f64, [f64; 2]) {
    let slack = params.eps - u;
    let ustar = x[0] * du[0] + x[1] * du[1] - u;
    let rho2 = du[0] * du[0] + du[1] * du[1] + ustar * ustar;
    let nq = params.n as f64 - params.q;
    let d_u = -(params.p - 1.0) / slack - nq * ustar / rho2;
    let d_dux = nq * (du[0] + ustar * x[0]) / rho2;
    let d_duy = nq * (du[1] + ustar * x[1]) / rho2;
    (d_u, [d_dux, d_duy])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(n: usize, p: f64, q: f64, eps: f64) -> ProblemParams {
        ProblemParams::constant_density(n, p, q, eps, 1.0).unwrap()
    }

    #[test]
    fn regime_table() {
        assert_eq!(params(3, 1.0, 3.0, 0.0).regime().unwrap(), Regime::Subcritical);
        assert_eq!(params(3, 4.0, 3.0, 0.1).regime().unwrap(), Regime::Supercritical);
        assert_eq!(params(3, 2.0, 2.0, 0.0).regime().unwrap(), Regime::Critical);
        assert_eq!(params(3, 0.0, 3.0, 0.1).regime().unwrap(), Regime::Singular);
        // p < 1 with q < n is outside the table.
        assert!(ProblemParams::constant_density(3, 0.0, 2.0, 0.1, 1.0).is_err());
        // p < 1 without regularization is rejected.
        assert!(ProblemParams::constant_density(3, 0.0, 3.0, 0.0, 1.0).is_err());
        // p > q with q < n is rejected.
        assert!(ProblemParams::constant_density(3, 3.0, 2.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn rhs_pointwise_values() {
        // p=1, q=n: both exponents vanish, RHS = g.
        let pr = params(3, 1.0, 3.0, 0.0);
        let v = rhs_eval([0.3, -0.2], -0.7, [0.4, 0.1], &pr).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-15);
        // n=3, p=0, q=3: RHS = (eps+1)^{-1} at u=-1, Du=0, x=0.
        let pr = params(3, 0.0, 3.0, 0.25);
        let v = rhs_eval([0.0, 0.0], -1.0, [0.0, 0.0], &pr).unwrap();
        assert_relative_eq!(v, 1.0 / 1.25, epsilon = 1e-15);
        // Domain errors.
        assert!(rhs_eval([0.0, 0.0], 0.5, [0.0, 0.0], &params(3, 1.0, 3.0, 0.0)).is_err());
        assert!(rhs_eval([0.0, 0.0], 0.0, [0.0, 0.0], &params(3, 1.0, 3.0, 0.0)).is_err());
    }

    #[test]
    fn rhs_scaling_identity() {
        // RHS(x, tu, tDu) = t^{p-1+n-q} RHS(x, u, Du) at eps = 0.
        let pr = params(3, 1.5, 4.0, 0.0);
        let (x, u, du, t) = ([0.4, -0.3], -1.2, [0.6, -0.2], 0.37);
        let lhs = rhs_eval(x, t * u, [t * du[0], t * du[1]], &pr).unwrap();
        let rhs = t.powf(pr.p - 1.0 + pr.n as f64 - pr.q) * rhs_eval(x, u, du, &pr).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    #[test]
    fn rhs_log_gradient_matches_finite_differences() {
        let pr = params(3, 0.5, 3.5, 0.2);
        let (x, u, du) = ([0.4, -0.3], -1.2, [0.6, -0.2]);
        let (d_u, d_du) = rhs_log_gradient(x, u, du, &pr);
        let h = 1e-6;
        let f = |u: f64, du: [f64; 2]| rhs_eval(x, u, du, &pr).unwrap().ln();
        assert_relative_eq!(
            d_u,
            (f(u + h, du) - f(u - h, du)) / (2.0 * h),
            max_relative = 1e-6
        );
        assert_relative_eq!(
            d_du[0],
            (f(u, [du[0] + h, du[1]]) - f(u, [du[0] - h, du[1]])) / (2.0 * h),
            max_relative = 1e-6
        );
        assert_relative_eq!(
            d_du[1],
            (f(u, [du[0], du[1] + h]) - f(u, [du[0], du[1] - h])) / (2.0 * h),
            max_relative = 1e-6
        );
    }
}
