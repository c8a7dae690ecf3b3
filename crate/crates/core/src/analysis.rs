//! Postprocessing: boundary Hölder-exponent fits, the RHS homogeneity
//! identity, and convergence studies across grid refinements.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::ScalarField;
use crate::problem::{rhs_eval, ProblemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Where |u| is sampled for the boundary-exponent fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Probe {
    /// Every interior node against its distance to the boundary.
    AllNodes,
    /// Samples along z₀ + d·dir with d the fit abscissa; dir need not be unit.
    Ray { z0: Point, dir: Point },
}

impl Probe {
    fn describe(&self) -> String {
        match self {
            Probe::AllNodes => "all-node scatter".into(),
            Probe::Ray { z0, dir } => {
                format!("ray from ({}, {}) along ({}, {})", z0[0], z0[1], dir[0], dir[1])
            }
        }
    }
}

/// Least-squares fit of log|u| against log dist(x, ∂U) on a window clear of
/// both the discretization scale and the domain's bulk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// [d_min, d_max] in boundary-distance units.
    pub window: [f64; 2],
    pub sample_count: usize,
    pub probe: String,
    /// (distance, |u|) pairs entering the fit, for profile dumps.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

impl ExponentFit {
    /// "d,abs_u" table of the fitted samples.
    pub fn profile_csv(&self) -> String {
        let mut out = String::from("d,abs_u\n");
        for &(d, a) in &self.samples {
            out.push_str(&format!("{d},{a}\n"));
        }
        out
    }
}

/// Bilinear interpolation of a grid field; exterior corners contribute the
/// boundary value zero.
pub fn sample_field(u: &ScalarField, x: Point) -> f64 {
    let g = &u.grid;
    let fx = (x[0] - g.origin[0]) / g.dx;
    let fy = (x[1] - g.origin[1]) / g.dx;
    let ix = fx.floor() as isize;
    let iy = fy.floor() as isize;
    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
    let corner = |dx: isize, dy: isize| -> f64 {
        g.node_index(ix + dx, iy + dy).map(|k| u.values[k]).unwrap_or(0.0)
    };
    (1.0 - tx) * (1.0 - ty) * corner(0, 0)
        + tx * (1.0 - ty) * corner(1, 0)
        + (1.0 - tx) * ty * corner(0, 1)
        + tx * ty * corner(1, 1)
}

fn least_squares(samples: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in samples {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in samples {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit the boundary exponent of |u| on the default window [3Δx, 0.1·diam(U)].
/// Needs at least 10 samples in the window, otherwise the grid is too coarse.
pub fn fit_boundary_exponent(u: &ScalarField, probe: Probe) -> Result<ExponentFit> {
    let d_min = 3.0 * u.grid.dx;
    let d_max = 0.1 * u.grid.domain.diameter();
    fit_boundary_exponent_in(u, probe, [d_min, d_max])
}

/// Fit the boundary exponent on a caller-chosen window. The window must stay
/// clear of the discretization scale (d_min ≥ 3Δx) and of the domain's bulk
/// (d_max ≤ 0.1·diam(U)); narrower windows are allowed for solutions whose
/// asymptotic regime ends before 0.1·diam.
pub fn fit_boundary_exponent_in(
    u: &ScalarField,
    probe: Probe,
    window: [f64; 2],
) -> Result<ExponentFit> {
    let grid = &u.grid;
    let [d_min, d_max] = window;
    let tol = 1e-12;
    if d_min < 3.0 * grid.dx - tol {
        return Err(Error::InvalidConfig(format!(
            "fit window starts at {d_min} but 3Δx = {}; below that scale the \
             discretization dominates",
            3.0 * grid.dx
        )));
    }
    if d_max > 0.1 * grid.domain.diameter() + tol {
        return Err(Error::InvalidConfig(format!(
            "fit window ends at {d_max} but 0.1·diam = {}; beyond that the \
             asymptotic regime fails",
            0.1 * grid.domain.diameter()
        )));
    }
    if d_min >= d_max {
        return Err(Error::EmptyFitWindow(format!(
            "window [{d_min}, {d_max}] is empty; refine the grid"
        )));
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    match &probe {
        Probe::AllNodes => {
            for (i, &x) in grid.coords.iter().enumerate() {
                let d = grid.domain.boundary_distance(x);
                let a = u.values[i].abs();
                if d >= d_min && d <= d_max && a > 0.0 {
                    samples.push((d, a));
                }
            }
        }
        Probe::Ray { z0, dir } => {
            let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
            let dir = [dir[0] / len, dir[1] / len];
            // Half-cell sample spacing: the bilinear interpolant resolves it.
            let step = 0.5 * grid.dx;
            let count = ((d_max - d_min) / step).floor() as usize + 1;
            for k in 0..count.max(2) {
                let d = d_min + step * k as f64;
                if d > d_max {
                    break;
                }
                let x = [z0[0] + d * dir[0], z0[1] + d * dir[1]];
                let a = sample_field(u, x).abs();
                if a > 0.0 {
                    samples.push((d, a));
                }
            }
        }
    }
    if samples.len() < 10 {
        return Err(Error::EmptyFitWindow(format!(
            "only {} samples in [{d_min}, {d_max}]; refine the grid",
            samples.len()
        )));
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(d, a)| (d.ln(), a.ln())).collect();
    let (slope, intercept, r_squared) = least_squares(&logs);
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        window: [d_min, d_max],
        sample_count: samples.len(),
        probe: probe.describe(),
        samples,
    })
}

/// Result of the homogeneity trial: RHS(x, tu, tDu) = t^{p-1+n-q} RHS(x, u, Du).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub max_rel_deviation: f64,
    pub trials: usize,
    pub seed: u64,
    /// The strict monotonicity hypothesis t^d f < f(tu); holds iff q > p.
    pub strict_inequality: bool,
}

/// Check the RHS scaling identity on seeded random samples; requires ε = 0.
pub fn scaling_identity_check(params: &ProblemParams, trials: usize, seed: u64) -> Result<ScalingReport> {
    if params.eps != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "scaling identity needs eps = 0, got {}",
            params.eps
        )));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power = params.p - 1.0 + params.n as f64 - params.q;
    let mut max_dev: f64 = 0.0;
    for _ in 0..trials {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let u = -rng.gen_range(0.01..2.0);
        let du = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let t: f64 = rng.gen_range(0.05..1.0);
        let base = rhs_eval(x, u, du, params)?;
        let scaled = rhs_eval(x, t * u, [t * du[0], t * du[1]], params)?;
        let dev = (scaled - t.powf(power) * base).abs() / base.abs().max(f64::MIN_POSITIVE);
        max_dev = max_dev.max(dev);
    }
    // The strict inequality t^d f(x,u,Du) < f(x,tu,tDu) for t ∈ (0,1), with
    // chart dimension d = n-1, reduces to d > d + p - q, i.e. q > p.
    Ok(ScalingReport {
        max_rel_deviation: max_dev,
        trials,
        seed,
        strict_inequality: params.q > params.p,
    })
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// log₂(e_N / e_{2N}) against the previous row; None on the first row.
    pub order: Option<f64>,
}

/// Evaluate an error functional on a grid sequence and report observed orders.
pub fn convergence_study(
    ns: &[usize],
    mut error_at: impl FnMut(usize) -> Result<f64>,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let error = error_at(n)?;
        let order = rows.last().map(|prev: &ConvergenceRow| (prev.error / error).log2());
        rows.push(ConvergenceRow { n, error, order });
    }
    Ok(rows)
}
