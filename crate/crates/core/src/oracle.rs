//! Independent verification oracle: rotationally symmetric solutions by
//! adaptive Runge-Kutta shooting, plus chart quadrature cross-checks.
//!
//! For radial data on the disk of radius R the master equation reduces to the
//! ODE
//!
//! ```text
//! u''(r) (u'(r)/r)^{n-2} = g(r) (eps - u)^{p-1} (u'^2 + (r u' - u)^2)^{(n-q)/2}
//! ```
//!
//! with u'(0) = 0 and u(R) = 0. The oracle shoots on the center depth
//! m = -u(0) with bisection; nothing here shares code with the grid solver,
//! so agreement between the two is a genuine cross-check.

use crate::error::{Error, Result};
use std::io::Write as _;
use std::path::Path;

/// Tolerances for the shooting oracle.
#[derive(Debug, Clone, Copy)]
pub struct RadialOptions {
    /// Per-step error tolerance of the adaptive integrator (absolute and
    /// relative).
    pub ode_tol: f64,
    /// Target |u(R)| of the shooting iteration.
    pub shoot_tol: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        RadialOptions { ode_tol: 1e-12, shoot_tol: 1e-10 }
    }
}

/// Radial solution profile on [r0, R] with knots at the accepted steps.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// Center depth m = -u(0).
    pub m: f64,
    /// Domain radius R.
    pub radius: f64,
}

impl RadialProfile {
    /// Cubic Hermite interpolation of u between knots; the integrator carries
    /// u' exactly alongside u, so each interval interpolates at O(h^4).
    pub fn sample(&self, r: f64) -> f64 {
        self.hermite(r).0
    }

    /// Interpolated derivative u'(r).
    pub fn sample_deriv(&self, r: f64) -> f64 {
        self.hermite(r).1
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let rc = r.clamp(0.0, self.radius);
        // Below the first knot the series u = -m + A r^2/2 applies; the first
        // knot is at r ~ 1e-6 so the quadratic model is exact to rounding.
        if rc <= self.r[0] {
            let a = self.du[0] / self.r[0];
            return (-self.m + 0.5 * a * rc * rc, a * rc);
        }
        let k = match self.r.binary_search_by(|v| v.total_cmp(&rc)) {
            Ok(k) => k.min(self.r.len() - 2),
            Err(k) => (k - 1).min(self.r.len() - 2),
        };
        let h = self.r[k + 1] - self.r[k];
        let s = (rc - self.r[k]) / h;
        let (u0, u1, d0, d1) = (self.u[k], self.u[k + 1], self.du[k], self.du[k + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let val = h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
        let dh00 = 6.0 * s * (s - 1.0);
        let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
        let dh01 = 6.0 * s * (1.0 - s);
        let dh11 = s * (3.0 * s - 2.0);
        let der = (dh00 * u0 + dh01 * u1) / h + dh10 * d0 + dh11 * d1;
        (val, der)
    }

    /// Writes the profile as `r,u,du` CSV.
    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "r,u,du")?;
        for i in 0..self.r.len() {
            writeln!(f, "{:.16e},{:.16e},{:.16e}", self.r[i], self.u[i], self.du[i])?;
        }
        Ok(())
    }
}

struct Ode<'a> {
    n: f64,
    p: f64,
    q: f64,
    eps: f64,
    lambda: f64,
    g: &'a dyn Fn(f64) -> f64,
}

impl Ode<'_> {
    /// u'' as a function of (r, u, u'). NaN signals an inadmissible stage
    /// (negative slack or slope), which the driver treats as a rejected step.
    fn accel(&self, r: f64, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return f64::NAN;
        }
        // Clamp the slack at zero for p >= 1 so that trial steps can pass the
        // zero-crossing detection level; for p < 1 a nonpositive slack is a
        // genuine singularity and the step is rejected (u = eps > 0 lies
        // strictly above the detection level, so no deadlock).
        let slack = self.eps - u;
        let slack = if slack >= 0.0 {
            slack
        } else if self.p >= 1.0 {
            0.0
        } else {
            return f64::NAN;
        };
        let rho2 = v * v + (r * v - u) * (r * v - u);
        self.lambda
            * (self.g)(r)
            * slack.powf(self.p - 1.0)
            * rho2.powf((self.n - self.q) / 2.0)
            * (r / v).powf(self.n - 2.0)
    }

    /// Series coefficient A with u = -m + A r^2/2 near the center, from
    /// A^{n-1} = lambda g(0) (eps+m)^{p-1} m^{n-q}.
    fn series_coeff(&self, m: f64) -> f64 {
        (self.lambda
            * (self.g)(0.0)
            * (self.eps + m).powf(self.p - 1.0)
            * m.powf(self.n - self.q))
        .powf(1.0 / (self.n - 1.0))
    }
}

enum Shot {
    /// u reached 0 at this radius before R.
    Crossed(f64),
    /// Integration reached R with this (negative) end value.
    Ended(f64),
}

/// Cash-Karp embedded Runge-Kutta 4(5) on the first-order system
/// (u, v)' = (v, accel). Returns the shot outcome, filling `knots` when given.
fn integrate(
    ode: &Ode,
    m: f64,
    radius: f64,
    tol: f64,
    mut knots: Option<&mut RadialProfile>,
) -> Result<Shot> {
    const A: [[f64; 5]; 5] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
        [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const C5: [f64; 6] =
        [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    const C4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        1.0 / 4.0,
    ];

    let r0 = 1e-6 * radius.min(1.0).max(1e-3);
    let a_coeff = ode.series_coeff(m);
    if !a_coeff.is_finite() || a_coeff <= 0.0 {
        return Err(Error::Domain(format!("series coefficient {a_coeff} at m = {m}")));
    }
    let mut r = r0;
    let mut u = -m + 0.5 * a_coeff * r0 * r0;
    let mut v = a_coeff * r0;
    let mut h = 1e-3 * radius;
    if let Some(k) = knots.as_deref_mut() {
        k.r.push(r);
        k.u.push(u);
        k.du.push(v);
    }
    let mut steps = 0usize;
    while r < radius {
        if h < 1e-15 {
            return Err(Error::NonConvergence(format!("radial step underflow at r = {r}")));
        }
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::NonConvergence("radial integrator step budget exceeded".into()));
        }
        let h_eff = h.min(radius - r);
        let mut ku = [0.0f64; 6];
        let mut kv = [0.0f64; 6];
        ku[0] = v;
        kv[0] = ode.accel(r, u, v);
        let mut bad = !kv[0].is_finite();
        for s in 1..6 {
            if bad {
                break;
            }
            let mut du = 0.0;
            let mut dv = 0.0;
            for j in 0..s {
                du += A[s - 1][j] * ku[j];
                dv += A[s - 1][j] * kv[j];
            }
            let rs = r + h_eff * A[s - 1][..s].iter().sum::<f64>();
            ku[s] = v + h_eff * dv;
            kv[s] = ode.accel(rs, u + h_eff * du, v + h_eff * dv);
            bad = !kv[s].is_finite();
        }
        if bad {
            h *= 0.5;
            continue;
        }
        let mut u5 = u;
        let mut v5 = v;
        let mut u4 = u;
        let mut v4 = v;
        for s in 0..6 {
            u5 += h_eff * C5[s] * ku[s];
            v5 += h_eff * C5[s] * kv[s];
            u4 += h_eff * C4[s] * ku[s];
            v4 += h_eff * C4[s] * kv[s];
        }
        let scale_u = tol + tol * u.abs().max(m);
        let scale_v = tol + tol * v.abs().max(1.0);
        let err = ((u5 - u4) / scale_u).abs().max(((v5 - v4) / scale_v).abs());
        if err > 1.0 {
            h = (0.9 * h_eff * err.powf(-0.25)).max(0.1 * h_eff);
            continue;
        }
        let r_new = r + h_eff;
        if u5 >= 0.0 {
            // Locate the zero crossing inside the step by bisection on the
            // Hermite interpolant.
            let (mut lo, mut hi) = (r, r_new);
            let hermite = |s: f64| {
                let t = (s - r) / h_eff;
                let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                let h10 = t * (1.0 - t) * (1.0 - t);
                let h01 = t * t * (3.0 - 2.0 * t);
                let h11 = t * t * (t - 1.0);
                h00 * u + h10 * h_eff * v + h01 * u5 + h11 * h_eff * v5
            };
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Shot::Crossed(0.5 * (lo + hi)));
        }
        r = r_new;
        u = u5;
        v = v5;
        if let Some(k) = knots.as_deref_mut() {
            k.r.push(r);
            k.u.push(u);
            k.du.push(v);
        }
        h = if err > 0.0 { (0.9 * h_eff * err.powf(-0.2)).min(5.0 * h_eff) } else { 5.0 * h_eff };
    }
    Ok(Shot::Ended(u))
}

/// Shooting score: positive when the profile crosses zero before R (center
/// depth too shallow), negative when it reaches R still strictly negative.
fn score(shot: &Shot, radius: f64) -> f64 {
    match shot {
        Shot::Crossed(rc) => radius - rc,
        Shot::Ended(ur) => *ur,
    }
}

/// Solves the radial Dirichlet problem on the disk of radius `radius` by
/// bisection shooting on the center depth m.
///
/// `g` is the euclidean-side density as a function of r; it must be positive.
/// Regime constraints mirror the PDE: p < 1 requires eps > 0.
pub fn radial_solve(
    n: usize,
    p: f64,
    q: f64,
    eps: f64,
    g: impl Fn(f64) -> f64,
    radius: f64,
    opts: &RadialOptions,
) -> Result<RadialProfile> {
    if p < 1.0 && eps <= 0.0 {
        return Err(Error::InvalidRegime("radial oracle: p < 1 requires eps > 0".into()));
    }
    if radius <= 0.0 {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    let ode = Ode { n: n as f64, p, q, eps, lambda: 1.0, g: &g };
    let (m_lo, m_hi) = bracket(&ode, radius, opts, |ode, m| {
        integrate(ode, m, radius, opts.ode_tol, None)
    })?;
    let m = bisect(&ode, m_lo, m_hi, radius, opts, |ode, m| {
        integrate(ode, m, radius, opts.ode_tol, None)
    })?;
    finish_profile(&ode, m, radius, opts)
}

/// Solves the radial eigenvalue problem det-side = lambda g (-u)^{p-1}
/// rho^{n-p} for p = q, normalized so that the center depth is exactly 1.
/// Shoots on lambda with the depth held fixed.
pub fn radial_eigen(
    n: usize,
    p: f64,
    g: impl Fn(f64) -> f64,
    radius: f64,
    opts: &RadialOptions,
) -> Result<(f64, RadialProfile)> {
    if p < 1.0 {
        return Err(Error::InvalidRegime("radial eigen oracle requires p >= 1".into()));
    }
    // Larger lambda lifts the right-hand side, so the profile turns up faster
    // and crosses earlier: the score is increasing in lambda.
    let shoot = |lam: f64| -> Result<Shot> {
        let ode = Ode { n: n as f64, p, q: p, eps: 0.0, lambda: lam, g: &g };
        integrate(&ode, 1.0, radius, opts.ode_tol, None)
    };
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while score(&shoot(hi)?, radius) < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::Bracket("eigen oracle: no upper lambda found".into()));
        }
    }
    while score(&shoot(lo)?, radius) > 0.0 {
        lo *= 0.5;
        grow += 1;
        if grow > 400 {
            return Err(Error::Bracket("eigen oracle: no lower lambda found".into()));
        }
    }
    let mut best = 0.5 * (lo + hi);
    for _ in 0..200 {
        best = 0.5 * (lo + hi);
        let s = score(&shoot(best)?, radius);
        if s.abs() <= opts.shoot_tol {
            break;
        }
        if s > 0.0 {
            hi = best;
        } else {
            lo = best;
        }
        if (hi - lo) < 1e-15 * hi {
            break;
        }
    }
    let ode = Ode { n: n as f64, p, q: p, eps: 0.0, lambda: best, g: &g };
    let profile = finish_profile(&ode, 1.0, radius, opts)?;
    Ok((best, profile))
}

fn bracket(
    ode: &Ode,
    radius: f64,
    _opts: &RadialOptions,
    shoot: impl Fn(&Ode, f64) -> Result<Shot>,
) -> Result<(f64, f64)> {
    // Score is positive for shallow m (early crossing) and negative for deep m.
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut n = 0;
    while score(&shoot(ode, lo)?, radius) < 0.0 {
        lo *= 0.5;
        n += 1;
        if n > 200 {
            return Err(Error::Bracket("radial oracle: no shallow depth crosses early".into()));
        }
    }
    while score(&shoot(ode, hi)?, radius) > 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 400 {
            return Err(Error::Bracket("radial oracle: no deep depth stays negative".into()));
        }
    }
    Ok((lo, hi))
}

fn bisect(
    ode: &Ode,
    mut lo: f64,
    mut hi: f64,
    radius: f64,
    opts: &RadialOptions,
    shoot: impl Fn(&Ode, f64) -> Result<Shot>,
) -> Result<f64> {
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let shot = shoot(ode, mid)?;
        // Converged when the profile reaches R within the shooting tolerance.
        if let Shot::Ended(ur) = shot {
            if ur.abs() <= opts.shoot_tol {
                return Ok(mid);
            }
        }
        if score(&shot, radius) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-16 * hi.max(1.0) {
            break;
        }
    }
    // Accept the bracket midpoint if the residual is already tiny.
    if let Shot::Ended(ur) = shoot(ode, mid)? {
        if ur.abs() <= 100.0 * opts.shoot_tol {
            return Ok(mid);
        }
    }
    Err(Error::NonConvergence("radial shooting bisection stalled".into()))
}

fn finish_profile(ode: &Ode, m: f64, radius: f64, opts: &RadialOptions) -> Result<RadialProfile> {
    let mut profile =
        RadialProfile { r: Vec::new(), u: Vec::new(), du: Vec::new(), m, radius };
    match integrate(ode, m, radius, opts.ode_tol, Some(&mut profile))? {
        Shot::Ended(_) => {
            pin_boundary(ode, &mut profile, radius);
            Ok(profile)
        }
        // A crossing within rounding distance of the boundary is the
        // converged solution; pin it there.
        Shot::Crossed(rc) if radius - rc <= 1e-9 * radius => {
            pin_boundary(ode, &mut profile, radius);
            Ok(profile)
        }
        Shot::Crossed(rc) => Err(Error::NonConvergence(format!(
            "calibrated profile still crosses at r = {rc}"
        ))),
    }
}

/// Replaces the end of the profile with the exact boundary condition
/// u(R) = 0; the boundary slope is advanced from the last knot by one Euler
/// step of the ODE so the final Hermite interval stays second order.
fn pin_boundary(ode: &Ode, profile: &mut RadialProfile, radius: f64) {
    let r_last = *profile.r.last().unwrap();
    if r_last < radius {
        let u = *profile.u.last().unwrap();
        let v = *profile.du.last().unwrap();
        let a = ode.accel(r_last, u, v);
        let v_end = if a.is_finite() { v + a * (radius - r_last) } else { v };
        profile.r.push(radius);
        profile.u.push(0.0);
        profile.du.push(v_end);
    } else {
        *profile.u.last_mut().unwrap() = 0.0;
    }
}

/// Relative error of the discrete chart quadrature of a spherical cap area.
///
/// The cap of opening angle theta about the pole has exact area
/// 2 pi (1 - cos theta) and chart preimage the disk of radius tan theta; the
/// check integrates the chart volume element (1+|x|^2)^{-3/2} over that disk.
pub fn cap_area_check(theta: f64, nodes: usize) -> Result<f64> {
    use crate::geometry::ConvexDomain;
    use crate::grid::{build_grid, integrate as grid_integrate};
    if !(0.0 < theta && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidConfig(format!("theta must be in (0, pi/2), got {theta}")));
    }
    let grid = build_grid(ConvexDomain::disk(theta.tan())?, nodes)?;
    let vals: Vec<f64> = grid
        .coords
        .iter()
        .map(|&[x, y]| (1.0 + x * x + y * y).powf(-1.5))
        .collect();
    let exact = 2.0 * std::f64::consts::PI * (1.0 - theta.cos());
    Ok((grid_integrate(&grid, &vals) - exact).abs() / exact)
}
