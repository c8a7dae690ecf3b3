//! Closed-form barriers for the singular regime p < 1, q >= n: the subsolution
//! family v_a(x) = x₂^a (x₁² - C) in a frame attached to a supporting
//! hyperplane, the cusp supersolution w(x) = C x₂ - C x₂^a (1 - x₁²)^b, grid
//! certification of the differential inequalities they satisfy, and the
//! comparison principle as an executable check.

use crate::error::{Error, Result};
use crate::geometry::{norm2, ConvexDomain, Point};
use crate::grid::{Grid, ScalarField};
use crate::problem::ProblemParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierFamily {
    /// v_a = x₂^a (x₁² - C); the master operator applied to it dominates g.
    SubsolutionVa,
    /// w = C x₂ - C x₂^a (1 - x₁²)^b on the cusp domain; the operator stays below g.
    SupersolutionW,
}

/// One calibrated (or candidate) barrier: family, exponents, constant and the
/// frame (boundary point z₀, inward unit normal) in which the formula lives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub family: BarrierFamily,
    /// Exponent a; for v_a this is (q-n+2)/(q-p) ∈ (0,1), for w any value in
    /// [(q-n+2)/(q-p), 1).
    pub a: f64,
    /// Exponent b = (q-1)/(q-p) for w; unused (0) for v_a.
    pub b: f64,
    /// Barrier constant C > 0.
    pub c: f64,
    /// Domain the barrier is certified on.
    pub domain: ConvexDomain,
    /// Frame origin: boundary point z₀ with a supporting hyperplane (v_a) or
    /// the cusp tip (w).
    pub z0: Point,
    /// Inward unit normal at z₀; the local x₂ axis.
    pub normal: Point,
}

impl BarrierSpec {
    /// Local coordinates (x₁ tangential, x₂ along the inward normal).
    fn local(&self, x: Point) -> (f64, f64) {
        let d = [x[0] - self.z0[0], x[1] - self.z0[1]];
        let t = [self.normal[1], -self.normal[0]];
        (t[0] * d[0] + t[1] * d[1], self.normal[0] * d[0] + self.normal[1] * d[1])
    }

    /// Barrier value at a point.
    pub fn eval(&self, x: Point) -> f64 {
        self.jet(x).0
    }

    /// Value, global gradient and global Hessian (vxx, vxy, vyy), all from the
    /// closed-form derivatives; no finite differencing.
    pub fn jet(&self, x: Point) -> (f64, Point, [f64; 3]) {
        let (y1, y2) = self.local(x);
        let (v, g1, g2, h11, h12, h22) = match self.family {
            BarrierFamily::SubsolutionVa => {
                let (a, c) = (self.a, self.c);
                let pa = y2.powf(a);
                let pa1 = y2.powf(a - 1.0);
                let pa2 = y2.powf(a - 2.0);
                let f = y1 * y1 - c;
                (pa * f, 2.0 * y1 * pa, a * pa1 * f, 2.0 * pa, 2.0 * a * y1 * pa1, a * (a - 1.0) * pa2 * f)
            }
            BarrierFamily::SupersolutionW => {
                let (a, b, c) = (self.a, self.b, self.c);
                let s = 1.0 - y1 * y1;
                let phi = y2.powf(a);
                let phi1 = a * y2.powf(a - 1.0);
                let phi2 = a * (a - 1.0) * y2.powf(a - 2.0);
                let psi = s.powf(b);
                let psi1 = -2.0 * b * y1 * s.powf(b - 1.0);
                let psi2 = -2.0 * b * s.powf(b - 1.0) + 4.0 * b * (b - 1.0) * y1 * y1 * s.powf(b - 2.0);
                (
                    c * y2 - c * phi * psi,
                    -c * phi * psi1,
                    c - c * phi1 * psi,
                    -c * phi * psi2,
                    -c * phi1 * psi1,
                    -c * phi2 * psi,
                )
            }
        };
        // Rotate from the (tangent, normal) frame back to global coordinates.
        let t = [self.normal[1], -self.normal[0]];
        let n = self.normal;
        let grad = [g1 * t[0] + g2 * n[0], g1 * t[1] + g2 * n[1]];
        let hxx = h11 * t[0] * t[0] + 2.0 * h12 * t[0] * n[0] + h22 * n[0] * n[0];
        let hxy = h11 * t[0] * t[1] + h12 * (t[0] * n[1] + t[1] * n[0]) + h22 * n[0] * n[1];
        let hyy = h11 * t[1] * t[1] + 2.0 * h12 * t[1] * n[1] + h22 * n[1] * n[1];
        (v, grad, [hxx, hxy, hyy])
    }

    /// det D² of the barrier; rotation invariant.
    pub fn det_hessian(&self, x: Point) -> f64 {
        let (_, _, h) = self.jet(x);
        h[0] * h[2] - h[1] * h[1]
    }

    /// Sample the barrier on a grid.
    pub fn field(&self, grid: std::sync::Arc<Grid>) -> ScalarField {
        let spec = self.clone();
        ScalarField::from_fn(grid, move |x| spec.eval(x))
    }
}

fn check_singular_regime(params: &ProblemParams) -> Result<()> {
    if !(params.p < 1.0 && params.q >= params.n as f64 && params.n >= 3) {
        return Err(Error::InvalidRegime(format!(
            "barriers require p < 1 and q >= n >= 3, got n={}, p={}, q={}",
            params.n, params.p, params.q
        )));
    }
    Ok(())
}

/// Subsolution exponent a = (q-n+2)/(q-p).
pub fn subsolution_exponent(params: &ProblemParams) -> f64 {
    (params.q - params.n as f64 + 2.0) / (params.q - params.p)
}

/// Build the rotated subsolution v(x) = [n·(x-z₀)]^a (|x - (n·x)n|² - C) with
/// C initialized to 1 + diam(U)²; run `calibrate` afterwards to certify it.
pub fn make_subsolution(
    params: &ProblemParams,
    domain: ConvexDomain,
    z0: Point,
    normal: Point,
) -> Result<BarrierSpec> {
    check_singular_regime(params)?;
    let a = subsolution_exponent(params);
    if !(0.0 < a && a < 1.0) {
        return Err(Error::InvalidRegime(format!("subsolution exponent a={a} outside (0,1)")));
    }
    let len = norm2(normal).sqrt();
    if !(len > 0.0) {
        return Err(Error::InvalidConfig("inward normal must be nonzero".into()));
    }
    let normal = [normal[0] / len, normal[1] / len];
    let diam = domain.diameter();
    Ok(BarrierSpec {
        family: BarrierFamily::SubsolutionVa,
        a,
        b: 0.0,
        c: 1.0 + diam * diam,
        domain,
        z0,
        normal,
    })
}

/// Build the cusp supersolution w = C x₂ - C x₂^a (1 - x₁²)^b with
/// b = (q-1)/(q-p), together with its domain 0 < x₂ < (1 - x₁²)^s where
/// s = b/(1-a). The radial (1 - r²)^b form of the proof is used.
pub fn make_supersolution(params: &ProblemParams, a: f64) -> Result<(BarrierSpec, ConvexDomain)> {
    check_singular_regime(params)?;
    let a_min = subsolution_exponent(params);
    if !(a_min <= a && a < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "supersolution exponent a={a} outside [{a_min}, 1)"
        )));
    }
    let b = (params.q - 1.0) / (params.q - params.p);
    let domain = ConvexDomain::cusp(a, b)?;
    let spec = BarrierSpec {
        family: BarrierFamily::SupersolutionW,
        a,
        b,
        c: 1.0,
        domain: domain.clone(),
        z0: [0.0, 0.0],
        normal: [0.0, 1.0],
    };
    Ok((spec, domain))
}

/// Circumscribed convex polygon of the cusp region 0 < x₂ < (1 - x₁²)^s,
/// built from support lines of its convex hull: the flat bottom face, the two
/// chords through (±1, 0) tangent to the cap at ±x_t with x_t = 1/(2s-1), and
/// `facets` tangent lines across the concave part of the cap |x₁| ≤ x_t.
///
/// The cusp region is not convex when s > 1 (the cap profile turns convex for
/// x₁² > 1/(2s-1)), so grid solves of the Monge-Ampère problem on the region
/// itself degenerate under refinement. Solving on this polygon instead keeps
/// the comparison with the supersolution w valid: every polygon edge lies on
/// or outside the region, and w > 0 exactly outside the region, so w ≥ 0 = u
/// on the polygon boundary; any interior minimum of w - u with w < 0 lies
/// inside the region, where w is a certified supersolution.
pub fn cusp_support_polygon(a: f64, b: f64, facets: usize) -> Result<ConvexDomain> {
    if !(0.0 < a && a < 1.0 && b > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "cusp support polygon needs 0<a<1 and b>0, got ({a},{b})"
        )));
    }
    if facets < 2 {
        return Err(Error::InvalidConfig("need at least 2 cap facets".into()));
    }
    let s = b / (1.0 - a);
    if s <= 1.0 {
        // The region itself is convex; the tangency point degenerates.
        return ConvexDomain::cusp(a, b);
    }
    let f = |x: f64| (1.0 - x * x).powf(s);
    let fp = |x: f64| -2.0 * s * x * (1.0 - x * x).powf(s - 1.0);
    // Tangency of the chord through (1, 0): f'(x_t)(x_t - 1) = f(x_t).
    let xt = 1.0 / (2.0 * s - 1.0);
    let m = facets + 1;
    let xs: Vec<f64> = (0..m).map(|j| xt - 2.0 * xt * j as f64 / (m - 1) as f64).collect();
    let mut verts = vec![[-1.0, 0.0], [1.0, 0.0]];
    for w in xs.windows(2) {
        let (xa, xb) = (w[0], w[1]);
        let (fa, fb, da, db) = (f(xa), f(xb), fp(xa), fp(xb));
        let x = (fb - fa + da * xa - db * xb) / (da - db);
        verts.push([x, fa + da * (x - xa)]);
    }
    ConvexDomain::polygon(verts)
}

/// Node-wise certificate of the barrier inequality: margin >= 0 means the node
/// passes. Serializes as a "node_index,x1,x2,margin" table plus a summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub family: BarrierFamily,
    pub c: f64,
    pub pass: bool,
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub worst_node: usize,
    pub worst_point: Point,
}

impl Certificate {
    pub fn dump_csv(&self, grid: &Grid) -> String {
        let mut out = String::from("node_index,x1,x2,margin\n");
        for (i, m) in self.margins.iter().enumerate() {
            let x = grid.coords[i];
            out.push_str(&format!("{i},{},{},{m}\n", x[0], x[1]));
        }
        out.push_str(&format!(
            "# family={:?} C={} nodes={} pass={} worst_margin={} worst_node={}\n",
            self.family,
            self.c,
            self.margins.len(),
            self.pass,
            self.worst_margin,
            self.worst_node
        ));
        out
    }
}

/// Evaluate the exact derivatives of the barrier at every interior node and
/// check det(D²v) (-v)^{1-p} [|Dv|² + (x·Dv - v)²]^{(q-n)/2} against g(x):
/// >= g for the subsolution, <= g for the supersolution.
pub fn verify_inequality(spec: &BarrierSpec, params: &ProblemParams, grid: &Grid) -> Certificate {
    let nq = (params.q - params.n as f64) / 2.0;
    let mut margins = Vec::with_capacity(grid.n_interior());
    let mut worst = f64::INFINITY;
    let mut worst_node = 0;
    for (i, &x) in grid.coords.iter().enumerate() {
        let (v, dv, h) = spec.jet(x);
        let det = h[0] * h[2] - h[1] * h[1];
        let g = params.g(x);
        let slack = -v;
        let margin = if slack <= 0.0 {
            // The barrier fails to be negative here; report the (negative)
            // defect directly since the fractional power is undefined.
            slack - g
        } else {
            let rho2 = norm2(dv) + (x[0] * dv[0] + x[1] * dv[1] - v).powi(2);
            let lhs = det * slack.powf(1.0 - params.p) * rho2.powf(nq);
            match spec.family {
                BarrierFamily::SubsolutionVa => lhs - g,
                BarrierFamily::SupersolutionW => g - lhs,
            }
        };
        if margin < worst {
            worst = margin;
            worst_node = i;
        }
        margins.push(margin);
    }
    Certificate {
        family: spec.family,
        c: spec.c,
        pass: worst >= 0.0,
        margins,
        worst_margin: worst,
        worst_node,
        worst_point: grid.coords.get(worst_node).copied().unwrap_or([0.0, 0.0]),
    }
}

/// Grow (subsolution) or shrink (supersolution) C until the certificate
/// passes at every interior node; at most 40 doublings/halvings.
pub fn calibrate(spec: &BarrierSpec, params: &ProblemParams, grid: &Grid) -> Result<BarrierSpec> {
    check_singular_regime(params)?;
    if !(spec.c > 0.0) {
        return Err(Error::InvalidConfig(format!("barrier constant C={} must be > 0", spec.c)));
    }
    let mut spec = spec.clone();
    for _ in 0..=40 {
        let cert = verify_inequality(&spec, params, grid);
        if cert.pass {
            return Ok(spec);
        }
        match spec.family {
            BarrierFamily::SubsolutionVa => spec.c *= 2.0,
            BarrierFamily::SupersolutionW => spec.c *= 0.5,
        }
    }
    let cert = verify_inequality(&spec, params, grid);
    Err(Error::Calibration(format!(
        "no certifying C after 40 adjustments (C={}, worst margin {} at node {} = ({}, {}))",
        spec.c, cert.worst_margin, cert.worst_node, cert.worst_point[0], cert.worst_point[1]
    )))
}

/// Which side each argument of `comparison_check` plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonRoles {
    /// u is a solved (or supersolution-side) field, v a certified subsolution.
    SolutionOverSubsolution,
    /// u is a certified supersolution, v a solved field.
    SupersolutionOverSolution,
}

/// Outcome of the comparison principle check u >= v - tol at every node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub roles: ComparisonRoles,
    pub pass: bool,
    pub worst_gap: f64,
    pub worst_node: usize,
    pub worst_point: Point,
}

/// Assert u >= v - 1e-10 node-wise (the comparison principle for the singular
/// regime, with 0 >= u >= v on the boundary assumed by the caller).
pub fn comparison_check(u: &ScalarField, v: &ScalarField, roles: ComparisonRoles) -> Result<ComparisonReport> {
    if u.grid.n_interior() != v.grid.n_interior() || u.grid.dx != v.grid.dx {
        return Err(Error::InvalidConfig("comparison_check requires matching grids".into()));
    }
    const TOL_CMP: f64 = 1e-10;
    let mut worst = f64::INFINITY;
    let mut worst_node = 0;
    for i in 0..u.values.len() {
        let gap = u.values[i] - v.values[i];
        if gap < worst {
            worst = gap;
            worst_node = i;
        }
    }
    Ok(ComparisonReport {
        roles,
        pass: worst >= -TOL_CMP,
        worst_gap: worst,
        worst_node,
        worst_point: u.grid.coords.get(worst_node).copied().unwrap_or([0.0, 0.0]),
    })
}
