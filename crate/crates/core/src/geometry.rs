//! Convex domains in the chart hyperplane and the sphere/chart transform.
//!
//! The whole artifact computes in Euclidean chart coordinates `x ∈ U ⊂ ℝ^{n-1}`
//! (here the chart dimension is 2). Spherical objects — the support function
//! `h` on `Ω ⊂ S^{n-1}` and a spherical density `f` — exist only through the
//! central projection `π(x) = (x + e)/√(1+|x|²)` and the relation
//! `u(x) = √(1+|x|²) · h(π(x))`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

pub fn norm2(x: Point) -> f64 {
    x[0] * x[0] + x[1] * x[1]
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// A bounded convex region of the chart hyperplane with exact boundary queries.
///
/// Membership uses strict inequalities, so boundary points are never interior.
/// The cusp family stores `(a, b)` and derives `s = b/(1-a)`; its membership is
/// evaluated by exact inequality, never by polygonal approximation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexDomain {
    Disk { radius: f64 },
    Polygon { vertices: Vec<Point> },
    Superellipse { a1: f64, a2: f64, m: f64 },
    Cusp { a: f64, b: f64 },
}

impl ConvexDomain {
    pub fn disk(radius: f64) -> Result<Self> {
        if radius > 0.0 && radius.is_finite() {
            Ok(ConvexDomain::Disk { radius })
        } else {
            Err(Error::InvalidConfig(format!("disk radius must be positive, got {radius}")))
        }
    }

    /// Vertices must be in counterclockwise order with all cross products >= 0.
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidConfig("polygon needs at least 3 vertices".into()));
        }
        let k = vertices.len();
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let c = vertices[(i + 2) % k];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "polygon not convex/counterclockwise at vertex {i} (cross product {cross})"
                )));
            }
        }
        let dom = ConvexDomain::Polygon { vertices };
        if dom.measure() <= 0.0 {
            return Err(Error::InvalidConfig("polygon has zero area".into()));
        }
        Ok(dom)
    }

    pub fn superellipse(a1: f64, a2: f64, m: f64) -> Result<Self> {
        if a1 > 0.0 && a2 > 0.0 && m >= 1.0 {
            Ok(ConvexDomain::Superellipse { a1, a2, m })
        } else {
            Err(Error::InvalidConfig(format!(
                "superellipse needs a1,a2 > 0 and m >= 1, got ({a1},{a2},{m})"
            )))
        }
    }

    /// The region `{ |x1| < 1, 0 < x2 < (1-x1²)^s }` with `s = b/(1-a)`,
    /// accepted whenever `s >= 1`.
    pub fn cusp(a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < 1.0 && b > 0.0) {
            return Err(Error::InvalidConfig(format!("cusp needs 0<a<1 and b>0, got ({a},{b})")));
        }
        let s = b / (1.0 - a);
        if s < 1.0 {
            return Err(Error::InvalidConfig(format!("cusp exponent s = b/(1-a) = {s} < 1")));
        }
        Ok(ConvexDomain::Cusp { a, b })
    }

    pub fn cusp_exponent(&self) -> Option<f64> {
        match self {
            ConvexDomain::Cusp { a, b } => Some(b / (1.0 - a)),
            _ => None,
        }
    }

    /// Strict interior membership. Total on the plane.
    pub fn contains(&self, x: Point) -> bool {
        match self {
            ConvexDomain::Disk { radius } => norm2(x) < radius * radius,
            ConvexDomain::Polygon { vertices } => {
                let k = vertices.len();
                (0..k).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % k];
                    (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) > 0.0
                })
            }
            ConvexDomain::Superellipse { a1, a2, m } => {
                (x[0] / a1).abs().powf(*m) + (x[1] / a2).abs().powf(*m) < 1.0
            }
            ConvexDomain::Cusp { a, b } => {
                let s = b / (1.0 - a);
                x[0].abs() < 1.0 && x[1] > 0.0 && x[1] < (1.0 - x[0] * x[0]).powf(s)
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` of the closure.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            ConvexDomain::Disk { radius } => ([-radius, -radius], [*radius, *radius]),
            ConvexDomain::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
            ConvexDomain::Superellipse { a1, a2, .. } => ([-a1, -a2], [*a1, *a2]),
            ConvexDomain::Cusp { .. } => ([-1.0, 0.0], [1.0, 1.0]),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexDomain::Disk { radius } => 2.0 * radius,
            ConvexDomain::Polygon { vertices } => {
                let mut d = 0.0_f64;
                for i in 0..vertices.len() {
                    for j in i + 1..vertices.len() {
                        d = d.max(dist(vertices[i], vertices[j]));
                    }
                }
                d
            }
            ConvexDomain::Superellipse { .. } => {
                // Farthest boundary pair is antipodal by symmetry.
                let pts = self.boundary_samples(2048);
                2.0 * pts.iter().map(|p| norm2(*p).sqrt()).fold(0.0_f64, f64::max)
            }
            ConvexDomain::Cusp { .. } => 2.0,
        }
    }

    /// Area |U|. Closed form where available, composite Simpson otherwise.
    pub fn measure(&self) -> f64 {
        match self {
            ConvexDomain::Disk { radius } => std::f64::consts::PI * radius * radius,
            ConvexDomain::Polygon { vertices } => {
                let k = vertices.len();
                0.5 * (0..k)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % k];
                        a[0] * b[1] - b[0] * a[1]
                    })
                    .sum::<f64>()
            }
            ConvexDomain::Superellipse { a1, a2, m } => {
                2.0 * a2 * simpson(-a1, *a1, 1 << 14, |t| {
                    (1.0 - (t / a1).abs().powf(*m)).max(0.0).powf(1.0 / m)
                })
            }
            ConvexDomain::Cusp { a, b } => {
                let s = b / (1.0 - a);
                simpson(-1.0, 1.0, 1 << 14, |t| (1.0 - t * t).max(0.0).powf(s))
            }
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: Point) -> f64 {
        match self {
            ConvexDomain::Disk { radius } => radius - norm2(x).sqrt(),
            ConvexDomain::Polygon { vertices } => {
                let k = vertices.len();
                (0..k)
                    .map(|i| segment_distance(x, vertices[i], vertices[(i + 1) % k]))
                    .fold(f64::INFINITY, f64::min)
            }
            ConvexDomain::Superellipse { .. } => self.sampled_boundary_distance(x),
            ConvexDomain::Cusp { .. } => {
                let curve = self.sampled_boundary_distance(x);
                // Bottom face y = 0 plus the curved top.
                curve.min(x[1].abs())
            }
        }
    }

    fn boundary_samples(&self, count: usize) -> Vec<Point> {
        match self {
            ConvexDomain::Superellipse { a1, a2, m } => (0..count)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * (i as f64) / (count as f64);
                    let (s, c) = t.sin_cos();
                    [
                        a1 * c.signum() * c.abs().powf(2.0 / m),
                        a2 * s.signum() * s.abs().powf(2.0 / m),
                    ]
                })
                .collect(),
            ConvexDomain::Cusp { a, b } => {
                let s = b / (1.0 - a);
                (0..=count)
                    .map(|i| {
                        let t = -1.0 + 2.0 * (i as f64) / (count as f64);
                        [t, (1.0 - t * t).max(0.0).powf(s)]
                    })
                    .collect()
            }
            _ => unreachable!("sampled boundary only used for superellipse/cusp"),
        }
    }

    fn sampled_boundary_distance(&self, x: Point) -> f64 {
        let pts = self.boundary_samples(512);
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for (i, p) in pts.iter().enumerate() {
            let d = dist(x, *p);
            if d < best {
                best = d;
                best_i = i;
            }
        }
        // Golden-section refinement around the best sample.
        let lo = if best_i == 0 { 0 } else { best_i - 1 };
        let hi = (best_i + 1).min(pts.len() - 1);
        let fine = 200;
        for j in 0..=fine {
            let t = j as f64 / fine as f64;
            let p = [
                pts[lo][0] + t * (pts[hi][0] - pts[lo][0]),
                0.0,
            ];
            // Re-evaluate on the true boundary, parameterized by the first coordinate
            // (cusp) or by re-projection (superellipse handled by denser local sampling).
            let q = self.local_boundary_point(p[0], pts[lo], pts[hi], t);
            best = best.min(dist(x, q));
        }
        best
    }

    fn local_boundary_point(&self, x1: f64, lo: Point, hi: Point, t: f64) -> Point {
        match self {
            ConvexDomain::Cusp { a, b } => {
                let s = b / (1.0 - a);
                let x1 = x1.clamp(-1.0, 1.0);
                [x1, (1.0 - x1 * x1).max(0.0).powf(s)]
            }
            ConvexDomain::Superellipse { a1, a2, m } => {
                // Interpolate the boundary parameter, then re-project radially.
                let p = [lo[0] + t * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])];
                let v = ((p[0] / a1).abs().powf(*m) + (p[1] / a2).abs().powf(*m)).powf(1.0 / m);
                if v > 0.0 {
                    [p[0] / v, p[1] / v]
                } else {
                    p
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConvexDomain::Disk { .. } => "disk",
            ConvexDomain::Polygon { .. } => "polygon",
            ConvexDomain::Superellipse { .. } => "superellipse",
            ConvexDomain::Cusp { .. } => "cusp",
        }
    }
}

fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len2 = norm2(ab);
    let t = if len2 > 0.0 { ((ax[0] * ab[0] + ax[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    dist(x, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = panels.max(2) & !1; // even
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

// ---------------------------------------------------------------------------
// Chart transform
// ---------------------------------------------------------------------------

/// Central projection of the chart hyperplane onto the unit sphere.
///
/// The pole `e` is a unit vector in ℝ^n; chart coordinates live in an
/// orthonormal basis of `e^⊥` obtained by the Householder reflection taking
/// the last coordinate axis to `e`.
#[derive(Debug, Clone)]
pub struct Chart {
    /// Ambient dimension n (chart dimension is n-1).
    pub n: usize,
    pub pole: Vec<f64>,
    /// Orthonormal basis of `pole^⊥`, one column per chart coordinate.
    basis: Vec<Vec<f64>>,
}

impl Chart {
    pub fn new(n: usize, pole: Vec<f64>) -> Result<Self> {
        if pole.len() != n {
            return Err(Error::InvalidConfig(format!(
                "pole has dimension {}, expected {n}",
                pole.len()
            )));
        }
        let norm: f64 = pole.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!("pole must be a unit vector, |e| = {norm}")));
        }
        // Householder reflection H with H e_n = pole; its first n-1 columns
        // span pole^⊥. Degenerates to identity when pole = e_n.
        let mut w: Vec<f64> = pole.clone();
        w[n - 1] -= 1.0;
        let w2: f64 = w.iter().map(|v| v * v).sum();
        let mut basis = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let mut col = vec![0.0; n];
            col[j] = 1.0;
            if w2 > 1e-30 {
                let scale = 2.0 * w[j] / w2;
                for i in 0..n {
                    col[i] -= scale * w[i];
                }
            }
            basis.push(col);
        }
        Ok(Chart { n, pole, basis })
    }

    /// Default chart: pole on the last coordinate axis.
    pub fn canonical(n: usize) -> Self {
        let mut pole = vec![0.0; n];
        pole[n - 1] = 1.0;
        Chart::new(n, pole).expect("canonical pole is unit")
    }

    /// π(x) = (x + e)/√(1+|x|²), a unit vector; π(0) = e.
    pub fn chart_point(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n - 1);
        let scale = 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let mut y = self.pole.clone();
        for (j, &xj) in x.iter().enumerate() {
            for i in 0..self.n {
                y[i] += xj * self.basis[j][i];
            }
        }
        for v in y.iter_mut() {
            *v *= scale;
        }
        y
    }

    /// Conformal factor √(1+|x|²) relating u and h: u(x) = √(1+|x|²) h(π(x)).
    pub fn conformal_factor(x: &[f64]) -> f64 {
        (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Chart volume element (1+|x|²)^{-n/2} for spherical quadrature.
    ///
    /// Not displayed in the source formulas; validated numerically against
    /// closed-form spherical cap areas before use (see the oracle module).
    pub fn volume_element(x: &[f64], n: usize) -> f64 {
        (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(-(n as f64) / 2.0)
    }
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySide {
    /// g, living on U in the chart.
    EuclideanG,
    /// f, living on Ω on the sphere (parameterized by chart coordinates).
    SphericalF,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityFamily {
    Constant { value: f64 },
    Bump { center: Point, width: f64, amplitude: f64, floor: f64 },
}

impl DensityFamily {
    fn eval(&self, x: Point) -> f64 {
        match self {
            DensityFamily::Constant { value } => *value,
            DensityFamily::Bump { center, width, amplitude, floor } => {
                let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                floor + amplitude * (-d2 / (2.0 * width * width)).exp()
            }
        }
    }

    fn strictly_positive(&self) -> bool {
        match self {
            DensityFamily::Constant { value } => *value > 0.0,
            DensityFamily::Bump { width, amplitude, floor, .. } => {
                *floor > 0.0 && *amplitude >= 0.0 && *width > 0.0
            }
        }
    }
}

/// A strictly positive density, evaluable at every chart point.
///
/// Pulled-back specs carry the conformal exponent (n+p)/2 so that
/// `g(x) = f(π(x)) (1+|x|²)^{-(n+p)/2}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySpec {
    pub side: DensitySide,
    pub family: DensityFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_exponent: Option<f64>,
}

impl DensitySpec {
    pub fn constant(side: DensitySide, value: f64) -> Result<Self> {
        let spec = DensitySpec {
            side,
            family: DensityFamily::Constant { value },
            conformal_exponent: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.family.strictly_positive() {
            Ok(())
        } else {
            Err(Error::InvalidConfig("density must be strictly positive".into()))
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        let base = self.family.eval(x);
        match self.conformal_exponent {
            Some(e) => base * (1.0 + norm2(x)).powf(-e),
            None => base,
        }
    }
}

/// g(x) = f(π(x)) (1+|x|²)^{-(n+p)/2}. Rejects non-positive f.
pub fn pull_back_density(f: &DensitySpec, n: usize, p: f64) -> Result<DensitySpec> {
    if f.side != DensitySide::SphericalF {
        return Err(Error::InvalidConfig("pull_back_density expects a spherical-side density".into()));
    }
    f.validate()?;
    Ok(DensitySpec {
        side: DensitySide::EuclideanG,
        family: f.family.clone(),
        conformal_exponent: Some((n as f64 + p) / 2.0),
    })
}

/// Inverse push-forward: recovers f(π(x)) from a pulled-back g.
pub fn push_forward_density(g: &DensitySpec, x: Point) -> Result<f64> {
    match g.conformal_exponent {
        Some(e) => Ok(g.eval(x) * (1.0 + norm2(x)).powf(e)),
        None => Err(Error::InvalidConfig("density was not produced by pull_back_density".into())),
    }
}

// ---------------------------------------------------------------------------
// Spherical field
// ---------------------------------------------------------------------------

/// Samples of a support function h at chart points π(x).
///
/// Interior samples are negative; the implicit boundary trace is zero.
#[derive(Debug, Clone)]
pub struct SphericalField {
    pub chart: Chart,
    /// Chart coordinates of the sample points.
    pub chart_coords: Vec<Point>,
    /// h(π(x)) per sample.
    pub values: Vec<f64>,
}

impl SphericalField {
    /// h(π(x)) = u(x)/√(1+|x|²).
    pub fn from_chart_values(chart: Chart, coords: Vec<Point>, u_values: &[f64]) -> Self {
        let values = coords
            .iter()
            .zip(u_values)
            .map(|(x, &u)| u / Chart::conformal_factor(x))
            .collect();
        SphericalField { chart, chart_coords: coords, values }
    }

    /// u(x) = √(1+|x|²) h(π(x)); exact inverse of `from_chart_values`.
    pub fn to_chart_values(&self) -> Vec<f64> {
        self.chart_coords
            .iter()
            .zip(&self.values)
            .map(|(x, &h)| h * Chart::conformal_factor(x))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn chart_point_fixed_values() {
        let chart = Chart::canonical(3);
        let e = chart.chart_point(&[0.0, 0.0]);
        assert_eq!(e, vec![0.0, 0.0, 1.0]);
        let p = chart.chart_point(&[1.0, 0.0]);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(p[0], s, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(p[2], s, epsilon = 1e-15);
    }

    #[test]
    fn chart_point_unit_norm_and_injective() {
        let chart = Chart::canonical(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        for _ in 0..100 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let y = chart.chart_point(&x);
            let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
            pts.push((x, y));
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let dx = dist(pts[i].0, pts[j].0);
                let dy: f64 = pts[i]
                    .1
                    .iter()
                    .zip(&pts[j].1)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if dx > 1e-9 {
                    assert!(dy > 0.0, "π not injective at sample pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn chart_with_tilted_pole() {
        let pole = {
            let v = [1.0, 1.0, 1.0];
            let n = 3f64.sqrt();
            vec![v[0] / n, v[1] / n, v[2] / n]
        };
        let chart = Chart::new(3, pole.clone()).unwrap();
        let e = chart.chart_point(&[0.0, 0.0]);
        for k in 0..3 {
            assert_relative_eq!(e[k], pole[k], epsilon = 1e-14);
        }
        // Basis columns orthonormal and orthogonal to the pole.
        let y = chart.chart_point(&[0.3, -0.7]);
        let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn pull_back_constant_values() {
        let f = DensitySpec::constant(DensitySide::SphericalF, 1.0).unwrap();
        // n=3, p=0: g(0) = 1, g at |x|=1 is 2^{-3/2}.
        let g = pull_back_density(&f, 3, 0.0).unwrap();
        assert_relative_eq!(g.eval([0.0, 0.0]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(g.eval([1.0, 0.0]), 2f64.powf(-1.5), epsilon = 1e-15);
        // n=3, p=1: exponent -(3+1)/2 = -2, g = 1/4 at |x|=1.
        let g = pull_back_density(&f, 3, 1.0).unwrap();
        assert_relative_eq!(g.eval([0.0, 1.0]), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn pull_back_rejects_nonpositive() {
        let f = DensitySpec {
            side: DensitySide::SphericalF,
            family: DensityFamily::Constant { value: -1.0 },
            conformal_exponent: None,
        };
        assert!(pull_back_density(&f, 3, 0.0).is_err());
    }

    #[test]
    fn pull_back_round_trip() {
        let f = DensitySpec {
            side: DensitySide::SphericalF,
            family: DensityFamily::Bump {
                center: [0.2, -0.1],
                width: 0.5,
                amplitude: 2.0,
                floor: 0.3,
            },
            conformal_exponent: None,
        };
        let g = pull_back_density(&f, 3, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let back = push_forward_density(&g, x).unwrap();
            assert_relative_eq!(back, f.eval(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn support_field_round_trip() {
        let chart = Chart::canonical(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let coords: Vec<Point> =
            (0..100).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let u: Vec<f64> = coords.iter().map(|x| -(1.0 - 0.2 * norm2(*x))).collect();
        let h = SphericalField::from_chart_values(chart, coords.clone(), &u);
        assert!(h.values.iter().all(|&v| v < 0.0));
        let back = h.to_chart_values();
        for (a, b) in back.iter().zip(&u) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        // u(0) = -1 gives h(e) = -1; u = -sqrt(1+|x|^2) gives h = -1.
        let h0 = SphericalField::from_chart_values(
            Chart::canonical(3),
            vec![[0.0, 0.0], [0.7, -0.4]],
            &[-1.0, -(1.0f64 + 0.49 + 0.16).sqrt()],
        );
        assert_relative_eq!(h0.values[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(h0.values[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn domain_invariants() {
        let square =
            ConvexDomain::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
                .unwrap();
        assert!(square.contains([0.0, 0.0]));
        assert!(!square.contains([1.0, 0.0]));
        assert_relative_eq!(square.measure(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(square.diameter(), 8f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(square.boundary_distance([0.25, 0.0]), 0.75, epsilon = 1e-12);

        let cw = ConvexDomain::polygon(vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]]);
        assert!(cw.is_err());

        let disk = ConvexDomain::disk(2.0).unwrap();
        assert_relative_eq!(disk.measure(), 4.0 * std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(disk.boundary_distance([1.0, 0.0]), 1.0, epsilon = 1e-12);

        let se = ConvexDomain::superellipse(1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(se.measure(), std::f64::consts::PI, epsilon = 1e-4);

        let cusp = ConvexDomain::cusp(0.8, 2.0 / 3.0).unwrap();
        assert_relative_eq!(cusp.cusp_exponent().unwrap(), 10.0 / 3.0, epsilon = 1e-14);
        assert!(cusp.contains([0.0, 0.5]));
        assert!(!cusp.contains([0.9, 0.5]));
        // s < 1 rejected
        assert!(ConvexDomain::cusp(0.1, 0.5).is_err());
    }
}
