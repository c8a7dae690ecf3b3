//! TOML run configuration: problem exponents, domain and density catalogs,
//! grid size, tolerance overrides and per-subcommand options.

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DensityFamily, DensitySide, DensitySpec, Point};
use crate::problem::ProblemParams;
use crate::solver::elliptic::SolverOptions;
use crate::solver::flow::FlowOptions;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub continuation: ContinuationSection,
    #[serde(default)]
    pub holder: HolderSection,
    #[serde(default)]
    pub barriers: BarrierSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            problem: ProblemSection::default(),
            domain: DomainSection::default(),
            grid: GridSection::default(),
            density: DensitySection::default(),
            tolerances: ToleranceSection::default(),
            flow: FlowSection::default(),
            continuation: ContinuationSection::default(),
            holder: HolderSection::default(),
            barriers: BarrierSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { n: 3, p: 1.0, q: 3.0, eps: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    /// disk | polygon | superellipse | cusp
    pub kind: String,
    pub radius: f64,
    #[serde(default)]
    pub vertices: Vec<Point>,
    pub a1: f64,
    pub a2: f64,
    pub m: f64,
    /// Cusp exponents (Lemma 4.4 construction).
    pub a: f64,
    pub b: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            kind: "disk".into(),
            radius: 1.0,
            vertices: Vec::new(),
            a1: 1.0,
            a2: 1.0,
            m: 4.0,
            a: 0.8,
            b: 2.0 / 3.0,
        }
    }
}

impl DomainSection {
    pub fn build(&self) -> Result<ConvexDomain> {
        match self.kind.as_str() {
            "disk" => ConvexDomain::disk(self.radius),
            "polygon" => ConvexDomain::polygon(self.vertices.clone()),
            "superellipse" => ConvexDomain::superellipse(self.a1, self.a2, self.m),
            "cusp" => ConvexDomain::cusp(self.a, self.b),
            other => Err(Error::InvalidConfig(format!(
                "unknown domain kind '{other}' (disk | polygon | superellipse | cusp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 65 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    /// euclidean_g | spherical_f (the latter is pulled back to the chart).
    pub side: String,
    /// constant | bump
    pub family: String,
    pub value: f64,
    pub center: Point,
    pub width: f64,
    pub amplitude: f64,
    pub floor: f64,
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection {
            side: "euclidean_g".into(),
            family: "constant".into(),
            value: 1.0,
            center: [0.0, 0.0],
            width: 0.5,
            amplitude: 1.0,
            floor: 0.5,
        }
    }
}

impl DensitySection {
    pub fn build(&self, n: usize, p: f64) -> Result<DensitySpec> {
        let side = match self.side.as_str() {
            "euclidean_g" => DensitySide::EuclideanG,
            "spherical_f" => DensitySide::SphericalF,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown density side '{other}' (euclidean_g | spherical_f)"
                )))
            }
        };
        let family = match self.family.as_str() {
            "constant" => DensityFamily::Constant { value: self.value },
            "bump" => DensityFamily::Bump {
                center: self.center,
                width: self.width,
                amplitude: self.amplitude,
                floor: self.floor,
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown density family '{other}' (constant | bump)"
                )))
            }
        };
        let spec = DensitySpec { side, family, conformal_exponent: None };
        spec.validate()?;
        match side {
            DensitySide::EuclideanG => Ok(spec),
            DensitySide::SphericalF => crate::geometry::pull_back_density(&spec, n, p),
        }
    }
}

/// Optional overrides of the Newton tolerances.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    pub tol_newton: Option<f64>,
    pub tol_convex: Option<f64>,
    pub max_iters: Option<usize>,
    pub clamp: Option<f64>,
    pub step_min: Option<f64>,
}

impl ToleranceSection {
    pub fn build(&self) -> Result<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(v) = self.tol_newton {
            opts.tol_newton = v;
        }
        if let Some(v) = self.tol_convex {
            opts.tol_convex = v;
        }
        if let Some(v) = self.max_iters {
            opts.max_iters = v;
        }
        if let Some(v) = self.clamp {
            opts.clamp = v;
        }
        if let Some(v) = self.step_min {
            opts.step_min = v;
        }
        if opts.tol_newton <= 0.0 || opts.clamp <= 0.0 || opts.step_min <= 0.0 {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub tol_steady: Option<f64>,
    pub t_max: Option<f64>,
    pub dt_max: Option<f64>,
    pub max_steps: Option<usize>,
    pub history_stride: Option<usize>,
}

impl FlowSection {
    pub fn build(&self) -> Result<FlowOptions> {
        let mut opts = FlowOptions::default();
        if let Some(v) = self.tol_steady {
            opts.tol_steady = v;
        }
        if let Some(v) = self.t_max {
            opts.t_max = v;
        }
        if let Some(v) = self.dt_max {
            opts.dt_max = v;
        }
        if let Some(v) = self.max_steps {
            opts.max_steps = v;
        }
        if let Some(v) = self.history_stride {
            opts.history_stride = v.max(1);
        }
        if opts.tol_steady <= 0.0 || opts.t_max <= 0.0 || opts.dt_max <= 0.0 {
            return Err(Error::InvalidConfig("flow tolerances must be positive".into()));
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationSection {
    /// eps | s
    pub kind: String,
    /// Strictly decreasing ε schedule; default halves 0.5 down to ~1e-4.
    pub eps_values: Vec<f64>,
    /// Strictly increasing s schedule for the critical-case continuation.
    pub s_values: Vec<f64>,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        let mut eps_values = Vec::new();
        let mut e = 0.5;
        while e >= 1e-4 {
            eps_values.push(e);
            e *= 0.5;
        }
        ContinuationSection { kind: "eps".into(), eps_values, s_values: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderSection {
    /// all_nodes | ray
    pub probe: String,
    pub z0: Point,
    pub dir: Point,
    /// Optional [low, high] acceptance band for the fitted slope.
    pub band: Option<[f64; 2]>,
    /// Minimum R² demanded of the fit when a band is set.
    pub min_r_squared: f64,
    /// Optional [d_min, d_max] fit window; must lie inside [3Δx, 0.1·diam].
    pub window: Option<[f64; 2]>,
}

impl Default for HolderSection {
    fn default() -> Self {
        HolderSection {
            probe: "all_nodes".into(),
            z0: [0.0, 0.0],
            dir: [0.0, 1.0],
            band: None,
            min_r_squared: 0.99,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSection {
    /// subsolution | supersolution
    pub family: String,
    /// Target exponent a for the supersolution (Lemma 4.4).
    pub a: f64,
    /// Frame for the subsolution; defaults to the bottom of a disk domain.
    pub z0: Option<Point>,
    pub normal: Point,
}

impl Default for BarrierSection {
    fn default() -> Self {
        BarrierSection { family: "subsolution".into(), a: 0.8, z0: None, normal: [0.0, 1.0] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))
    }

    /// Problem parameters with the density resolved to the euclidean side.
    pub fn params(&self) -> Result<ProblemParams> {
        let density = self.density.build(self.problem.n, self.problem.p)?;
        ProblemParams::new(self.problem.n, self.problem.p, self.problem.q, self.problem.eps, density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_the_golden_instance() {
        let cfg = RunConfig::default();
        let params = cfg.params().unwrap();
        assert_eq!((params.n, params.p, params.q, params.eps), (3, 1.0, 3.0, 0.0));
        assert!(matches!(cfg.domain.build().unwrap(), ConvexDomain::Disk { .. }));
        assert_eq!(cfg.grid.n, 65);
    }

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let cfg = RunConfig::parse(
            "seed = 7\n[problem]\nn = 3\np = 0.0\nq = 3.0\neps = 0.5\n\
             [domain]\nkind = \"cusp\"\na = 0.8\nb = 0.6666666666666666\n\
             [grid]\nn = 33\n[tolerances]\ntol_newton = 1e-8\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.grid.n, 33);
        assert_eq!(cfg.tolerances.build().unwrap().tol_newton, 1e-8);
        assert!(cfg.domain.build().unwrap().cusp_exponent().is_some());
        assert!(RunConfig::parse("[problem]\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("[domain]\nkind = \"torus\"\n").unwrap().domain.build().is_err());
    }

    #[test]
    fn spherical_density_is_pulled_back() {
        let cfg = RunConfig::parse("[density]\nside = \"spherical_f\"\nvalue = 2.0\n").unwrap();
        let params = cfg.params().unwrap();
        // Pulled-back density decays away from the pole.
        assert!(params.g([0.9, 0.0]) < params.g([0.0, 0.0]));
    }
}
