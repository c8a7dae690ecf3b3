//! Cartesian discretization of a convex domain with exact-boundary
//! (Shortley-Weller) difference operators and cut-cell quadrature.
//!
//! Dirichlet data u = 0 is imposed at the true boundary: at a node whose
//! neighbor falls outside the domain, the stencil arm is shortened to the
//! exact intersection of the grid line with ∂U (offset fraction θ ∈ (0,1],
//! located by bisection on the membership predicate). Interior stencils are
//! centered second order; boundary-adjacent stencils are the non-uniform
//! three-point formulas, exact on quadratics.

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Point};
use std::sync::Arc;

/// Sparse stencil row: (interior column, coefficient). The implicit boundary
/// value 0 contributes nothing, so rows only reference interior nodes.
pub type StencilRow = Vec<(u32, f64)>;

const THETA_MIN: f64 = 1e-8;
const CUT_CELL_DEPTH: u32 = 7;

#[derive(Debug)]
pub struct Grid {
    pub domain: ConvexDomain,
    pub dx: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    /// Interior index per raster node, u32::MAX if exterior.
    index: Vec<u32>,
    /// Coordinates of interior nodes.
    pub coords: Vec<Point>,
    /// Raster (ix, iy) of interior nodes.
    pub raster: Vec<(usize, usize)>,
    pub boundary_adjacent: Vec<bool>,
    /// Per-direction boundary offset fractions θ (W,E,S,N); 1.0 at regular arms.
    pub offsets: Vec<[f64; 4]>,
    pub rows_ux: Vec<StencilRow>,
    pub rows_uy: Vec<StencilRow>,
    pub rows_uxx: Vec<StencilRow>,
    pub rows_uyy: Vec<StencilRow>,
    pub rows_uxy: Vec<StencilRow>,
    /// Midpoint-rule weights with cut-cell areas at boundary cells.
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn n_interior(&self) -> usize {
        self.coords.len()
    }

    pub fn node_index(&self, ix: isize, iy: isize) -> Option<usize> {
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            return None;
        }
        let v = self.index[iy as usize * self.nx + ix as usize];
        (v != u32::MAX).then_some(v as usize)
    }

    fn node_coord(&self, ix: usize, iy: usize) -> Point {
        [self.origin[0] + ix as f64 * self.dx, self.origin[1] + iy as f64 * self.dx]
    }

    /// Bandwidth of the stencil graph in interior ordering (for banded solves).
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for (i, rows) in [&self.rows_uxx, &self.rows_uyy, &self.rows_uxy, &self.rows_ux, &self.rows_uy]
            .iter()
            .flat_map(|r| r.iter().enumerate())
        {
            for &(j, _) in rows.iter() {
                bw = bw.max((j as isize - i as isize).unsigned_abs());
            }
        }
        bw
    }
}

/// Builds the grid for `domain` with `n` nodes along the longest axis.
///
/// Fails if the interior node set is empty or not edge-connected.
pub fn build_grid(domain: ConvexDomain, n: usize) -> Result<Arc<Grid>> {
    if n < 9 {
        return Err(Error::Grid(format!("need at least 9 nodes per axis, got {n}")));
    }
    let (lo, hi) = domain.bounding_box();
    let w = hi[0] - lo[0];
    let h = hi[1] - lo[1];
    let dx = w.max(h) / (n - 1) as f64;
    let nx = (w / dx - 1e-12).ceil() as usize + 1;
    let ny = (h / dx - 1e-12).ceil() as usize + 1;
    let origin = lo;

    let mut index = vec![u32::MAX; nx * ny];
    let mut coords = Vec::new();
    let mut raster = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let x = [origin[0] + ix as f64 * dx, origin[1] + iy as f64 * dx];
            if domain.contains(x) {
                index[iy * nx + ix] = coords.len() as u32;
                coords.push(x);
                raster.push((ix, iy));
            }
        }
    }
    if coords.is_empty() {
        return Err(Error::Grid("no interior nodes; refine the grid".into()));
    }

    let mut grid = Grid {
        domain,
        dx,
        nx,
        ny,
        origin,
        index,
        coords,
        raster,
        boundary_adjacent: Vec::new(),
        offsets: Vec::new(),
        rows_ux: Vec::new(),
        rows_uy: Vec::new(),
        rows_uxx: Vec::new(),
        rows_uyy: Vec::new(),
        rows_uxy: Vec::new(),
        weights: Vec::new(),
    };
    check_connectivity(&grid)?;
    compute_offsets(&mut grid);
    build_stencils(&mut grid);
    compute_weights(&mut grid);
    Ok(Arc::new(grid))
}

fn check_connectivity(grid: &Grid) -> Result<()> {
    let n = grid.n_interior();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1usize;
    while let Some(i) = stack.pop() {
        let (ix, iy) = grid.raster[i];
        for (dx, dy) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            if let Some(j) = grid.node_index(ix as isize + dx, iy as isize + dy) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
    }
    if count != n {
        return Err(Error::Grid(format!(
            "interior node set disconnected: reached {count} of {n} nodes"
        )));
    }
    Ok(())
}

/// θ fraction of the arm from `x` toward `x + dx·dir` at which ∂U is crossed,
/// located by bisection on membership to 1e-12 of Δx.
fn boundary_offset(domain: &ConvexDomain, x: Point, dir: Point, dx: f64) -> f64 {
    let probe = |t: f64| domain.contains([x[0] + t * dx * dir[0], x[1] + t * dx * dir[1]]);
    debug_assert!(probe(0.0));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..45 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(THETA_MIN)
}

fn compute_offsets(grid: &mut Grid) {
    let n = grid.n_interior();
    let dirs: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    let mut offsets = vec![[1.0f64; 4]; n];
    let mut adj = vec![false; n];
    for i in 0..n {
        let (ix, iy) = grid.raster[i];
        let x = grid.coords[i];
        for (d, (sx, sy)) in dirs.iter().enumerate() {
            if grid.node_index(ix as isize + sx, iy as isize + sy).is_none() {
                adj[i] = true;
                offsets[i][d] =
                    boundary_offset(&grid.domain, x, [*sx as f64, *sy as f64], grid.dx);
            }
        }
    }
    grid.offsets = offsets;
    grid.boundary_adjacent = adj;
}

/// Non-uniform three-point first/second derivative weights for arms
/// (-h_m, 0, +h_p): exact on quadratics.
fn one_dim_rows(
    col_m: Option<u32>,
    col_p: Option<u32>,
    self_col: u32,
    h_m: f64,
    h_p: f64,
) -> (StencilRow, StencilRow) {
    let denom = h_m * h_p * (h_m + h_p);
    let mut d1 = Vec::with_capacity(3);
    let mut d2 = Vec::with_capacity(3);
    // first derivative
    if let Some(c) = col_p {
        d1.push((c, h_m * h_m / denom));
    }
    if let Some(c) = col_m {
        d1.push((c, -h_p * h_p / denom));
    }
    d1.push((self_col, (h_p * h_p - h_m * h_m) / denom));
    // second derivative
    if let Some(c) = col_p {
        d2.push((c, 2.0 * h_m / denom));
    }
    if let Some(c) = col_m {
        d2.push((c, 2.0 * h_p / denom));
    }
    d2.push((self_col, -2.0 * (h_m + h_p) / denom));
    (d1, d2)
}

fn merge_scaled(into: &mut Vec<(u32, f64)>, row: &StencilRow, scale: f64) {
    for &(c, v) in row {
        match into.iter_mut().find(|(cc, _)| *cc == c) {
            Some((_, acc)) => *acc += scale * v,
            None => into.push((c, scale * v)),
        }
    }
}

fn build_stencils(grid: &mut Grid) {
    let n = grid.n_interior();
    let dx = grid.dx;
    let mut rows_ux = Vec::with_capacity(n);
    let mut rows_uy = Vec::with_capacity(n);
    let mut rows_uxx = Vec::with_capacity(n);
    let mut rows_uyy = Vec::with_capacity(n);
    for i in 0..n {
        let (ix, iy) = grid.raster[i];
        let (ix, iy) = (ix as isize, iy as isize);
        let th = grid.offsets[i];
        let col = |sx: isize, sy: isize| grid.node_index(ix + sx, iy + sy).map(|j| j as u32);
        let (d1x, d2x) =
            one_dim_rows(col(-1, 0), col(1, 0), i as u32, th[0] * dx, th[1] * dx);
        let (d1y, d2y) =
            one_dim_rows(col(0, -1), col(0, 1), i as u32, th[2] * dx, th[3] * dx);
        rows_ux.push(d1x);
        rows_uxx.push(d2x);
        rows_uy.push(d1y);
        rows_uyy.push(d2y);
    }

    // Cross derivative: standard four-point stencil where the full 3x3
    // neighborhood is interior; otherwise a nested difference of the
    // Shortley-Weller first-derivative rows (first order, interior data only).
    let mut rows_uxy = Vec::with_capacity(n);
    for i in 0..n {
        let (ix, iy) = grid.raster[i];
        let (ix, iy) = (ix as isize, iy as isize);
        let col = |sx: isize, sy: isize| grid.node_index(ix + sx, iy + sy).map(|j| j as u32);
        let full_block = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
            .iter()
            .all(|&(sx, sy)| col(sx, sy).is_some());
        let row = if full_block {
            let c = 1.0 / (4.0 * dx * dx);
            vec![
                (col(1, 1).unwrap(), c),
                (col(-1, -1).unwrap(), c),
                (col(1, -1).unwrap(), -c),
                (col(-1, 1).unwrap(), -c),
            ]
        } else {
            let mut row = Vec::new();
            let e = col(1, 0);
            let w = col(-1, 0);
            let nn = col(0, 1);
            let ss = col(0, -1);
            match (e, w) {
                (Some(e), Some(w)) => {
                    merge_scaled(&mut row, &rows_uy[e as usize], 0.5 / dx);
                    merge_scaled(&mut row, &rows_uy[w as usize], -0.5 / dx);
                }
                (Some(e), None) => {
                    merge_scaled(&mut row, &rows_uy[e as usize], 1.0 / dx);
                    merge_scaled(&mut row, &rows_uy[i], -1.0 / dx);
                }
                (None, Some(w)) => {
                    merge_scaled(&mut row, &rows_uy[i], 1.0 / dx);
                    merge_scaled(&mut row, &rows_uy[w as usize], -1.0 / dx);
                }
                (None, None) => match (nn, ss) {
                    (Some(nn), Some(ss)) => {
                        merge_scaled(&mut row, &rows_ux[nn as usize], 0.5 / dx);
                        merge_scaled(&mut row, &rows_ux[ss as usize], -0.5 / dx);
                    }
                    (Some(nn), None) => {
                        merge_scaled(&mut row, &rows_ux[nn as usize], 1.0 / dx);
                        merge_scaled(&mut row, &rows_ux[i], -1.0 / dx);
                    }
                    (None, Some(ss)) => {
                        merge_scaled(&mut row, &rows_ux[i], 1.0 / dx);
                        merge_scaled(&mut row, &rows_ux[ss as usize], -1.0 / dx);
                    }
                    (None, None) => {}
                },
            };
            row
        };
        rows_uxy.push(row);
    }

    grid.rows_ux = rows_ux;
    grid.rows_uy = rows_uy;
    grid.rows_uxx = rows_uxx;
    grid.rows_uyy = rows_uyy;
    grid.rows_uxy = rows_uxy;
}

/// Recursive quadtree estimate of |cell ∩ U| using membership samples.
/// Corner agreement decides full/empty cells (exact for convex pieces).
fn cut_area(domain: &ConvexDomain, cx: f64, cy: f64, half: f64, depth: u32) -> f64 {
    let samples = [
        [cx - half, cy - half],
        [cx + half, cy - half],
        [cx - half, cy + half],
        [cx + half, cy + half],
        [cx, cy],
        [cx - half, cy],
        [cx + half, cy],
        [cx, cy - half],
        [cx, cy + half],
    ];
    let inside = samples.iter().filter(|p| domain.contains(**p)).count();
    let area = 4.0 * half * half;
    if inside == samples.len() {
        return area;
    }
    if inside == 0 {
        return 0.0;
    }
    if depth == 0 {
        return area * inside as f64 / samples.len() as f64;
    }
    let q = half * 0.5;
    [(cx - q, cy - q), (cx + q, cy - q), (cx - q, cy + q), (cx + q, cy + q)]
        .iter()
        .map(|&(x, y)| cut_area(domain, x, y, q, depth - 1))
        .sum()
}

fn compute_weights(grid: &mut Grid) {
    let n = grid.n_interior();
    let dx = grid.dx;
    let half = 0.5 * dx;
    let mut weights = vec![0.0f64; n];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let node = grid.node_index(ix as isize, iy as isize);
            let near_interior = node.is_some()
                || (-1isize..=1)
                    .flat_map(|sy| (-1isize..=1).map(move |sx| (sx, sy)))
                    .any(|(sx, sy)| grid.node_index(ix as isize + sx, iy as isize + sy).is_some());
            if !near_interior {
                continue;
            }
            let [cx, cy] = grid.node_coord(ix, iy);
            let area = match node {
                Some(i) if !grid.boundary_adjacent[i] => {
                    let corners_in = [
                        [cx - half, cy - half],
                        [cx + half, cy - half],
                        [cx - half, cy + half],
                        [cx + half, cy + half],
                    ]
                    .iter()
                    .all(|p| grid.domain.contains(*p));
                    if corners_in {
                        dx * dx
                    } else {
                        cut_area(&grid.domain, cx, cy, half, CUT_CELL_DEPTH)
                    }
                }
                _ => cut_area(&grid.domain, cx, cy, half, CUT_CELL_DEPTH),
            };
            if area <= 0.0 {
                continue;
            }
            // Assign cut area of exterior-node cells to the nearest interior
            // neighbor so the cell cover of U is complete.
            let target = match node {
                Some(i) => Some(i),
                None => [(0isize, 1isize), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)]
                    .iter()
                    .find_map(|&(sx, sy)| grid.node_index(ix as isize + sx, iy as isize + sy)),
            };
            if let Some(t) = target {
                weights[t] += area;
            }
        }
    }
    grid.weights = weights;
}

// ---------------------------------------------------------------------------
// Fields and derived quantities
// ---------------------------------------------------------------------------

/// Grid function with one value per interior node and implicit zero trace on ∂U.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let values = grid.coords.iter().map(|&x| f(x)).collect();
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.n_interior()];
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_interior());
        ScalarField { grid, values }
    }

    /// Admissible fields are strictly negative at every interior node.
    pub fn is_admissible(&self) -> bool {
        self.values.iter().all(|&v| v.is_finite() && v < 0.0)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn scaled(&self, t: f64) -> Self {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| t * v).collect() }
    }

    pub fn linf_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Text table "x1,x2,u", one row per interior node, 17 significant digits.
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("x1,x2,u\n");
        for (x, v) in self.grid.coords.iter().zip(&self.values) {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", x[0], x[1], v));
        }
        out
    }
}

/// Per-node derivatives and the algebraic quantities of the master equation.
#[derive(Debug, Clone)]
pub struct DerivedQuantities {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub uxx: Vec<f64>,
    pub uxy: Vec<f64>,
    pub uyy: Vec<f64>,
    /// Dual height u* = x·Du - u.
    pub ustar: Vec<f64>,
    /// ρ² = |Du|² + (u*)².
    pub rho2: Vec<f64>,
    pub det: Vec<f64>,
    pub eig_min: Vec<f64>,
}

fn apply_row(row: &StencilRow, u: &[f64]) -> f64 {
    row.iter().map(|&(c, w)| w * u[c as usize]).sum()
}

pub fn apply_stencil(rows: &[StencilRow], u: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| apply_row(r, u)).collect()
}

/// Differential operators, determinant, dual height and convexity monitor.
/// Degeneracy is reported through `eig_min`, never as an error.
pub fn differentiate(u: &ScalarField) -> DerivedQuantities {
    let g = &u.grid;
    let v = &u.values;
    let n = g.n_interior();
    let ux = apply_stencil(&g.rows_ux, v);
    let uy = apply_stencil(&g.rows_uy, v);
    let uxx = apply_stencil(&g.rows_uxx, v);
    let uyy = apply_stencil(&g.rows_uyy, v);
    let uxy = apply_stencil(&g.rows_uxy, v);
    let mut ustar = Vec::with_capacity(n);
    let mut rho2 = Vec::with_capacity(n);
    let mut det = Vec::with_capacity(n);
    let mut eig_min = Vec::with_capacity(n);
    for i in 0..n {
        let x = g.coords[i];
        let us = x[0] * ux[i] + x[1] * uy[i] - v[i];
        ustar.push(us);
        rho2.push(ux[i] * ux[i] + uy[i] * uy[i] + us * us);
        det.push(uxx[i] * uyy[i] - uxy[i] * uxy[i]);
        let tr = uxx[i] + uyy[i];
        let gap = ((uxx[i] - uyy[i]).powi(2) + 4.0 * uxy[i] * uxy[i]).sqrt();
        eig_min.push(0.5 * (tr - gap));
    }
    DerivedQuantities { ux, uy, uxx, uxy, uyy, ustar, rho2, det, eig_min }
}

/// Midpoint quadrature with cut-cell weights: Σ w_i v_i.
pub fn integrate(grid: &Grid, values: &[f64]) -> f64 {
    grid.weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_disk(n: usize) -> Arc<Grid> {
        build_grid(ConvexDomain::disk(1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn disk_interior_count_matches_area() {
        let g = unit_disk(65);
        let expected = PI / (g.dx * g.dx);
        let got = g.n_interior() as f64;
        assert!(
            (got - expected).abs() / expected < 0.02,
            "interior count {got} vs area estimate {expected}"
        );
    }

    #[test]
    fn square_offsets_are_unit() {
        let square = ConvexDomain::polygon(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
            .unwrap();
        let g = build_grid(square, 33).unwrap();
        for i in 0..g.n_interior() {
            for d in 0..4 {
                assert!(
                    (g.offsets[i][d] - 1.0).abs() < 1e-11,
                    "axis-aligned boundary should give θ = 1, got {}",
                    g.offsets[i][d]
                );
            }
        }
    }

    #[test]
    fn cusp_grid_builds_and_connects() {
        let cusp = ConvexDomain::cusp(0.8, 2.0 / 3.0).unwrap();
        let g = build_grid(cusp, 129).unwrap();
        assert!(g.n_interior() > 100);
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(build_grid(ConvexDomain::disk(1.0).unwrap(), 5).is_err());
    }

    #[test]
    fn quadratic_is_differentiated_exactly() {
        let g = unit_disk(65);
        let u = ScalarField::from_fn(g.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1] - 1.0));
        let d = differentiate(&u);
        for i in 0..g.n_interior() {
            assert!((d.det[i] - 1.0).abs() < 1e-10, "det {} at node {i}", d.det[i]);
            assert!((d.uxx[i] - 1.0).abs() < 1e-10);
            assert!((d.uyy[i] - 1.0).abs() < 1e-10);
            assert!(d.uxy[i].abs() < 1e-10);
        }
        // ρ² at the origin: |Du|=0, u* = -u = 1/2, so ρ² = 1/4.
        let i0 = g
            .coords
            .iter()
            .position(|x| x[0].abs() < 1e-12 && x[1].abs() < 1e-12)
            .expect("origin is a node for odd N");
        assert_relative_eq!(d.rho2[i0], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn nonconvex_field_is_flagged() {
        let g = unit_disk(33);
        // u = x1² - x2² - c: saddle, smallest eigenvalue -2. The stencils
        // impose u = 0 on the boundary, so only check nodes whose full 3x3
        // neighborhood is interior.
        let u = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] - x[1] * x[1] - 2.0);
        let d = differentiate(&u);
        let mut checked = 0;
        for i in 0..g.n_interior() {
            let r = (g.coords[i][0].powi(2) + g.coords[i][1].powi(2)).sqrt();
            if 1.0 - r > 3.0 * g.dx {
                assert!(d.eig_min[i] < -1.0, "eig_min {} at node {i}", d.eig_min[i]);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn quadrature_values() {
        let g = unit_disk(129);
        let ones = vec![1.0; g.n_interior()];
        assert!((integrate(&g, &ones) - PI).abs() < 1e-3, "area = {}", integrate(&g, &ones));
        let w: Vec<f64> = g.coords.iter().map(|x| 1.0 - x[0] * x[0] - x[1] * x[1]).collect();
        assert!((integrate(&g, &w) - PI / 2.0).abs() < 1e-3);
        let zero = vec![0.0; g.n_interior()];
        assert_eq!(integrate(&g, &zero), 0.0);
    }

    #[test]
    fn operator_refinement_is_second_order() {
        // Smooth non-polynomial test function vanishing on ∂U.
        let f = |x: Point| (1.0 - x[0] * x[0] - x[1] * x[1]) * (0.5 * x[0] + 0.3 * x[1]).sin() - 0.5;
        let exact_uxx = |x: Point| {
            // d²/dx² of the expression above via symbolic expansion
            let s = (0.5 * x[0] + 0.3 * x[1]).sin();
            let c = (0.5 * x[0] + 0.3 * x[1]).cos();
            let r2 = x[0] * x[0] + x[1] * x[1];
            -2.0 * s + 2.0 * (-2.0 * x[0]) * 0.5 * c + (1.0 - r2) * (-0.25 * s)
        };
        let mut errs = Vec::new();
        for n in [33usize, 65] {
            let g = unit_disk(n);
            let u = ScalarField::from_fn(g.clone(), f);
            let d = differentiate(&u);
            let mut e = 0.0f64;
            for i in 0..g.n_interior() {
                if !g.boundary_adjacent[i] {
                    e = e.max((d.uxx[i] - exact_uxx(g.coords[i])).abs());
                }
            }
            errs.push(e);
        }
        assert!(errs[0] / errs[1] >= 3.0, "refinement ratio {:?}", errs);
    }

    #[test]
    fn quadrature_refinement_converges() {
        let f = |x: Point| (1.0 - x[0] * x[0] - x[1] * x[1]).powi(2);
        // ∫ (1-r²)² over unit disk = π/3.
        let exact = PI / 3.0;
        let mut errs = Vec::new();
        for n in [65usize, 129] {
            let g = unit_disk(n);
            let w: Vec<f64> = g.coords.iter().map(|&x| f(x)).collect();
            errs.push((integrate(&g, &w) - exact).abs());
        }
        assert!(errs[0] / errs[1] > 3.0, "quadrature errors {:?}", errs);
    }

    #[test]
    fn field_dump_format() {
        let g = unit_disk(9);
        let u = ScalarField::from_fn(g, |x| x[0] - 1.0);
        let dump = u.dump_csv();
        let mut lines = dump.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,u");
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 3);
    }
}
