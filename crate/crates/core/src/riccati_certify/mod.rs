//! Disk enclosures for solutions of y' = V - y^2.
//!
//! A disk with center m(u) and radius R(u) stays invariant under the flow when
//! R' = -2R Re m + delta_R and m' = V - m^2 - R^2 + delta_m with delta_R >= |delta_m|.
//! Centers are taken piecewise linear between grid nodes, so m' is exact on each cell and
//! delta_m is bounded cell by cell from samples plus a Lipschitz allowance.

pub mod families;

pub use families::{potential_families, PotentialFamily, RandomSmooth, Tabulated};

use crate::error::{Error, Result};
use crate::numerics::ode::{dopri5, OdeError, OdeOptions};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::C64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Complex potential on the real line.
pub trait ComplexPotential: Send + Sync {
    fn value(&self, u: f64) -> C64;

    fn derivative(&self, u: f64) -> C64 {
        let h = 1e-3 * (1.0 + u.abs());
        (self.value(u - 2.0 * h) - 8.0 * self.value(u - h) + 8.0 * self.value(u + h) - self.value(u + 2.0 * h)) / (12.0 * h)
    }
}

/// Closure-backed potential.
pub struct FnPotential<F>(pub F);

impl<F: Fn(f64) -> C64 + Send + Sync> ComplexPotential for FnPotential<F> {
    fn value(&self, u: f64) -> C64 {
        (self.0)(u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub m: C64,
    pub r: f64,
}

impl Disk {
    pub fn new(m: C64, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParams(format!("disk radius must be finite and non-negative, got {r}")));
        }
        Ok(Disk { m, r })
    }

    pub fn contains(&self, y: C64) -> bool {
        (y - self.m).norm() <= self.r
    }
}

#[derive(Clone)]
pub struct RiccatiProblem {
    pub potential: Arc<dyn ComplexPotential>,
    pub u0: f64,
    pub u1: f64,
    pub y0: C64,
    pub initial_disk: Disk,
}

impl RiccatiProblem {
    pub fn new(potential: Arc<dyn ComplexPotential>, u0: f64, u1: f64, y0: C64, initial_disk: Disk) -> Result<Self> {
        if !(u1 > u0) {
            return Err(Error::InvalidParams(format!("need u0 < u1, got [{u0}, {u1}]")));
        }
        if !initial_disk.contains(y0) {
            return Err(Error::InvalidParams(format!("y0 = {y0} lies outside the initial disk")));
        }
        Ok(RiccatiProblem { potential, u0, u1, y0, initial_disk })
    }
}

/// Reference solution of the Riccati equation at the (ascending) grid nodes.
pub fn riccati_flow(problem: &RiccatiProblem, grid: &[f64]) -> Result<Vec<C64>> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) || grid[0] < problem.u0 {
        return Err(Error::InvalidParams("Riccati grid must be ascending and start at or after u0".into()));
    }
    let v = problem.potential.clone();
    let f = move |u: f64, y: &[f64; 2]| {
        let z = C64::new(y[0], y[1]);
        let d = v.value(u) - z * z;
        [d.re, d.im]
    };
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
    let blowup = 1e8 * (1.0 + problem.y0.norm());
    let mut out = Vec::with_capacity(grid.len());
    let mut next = 0;
    while next < grid.len() && grid[next] == problem.u0 {
        out.push(problem.y0);
        next += 1;
    }
    let mut last_t = problem.u0;
    let mut bracket = None;
    let res = dopri5(f, problem.u0, [problem.y0.re, problem.y0.im], grid[grid.len() - 1], &opts, |st| {
        while next < grid.len() && st.contains(grid[next]) {
            let y = st.eval(grid[next]);
            out.push(C64::new(y[0], y[1]));
            next += 1;
        }
        let e = st.end_state();
        if !(e[0].hypot(e[1]) < blowup) {
            bracket = Some((st.t_old, st.t_new));
            return false;
        }
        last_t = st.t_new;
        true
    });
    match res {
        Ok(_) => Ok(out),
        Err(OdeError::Stopped(_)) => {
            let (lo, hi) = bracket.unwrap_or((last_t, last_t));
            Err(Error::Pole { lo, hi })
        }
        Err(OdeError::NonFinite(t)) | Err(OdeError::StepTooSmall(t)) => Err(Error::Pole { lo: last_t, hi: t }),
        Err(e) => Err(e.into()),
    }
}

/// m(u) = -sqrt(V) - V'/(4V), the square root continued along the grid. At the first node
/// the branch is chosen so that Re m has the sign of Re y0 (negative when Re y0 = 0).
pub fn wkb_center(v: &dyn ComplexPotential, grid: &[f64], y0: C64) -> Result<Vec<C64>> {
    let vals: Vec<C64> = grid.iter().map(|&u| v.value(u)).collect();
    let vmax = vals.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if let Some(i) = vals.iter().position(|z| z.norm() <= 0.1 * vmax) {
        return Err(Error::TurningPoint { u: grid[i] });
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut prev: Option<C64> = None;
    for (&u, &vu) in grid.iter().zip(&vals) {
        let mut q = vu.sqrt();
        match prev {
            None => {
                if y0.re != 0.0 && (-q).re.signum() != y0.re.signum() {
                    q = -q;
                }
            }
            Some(p) => {
                if (q - p).norm() > (q + p).norm() {
                    q = -q;
                }
            }
        }
        prev = Some(q);
        out.push(-q - v.derivative(u) / (4.0 * vu));
    }
    Ok(out)
}

/// Source of a center path on a given grid.
pub trait CenterPath: Send + Sync {
    fn on_grid(&self, v: &dyn ComplexPotential, grid: &[f64], y0: C64) -> Result<Vec<C64>>;
}

pub struct WkbCenter;

impl CenterPath for WkbCenter {
    fn on_grid(&self, v: &dyn ComplexPotential, grid: &[f64], y0: C64) -> Result<Vec<C64>> {
        wkb_center(v, grid, y0)
    }
}

/// Center given as a function of u.
pub struct FnCenter<F>(pub F);

impl<F: Fn(f64) -> C64 + Send + Sync> CenterPath for FnCenter<F> {
    fn on_grid(&self, _v: &dyn ComplexPotential, grid: &[f64], _y0: C64) -> Result<Vec<C64>> {
        Ok(grid.iter().map(|&u| (self.0)(u)).collect())
    }
}

/// Radius from the closed quadrature R = e^{-2 int Re m} (R0 + int e^{2 int Re m} delta_R), with
/// Re m linear and delta_R constant on each cell.
pub fn radius_quadrature(grid: &[f64], re_m: &[f64], delta_r: &[f64], r0: f64) -> Vec<f64> {
    let gl = gauss_legendre(8);
    let mut r = Vec::with_capacity(grid.len());
    r.push(r0);
    for i in 0..grid.len().saturating_sub(1) {
        let next = cell_radius(&gl, grid[i + 1] - grid[i], re_m[i], re_m[i + 1], delta_r[i], r[i], 1.0);
        r.push(next);
    }
    r
}

/// R after a fraction `frac` of a cell of width h.
fn cell_radius((x, w): &(Vec<f64>, Vec<f64>), h: f64, a: f64, b: f64, d: f64, r0: f64, frac: f64) -> f64 {
    let slope = (b - a) / h;
    let g = |s: f64| a * s + 0.5 * slope * s * s;
    let len = frac * h;
    let mut integral = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let s = 0.5 * len * (xi + 1.0);
        integral += 0.5 * len * wi * (2.0 * g(s)).exp();
    }
    (-2.0 * g(len)).exp() * (r0 + d * integral)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyOptions {
    /// delta_R = (1 + margin) times the defect bound.
    pub margin: f64,
    pub radius_cap: f64,
    /// Grid nodes per unit of WKB phase int |sqrt V| du.
    pub nodes_per_phase: f64,
    pub min_nodes: usize,
    /// Refinement stops when the final radius changes by less than this fraction.
    pub refine_tol: f64,
    pub max_refinements: u32,
    /// Samples per cell for the defect bound, endpoints included.
    pub cell_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            margin: 0.05,
            radius_cap: 1e3,
            nodes_per_phase: 2000.0,
            min_nodes: 200,
            refine_tol: 0.01,
            max_refinements: 4,
            cell_samples: 5,
        }
    }
}

/// Defects and radius along a center path.
#[derive(Clone, Debug, Serialize)]
pub struct DiskFlow {
    pub nodes: Vec<f64>,
    pub centers: Vec<C64>,
    pub radii: Vec<f64>,
    /// delta_m at each node (from the cell to its right, the last from the cell to its left).
    pub delta_m: Vec<C64>,
    /// Bound on sup |delta_m| per cell.
    pub defect_bound: Vec<f64>,
    /// delta_R per cell.
    pub delta_r: Vec<f64>,
    /// First node where the criterion delta_R >= |delta_m| was not met.
    pub violation: Option<f64>,
}

/// Integrates the radius equation along the piecewise linear center through `centers`.
pub fn disk_flow(v: &dyn ComplexPotential, grid: &[f64], centers: &[C64], r0: f64, opts: &CertifyOptions) -> Result<DiskFlow> {
    let n = grid.len();
    if n < 2 || centers.len() != n {
        return Err(Error::InvalidParams("disk flow needs at least two nodes and one center per node".into()));
    }
    let ns = opts.cell_samples.max(3);
    let gl = gauss_legendre(8);
    let mut radii = vec![r0];
    let mut delta_m = Vec::with_capacity(n);
    let mut defect_bound = Vec::with_capacity(n - 1);
    let mut delta_r = Vec::with_capacity(n - 1);
    let mut violation = None;
    for i in 0..n - 1 {
        let h = grid[i + 1] - grid[i];
        let dm = (centers[i + 1] - centers[i]) / h;
        let center = |t: f64| centers[i] * (1.0 - t) + centers[i + 1] * t;
        // R-free part of the defect, m' - V + m^2
        let e: Vec<f64> = (0..ns)
            .map(|k| {
                let t = k as f64 / (ns - 1) as f64;
                let m = center(t);
                (dm - v.value(grid[i] + t * h) + m * m).norm()
            })
            .collect();
        let spacing = h / (ns - 1) as f64;
        let lip = e.windows(2).map(|w| (w[1] - w[0]).abs() / spacing).fold(0.0, f64::max);
        let e_sup = e.iter().fold(0.0f64, |a, &b| a.max(b)) + 2.0 * lip * 0.5 * spacing;
        let (a, b) = (centers[i].re, centers[i + 1].re);
        let ri = radii[i];
        // self-consistent upper bound for R on the cell
        let mut r_hat = ri;
        let mut d = (1.0 + opts.margin) * (e_sup + r_hat * r_hat);
        let mut settled = false;
        for _ in 0..50 {
            d = (1.0 + opts.margin) * (e_sup + r_hat * r_hat);
            let peak = [0.25, 0.5, 0.75, 1.0].iter().map(|&f| cell_radius(&gl, h, a, b, d, ri, f)).fold(ri, f64::max) * (1.0 + 1e-9);
            if !(peak.is_finite()) || peak > opts.radius_cap {
                return Err(Error::RadiusBlowup { u: grid[i + 1], radius: peak, cap: opts.radius_cap });
            }
            if peak <= r_hat {
                settled = true;
                break;
            }
            r_hat = peak;
        }
        if !settled {
            return Err(Error::RadiusBlowup { u: grid[i + 1], radius: r_hat, cap: opts.radius_cap });
        }
        let bound = e_sup + r_hat * r_hat;
        if violation.is_none() && d < bound {
            violation = Some(grid[i]);
        }
        let r_next = cell_radius(&gl, h, a, b, d, ri, 1.0);
        delta_m.push(dm - (v.value(grid[i]) - centers[i] * centers[i] - ri * ri));
        defect_bound.push(bound);
        delta_r.push(d);
        radii.push(r_next);
    }
    let last = n - 1;
    let dm = (centers[last] - centers[last - 1]) / (grid[last] - grid[last - 1]);
    delta_m.push(dm - (v.value(grid[last]) - centers[last] * centers[last] - radii[last] * radii[last]));
    Ok(DiskFlow { nodes: grid.to_vec(), centers: centers.to_vec(), radii, delta_m, defect_bound, delta_r, violation })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifiedEnclosure {
    pub nodes: Vec<f64>,
    pub disks: Vec<Disk>,
    pub certified: bool,
    pub failure_point: Option<f64>,
    pub flow: DiskFlow,
    pub refinements: u32,
}

impl CertifiedEnclosure {
    /// Indices of nodes where `y` (sampled on the enclosure nodes) leaves its disk.
    pub fn escapes(&self, y: &[C64]) -> Vec<usize> {
        self.disks.iter().zip(y).enumerate().filter(|(_, (d, y))| !d.contains(**y)).map(|(i, _)| i).collect()
    }
}

fn uniform(u0: f64, u1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { u1 } else { u0 + (u1 - u0) * i as f64 / (n - 1) as f64 }).collect()
}

/// Disk enclosure of the solution of `problem` around `center`, on a uniform grid refined
/// until the final radius settles.
pub fn certify(problem: &RiccatiProblem, center: &dyn CenterPath, opts: &CertifyOptions) -> Result<CertifiedEnclosure> {
    let v = problem.potential.as_ref();
    let probe = uniform(problem.u0, problem.u1, 1001);
    let phase: f64 = probe.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (v.value(w[0]).sqrt().norm() + v.value(w[1]).sqrt().norm())).sum();
    let mut n = ((opts.nodes_per_phase * phase).ceil() as usize).max(opts.min_nodes).max(2);
    let mut previous: Option<f64> = None;
    let mut refinements = 0;
    loop {
        let grid = uniform(problem.u0, problem.u1, n);
        let centers = center.on_grid(v, &grid, problem.y0)?;
        let d0 = &problem.initial_disk;
        let r0 = (centers[0] - d0.m).norm() + d0.r;
        let flow = disk_flow(v, &grid, &centers, r0, opts)?;
        let r_end = *flow.radii.last().unwrap_or(&r0);
        let done = match previous {
            Some(p) => (r_end - p).abs() <= opts.refine_tol * p.abs().max(f64::MIN_POSITIVE),
            None => false,
        };
        if done || refinements >= opts.max_refinements {
            let disks = flow.centers.iter().zip(&flow.radii).map(|(&m, &r)| Disk { m, r }).collect();
            return Ok(CertifiedEnclosure {
                nodes: grid,
                disks,
                certified: flow.violation.is_none() && opts.margin >= 0.0,
                failure_point: flow.violation,
                flow,
                refinements,
            });
        }
        previous = Some(r_end);
        refinements += 1;
        n = 2 * n - 1;
    }
}
