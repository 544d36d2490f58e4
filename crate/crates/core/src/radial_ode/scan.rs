//! Search for zeros of the Jost Wronskian over a rectangle of complex frequencies.
//!
//! Each cell of the grid gets the winding number of w along its boundary; a cell is reported
//! when it winds or when the normalization-free |w| dips below tolerance at a corner.

use super::jost::{jost_solutions, JostOptions};
use super::{radial_potential, Potential, RadialProblem};
use crate::angular_spectral::{angular_spectrum, AngularProblem};
use crate::error::Result;
use crate::kerr_geometry::KerrParams;
use crate::numerics::{HalfInt, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRegion {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

impl ScanRegion {
    pub fn node(&self, i: usize, j: usize) -> C64 {
        C64::new(
            self.re.0 + (self.re.1 - self.re.0) * i as f64 / self.n_re as f64,
            self.im.0 + (self.im.1 - self.im.0) * j as f64 / self.n_im as f64,
        )
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanNode {
    pub omega: C64,
    pub wronskian: C64,
    pub relative: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanCell {
    pub i: usize,
    pub j: usize,
    pub winding: i32,
    /// Largest phase step between neighbouring corners; steps near pi make the winding unreliable.
    pub max_phase_step: f64,
    pub min_relative: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanHit {
    pub omega: C64,
    pub winding: i32,
    pub min_relative: f64,
    pub mode: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub region: ScanRegion,
    pub mode: usize,
    pub nodes: Vec<ScanNode>,
    pub cells: Vec<ScanCell>,
    pub hits: Vec<ScanHit>,
    pub failures: usize,
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Scans `w(omega)` (returning the Wronskian and its normalization-free size) over `region`.
pub fn scan_wronskian<F>(region: &ScanRegion, tolerance: f64, mode: usize, w: F) -> ScanReport
where
    F: Fn(C64) -> Result<(C64, f64)> + Sync,
{
    let (nr, ni) = (region.n_re + 1, region.n_im + 1);
    let values: Vec<Option<ScanNode>> = (0..nr * ni)
        .into_par_iter()
        .map(|idx| {
            let omega = region.node(idx % nr, idx / nr);
            w(omega).ok().map(|(wr, rel)| ScanNode {
                omega,
                wronskian: wr,
                relative: rel,
            })
        })
        .collect();
    let failures = values.iter().filter(|v| v.is_none()).count();
    let mut hits = Vec::new();
    let mut cells = Vec::with_capacity(region.n_re * region.n_im);
    for j in 0..region.n_im {
        for i in 0..region.n_re {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Option<Vec<ScanNode>> =
                corners.iter().map(|&(a, b)| values[b * nr + a]).collect();
            let Some(vals) = vals else { continue };
            let mut total = 0.0;
            let mut max_step = 0.0f64;
            for c in 0..4 {
                let d = wrap(vals[(c + 1) % 4].wronskian.arg() - vals[c].wronskian.arg());
                max_step = max_step.max(d.abs());
                total += d;
            }
            let winding = (total / (2.0 * PI)).round() as i32;
            let min_relative = vals
                .iter()
                .map(|v| v.relative)
                .fold(f64::INFINITY, f64::min);
            if winding != 0 || min_relative < tolerance {
                let center = 0.5 * (region.node(i, j) + region.node(i + 1, j + 1));
                hits.push(ScanHit {
                    omega: center,
                    winding,
                    min_relative,
                    mode,
                });
            }
            cells.push(ScanCell {
                i,
                j,
                winding,
                max_phase_step: max_step,
                min_relative,
            });
        }
    }
    ScanReport {
        region: *region,
        mode,
        nodes: values.into_iter().flatten().collect(),
        cells,
        hits,
        failures,
    }
}

/// Teukolsky scan template: geometry and mode labels; lambda(omega) comes from the angular
/// spectrum with `l_max`.
#[derive(Clone, Copy, Debug)]
pub struct ScanTemplate {
    pub geometry: KerrParams,
    pub s: HalfInt,
    pub k: HalfInt,
    pub l_max: HalfInt,
}

/// Scans the Wronskian for the angular eigenvalues with indices `modes` (ascending real part,
/// index 0 the lowest), one report per mode.
pub fn mode_stability_scan(
    template: &ScanTemplate,
    region: &ScanRegion,
    modes: &[usize],
    tolerance: f64,
    opts: &JostOptions,
) -> Vec<ScanReport> {
    let samples: Vec<f64> = (0..=20).map(|i| -10.0 + i as f64).collect();
    modes
        .iter()
        .map(|&mode| {
            scan_wronskian(region, tolerance, mode, |omega| {
                let ap = AngularProblem::new(
                    template.s,
                    template.k,
                    omega * template.geometry.a(),
                    template.l_max,
                )?;
                let spec = angular_spectrum(&ap)?;
                let lambda = spec.eigenvalues[mode];
                let rp =
                    RadialProblem::new(template.geometry, template.s, template.k, omega, lambda)?;
                let pot: Arc<dyn Potential> = Arc::new(radial_potential(&rp)?);
                let pair = jost_solutions(pot, &samples, opts)?;
                Ok((pair.wronskian, pair.relative_wronskian))
            })
        })
        .collect()
}

/// -omega^2 - depth on |u| < half_width, -omega^2 outside. Bound states sit at omega = i kappa
/// with q tan(q b) = kappa (even) or -q cot(q b) = kappa (odd), q^2 = depth - kappa^2.
#[derive(Clone, Copy, Debug)]
pub struct SquareWell {
    pub omega: C64,
    pub depth: f64,
    pub half_width: f64,
}

impl Potential for SquareWell {
    fn eval(&self, u: f64, _aux: f64) -> C64 {
        let inside = if u.abs() < self.half_width {
            self.depth
        } else {
            0.0
        };
        -self.omega * self.omega - inside
    }

    fn plateau_minus(&self) -> C64 {
        -self.omega * self.omega
    }

    fn plateau_plus(&self) -> C64 {
        -self.omega * self.omega
    }

    fn wavenumber_minus(&self) -> C64 {
        self.omega
    }

    fn wavenumber_plus(&self) -> C64 {
        self.omega
    }
}

impl SquareWell {
    /// Lowest (even) bound state, kappa > 0.
    pub fn ground_state(&self) -> f64 {
        // q tan(q b) = sqrt(depth - q^2) on q in (0, min(pi/(2b), sqrt(depth)))
        let b = self.half_width;
        let hi0 = (PI / (2.0 * b)).min(self.depth.sqrt());
        let f = |q: f64| q * (q * b).tan() - (self.depth - q * q).max(0.0).sqrt();
        let (mut lo, mut hi) = (1e-12, hi0 * (1.0 - 1e-12));
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        let q = 0.5 * (lo + hi);
        (self.depth - q * q).sqrt()
    }
}

/// Scan of the square-well Wronskian. Plane waves are exact outside the well, so the first
/// matching level is accepted.
pub fn square_well_scan(
    depth: f64,
    half_width: f64,
    region: &ScanRegion,
    tolerance: f64,
) -> ScanReport {
    let samples: Vec<f64> = (0..=8)
        .map(|i| -2.0 * half_width + i as f64 * half_width * 0.5)
        .collect();
    let opts = JostOptions {
        initializer: "wkb".into(),
        verify_match: false,
        ..Default::default()
    };
    scan_wronskian(region, tolerance, 0, |omega| {
        let pot: Arc<dyn Potential> = Arc::new(SquareWell {
            omega,
            depth,
            half_width,
        });
        let pair = jost_solutions(pot, &samples, &opts)?;
        Ok((pair.wronskian, pair.relative_wronskian))
    })
}
