//! Radial Green's kernel s(u, v) = -phi_acute(min) phi_grave(max) / w, the kernel of
//! (-d^2/du^2 + V)^-1, and its action on sources sampled on a uniform grid.

use super::jost::{jost_solutions, JostOptions, JostPair};
use super::Potential;
use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::{lagrange4, C64};
use std::sync::Arc;

/// s(u, v) for the pair; errors with `NearMode` when the Wronskian is below threshold.
pub fn greens_kernel(pair: &JostPair, u: f64, v: f64) -> Result<C64> {
    if pair.is_near_mode() {
        return Err(pair.near_mode_error());
    }
    let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
    let a = pair.acute_at(lo)?.0;
    let g = pair.grave_at(hi)?.0;
    Ok(-a * g / pair.wronskian)
}

/// Gauss points per grid cell used for the source integrals.
const CELL_NODES: usize = 3;

/// Jost pair sampled on a uniform grid and at Gauss points inside each cell, ready to apply
/// the Green's operator to any number of sources.
pub struct GreenApplication {
    pub u0: f64,
    pub h: f64,
    pub n: usize,
    pub pair: JostPair,
    weights: Vec<f64>,
    offsets: Vec<f64>,
}

impl GreenApplication {
    pub fn new(
        pot: Arc<dyn Potential>,
        u0: f64,
        h: f64,
        n: usize,
        opts: &JostOptions,
    ) -> Result<Self> {
        if n < 4 || !(h > 0.0) {
            return Err(Error::InvalidParams(
                "Green's application needs at least 4 grid nodes".into(),
            ));
        }
        let (x, w) = gauss_legendre(CELL_NODES);
        let offsets: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|wi| 0.5 * wi * h).collect();
        let mut samples = Vec::with_capacity(n + (n - 1) * CELL_NODES);
        for i in 0..n {
            samples.push(u0 + i as f64 * h);
            if i + 1 < n {
                for o in &offsets {
                    samples.push(u0 + (i as f64 + o) * h);
                }
            }
        }
        let pair = jost_solutions(pot, &samples, opts)?;
        if pair.is_near_mode() {
            return Err(pair.near_mode_error());
        }
        Ok(GreenApplication {
            u0,
            h,
            n,
            pair,
            weights,
            offsets,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.u0 + i as f64 * self.h).collect()
    }

    fn node_index(&self, i: usize) -> usize {
        i * (CELL_NODES + 1)
    }

    /// Values of a grid function at the interior Gauss points (fourth-order interpolation).
    pub fn interior_values(&self, f: &[C64]) -> Vec<C64> {
        let mut out = Vec::with_capacity((self.n - 1) * CELL_NODES);
        for i in 0..self.n - 1 {
            for o in &self.offsets {
                out.push(lagrange4(
                    f,
                    self.u0,
                    self.h,
                    self.u0 + (i as f64 + o) * self.h,
                ));
            }
        }
        out
    }

    /// x = G f on the grid for f sampled on the grid (zero outside it).
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        self.apply_interior(&self.interior_values(f))
    }

    /// As `apply`, with f given directly at the interior Gauss points (see `interior_points`).
    pub fn apply_interior(&self, interior: &[C64]) -> Vec<C64> {
        let n = self.n;
        let p = &self.pair;
        let zero = C64::new(0.0, 0.0);
        let cell_sum = |i: usize, acute: bool| {
            let mut s = zero;
            for j in 0..CELL_NODES {
                let k = self.node_index(i) + 1 + j;
                let phi = if acute { p.acute[k].0 } else { p.grave[k].0 };
                s += self.weights[j] * phi * interior[i * CELL_NODES + j];
            }
            s
        };
        let mut a = vec![zero; n];
        for i in 1..n {
            a[i] = a[i - 1] + cell_sum(i - 1, true);
        }
        let mut b = vec![zero; n];
        for i in (0..n - 1).rev() {
            b[i] = b[i + 1] + cell_sum(i, false);
        }
        (0..n)
            .map(|i| {
                let k = self.node_index(i);
                -(p.grave[k].0 * a[i] + p.acute[k].0 * b[i]) / p.wronskian
            })
            .collect()
    }

    /// Abscissae of the interior Gauss points, cell by cell.
    pub fn interior_points(&self) -> Vec<f64> {
        (0..self.n - 1)
            .flat_map(|i| {
                self.offsets
                    .iter()
                    .map(move |o| self.u0 + (i as f64 + o) * self.h)
            })
            .collect()
    }

    /// phi_acute and phi_grave on the grid nodes.
    pub fn grid_solutions(&self) -> (Vec<(C64, C64)>, Vec<(C64, C64)>) {
        let idx: Vec<usize> = (0..self.n).map(|i| self.node_index(i)).collect();
        (
            idx.iter().map(|&k| self.pair.acute[k]).collect(),
            idx.iter().map(|&k| self.pair.grave[k]).collect(),
        )
    }
}
