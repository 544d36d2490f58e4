//! Sup-norm time series of phi over a compact (u, cos theta) box.

use super::hamiltonian::Hamiltonian;
use super::separated::{evolve_separated, SeparatedOptions, SeparatedReport};
use super::state::TwoComponentState;
use super::HamiltonianConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayRegion {
    pub u: [f64; 2],
    /// cos(theta) range.
    #[serde(default = "full_x")]
    pub x: [f64; 2],
    /// Equispaced samples in cos(theta), end points included.
    #[serde(default = "default_nx")]
    pub n_x: usize,
}

fn full_x() -> [f64; 2] {
    [-1.0, 1.0]
}

fn default_nx() -> usize {
    9
}

impl DecayRegion {
    pub fn new(u: [f64; 2]) -> Self {
        DecayRegion {
            u,
            x: full_x(),
            n_x: default_nx(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [u0, u1] = self.u;
        let [x0, x1] = self.x;
        if !(u1 > u0 && x1 >= x0 && x0 >= -1.0 && x1 <= 1.0 && self.n_x >= 1) {
            return Err(Error::InvalidParams(format!(
                "bad decay region u = {:?}, x = {:?}, n_x = {}",
                self.u, self.x, self.n_x
            )));
        }
        Ok(())
    }

    fn xs(&self) -> Vec<f64> {
        let [x0, x1] = self.x;
        if self.n_x == 1 {
            return vec![0.5 * (x0 + x1)];
        }
        (0..self.n_x)
            .map(|i| x0 + (x1 - x0) * i as f64 / (self.n_x - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DecaySeries {
    pub t: Vec<f64>,
    pub sup_abs_phi: Vec<f64>,
    pub report: Option<SeparatedReport>,
}

impl DecaySeries {
    /// Whether the values from time `from` on never increase.
    pub fn decreasing_after(&self, from: f64) -> bool {
        let tail: Vec<f64> = self
            .t
            .iter()
            .zip(&self.sup_abs_phi)
            .filter(|(t, _)| **t >= from)
            .map(|(_, v)| *v)
            .collect();
        tail.windows(2).all(|w| w[1] <= w[0])
    }

    /// Last value over the value at t = 0, when the series starts there.
    pub fn final_ratio(&self) -> Option<f64> {
        match (self.t.first(), self.sup_abs_phi.first(), self.sup_abs_phi.last()) {
            (Some(&t0), Some(&v0), Some(&v1)) if t0 == 0.0 && v0 > 0.0 => Some(v1 / v0),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sup_abs_phi\n");
        for (t, v) in self.t.iter().zip(&self.sup_abs_phi) {
            out.push_str(&format!("{t},{v:e}\n"));
        }
        out
    }
}

/// sup |phi| over the region for one state.
pub fn region_sup(ham: &Hamiltonian, st: &TwoComponentState, region: &DecayRegion) -> f64 {
    let xs = region.xs();
    (0..st.grid.n)
        .filter(|&i| {
            let u = st.grid.node(i);
            u >= region.u[0] && u <= region.u[1]
        })
        .flat_map(|i| xs.iter().map(move |&x| (i, x)))
        .map(|(i, x)| st.phi_at(&ham.geometry, i, x).norm())
        .fold(0.0, f64::max)
}

/// sup |phi| over `region` at each scheduled time, evolving with the separated propagator on
/// a window covering the data and the region. The t = 0 entry is read off the data.
pub fn decay_experiment(
    ham: &Hamiltonian,
    psi0: &TwoComponentState,
    times: &[f64],
    region: &DecayRegion,
    cfg: &HamiltonianConfig,
    opts: &SeparatedOptions,
) -> Result<DecaySeries> {
    region.validate()?;
    super::check_times(times)?;
    let positive: Vec<f64> = times.iter().copied().filter(|t| *t > 0.0).collect();
    let mut series = DecaySeries {
        t: times.to_vec(),
        sup_abs_phi: Vec::with_capacity(times.len()),
        report: None,
    };
    let zero_data = psi0.psi1.iter().chain(&psi0.psi2).all(|z| z.norm() == 0.0);
    if zero_data {
        series.sup_abs_phi = vec![0.0; times.len()];
        return Ok(series);
    }
    let states = if positive.is_empty() {
        Vec::new()
    } else {
        let mut o = opts.clone();
        if o.window.is_none() {
            let grid = psi0.grid;
            let na = psi0.n_ang;
            let scale = psi0.psi1.iter().chain(&psi0.psi2).map(|z| z.norm()).fold(0.0, f64::max);
            let live: Vec<f64> = (0..grid.n)
                .filter(|&i| {
                    (0..na).any(|j| {
                        psi0.psi1[i * na + j].norm().max(psi0.psi2[i * na + j].norm())
                            > 1e-15 * scale
                    })
                })
                .map(|i| grid.node(i))
                .collect();
            // H^p widens the support by a few stencil widths
            let pad = 16.0 * grid.h;
            let lo = live.first().copied().unwrap_or(region.u[0]).min(region.u[0]) - pad;
            let hi = live.last().copied().unwrap_or(region.u[1]).max(region.u[1]) + pad;
            o.window = Some([lo.max(grid.u0), hi.min(grid.hi())]);
        }
        let (states, report) = evolve_separated(ham, psi0, &positive, cfg, &o)?;
        series.report = Some(report);
        states
    };
    let mut it = states.iter();
    for &t in times {
        let v = if t == 0.0 {
            region_sup(ham, psi0, region)
        } else {
            region_sup(ham, it.next().expect("one state per positive time"), region)
        };
        series.sup_abs_phi.push(v);
    }
    Ok(series)
}
