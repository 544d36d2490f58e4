//! Direct contour quadrature of the propagator and the sampled resolvent bound.

use super::hamiltonian::Hamiltonian;
use super::state::TwoComponentState;
use super::HamiltonianConfig;
use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub(crate) fn panels_on(lo: f64, hi: f64, width: f64, x: &[f64], wt: &[f64], nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    if !(hi > lo) {
        return;
    }
    let panels = (((hi - lo) / width).ceil() as usize).max(1);
    let w = (hi - lo) / panels as f64;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * w;
        for (xi, wi) in x.iter().zip(wt) {
            nodes.push(mid + 0.5 * w * xi);
            weights.push(0.5 * w * wi);
        }
    }
}

/// Nodes and weights of the composite rule on [-omega_max, omega_max], symmetric about 0:
/// panels of `inner_width` on |x| <= inner and of `outer_width` beyond.
pub fn line_rule(
    omega_max: f64,
    inner: f64,
    inner_width: f64,
    outer_width: f64,
    per_panel: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (x, wt) = gauss_legendre(per_panel);
    let inner = inner.min(omega_max);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    panels_on(-omega_max, -inner, outer_width, &x, &wt, &mut nodes, &mut weights);
    panels_on(-inner, inner, inner_width, &x, &wt, &mut nodes, &mut weights);
    panels_on(inner, omega_max, outer_width, &x, &wt, &mut nodes, &mut weights);
    (nodes, weights)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ContourReport {
    pub c: f64,
    pub c_hat: f64,
    pub p: u32,
    /// Largest truncation used over all passes.
    pub omega_max: f64,
    pub panel_width: f64,
    pub nodes_per_line: usize,
    pub passes: usize,
    /// Largest envelope estimate of the truncated tails, relative to the state norm.
    pub tail_estimate: f64,
}

struct PassInfo {
    omega_max: f64,
    panel_width: f64,
    nodes: usize,
    tail: f64,
}

/// Envelope bound of the two truncated tails: on |Im omega| = 2c,
/// |R Phi| <= (|Phi| + |H Phi| / (2c - c_hat)) / |omega|, so the discarded part is at most
/// (2 / pi) e^{2c|t|} E omega_max^{-p} / p.
fn tail_bound(e: f64, c: f64, t: f64, p: u32, omega_max: f64) -> f64 {
    2.0 / PI * (2.0 * c * t.abs()).exp() * e * omega_max.powi(-(p as i32)) / p as f64
}

fn contour_pass(
    ham: &Hamiltonian,
    psi: &TwoComponentState,
    t: f64,
    c: f64,
    c_hat: f64,
    cfg: &HamiltonianConfig,
) -> Result<(TwoComponentState, PassInfo)> {
    let spec = &cfg.contour;
    let p = cfg.p;
    if !(2.0 * c > c_hat) {
        return Err(Error::InsideStrip { im: 2.0 * c, c: c_hat });
    }
    // the shift mirrors with the time direction so that backward evolution is the conjugate
    // of forward evolution when H is real
    let z = C64::new(0.0, if t < 0.0 { -3.0 } else { 3.0 } * c);
    let phi = ham.apply_shifted_power(psi, z, p)?;
    let n_psi = ham.norm(psi);
    if n_psi == 0.0 {
        return Ok((
            psi.clone(),
            PassInfo {
                omega_max: 0.0,
                panel_width: 0.0,
                nodes: 0,
                tail: 0.0,
            },
        ));
    }
    let mut h_phi = phi.clone();
    (h_phi.psi1, h_phi.psi2) = ham.apply_flat(&phi.psi1, &phi.psi2);
    let e = ham.norm(&phi) + ham.norm(&h_phi) / (2.0 * c - c_hat);
    let omega_max = match spec.omega_max {
        Some(w) => w,
        None => {
            let need = (2.0 / PI * (2.0 * c * t.abs()).exp() * e
                / (p as f64 * spec.tail_tol * n_psi))
                .powf(1.0 / p as f64);
            need.clamp(4.0 * c, spec.omega_cap)
        }
    };
    let tail = tail_bound(e, c, t, p, omega_max) / n_psi;
    if tail > spec.tail_tol * (1.0 + 1e-9) {
        return Err(Error::Quadrature {
            estimate: tail,
            tolerance: spec.tail_tol,
        });
    }
    let width = spec.panel_width.unwrap_or_else(|| {
        let osc = if t == 0.0 { f64::INFINITY } else { 4.0 * PI / t.abs() };
        (4.0 * c).min(osc)
    });
    // the (omega - z)^{-p} pole sits at distance c from one of the lines
    let (xs, ws) = line_rule(omega_max, 4.0 * c, width.min(c), width, spec.nodes_per_panel);
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    // (omega, weight factor) for both lines, lower first
    let mut jobs: Vec<(C64, C64)> = Vec::with_capacity(2 * xs.len());
    for (x, w) in xs.iter().zip(&ws) {
        jobs.push((C64::new(*x, -2.0 * c), -*w / two_pi_i));
    }
    for (x, w) in xs.iter().zip(&ws) {
        jobs.push((C64::new(*x, 2.0 * c), *w / two_pi_i));
    }
    let n = psi.len();
    let mut acc1 = vec![C64::new(0.0, 0.0); n];
    let mut acc2 = vec![C64::new(0.0, 0.0); n];
    let i_unit = C64::new(0.0, 1.0);
    for chunk in jobs.chunks(8) {
        let parts: Vec<Result<(C64, Vec<C64>, Vec<C64>)>> = chunk
            .par_iter()
            .map(|&(omega, wf)| {
                let res = ham.resolvent(omega)?;
                let (x1, x2) = res.solve_flat(&phi.psi1, &phi.psi2);
                let coef = wf * (-i_unit * omega * t).exp() / (omega - z).powi(p as i32);
                Ok((coef, x1, x2))
            })
            .collect();
        for part in parts {
            let (coef, x1, x2) = part?;
            for (a, x) in acc1.iter_mut().zip(&x1) {
                *a += coef * x;
            }
            for (a, x) in acc2.iter_mut().zip(&x2) {
                *a += coef * x;
            }
        }
    }
    let mut out = psi.clone();
    out.psi1 = acc1;
    out.psi2 = acc2;
    Ok((
        out,
        PassInfo {
            omega_max,
            panel_width: width,
            nodes: xs.len(),
            tail,
        },
    ))
}

/// Psi(t) for each requested time (any sign). Times beyond `max_step` are reached by
/// composing single-step contour evaluations.
pub fn evolve_contour(
    ham: &Hamiltonian,
    psi0: &TwoComponentState,
    times: &[f64],
    cfg: &HamiltonianConfig,
) -> Result<(Vec<TwoComponentState>, ContourReport)> {
    cfg.validate()?;
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams("evolution times must be finite".into()));
    }
    let (c, c_hat) = cfg.strip(ham);
    let mut report = ContourReport {
        c,
        c_hat,
        p: cfg.p,
        ..Default::default()
    };
    let mut out = Vec::with_capacity(times.len());
    let mut cur_t = 0.0f64;
    let mut cur = psi0.clone();
    for &t in times {
        // continue from the last state when t lies further out on the same side
        if !(t * cur_t >= 0.0 && t.abs() >= cur_t.abs()) {
            cur_t = 0.0;
            cur = psi0.clone();
        }
        let span = t - cur_t;
        let steps = (span.abs() / cfg.contour.max_step).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        if span == 0.0 && t != 0.0 {
            out.push(cur.clone());
            continue;
        }
        for _ in 0..steps {
            let (next, info) = contour_pass(ham, &cur, dt, c, c_hat, cfg)?;
            report.passes += 1;
            report.omega_max = report.omega_max.max(info.omega_max);
            report.panel_width = info.panel_width;
            report.nodes_per_line = report.nodes_per_line.max(info.nodes);
            report.tail_estimate = report.tail_estimate.max(info.tail);
            cur = next;
        }
        cur_t = t;
        out.push(cur.clone());
    }
    Ok((out, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSample {
    pub omega: [f64; 2],
    pub state: usize,
    pub norm_x: f64,
    pub bound: f64,
    pub residual: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub c_hat: f64,
    pub samples: Vec<ProbeSample>,
    pub all_hold: bool,
    pub max_residual: f64,
    /// Largest |X| / bound.
    pub max_ratio: f64,
}

/// Solves (H - omega) X = Psi for every pair and checks |X| <= |Psi| / (|Im omega| - c_hat)
/// together with the residual of the solve (both in the state norm).
pub fn resolvent_bound_probe(
    ham: &Hamiltonian,
    omegas: &[C64],
    states: &[TwoComponentState],
    c_hat: f64,
) -> Result<ProbeReport> {
    if let Some(w) = omegas.iter().find(|w| !(w.im.abs() > c_hat)) {
        return Err(Error::InsideStrip {
            im: w.im.abs(),
            c: c_hat,
        });
    }
    let mut samples = Vec::new();
    for &omega in omegas {
        let res = ham.resolvent(omega)?;
        for (si, psi) in states.iter().enumerate() {
            let x = res.solve(psi);
            let (h1, h2) = ham.apply_flat(&x.psi1, &x.psi2);
            let mut r = psi.clone();
            for i in 0..psi.len() {
                r.psi1[i] = h1[i] - omega * x.psi1[i] - psi.psi1[i];
                r.psi2[i] = h2[i] - omega * x.psi2[i] - psi.psi2[i];
            }
            let np = ham.norm(psi);
            let norm_x = ham.norm(&x);
            let bound = np / (omega.im.abs() - c_hat);
            let residual = ham.norm(&r) / np;
            samples.push(ProbeSample {
                omega: [omega.re, omega.im],
                state: si,
                norm_x,
                bound,
                residual,
                holds: norm_x <= bound,
            });
        }
    }
    let all_hold = samples.iter().all(|s| s.holds);
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let max_ratio = samples.iter().map(|s| s.norm_x / s.bound).fold(0.0, f64::max);
    Ok(ProbeReport {
        c_hat,
        samples,
        all_hold,
        max_residual,
        max_ratio,
    })
}
