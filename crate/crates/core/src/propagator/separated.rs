//! Evolution through the separated resolvent on the real-axis limit.
//!
//! For t > 0 the lower line of the strip contour is moved to Im omega = -far_factor c, where
//! e^{-i omega t} makes it negligible (checked, then dropped), and the upper line is lowered
//! to Im omega = eps. There the resolvent is assembled mode by mode: the angular operator
//! A(a omega) is diagonalized, the source is expanded in its eigenvectors, and every
//! component is inverted with the radial Green's kernel built from Jost solutions for
//! lambda_j. Results at several eps are extrapolated to the axis.

use super::contour::{line_rule, panels_on};
use super::hamiltonian::Hamiltonian;
use super::state::TwoComponentState;
use super::{check_times, HamiltonianConfig};
use crate::angular_spectral::{spectrum_of_matrix, AngularProblem, ClusterRule};
use crate::error::{Error, Result};
use crate::numerics::dense::{cond2, inverse};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::{HalfInt, C64};
use crate::radial_ode::{
    near_axis_limit, radial_potential, GreenApplication, JostOptions, Potential, RadialProblem,
    NEAR_AXIS_EPS,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparatedOptions {
    /// Distances of the evaluation line from the real axis.
    pub eps_levels: Vec<f64>,
    /// Clusters 0..n_max are summed; by default every resolved cluster.
    pub n_max: Option<usize>,
    pub cluster_rule: ClusterRule,
    pub omega_max: Option<f64>,
    pub omega_cap: f64,
    /// Relative budget for the truncation envelope that picks omega_max.
    pub tail_tol: f64,
    /// Panel width on the axis; defaults to min(0.5, 6 pi / t_max).
    pub panel_width: Option<f64>,
    pub nodes_per_panel: usize,
    /// The discarded line sits at Im omega = -far_factor c.
    pub far_factor: f64,
    /// Budget for the discarded line relative to the data norm.
    pub far_tol: f64,
    /// u range on which the solution is reconstructed; zero outside. Must contain the data.
    /// Defaults to the data support widened by 1.1 t_max + 4 on both sides.
    pub window: Option<[f64; 2]>,
    /// Largest accepted condition number of the angular eigenvector matrix.
    pub max_cond: f64,
    pub jost: JostOptions,
}

impl Default for SeparatedOptions {
    fn default() -> Self {
        SeparatedOptions {
            eps_levels: NEAR_AXIS_EPS.to_vec(),
            n_max: None,
            cluster_rule: ClusterRule {
                n0: 1,
                merge_ratio: 0.1,
            },
            omega_max: None,
            omega_cap: 60.0,
            tail_tol: 1e-3,
            panel_width: None,
            nodes_per_panel: 16,
            far_factor: 8.0,
            far_tol: 1e-3,
            window: None,
            max_cond: 1e8,
            jost: JostOptions::default(),
        }
    }
}

impl SeparatedOptions {
    pub fn validate(&self) -> Result<()> {
        if self.eps_levels.is_empty() || self.eps_levels.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParams(
                "eps levels must be positive and non-empty".into(),
            ));
        }
        if self.nodes_per_panel < 2 || !(self.tail_tol > 0.0) || !(self.far_tol > 0.0) {
            return Err(Error::InvalidParams(
                "separated quadrature needs >= 2 nodes per panel and positive tolerances".into(),
            ));
        }
        if !(self.far_factor > 3.0) {
            return Err(Error::InvalidParams(
                "far_factor must exceed 3 (the shift pole sits at 3ic)".into(),
            ));
        }
        if let Some([lo, hi]) = self.window {
            if !(hi > lo) {
                return Err(Error::InvalidParams(format!("empty window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Contribution of one angular cluster.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ModeLedger {
    pub cluster: usize,
    /// State norm of the cluster's share of Psi(t) at each requested time (smallest eps).
    pub norms: Vec<f64>,
    /// (1/2 pi) int |omega - 3ic|^-p max_u |X1_n(u)| d omega, a time-independent bound.
    pub tail_bound: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SeparatedReport {
    pub c: f64,
    pub c_hat: f64,
    pub p: u32,
    pub omega_max: f64,
    pub panel_width: f64,
    pub nodes: usize,
    pub eps_levels: Vec<f64>,
    /// Largest relative deviation of an eps level from the extrapolated result, per time.
    pub eps_spread: Vec<f64>,
    pub far_line: f64,
    /// Estimate of the discarded line relative to the data norm, per time.
    pub far_estimate: Vec<f64>,
    /// Truncation tail measured from the integrand at +-omega_max, relative to the data.
    pub omega_tail: f64,
    pub window: [f64; 2],
    pub ledger: Vec<ModeLedger>,
    /// Geometric mean of consecutive tail_bound ratios, the measured convergence rate in n.
    pub ledger_ratio: Option<f64>,
}

/// Composite rule on [-omega_max, omega_max] with panels refined geometrically down to
/// `fine` around each breakpoint.
pub fn axis_rule(
    omega_max: f64,
    width: f64,
    per_panel: usize,
    breaks: &[f64],
    fine: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut edges = vec![-omega_max, omega_max];
    for &b in breaks {
        if b.abs() >= omega_max {
            continue;
        }
        edges.push(b);
        let mut d = fine;
        while d < width {
            edges.push(b - d);
            edges.push(b + d);
            d *= 2.0;
        }
    }
    edges.retain(|e| e.abs() <= omega_max);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let (x, wt) = gauss_legendre(per_panel);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for e in edges.windows(2) {
        panels_on(e[0], e[1], width, &x, &wt, &mut nodes, &mut weights);
    }
    (nodes, weights)
}

struct Window {
    i0: usize,
    n: usize,
}

/// Per-cluster X1 on the window, u-major, for one omega.
struct LevelSolve {
    clusters: Vec<(usize, Vec<C64>)>,
}

struct Sources {
    m2p2: Vec<C64>,
    m2p1: Vec<C64>,
    c1p1: Vec<C64>,
}

fn solve_level(
    ham: &Hamiltonian,
    src: &Sources,
    win: &Window,
    omega: C64,
    opts: &SeparatedOptions,
) -> Result<LevelSolve> {
    let na = ham.n_ang;
    let g = ham.geometry;
    let aw = omega * g.a();
    let l_min = if ham.s.abs() > ham.k.abs() { ham.s.abs() } else { ham.k.abs() };
    // the Hamiltonian's basis may be smaller than AngularProblem::validate accepts
    let problem = AngularProblem {
        s: ham.s,
        k: ham.k,
        a_omega: aw,
        l_max: l_min + HalfInt::from_int(na as i32 - 1),
    };
    let spec = spectrum_of_matrix(problem, ham.angular.assemble(aw), &opts.cluster_rule)?;
    let resolved = spec.resolved_clusters();
    let chosen: Vec<usize> = match opts.n_max {
        None => resolved,
        Some(m) => {
            if let Some(n) = (0..m).find(|n| !resolved.contains(n)) {
                return Err(Error::InvalidParams(format!(
                    "cluster {n} is not resolved at omega = {omega}; lower n_max or enlarge the basis"
                )));
            }
            (0..m).collect()
        }
    };
    let v = &spec.eigenvectors;
    let cond = cond2(v);
    if !(cond < opts.max_cond) {
        return Err(Error::Eigen(format!(
            "angular eigenvectors at omega = {omega} have condition {cond:.3e}"
        )));
    }
    let vinv = inverse(v).ok_or_else(|| Error::Singular("angular eigenvector matrix".into()))?;
    // y = V^-1 (M2 Phi2 + (omega M2 - C1) Phi1), row by row
    let mut y = vec![C64::new(0.0, 0.0); win.n * na];
    for i in 0..win.n {
        let base = (win.i0 + i) * na;
        let row: Vec<C64> = (0..na)
            .map(|r| src.m2p2[base + r] + omega * src.m2p1[base + r] - src.c1p1[base + r])
            .collect();
        for j in 0..na {
            y[i * na + j] = (0..na).map(|r| vinv[(j, r)] * row[r]).sum();
        }
    }
    let u_lo = ham.grid.node(win.i0);
    let mut clusters = Vec::with_capacity(chosen.len());
    for &n in &chosen {
        let mut x1 = vec![C64::new(0.0, 0.0); win.n * na];
        for &j in &spec.clusters[n] {
            let f: Vec<C64> = (0..win.n).map(|i| y[i * na + j]).collect();
            if f.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let rp = RadialProblem::new(g, ham.s, ham.k, omega, spec.eigenvalues[j])?;
            let pot: Arc<dyn Potential> = Arc::new(radial_potential(&rp)?);
            let green = GreenApplication::new(pot, u_lo, ham.grid.h, win.n, &opts.jost)?;
            let xj = green.apply(&f);
            for i in 0..win.n {
                for r in 0..na {
                    x1[i * na + r] += v[(r, j)] * xj[i];
                }
            }
        }
        clusters.push((n, x1));
    }
    Ok(LevelSolve { clusters })
}

fn window_of(
    ham: &Hamiltonian,
    phi: &TwoComponentState,
    opts: &SeparatedOptions,
    t_max: f64,
) -> Result<Window> {
    let grid = ham.grid;
    let (i0, i1) = match opts.window {
        None => {
            // kernels grow towards the horizon for s > 0, so stay near the domain of dependence
            let support = support_of(phi);
            let pad = ((1.1 * t_max + 4.0) / grid.h).ceil() as usize;
            match support {
                Some((a, b)) => (a.saturating_sub(pad), (b + pad).min(grid.n - 1)),
                None => (0, grid.n - 1),
            }
        }
        Some([lo, hi]) => {
            let a = ((lo - grid.u0) / grid.h).ceil().max(0.0) as usize;
            let b = (((hi - grid.u0) / grid.h).floor() as usize).min(grid.n - 1);
            if b < a + 4 {
                return Err(Error::InvalidParams(format!(
                    "window [{lo}, {hi}] holds fewer than 5 grid nodes"
                )));
            }
            (a, b)
        }
    };
    let na = ham.n_ang;
    let scale = phi
        .psi1
        .iter()
        .chain(&phi.psi2)
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let outside = (0..grid.n).filter(|&i| i < i0 || i > i1).any(|i| {
        (0..na).any(|j| {
            phi.psi1[i * na + j].norm().max(phi.psi2[i * na + j].norm()) > 1e-14 * scale
        })
    });
    if outside {
        return Err(Error::InvalidParams(
            "reconstruction window must contain the support of the data".into(),
        ));
    }
    Ok(Window {
        i0,
        n: i1 - i0 + 1,
    })
}

/// First and last u nodes where the state is non-negligible.
fn support_of(st: &TwoComponentState) -> Option<(usize, usize)> {
    let na = st.n_ang;
    let scale = st.psi1.iter().chain(&st.psi2).map(|z| z.norm()).fold(0.0, f64::max);
    let live = |i: usize| {
        (0..na).any(|j| st.psi1[i * na + j].norm().max(st.psi2[i * na + j].norm()) > 1e-14 * scale)
    };
    let first = (0..st.grid.n).find(|&i| live(i))?;
    let last = (0..st.grid.n).rev().find(|&i| live(i))?;
    Some((first, last))
}

/// Size of the dropped line at Im omega = -f c: sampled resolvent norms on [-Omega, Omega]
/// plus the resolvent-bound envelope beyond, times e^{-f c t}. Relative to |Psi0|.
fn far_line_estimate(
    ham: &Hamiltonian,
    phi: &TwoComponentState,
    c: f64,
    c_hat: f64,
    p: u32,
    omega_max: f64,
    opts: &SeparatedOptions,
    times: &[f64],
    n_psi: f64,
) -> Result<(f64, Vec<f64>)> {
    let im = -opts.far_factor * c;
    let (xs, ws) = line_rule(omega_max, 0.0, 4.0 * c, 4.0 * c, 8);
    let z = C64::new(0.0, 3.0 * c);
    let parts: Vec<Result<f64>> = xs
        .par_iter()
        .zip(ws.par_iter())
        .map(|(&x, &w)| {
            let omega = C64::new(x, im);
            let res = ham.resolvent(omega)?;
            let xs = res.solve(phi);
            Ok(w * (omega - z).norm().powi(-(p as i32)) * ham.norm(&xs))
        })
        .collect();
    let mut sampled = 0.0;
    for part in parts {
        sampled += part?;
    }
    let tail = if p >= 2 {
        2.0 * ham.norm(phi) / (opts.far_factor * c - c_hat) * omega_max.powi(1 - p as i32)
            / (p - 1) as f64
    } else {
        f64::INFINITY
    };
    let total = (sampled + tail) / (2.0 * PI * n_psi);
    let est = times
        .iter()
        .map(|t| (im * t).exp() * total)
        .collect();
    Ok((im, est))
}

fn embed(ham: &Hamiltonian, like: &TwoComponentState, win: &Window, a: &[C64], b: &[C64]) -> TwoComponentState {
    let na = ham.n_ang;
    let mut st = TwoComponentState::zeros(like.grid, like.s, like.k, like.n_ang);
    let off = win.i0 * na;
    st.psi1[off..off + a.len()].copy_from_slice(a);
    st.psi2[off..off + b.len()].copy_from_slice(b);
    st
}

/// Psi(t) for t > 0 (ascending) through the separated representation, with the per-cluster
/// ledger. The lower-line check fails with `Quadrature` for times too short to drop it.
pub fn evolve_separated(
    ham: &Hamiltonian,
    psi0: &TwoComponentState,
    times: &[f64],
    cfg: &HamiltonianConfig,
    opts: &SeparatedOptions,
) -> Result<(Vec<TwoComponentState>, SeparatedReport)> {
    cfg.validate()?;
    opts.validate()?;
    check_times(times)?;
    let (c, c_hat) = cfg.strip(ham);
    let p = cfg.p;
    let z = C64::new(0.0, 3.0 * c);
    let mut report = SeparatedReport {
        c,
        c_hat,
        p,
        eps_levels: opts.eps_levels.clone(),
        far_line: -opts.far_factor * c,
        ..Default::default()
    };
    if !(2.0 * c > c_hat) {
        return Err(Error::InsideStrip { im: 2.0 * c, c: c_hat });
    }
    let n_psi = ham.norm(psi0);
    let phi = ham.apply_shifted_power(psi0, z, p)?;
    let t_max = times.last().copied().unwrap_or(0.0);
    let win = window_of(ham, &phi, opts, t_max)?;
    report.window = [ham.grid.node(win.i0), ham.grid.node(win.i0 + win.n - 1)];
    if n_psi == 0.0 || times.is_empty() {
        report.eps_spread = vec![0.0; times.len()];
        report.far_estimate = vec![0.0; times.len()];
        return Ok((vec![psi0.clone(); times.len()], report));
    }

    let mut h_phi = phi.clone();
    (h_phi.psi1, h_phi.psi2) = ham.apply_flat(&phi.psi1, &phi.psi2);
    let e = ham.norm(&phi) + ham.norm(&h_phi) / (2.0 * c - c_hat);
    let omega_max = opts.omega_max.unwrap_or_else(|| {
        let need = (2.0 / PI * e / (p as f64 * opts.tail_tol * n_psi)).powf(1.0 / p as f64);
        need.clamp(4.0 * c, opts.omega_cap)
    });
    report.omega_max = omega_max;

    let (far_line, far) =
        far_line_estimate(ham, &phi, c, c_hat, p, omega_max, opts, times, n_psi)?;
    report.far_line = far_line;
    if let Some(&worst) = far.iter().find(|f| **f > opts.far_tol) {
        return Err(Error::Quadrature {
            estimate: worst,
            tolerance: opts.far_tol,
        });
    }
    report.far_estimate = far;

    let width = opts
        .panel_width
        .unwrap_or_else(|| if t_max > 0.0 { 0.5f64.min(6.0 * PI / t_max) } else { 0.5 });
    report.panel_width = width;
    let g = ham.geometry;
    let omega0 = -g.a() * ham.k.value() / (g.r1() * g.r1() + g.a() * g.a());
    let eps = &opts.eps_levels;
    let e_min = eps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let (xs, ws) = axis_rule(omega_max, width, opts.nodes_per_panel, &[0.0, omega0], eps[e_min]);
    report.nodes = xs.len();

    let src = Sources {
        m2p2: ham.apply_m2(&phi.psi2),
        m2p1: ham.apply_m2(&phi.psi1),
        c1p1: ham.apply_c1(&phi.psi1, false),
    };
    let len = win.n * ham.n_ang;
    let zeros = vec![C64::new(0.0, 0.0); len];
    let nt = times.len();
    // acc[level][time] = (first, second) component on the window
    let mut acc = vec![vec![(zeros.clone(), zeros.clone()); nt]; eps.len()];
    let mut ledger_acc: Vec<Vec<(Vec<C64>, Vec<C64>)>> = Vec::new();
    let mut tail_bound: Vec<f64> = Vec::new();
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let i_unit = C64::new(0.0, 1.0);
    let edge = [0, xs.len() - 1];
    let mut edge_integrand = 0.0;

    let jobs: Vec<(usize, f64, f64)> = xs
        .iter()
        .zip(&ws)
        .enumerate()
        .map(|(m, (x, w))| (m, *x, *w))
        .collect();
    for chunk in jobs.chunks(8) {
        let parts: Vec<Result<Vec<LevelSolve>>> = chunk
            .par_iter()
            .map(|&(_, x, _)| {
                eps.iter()
                    .map(|&ep| solve_level(ham, &src, &win, C64::new(x, ep), opts))
                    .collect()
            })
            .collect();
        for (&(m, x, w), part) in chunk.iter().zip(parts) {
            let levels = part?;
            for (li, level) in levels.iter().enumerate() {
                let omega = C64::new(x, eps[li]);
                let base = w / two_pi_i / (omega - z).powi(p as i32);
                let decay = (omega - z).norm().powi(-(p as i32));
                let coefs: Vec<C64> = times
                    .iter()
                    .map(|&t| base * (-i_unit * omega * t).exp())
                    .collect();
                let mut total1 = zeros.clone();
                for (n, x1) in &level.clusters {
                    for (a, b) in total1.iter_mut().zip(x1) {
                        *a += b;
                    }
                    if li != e_min {
                        continue;
                    }
                    if ledger_acc.len() <= *n {
                        ledger_acc.resize(n + 1, vec![(zeros.clone(), zeros.clone()); nt]);
                        tail_bound.resize(n + 1, 0.0);
                    }
                    let peak = (0..win.n)
                        .map(|i| {
                            x1[i * ham.n_ang..(i + 1) * ham.n_ang]
                                .iter()
                                .map(|z| z.norm_sqr())
                                .sum::<f64>()
                                .sqrt()
                        })
                        .fold(0.0, f64::max);
                    tail_bound[*n] += w * decay * peak / (2.0 * PI);
                    for (ti, coef) in coefs.iter().enumerate() {
                        let (l1, l2) = &mut ledger_acc[*n][ti];
                        for k in 0..len {
                            let v = coef * x1[k];
                            l1[k] += v;
                            l2[k] += omega * v;
                        }
                    }
                }
                for (ti, coef) in coefs.iter().enumerate() {
                    let (a1, a2) = &mut acc[li][ti];
                    for k in 0..len {
                        let v = coef * total1[k];
                        a1[k] += v;
                        a2[k] += omega * v;
                    }
                }
                if li == e_min && edge.contains(&m) {
                    let second: Vec<C64> = total1.iter().map(|v| omega * v).collect();
                    let st = embed(ham, psi0, &win, &total1, &second);
                    edge_integrand += decay * ham.norm(&st);
                }
            }
        }
    }
    report.omega_tail = edge_integrand * omega_max / (p as f64 * 2.0 * PI * n_psi);

    let mut out = Vec::with_capacity(nt);
    for ti in 0..nt {
        let levels: Vec<Vec<C64>> = acc
            .iter()
            .map(|lv| [lv[ti].0.clone(), lv[ti].1.clone()].concat())
            .collect();
        let (limit, spread) = near_axis_limit(eps, &levels)?;
        report.eps_spread.push(spread);
        out.push(embed(ham, psi0, &win, &limit[..len], &limit[len..]));
    }
    report.ledger = ledger_acc
        .iter()
        .enumerate()
        .map(|(n, per_t)| ModeLedger {
            cluster: n,
            norms: per_t
                .iter()
                .map(|(a, b)| ham.norm(&embed(ham, psi0, &win, a, b)))
                .collect(),
            tail_bound: tail_bound[n],
        })
        .collect();
    let ratios: Vec<f64> = tail_bound
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if !ratios.is_empty() {
        report.ledger_ratio = Some((ratios.iter().sum::<f64>() / ratios.len() as f64).exp());
    }
    Ok((out, report))
}
