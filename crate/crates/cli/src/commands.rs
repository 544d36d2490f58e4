//! Subcommands, registered by name.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{CsvTable, RunOutput, Surrogates};
use num_complex::Complex64 as C64;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use teukolsky::angular_spectral::{
    angular_spectrum_with, projector_methods, AngularProblem, SpectralProjector,
};
use teukolsky::numerics::dense::norm_op_inf;
use teukolsky::numerics::HalfInt;
use teukolsky::propagator::{
    decay_experiment, gaussian, propagators, separable_state, EvolveReport, EvolveSetup,
    Hamiltonian, TwoComponentState,
};
use teukolsky::radial_ode::{
    greens_kernel, jost_solutions, mode_stability_scan, radial_potential, square_well_scan,
    Potential, RadialProblem, ScanRegion, ScanTemplate,
};
use teukolsky::registry::Registry;
use teukolsky::riccati_certify::{
    certify, potential_families, riccati_flow, wkb_center, Disk, RiccatiProblem, WkbCenter,
};

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError>;
}

struct Geometry;
struct AngularModes;
struct RadialGreen;
struct ModeScan;
struct Certify;
struct Evolve;
struct OracleEvolve;
struct Compare;
struct Decay;

/// All subcommands in the order `--help` lists them.
pub fn commands() -> &'static Registry<dyn Command> {
    static REG: OnceLock<Registry<dyn Command>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn Command> = Registry::new("command");
        let all: Vec<Arc<dyn Command>> = vec![
            Arc::new(Geometry),
            Arc::new(AngularModes),
            Arc::new(RadialGreen),
            Arc::new(ModeScan),
            Arc::new(Certify),
            Arc::new(Evolve),
            Arc::new(OracleEvolve),
            Arc::new(Compare),
            Arc::new(Decay),
        ];
        for c in all {
            r.register(c.name(), c);
        }
        r
    })
}

fn cx(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

impl Command for Geometry {
    fn name(&self) -> &'static str {
        "geometry"
    }
    fn about(&self) -> &'static str {
        "horizon data and r(u), Delta(u) on the configured u grid"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let g = cfg.geometry()?;
        let grid = cfg.u_grid()?;
        let mut t = CsvTable::new(&["u", "r", "delta"]);
        for u in grid.nodes() {
            let r = g.regge_wheeler_r(u);
            t.row(&[u, r, g.delta(r)]);
        }
        Ok(RunOutput {
            files: vec![t.named("geometry.csv")],
            results: json!({
                "r1": g.r1(),
                "r_minus": g.r_minus(),
                "kappa": g.kappa(),
                "omega_horizon": g.omega_horizon(),
            }),
            surrogates: Surrogates::default(),
        })
    }
}

fn angular_problem(cfg: &RunConfig, omega: C64) -> Result<AngularProblem, CliError> {
    Ok(AngularProblem::with_basis_size(
        cfg.s,
        cfg.k,
        omega * cfg.a,
        cfg.angular.n_basis,
    )?)
}

/// Coefficients 1/j!, a smooth test vector.
fn factorial_vector(n: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(n);
    let mut f = 1.0;
    for j in 0..n {
        if j > 0 {
            f /= j as f64;
        }
        v.push(C64::new(f, 0.0));
    }
    v
}

impl Command for AngularModes {
    fn name(&self) -> &'static str {
        "angular-modes"
    }
    fn about(&self) -> &'static str {
        "angular eigenvalues, clusters and spectral projectors at one frequency"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let p = angular_problem(cfg, cfg.angular.omega)?;
        let sp = angular_spectrum_with(&p, &cfg.angular.cluster_rule)?;
        let resolved = sp.resolved_indices();
        let mut modes = CsvTable::new(&["index", "cluster", "resolved", "re_lambda", "im_lambda"]);
        for (i, e) in sp.eigenvalues.iter().enumerate() {
            let cl = sp.cluster_of(i).map_or(-1.0, |c| c as f64);
            let res = if resolved.contains(&i) { 1.0 } else { 0.0 };
            modes.row(&[i as f64, cl, res, e.re, e.im]);
        }
        let method = projector_methods().get(&cfg.angular.method)?;
        let qs: Vec<SpectralProjector> = sp
            .resolved_clusters()
            .into_iter()
            .map(|n| method.projector(&sp, n))
            .collect::<Result<_, _>>()?;
        let mut proj = CsvTable::new(&["cluster", "dim", "jordan", "norm", "idempotence_defect"]);
        let mut orth = 0.0f64;
        for (i, qi) in qs.iter().enumerate() {
            proj.row(&[
                qi.n as f64,
                qi.dim as f64,
                if qi.jordan { 1.0 } else { 0.0 },
                qi.norm,
                qi.idempotence_defect(),
            ]);
            for (j, qj) in qs.iter().enumerate() {
                if i != j {
                    orth = orth.max(norm_op_inf(&(&qi.matrix * &qj.matrix)));
                }
            }
        }
        let v = factorial_vector(p.n_basis());
        let mut rest = v.clone();
        for q in &qs {
            for (r, w) in rest.iter_mut().zip(q.apply(&v)) {
                *r -= w;
            }
        }
        let completeness = teukolsky::numerics::norm2(&rest) / teukolsky::numerics::norm2(&v);
        Ok(RunOutput {
            files: vec![modes.named("angular_modes.csv"), proj.named("projectors.csv")],
            results: json!({
                "a_omega": cx(p.a_omega),
                "n_basis": p.n_basis(),
                "n_clusters": sp.n_clusters(),
                "resolved_clusters": qs.len(),
                "max_orthogonality_defect": orth,
                "completeness_residual": completeness,
            }),
            surrogates: Surrogates::default(),
        })
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl Command for RadialGreen {
    fn name(&self) -> &'static str {
        "radial-green"
    }
    fn about(&self) -> &'static str {
        "Jost solutions, Wronskian and one Green's kernel column"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let rb = &cfg.radial;
        let lambda = match rb.lambda {
            Some(l) => l,
            None => {
                let sp = angular_spectrum_with(&angular_problem(cfg, rb.omega)?, &cfg.angular.cluster_rule)?;
                *sp.eigenvalues.get(rb.mode).ok_or_else(|| {
                    CliError::Invalid(format!("radial.mode {} exceeds the angular basis", rb.mode))
                })?
            }
        };
        let rp = RadialProblem::new(cfg.geometry()?, cfg.s, cfg.k, rb.omega, lambda)?;
        let pot: Arc<dyn Potential> = Arc::new(radial_potential(&rp)?);
        let us = linspace(rb.u[0], rb.u[1], rb.n);
        let pair = jost_solutions(pot, &us, &rb.jost)?;
        let mut jost = CsvTable::new(&["u", "re_acute", "im_acute", "re_grave", "im_grave"]);
        let mut green = CsvTable::new(&["u", "re_g", "im_g"]);
        for (i, &u) in pair.samples.iter().enumerate() {
            let (a, g) = (pair.acute[i].0, pair.grave[i].0);
            jost.row(&[u, a.re, a.im, g.re, g.im]);
            let k = greens_kernel(&pair, u, rb.source)?;
            green.row(&[u, k.re, k.im]);
        }
        Ok(RunOutput {
            files: vec![jost.named("jost.csv"), green.named("green.csv")],
            results: json!({
                "omega": cx(rb.omega),
                "lambda": cx(lambda),
                "wronskian": cx(pair.wronskian),
                "relative_wronskian": pair.relative_wronskian,
                "drift": pair.drift,
                "match_points": [pair.match_points.0, pair.match_points.1],
            }),
            surrogates: Surrogates::default(),
        })
    }
}

/// Region holding the single bound state of the unit square well.
const CONTROL_REGION: ScanRegion = ScanRegion {
    re: (-0.25, 0.35),
    im: (0.3, 1.0),
    n_re: 6,
    n_im: 7,
};

impl Command for ModeScan {
    fn name(&self) -> &'static str {
        "mode-scan"
    }
    fn about(&self) -> &'static str {
        "Wronskian winding scan over a frequency rectangle, with a bound-state control"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let sb = &cfg.scan;
        let l_min = if cfg.s.abs() > cfg.k.abs() { cfg.s.abs() } else { cfg.k.abs() };
        let t = ScanTemplate {
            geometry: cfg.geometry()?,
            s: cfg.s,
            k: cfg.k,
            l_max: l_min + HalfInt::from_int(cfg.angular.n_basis as i32 - 1),
        };
        let reports = mode_stability_scan(&t, &sb.region, &sb.modes, sb.tolerance, &cfg.radial.jost);
        let control = if sb.control {
            Some(square_well_scan(1.0, 1.0, &CONTROL_REGION, 1e-8))
        } else {
            None
        };
        let mut nodes = CsvTable::new(&["mode", "re_omega", "im_omega", "re_w", "im_w", "relative"]);
        let mut hits = CsvTable::new(&["mode", "re_omega", "im_omega", "winding", "min_relative"]);
        for r in &reports {
            for n in &r.nodes {
                nodes.row(&[r.mode as f64, n.omega.re, n.omega.im, n.wronskian.re, n.wronskian.im, n.relative]);
            }
            for h in &r.hits {
                hits.row(&[r.mode as f64, h.omega.re, h.omega.im, h.winding as f64, h.min_relative]);
            }
        }
        let summary: Vec<_> = reports
            .iter()
            .map(|r| json!({"mode": r.mode, "hits": r.hits.len(), "failures": r.failures}))
            .collect();
        let control_json = control.as_ref().map(|c| {
            let w: Vec<[f64; 2]> = c.hits.iter().filter(|h| h.winding != 0).map(|h| cx(h.omega)).collect();
            json!({"detected": !w.is_empty(), "zeros": w})
        });
        Ok(RunOutput {
            files: vec![nodes.named("scan.csv"), hits.named("scan_hits.csv")],
            results: json!({"modes": summary, "control": control_json}),
            surrogates: Surrogates::default(),
        })
    }
}

impl Command for Certify {
    fn name(&self) -> &'static str {
        "certify"
    }
    fn about(&self) -> &'static str {
        "invariant-disk enclosure of a Riccati flow, checked against direct integration"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let cb = &cfg.certify;
        let family = potential_families().get(&cb.family)?;
        let mut table = CsvTable::new(&["run", "u", "re_m", "im_m", "radius", "re_y", "im_y", "inside"]);
        let mut runs = Vec::new();
        for run in 0..cb.count {
            let mut params = cb.params.clone();
            if cb.family == "random" {
                params.insert("seed".into(), (cfg.seed + run as u64) as f64);
            }
            let v = family.build(&params)?;
            let m0 = wkb_center(v.as_ref(), &[cb.u[0], cb.u[0] + 1e-3], C64::new(1.0, 0.0))?[0];
            let y0 = m0 + cb.y0_offset;
            let p = RiccatiProblem::new(v, cb.u[0], cb.u[1], y0, Disk { m: y0, r: 0.0 })?;
            let enc = certify(&p, &WkbCenter, &cb.options)?;
            let y = riccati_flow(&p, &enc.nodes)?;
            let esc = enc.escapes(&y);
            for (i, (&u, d)) in enc.nodes.iter().zip(&enc.disks).enumerate() {
                let inside = if d.contains(y[i]) { 1.0 } else { 0.0 };
                table.row(&[run as f64, u, d.m.re, d.m.im, d.r, y[i].re, y[i].im, inside]);
            }
            runs.push(json!({
                "params": params,
                "certified": enc.certified,
                "failure_point": enc.failure_point,
                "escapes": esc.len(),
                "final_radius": enc.flow.radii.last(),
            }));
        }
        let escaped = runs.iter().filter(|r| r["escapes"].as_u64() != Some(0)).count();
        Ok(RunOutput {
            files: vec![table.named("certify.csv")],
            results: json!({"runs": runs, "runs_with_escapes": escaped}),
            surrogates: Surrogates::default(),
        })
    }
}

/// Hamiltonian and initial data described by the config.
pub fn setup(cfg: &RunConfig) -> Result<(EvolveSetup, TwoComponentState), CliError> {
    let g = cfg.geometry()?;
    let grid = cfg.u_grid()?;
    let ham = Hamiltonian::new(g, cfg.s, cfg.k, grid, cfg.grid.n_ang, cfg.contour.scalar_product)?;
    let psi0 = separable_state(
        gaussian(cfg.data.center, cfg.data.width),
        &cfg.data.coefficients,
        &g,
        grid,
        cfg.s,
        cfg.k,
        cfg.grid.n_ang,
    )?;
    let setup = EvolveSetup {
        ham: Arc::new(ham),
        config: cfg.contour.clone(),
        separated: cfg.separated.clone(),
        oracle: cfg.oracle.clone(),
    };
    Ok((setup, psi0))
}

fn snapshot(setup: &EvolveSetup, t: f64, st: &TwoComponentState, xs: &[f64]) -> CsvTable {
    let mut table = CsvTable::new(&["t", "u", "x", "re_phi", "im_phi"]);
    for i in 0..st.grid.n {
        let u = st.grid.node(i);
        for &x in xs {
            let p = st.phi_at(&setup.ham.geometry, i, x);
            table.row(&[t, u, x, p.re, p.im]);
        }
    }
    table
}

fn surrogates_of(rep: &EvolveReport) -> Surrogates {
    let mut s = Surrogates::default();
    if let Some(c) = &rep.contour {
        s.c_hat = Some(c.c_hat);
        s.omega_max = Some(c.omega_max);
        s.tail_estimate = Some(c.tail_estimate);
    }
    if let Some(r) = &rep.separated {
        s.c_hat = Some(r.c_hat);
        s.omega_max = Some(r.omega_max);
        s.tail_estimate = Some(r.omega_tail);
        s.eps_spread = Some(r.eps_spread.clone());
    }
    s
}

fn evolve_with(cfg: &RunConfig, propagator: &str) -> Result<RunOutput, CliError> {
    let prop = propagators().get(propagator)?;
    let times = &cfg.schedule.times;
    let (setup, psi0) = setup(cfg)?;
    let (states, report) = if times.is_empty() {
        (Vec::new(), EvolveReport { propagator: propagator.into(), ..Default::default() })
    } else {
        prop.evolve(&setup, &psi0, times)?
    };
    let mut files = Vec::new();
    let mut norms = Vec::new();
    for (j, (t, st)) in times.iter().zip(&states).enumerate() {
        files.push(snapshot(&setup, *t, st, &cfg.schedule.snapshot_x).named(&format!("snapshot_{j:04}.csv")));
        norms.push(setup.ham.norm(st));
    }
    Ok(RunOutput {
        files,
        results: json!({
            "propagator": propagator,
            "times": times,
            "norms": norms,
            "initial_norm": setup.ham.norm(&psi0),
            "report": report,
        }),
        surrogates: surrogates_of(&report),
    })
}

impl Command for Evolve {
    fn name(&self) -> &'static str {
        "evolve"
    }
    fn about(&self) -> &'static str {
        "evolve the configured data with schedule.propagator and write phi snapshots"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        evolve_with(cfg, &cfg.schedule.propagator)
    }
}

impl Command for OracleEvolve {
    fn name(&self) -> &'static str {
        "oracle-evolve"
    }
    fn about(&self) -> &'static str {
        "same inputs and snapshots as evolve, computed by finite-difference time stepping"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        evolve_with(cfg, "oracle")
    }
}

/// Snapshot rows keyed by file name; each row is (t, u, x, phi).
fn read_snapshots(dir: &Path) -> Result<BTreeMap<String, Vec<[f64; 5]>>, CliError> {
    let io = |e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    };
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if !(name.starts_with("snapshot_") && name.ends_with(".csv")) {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate().skip(1) {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Parse {
                    path: path.clone(),
                    msg: format!("line {}: {e}", ln + 1),
                })?;
            let row: [f64; 5] = vals.try_into().map_err(|_| CliError::Parse {
                path: path.clone(),
                msg: format!("line {}: expected 5 columns", ln + 1),
            })?;
            rows.push(row);
        }
        out.insert(name, rows);
    }
    Ok(out)
}

impl Command for Compare {
    fn name(&self) -> &'static str {
        "compare"
    }
    fn about(&self) -> &'static str {
        "relative L2 difference of phi between the snapshots of two output directories"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let (Some(left), Some(right)) = (&cfg.compare.left, &cfg.compare.right) else {
            return Err(CliError::Invalid("compare needs compare.left and compare.right".into()));
        };
        let a = read_snapshots(left)?;
        let b = read_snapshots(right)?;
        let mut table = CsvTable::new(&["t", "rel_l2"]);
        let mut worst = 0.0f64;
        for (name, ra) in &a {
            let Some(rb) = b.get(name) else { continue };
            if ra.len() != rb.len() || ra.iter().zip(rb).any(|(p, q)| p[..3] != q[..3]) {
                return Err(CliError::Invalid(format!("{name}: snapshots sample different points")));
            }
            let (mut num, mut den) = (0.0, 0.0);
            for (p, q) in ra.iter().zip(rb) {
                num += (p[3] - q[3]).powi(2) + (p[4] - q[4]).powi(2);
                den += q[3].powi(2) + q[4].powi(2);
            }
            let rel = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
            worst = worst.max(rel);
            table.row(&[ra.first().map_or(f64::NAN, |r| r[0]), rel]);
        }
        let n = table.len();
        Ok(RunOutput {
            files: vec![table.named("compare.csv")],
            results: json!({"matched_snapshots": n, "max_rel_l2": worst}),
            surrogates: Surrogates::default(),
        })
    }
}

impl Command for Decay {
    fn name(&self) -> &'static str {
        "decay"
    }
    fn about(&self) -> &'static str {
        "sup |phi| over a compact region at the decay times (separated propagator)"
    }
    fn run(&self, cfg: &RunConfig) -> Result<RunOutput, CliError> {
        let (setup, psi0) = setup(cfg)?;
        let times = &cfg.decay.times;
        let series = if times.is_empty() {
            Default::default()
        } else {
            decay_experiment(&setup.ham, &psi0, times, &cfg.decay.region, &setup.config, &setup.separated)?
        };
        let mut surrogates = Surrogates::default();
        if let Some(r) = &series.report {
            surrogates = surrogates_of(&EvolveReport {
                separated: Some(r.clone()),
                ..Default::default()
            });
        }
        let peak = series
            .sup_abs_phi
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let peak_t = series.t.get(peak.0).copied();
        Ok(RunOutput {
            files: vec![("decay.csv".to_string(), series.to_csv())],
            results: json!({
                "final_ratio": series.final_ratio(),
                "peak_t": peak_t,
                "decreasing_after_peak": peak_t.map(|t| series.decreasing_after(t)),
                "window": series.report.as_ref().map(|r| r.window),
            }),
            surrogates,
        })
    }
}
