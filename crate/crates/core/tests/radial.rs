use std::sync::Arc;
use teukolsky::kerr_geometry::KerrParams;
use teukolsky::numerics::{c, HalfInt, C64};
use teukolsky::radial_ode::*;

const I: C64 = C64::new(0.0, 1.0);

/// V = -omega^2 everywhere.
struct Free(C64);

impl Potential for Free {
    fn eval(&self, _u: f64, _aux: f64) -> C64 {
        -self.0 * self.0
    }
    fn plateau_minus(&self) -> C64 {
        -self.0 * self.0
    }
    fn plateau_plus(&self) -> C64 {
        -self.0 * self.0
    }
    fn wavenumber_minus(&self) -> C64 {
        self.0
    }
    fn wavenumber_plus(&self) -> C64 {
        self.0
    }
}

fn teuk(a: f64, s: i32, k: i32, w: C64, lam: C64) -> Arc<dyn Potential> {
    let p = RadialProblem::new(
        KerrParams::new(1.0, a).unwrap(),
        HalfInt::from_int(s),
        HalfInt::from_int(k),
        w,
        lam,
    )
    .unwrap();
    Arc::new(radial_potential(&p).unwrap())
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[test]
fn free_case_is_exact() {
    let w = c(0.7, 0.2);
    let opts = JostOptions {
        initializer: "wkb".into(),
        ..Default::default()
    };
    let pair = jost_solutions(Arc::new(Free(w)), &grid(-10.0, 10.0, 41), &opts).unwrap();
    assert!((pair.wronskian - 2.0 * I * w).norm() < 1e-8 * w.norm());
    for (u, (a, g)) in pair.samples.iter().zip(pair.acute.iter().zip(&pair.grave)) {
        assert!((a.0 - (-I * w * u).exp()).norm() < 1e-8 * a.0.norm());
        assert!((g.0 - (I * w * u).exp()).norm() < 1e-8 * g.0.norm());
    }
    for &(u, v) in &[(-3.0, 2.0), (1.5, -0.5), (4.0, 4.0)] {
        let k = greens_kernel(&pair, u, v).unwrap();
        let exact = -(I * w * (u - v as f64).abs()).exp() / (2.0 * I * w);
        assert!((k - exact).norm() < 1e-8 * exact.norm());
    }
}

#[test]
fn abel_wronskian_constant() {
    let pot = teuk(0.5, 0, 0, c(0.4, 0.1), c(2.0, 0.0));
    let pair = jost_solutions(pot, &grid(-60.0, 60.0, 241), &JostOptions::default()).unwrap();
    assert!(pair.drift < 1e-6, "drift {}", pair.drift);
}

#[test]
fn abel_wronskian_constant_spin_two() {
    // below u ~ -22 both solutions grow like exp(0.41|u|) and w is lost to cancellation
    let pot = teuk(0.5, 2, 2, c(0.6, 0.05), c(3.0, 0.4));
    let pair = jost_solutions(pot, &grid(-20.0, 40.0, 121), &JostOptions::default()).unwrap();
    assert!(pair.drift < 1e-6, "drift {}", pair.drift);
}

#[test]
fn kernel_symmetric() {
    let pot = teuk(0.5, 0, 0, c(0.4, 0.1), c(2.0, 0.0));
    let pair = jost_solutions(pot, &grid(-10.0, 10.0, 21), &JostOptions::default()).unwrap();
    let a = greens_kernel(&pair, -2.3, 1.7).unwrap();
    let b = greens_kernel(&pair, 1.7, -2.3).unwrap();
    assert!((a - b).norm() <= 1e-12 * a.norm());
}

#[test]
fn series_and_wkb_initializers_agree() {
    // normalizations differ; the kernel does not
    let pot = teuk(0.5, 0, 0, c(0.5, 0.1), c(2.0, 0.0));
    let g = grid(-10.0, 10.0, 21);
    let ps = jost_solutions(pot.clone(), &g, &JostOptions::default()).unwrap();
    let pw = jost_solutions(
        pot,
        &g,
        &JostOptions {
            initializer: "wkb".into(),
            ..Default::default()
        },
    )
    .unwrap();
    for &(u, v) in &[(-4.0, 3.0), (0.5, 2.0), (-8.0, -7.0)] {
        let a = greens_kernel(&ps, u, v).unwrap();
        let b = greens_kernel(&pw, u, v).unwrap();
        assert!((a - b).norm() < 1e-6 * a.norm(), "{a} vs {b}");
    }
}

fn bump(u: f64) -> f64 {
    let z: f64 = u / 5.0;
    if z.abs() < 1.0 {
        (-1.0 / (1.0 - z * z)).exp()
    } else {
        0.0
    }
}

fn defect(pot: Arc<dyn Potential>) -> f64 {
    let (u0, h, n) = (-12.0, 0.02, 1201);
    let app = GreenApplication::new(pot.clone(), u0, h, n, &JostOptions::default()).unwrap();
    let f: Vec<C64> = app.grid().iter().map(|&u| c(bump(u), 0.0)).collect();
    let interior: Vec<C64> = app
        .interior_points()
        .iter()
        .map(|&u| c(bump(u), 0.0))
        .collect();
    let x = app.apply_interior(&interior);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 2..n - 2 {
        let u = u0 + i as f64 * h;
        let d2 = (-x[i - 2] + 16.0 * x[i - 1] - 30.0 * x[i] + 16.0 * x[i + 1] - x[i + 2])
            / (12.0 * h * h);
        let r = -d2 + pot.at(u) * x[i] - f[i];
        num += r.norm_sqr();
        den += f[i].norm_sqr();
    }
    (num / den).sqrt()
}

#[test]
fn green_defect_scalar() {
    let d = defect(teuk(0.5, 0, 0, c(0.4, 0.1), c(2.0, 0.0)));
    assert!(d < 1e-4, "defect {d}");
}

#[test]
fn green_defect_spin_two() {
    let d = defect(teuk(0.5, 2, 2, c(0.5, 0.01), c(2.5, 0.3)));
    assert!(d < 1e-4, "defect {d}");
}

#[test]
fn conjugation_maps_omega_to_minus_conjugate() {
    let w = c(0.4, 0.1);
    let g = grid(-10.0, 10.0, 21);
    let p1 = jost_solutions(teuk(0.5, 0, 0, w, c(2.0, 0.3)), &g, &JostOptions::default()).unwrap();
    let p2 = jost_solutions(
        teuk(0.5, 0, 0, -w.conj(), c(2.0, -0.3)),
        &g,
        &JostOptions::default(),
    )
    .unwrap();
    for i in 0..g.len() {
        assert!((p1.acute[i].0.conj() - p2.acute[i].0).norm() < 1e-10 * p1.acute[i].0.norm());
        assert!((p1.grave[i].0.conj() - p2.grave[i].0).norm() < 1e-10 * p1.grave[i].0.norm());
    }
}

#[test]
fn square_well_bound_state_detected() {
    let well = SquareWell {
        omega: c(0.0, 0.0),
        depth: 1.0,
        half_width: 1.0,
    };
    let kappa = well.ground_state();
    let region = ScanRegion {
        re: (-0.25, 0.35),
        im: (0.3, 1.0),
        n_re: 6,
        n_im: 7,
    };
    let rep = square_well_scan(1.0, 1.0, &region, 1e-8);
    let winding: Vec<&ScanHit> = rep.hits.iter().filter(|h| h.winding != 0).collect();
    assert_eq!(winding.len(), 1, "{:?}", rep.hits);
    assert!((winding[0].omega - c(0.0, kappa)).norm() < 0.1);
}

#[test]
fn upper_half_plane_scan_is_empty() {
    let t = ScanTemplate {
        geometry: KerrParams::new(1.0, 0.5).unwrap(),
        s: HalfInt::from_int(2),
        k: HalfInt::from_int(2),
        l_max: HalfInt::from_int(14),
    };
    let region = ScanRegion {
        re: (0.1, 1.2),
        im: (0.05, 0.5),
        n_re: 8,
        n_im: 4,
    };
    let reps = mode_stability_scan(&t, &region, &[0], 1e-6, &JostOptions::default());
    assert_eq!(reps[0].failures, 0);
    assert!(reps[0].hits.is_empty(), "{:?}", reps[0].hits);
}

#[test]
fn schwarzschild_quasinormal_mode_in_lower_half_plane() {
    let t = ScanTemplate {
        geometry: KerrParams::new(1.0, 0.0).unwrap(),
        s: HalfInt::from_int(2),
        k: HalfInt::from_int(2),
        l_max: HalfInt::from_int(12),
    };
    let region = ScanRegion {
        re: (0.33, 0.42),
        im: (-0.13, -0.05),
        n_re: 6,
        n_im: 6,
    };
    let opts = JostOptions {
        verify_match: false,
        ..Default::default()
    };
    let reps = mode_stability_scan(&t, &region, &[0], 1e-8, &opts);
    let w: Vec<&ScanHit> = reps[0].hits.iter().filter(|h| h.winding != 0).collect();
    assert_eq!(w.len(), 1, "{:?}", reps[0].hits);
    assert!((w[0].omega - c(0.3737, -0.0890)).norm() < 0.05 * 0.3737);
}

/// Fundamental frequency of a real damped oscillation by order-2 linear prediction.
fn prony(x: &[f64], dt: f64) -> C64 {
    // x[n+2] = p x[n+1] + q x[n] in the least-squares sense
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for w in x.windows(3) {
        s11 += w[1] * w[1];
        s12 += w[1] * w[0];
        s22 += w[0] * w[0];
        b1 += w[2] * w[1];
        b2 += w[2] * w[0];
    }
    let det = s11 * s22 - s12 * s12;
    let p = (b1 * s22 - b2 * s12) / det;
    let q = (s11 * b2 - s12 * b1) / det;
    let disc = (c(p * p + 4.0 * q, 0.0)).sqrt();
    let z = (c(p, 0.0) + disc) / 2.0;
    let w = I * z.ln() / dt;
    if w.re > 0.0 {
        w
    } else {
        -w.conj()
    }
}

#[test]
fn schwarzschild_scan_zero_matches_oracle_ringdown() {
    use teukolsky::propagator::UGrid;
    use teukolsky::timedomain_oracle::{evolve_fd, FdConfig};
    // l = 2 scalar field; with a = 0 the angular profile P2 is preserved exactly
    let g = KerrParams::new(1.0, 0.0).unwrap();
    let grid = UGrid::new(-100.0, 140.0, 1921).unwrap();
    let dt = 0.5;
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * dt).collect();
    let (out, _) = evolve_fd(
        &g,
        HalfInt::from_int(0),
        HalfInt::from_int(0),
        |u, x| c((-(u - 10.0) * (u - 10.0) / 8.0).exp() * 0.5 * (3.0 * x * x - 1.0), 0.0),
        |_, _| c(0.0, 0.0),
        grid,
        &times,
        &FdConfig::default(),
    )
    .unwrap();
    // observer at u = 30, after the direct pulse and the onset of ringing have passed
    let j = ((30.0 - grid.u0) / grid.h).round() as usize;
    let nx = out[0].x.len();
    let q = (0..nx).max_by(|&a, &b| out[0].x[a].abs().partial_cmp(&out[0].x[b].abs()).unwrap()).unwrap();
    let signal: Vec<f64> = out
        .iter()
        .filter(|f| f.t >= 60.0 && f.t <= 95.0)
        .map(|f| f.phi[j * nx + q].re)
        .collect();
    let ringdown = prony(&signal, dt);

    let t = ScanTemplate {
        geometry: g,
        s: HalfInt::from_int(0),
        k: HalfInt::from_int(0),
        l_max: HalfInt::from_int(12),
    };
    let region = ScanRegion {
        re: (0.42, 0.54),
        im: (-0.14, -0.06),
        n_re: 12,
        n_im: 8,
    };
    let opts = JostOptions {
        verify_match: false,
        ..Default::default()
    };
    let reps = mode_stability_scan(&t, &region, &[2], 1e-8, &opts);
    let w: Vec<&ScanHit> = reps[0].hits.iter().filter(|h| h.winding != 0).collect();
    assert_eq!(w.len(), 1, "{:?}", reps[0].hits);
    assert!(
        (w[0].omega - ringdown).norm() < 0.05 * ringdown.norm(),
        "scan {} vs ringdown {ringdown}",
        w[0].omega
    );
}
