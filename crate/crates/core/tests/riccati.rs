use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use teukolsky::numerics::ode::{dopri5_sampled, OdeOptions};
use teukolsky::numerics::{c, lagrange4, C64};
use teukolsky::riccati_certify::*;
use teukolsky::Error;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn point(y0: C64) -> Disk {
    Disk { m: y0, r: 0.0 }
}

#[test]
fn airy_log_derivative() {
    // -phi'' + u phi = 0 integrated directly, y = phi'/phi
    let g = grid(0.0, 3.0, 31);
    let phi = dopri5_sampled(|u, y: &[f64; 2]| [y[1], u * y[0]], 0.0, [1.0, 0.5], 3.0, &OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() }, &g).unwrap();
    let v: Arc<dyn ComplexPotential> = Arc::new(FnPotential(|u| c(u, 0.0)));
    let p = RiccatiProblem::new(v, 0.0, 3.0, c(0.5, 0.0), point(c(0.5, 0.0))).unwrap();
    let y = riccati_flow(&p, &g).unwrap();
    for (f, y) in phi.iter().zip(&y) {
        assert!((y - c(f[1] / f[0], 0.0)).norm() < 1e-8);
    }
}

#[test]
fn exact_center_has_no_defect() {
    let v: Arc<dyn ComplexPotential> = Arc::new(FnPotential(|_| c(1.0, 0.0)));
    let sup = |n: usize| {
        let g = grid(0.0, 2.0, n);
        let m: Vec<C64> = g.iter().map(|u| c(u.tanh(), 0.0)).collect();
        let flow = disk_flow(v.as_ref(), &g, &m, 0.0, &CertifyOptions::default()).unwrap();
        let r = flow.radii.iter().fold(0.0f64, |a, &b| a.max(b));
        (flow.delta_m.iter().fold(0.0f64, |a, d| a.max(d.norm())), r)
    };
    // the secant slope of the interpolated center leaves an O(h) defect
    let (d1, r1) = sup(2001);
    let (d2, r2) = sup(4001);
    assert!(d1 < 1e-3 && r1 < 1e-3, "{d1} {r1}");
    assert!((d2 / d1 - 0.5).abs() < 0.05 && (r2 / r1 - 0.5).abs() < 0.05, "{d1} {d2} {r1} {r2}");
}

#[test]
fn constant_center_defect() {
    let v: Arc<dyn ComplexPotential> = Arc::new(FnPotential(|_| c(1.0, 0.0)));
    let g = grid(0.0, 1.0, 101);
    let m = vec![c(0.9, 0.0); g.len()];
    let flow = disk_flow(v.as_ref(), &g, &m, 0.01, &CertifyOptions::default()).unwrap();
    // oracle: dR/du = -1.8 R + 1.05 (0.19 + R^2) by RK4 quadrature
    let mut r = 0.01f64;
    let h = 1e-4;
    let f = |r: f64| -1.8 * r + 1.05 * (0.19 + r * r);
    for _ in 0..10000 {
        let k1 = f(r);
        let k2 = f(r + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h * k2);
        let k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    for (i, d) in flow.delta_m.iter().enumerate() {
        let ri = flow.radii[i];
        assert!((d - c(-0.19 + ri * ri, 0.0)).norm() < 1e-12);
    }
    // the cell bound uses the largest R on each cell, so the radius runs slightly ahead
    let end = *flow.radii.last().unwrap();
    assert!(end >= r && end < r * 1.02, "{end} vs {r}");
}

#[test]
fn radius_increases_where_re_m_negative() {
    let v: Arc<dyn ComplexPotential> = Arc::new(FnPotential(|_| c(1.0, 0.0)));
    let g = grid(0.0, 1.0, 101);
    let m = vec![c(-0.3, 0.2); g.len()];
    let flow = disk_flow(v.as_ref(), &g, &m, 0.01, &CertifyOptions::default()).unwrap();
    assert!(flow.radii.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sine_potential_containment() {
    let v = potential_families().get("sine").unwrap().build(&Default::default()).unwrap();
    let m0 = wkb_center(v.as_ref(), &[0.0, 1e-3], c(1.0, 0.0)).unwrap()[0];
    let y0 = m0 + c(0.02, -0.01);
    let p = RiccatiProblem::new(v, 0.0, 10.0, y0, point(y0)).unwrap();
    let enc = certify(&p, &WkbCenter, &CertifyOptions::default()).unwrap();
    assert!(enc.certified);
    let y = riccati_flow(&p, &enc.nodes).unwrap();
    assert!(enc.escapes(&y).is_empty());
}

#[test]
fn bad_center_is_caught() {
    let v: Arc<dyn ComplexPotential> = Arc::new(FnPotential(|_| c(4.0, 0.0)));
    let p = RiccatiProblem::new(v, 0.0, 5.0, c(2.0, 0.0), point(c(2.0, 0.0))).unwrap();
    match certify(&p, &FnCenter(|_| c(0.0, 0.0)), &CertifyOptions::default()) {
        Err(Error::RadiusBlowup { u, .. }) => assert!(u < 5.0),
        Ok(e) => assert!(!e.certified),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn tight_limit() {
    let v = potential_families().get("sine").unwrap().build(&Default::default()).unwrap();
    let y0 = c(1.4, 0.1);
    let p = RiccatiProblem::new(v.clone(), 0.0, 4.0, y0, point(y0)).unwrap();
    let fine = grid(0.0, 4.0, 40001);
    let y: Arc<Vec<C64>> = Arc::new(riccati_flow(&p, &fine).unwrap());
    let mut ends = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let y = y.clone();
        let center = FnCenter(move |u: f64| lagrange4(&y, 0.0, 1e-4, u) + eps * c(1.0, 1.0) * (1.0 + 0.5 * u.sin()));
        let enc = certify(&p, &center, &CertifyOptions::default()).unwrap();
        let r0 = enc.flow.radii[0];
        // R0 e^{-2 int Re m}, trapezoidal
        let n = &enc.nodes;
        let integral: f64 = (1..n.len()).map(|i| 0.5 * (n[i] - n[i - 1]) * (enc.disks[i].m.re + enc.disks[i - 1].m.re)).sum();
        let transported = r0 * (-2.0 * integral).exp();
        ends.push((*enc.flow.radii.last().unwrap(), transported));
    }
    for w in ends.windows(2) {
        assert!(w[1].0 < 0.2 * w[0].0, "{ends:?}");
    }
    for (end, transported) in &ends {
        assert!(*end >= *transported, "{ends:?}");
    }
}

#[test]
fn wkb_center_accuracy() {
    let v = potential_families().get("quadratic").unwrap().build(&Default::default()).unwrap();
    let g = grid(0.0, 5.0, 5001);
    let m = wkb_center(v.as_ref(), &g, c(0.0, 0.0)).unwrap();
    // the largest defect sits at u = 0, where it equals -V''/(4V) = -1/50
    let mut defect = 0.0f64;
    for i in 1..g.len() - 1 {
        let dm = (m[i + 1] - m[i - 1]) / (g[i + 1] - g[i - 1]);
        defect = defect.max((dm - (v.value(g[i]) - m[i] * m[i])).norm());
    }
    assert!(defect < 2e-2, "{defect}");
}

#[test]
fn wkb_branch_is_continuous_around_a_loop() {
    // V = 2 e^{iu} winds once around the origin
    let v = FnPotential(|u: f64| 2.0 * C64::from_polar(1.0, u));
    let g = grid(0.0, 2.0 * std::f64::consts::PI, 2001);
    let m = wkb_center(&v, &g, c(0.0, 0.0)).unwrap();
    for w in m.windows(2) {
        assert!((w[1] - w[0]).norm() < 0.01 * w[0].norm());
    }
    // after a full turn the square root has changed sign; V'/(4V) = i/4 has not
    let q = |z: C64| z + c(0.0, 0.25);
    assert!((q(m[0]) + q(m[m.len() - 1])).norm() < 1e-6);
}

/// Random smooth potential with y0 near the attracting WKB branch.
fn random_problem(seed: u64) -> RiccatiProblem {
    let v: Arc<dyn ComplexPotential> = Arc::new(RandomSmooth::from_seed(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let m0 = wkb_center(v.as_ref(), &[0.0, 1e-3], c(1.0, 0.0)).unwrap()[0];
    let y0 = m0 + c(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    RiccatiProblem::new(v, 0.0, 6.0, y0, point(y0)).unwrap()
}

fn escapes(seed: u64, margin: f64) -> (bool, usize) {
    let p = random_problem(seed);
    let opts = CertifyOptions { margin, ..Default::default() };
    let enc = certify(&p, &WkbCenter, &opts).unwrap();
    let y = riccati_flow(&p, &enc.nodes).unwrap();
    (enc.certified, enc.escapes(&y).len())
}

#[test]
fn randomized_containment() {
    for seed in 0..100 {
        let (certified, n) = escapes(seed, 0.05);
        assert!(certified, "seed {seed}");
        assert_eq!(n, 0, "seed {seed}");
    }
}

#[test]
fn negative_margin_breaks_containment() {
    let failures = (0..100).filter(|&s| escapes(s, -0.5).1 > 0).count();
    assert!(failures > 0);
}

proptest! {
    #[test]
    fn radius_monotone_when_re_m_nonpositive(re_m in prop::collection::vec(-3.0f64..0.0, 12), d in prop::collection::vec(0.0f64..2.0, 11), r0 in 0.0f64..5.0) {
        let g = grid(0.0, 2.0, 12);
        let r = radius_quadrature(&g, &re_m, &d, r0);
        for w in r.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-14));
        }
    }

    #[test]
    fn disk_contains_its_center(m_re in -5.0f64..5.0, m_im in -5.0f64..5.0, r in 0.0f64..3.0) {
        let d = Disk::new(c(m_re, m_im), r).unwrap();
        prop_assert!(d.contains(d.m));
    }
}
