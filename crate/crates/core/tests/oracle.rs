use teukolsky::kerr_geometry::KerrParams;
use teukolsky::numerics::{c, HalfInt, C64};
use teukolsky::propagator::*;
use teukolsky::timedomain_oracle::*;
use teukolsky::Error;

fn hi(v: i32) -> HalfInt {
    HalfInt::from_int(v)
}

fn kerr() -> KerrParams {
    KerrParams::new(1.0, 0.5).unwrap()
}

/// Largest deviation from the d'Alembert solution (f(u - t) + f(u + t)) / 2 at t = 20, |u| < 23.
fn flat_error(n: usize) -> (f64, FdReport) {
    let grid = UGrid::new(-40.0, 40.0, n).unwrap();
    let f = |u: f64| (-0.5 * u * u).exp();
    let cfg = FdConfig {
        frozen_far: true,
        n_theta: Some(4),
        ..Default::default()
    };
    let (out, rep) = evolve_fd(
        &kerr(),
        hi(0),
        hi(0),
        |u, _| c(f(u), 0.0),
        |_, _| c(0.0, 0.0),
        grid,
        &[20.0],
        &cfg,
    )
    .unwrap();
    let mut err = 0.0f64;
    for j in 0..n {
        let u = grid.node(j);
        if u.abs() < 23.0 {
            let exact = 0.5 * (f(u - 20.0) + f(u + 20.0));
            for q in 0..4 {
                err = err.max((out[0].phi[j * 4 + q] - exact).norm());
            }
        }
    }
    (err, rep)
}

#[test]
fn flat_space_control_and_fourth_order_convergence() {
    let (coarse, rep) = flat_error(535);
    let (fine, _) = flat_error(1069);
    // peak of the exact solution is 1/2
    assert!(coarse < 0.01 * 0.5, "{coarse}");
    let ratio = coarse / fine;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    assert!(rep.sentinel < 1e-6);
    assert!(rep.dt > 0.0 && rep.spectral_radius > 0.0);
}

#[test]
fn zero_data_gives_zero_fields() {
    let grid = UGrid::new(-20.0, 20.0, 161).unwrap();
    let st = TwoComponentState::zeros(grid, hi(2), hi(2), 6);
    let (out, _) = evolve_fd_state(&kerr(), &st, &[0.0, 3.0], &FdConfig::default()).unwrap();
    for o in out {
        assert!(o.psi1.iter().chain(&o.psi2).all(|z| *z == c(0.0, 0.0)));
    }
}

#[test]
fn state_conversion_is_exact_at_t0() {
    let grid = UGrid::new(-20.0, 20.0, 161).unwrap();
    let st = standard_bump(&kerr(), grid, hi(2), hi(2), 6).unwrap();
    let (out, _) = evolve_fd_state(&kerr(), &st, &[0.0], &FdConfig::default()).unwrap();
    let err = st
        .psi1
        .iter()
        .zip(&out[0].psi1)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-13, "{err}");
}

#[test]
fn oracle_matches_contour_at_short_times() {
    for s in [0, 2] {
        let grid = UGrid::new(-20.0, 20.0, 321).unwrap();
        let st = standard_bump(&kerr(), grid, hi(s), hi(s), 6).unwrap();
        let ham = Hamiltonian::new(kerr(), hi(s), hi(s), grid, 6, ScalarProduct::default()).unwrap();
        let (fd, _) = evolve_fd_state(&kerr(), &st, &[2.0], &FdConfig::default()).unwrap();
        let (ct, _) = evolve_contour(&ham, &st, &[2.0], &HamiltonianConfig::default()).unwrap();
        let d: f64 = fd[0]
            .psi1
            .iter()
            .zip(&ct[0].psi1)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let n: f64 = ct[0].psi1.iter().map(|b| b.norm_sqr()).sum();
        assert!((d / n).sqrt() < 1e-3, "s={s}: {}", (d / n).sqrt());
    }
}

#[test]
fn horizon_reflections_are_reported_as_instability() {
    // for s = 2 anything reflected near the horizon comes back amplified by e^{2 s kappa L}
    let grid = UGrid::new(-30.0, 30.0, 241).unwrap();
    let st = standard_bump(&kerr(), grid, hi(2), hi(2), 6).unwrap();
    let r = evolve_fd_state(&kerr(), &st, &[150.0], &FdConfig::default());
    assert!(matches!(r, Err(Error::Instability { .. })), "{:?}", r.map(|x| x.1));
}

#[test]
fn config_validation() {
    let bad = FdConfig {
        cfl: 0.8,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let grid = UGrid::new(-20.0, 20.0, 161).unwrap();
    let st = standard_bump(&kerr(), grid, hi(0), hi(0), 4).unwrap();
    assert!(evolve_fd_state(&kerr(), &st, &[2.0, 1.0], &FdConfig::default()).is_err());
    let wide = |_: f64, _: f64| C64::new(1.0, 0.0);
    let r = evolve_fd(&kerr(), hi(0), hi(0), wide, wide, grid, &[1.0], &FdConfig::default());
    assert!(matches!(r, Err(Error::SupportTouchesBoundary)));
}
