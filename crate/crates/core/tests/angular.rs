use teukolsky::angular_spectral::fd_oracle::fd_oracle_eigenvalues;
use teukolsky::angular_spectral::projector::ContourMethod;
use teukolsky::angular_spectral::*;
use teukolsky::numerics::dense::norm_op_inf;
use teukolsky::numerics::{c, HalfInt, C64};

fn prob(s: i32, k: i32, aw: C64, n: usize) -> AngularProblem {
    AngularProblem::with_basis_size(HalfInt::from_int(s), HalfInt::from_int(k), aw, n).unwrap()
}

#[test]
fn legendre_eigenvalues() {
    let sp = angular_spectrum(&prob(0, 0, c(0.0, 0.0), 13)).unwrap();
    for (l, e) in sp.eigenvalues.iter().take(5).enumerate() {
        assert!((e - c((l * (l + 1)) as f64, 0.0)).norm() < 1e-12);
    }
}

/// Chebyshev collocation of -((1 - x^2) g')' acting on polynomials, an independent
/// route to the Legendre spectrum.
#[test]
fn legendre_collocation_oracle() {
    let n = 24;
    let xs: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let cw = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
    let mut d = nalgebra::DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = cw(i) / cw(j) * sign / (xs[i] - xs[j]);
            }
        }
        let row: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row;
    }
    let p = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n + 1,
        xs.iter().map(|x| 1.0 - x * x),
    ));
    let op = -(&d * (&p * &d));
    let mut ev: Vec<f64> = op.complex_eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // the unconstrained collocation operator aliases a second null vector
    ev.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let sp = angular_spectrum(&prob(0, 0, c(0.0, 0.0), 13)).unwrap();
    for l in 0..5 {
        assert!(
            (ev[l] - sp.eigenvalues[l].re).abs() < 1e-8,
            "l={l}: {} vs {}",
            ev[l],
            sp.eigenvalues[l]
        );
    }
}

#[test]
fn spin_two_matches_finite_difference_oracle() {
    let sp = angular_spectrum(&prob(2, 2, c(0.0, 0.0), 16)).unwrap();
    let fd = fd_oracle_eigenvalues(&prob(2, 2, c(0.0, 0.0), 16), 4000, 5).unwrap();
    for j in 0..5 {
        assert!(
            (sp.eigenvalues[j] - fd[j]).norm() < 1e-6,
            "j={j}: {} vs {}",
            sp.eigenvalues[j],
            fd[j]
        );
    }
}

#[test]
fn spin_one_lowest_matches_oracle() {
    let sp = angular_spectrum(&prob(1, 1, c(0.0, 0.0), 16)).unwrap();
    let fd = fd_oracle_eigenvalues(&prob(1, 1, c(0.0, 0.0), 16), 4000, 1).unwrap();
    assert!((sp.eigenvalues[0] - fd[0]).norm() < 1e-6);
}

#[test]
fn real_spheroidicity_matches_oracle() {
    let p = prob(2, 1, c(0.7, 0.0), 20);
    let sp = angular_spectrum(&p).unwrap();
    let fd = fd_oracle_eigenvalues(&p, 4000, 4).unwrap();
    for j in 0..4 {
        assert!(
            (sp.eigenvalues[j] - fd[j]).norm() < 1e-6,
            "j={j}: {} vs {}",
            sp.eigenvalues[j],
            fd[j]
        );
    }
}

#[test]
fn complex_spheroidicity_matches_oracle() {
    let p = prob(2, 2, c(0.3, 0.2), 20);
    let sp = angular_spectrum(&p).unwrap();
    let fd = fd_oracle_eigenvalues(&p, 300, 3).unwrap();
    for j in 0..3 {
        assert!(
            (sp.eigenvalues[j] - fd[j]).norm() < 1e-4,
            "j={j}: {} vs {}",
            sp.eigenvalues[j],
            fd[j]
        );
    }
}

#[test]
fn half_integer_spin_at_zero_frequency() {
    let p = AngularProblem::with_basis_size(
        HalfInt::from_twice(1),
        HalfInt::from_twice(1),
        c(0.0, 0.0),
        12,
    )
    .unwrap();
    let sp = angular_spectrum(&p).unwrap();
    for j in 0..5 {
        let l = 0.5 + j as f64;
        assert!((sp.eigenvalues[j] - c(l * (l + 1.0) - 0.25, 0.0)).norm() < 1e-12);
    }
    let fd = fd_oracle_eigenvalues(&p, 4000, 3).unwrap();
    for j in 0..3 {
        assert!((sp.eigenvalues[j] - fd[j]).norm() < 1e-6);
    }
}

#[test]
fn rayleigh_perturbation_for_small_imaginary_spheroidicity() {
    let aw = c(0.0, 0.05);
    let sp = angular_spectrum(&prob(0, 0, aw, 16)).unwrap();
    for l in 0..5usize {
        let lf = l as f64;
        // <P_l, x^2 P_l> for normalized Legendre polynomials
        let x2 = (2.0 * lf * lf + 2.0 * lf - 1.0) / ((2.0 * lf - 1.0) * (2.0 * lf + 3.0));
        let first = aw * aw * (1.0 - x2);
        let shift = sp.eigenvalues[l] - c(lf * (lf + 1.0), 0.0);
        assert!(
            (shift - first).norm() < 2.0 * aw.norm().powi(4),
            "l={l}: {shift} vs {first}"
        );
    }
}

#[test]
fn hermitian_conjugate_maps_to_conjugate_frequency() {
    let p = prob(2, 2, c(0.3, 0.2), 14);
    let q = prob(2, 2, c(0.3, -0.2), 14);
    let a = assemble_angular(&p).unwrap();
    let b = assemble_angular(&q).unwrap();
    assert!(norm_op_inf(&(a.adjoint() - &b)) < 1e-13);
    assert!(norm_op_inf(&(a.adjoint() - &a)) > 1e-3);
    assert!(norm_op_inf(&(a.transpose() - &a)) < 1e-13);
}

#[test]
fn projector_algebra_and_cross_check() {
    let p = prob(2, 2, c(0.3, 0.2), 24);
    let sp = angular_spectrum(&p).unwrap();
    let clusters = sp.resolved_clusters();
    assert!(clusters.len() >= 5);
    let eig = projector_methods().get("eigen").unwrap();
    let con = projector_methods().get("contour").unwrap();
    let qs: Vec<SpectralProjector> = clusters
        .iter()
        .map(|&n| eig.projector(&sp, n).unwrap())
        .collect();
    for (i, qi) in qs.iter().enumerate() {
        assert!(qi.idempotence_defect() < 1e-8);
        for (j, qj) in qs.iter().enumerate() {
            if i != j {
                assert!(norm_op_inf(&(&qi.matrix * &qj.matrix)) < 1e-8);
            }
        }
        let qc = con.projector(&sp, qi.n).unwrap();
        assert!(norm_op_inf(&(&qi.matrix - &qc.matrix)) < 1e-6);
    }
    let _ = ContourMethod { max_points: 64 };
}

fn simpson_cumulative(f: &[C64], h: f64) -> Vec<C64> {
    // trapezoid with end corrections is enough on the fine grids used here
    let mut out = vec![C64::new(0.0, 0.0); f.len()];
    for i in 1..f.len() {
        out[i] = out[i - 1] + (f[i - 1] + f[i]) * (0.5 * h);
    }
    out
}

#[test]
fn angular_kernel_defect() {
    let p = prob(0, 0, c(0.2, 0.1), 12);
    let lam = c(1.0, 0.5);
    let kern = AngularKernel::new(&p, lam).unwrap();
    let form = angular_sl_form(&p);
    let n = 6001;
    let h = std::f64::consts::PI / (n as f64 + 1.0);
    let th: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let f: Vec<C64> = th
        .iter()
        .map(|&t| {
            let z: f64 = (t - 1.4) / 0.4;
            if z.abs() < 1.0 {
                c((-1.0 / (1.0 - z * z)).exp(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .collect();
    let l = kern.left_on(&th).unwrap();
    let r = kern.right_on(&th).unwrap();
    let a: Vec<C64> = l.iter().zip(&f).map(|(x, y)| x.0 * y).collect();
    let b: Vec<C64> = r.iter().zip(&f).map(|(x, y)| x.0 * y).collect();
    let ca = simpson_cumulative(&a, h);
    let cb = simpson_cumulative(&b, h);
    let total_b = *cb.last().unwrap();
    let u: Vec<C64> = (0..n)
        .map(|i| -(r[i].0 * ca[i] + l[i].0 * (total_b - cb[i])) / kern.wronskian)
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 2..n - 2 {
        if th[i] < 0.5 || th[i] > 2.6 {
            continue;
        }
        let d2 = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2])
            / (12.0 * h * h);
        let res = -d2 + form.potential(th[i], lam) * u[i] - f[i];
        num += res.norm_sqr();
        den += f[i].norm_sqr();
    }
    assert!((num / den).sqrt() < 1e-4, "defect {}", (num / den).sqrt());
}

#[test]
fn angular_kernel_residue_is_projector() {
    let p = prob(0, 0, c(0.0, 0.0), 12);
    let (t1, t2) = (0.7, 2.0);
    let m = 64;
    let mut acc = c(0.0, 0.0);
    for j in 0..m {
        let e = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
        let lam = c(2.0, 0.0) + e;
        let g = angular_resolvent_kernel(&p, lam, t1, t2).unwrap();
        acc += g * e / m as f64;
    }
    let proj = -acc;
    let phi = |t: f64| t.sin().sqrt() * 1.5f64.sqrt() * t.cos();
    assert!((proj - c(phi(t1) * phi(t2), 0.0)).norm() < 1e-5, "{proj}");
}

#[test]
fn sl_round_trip_recovers_angular_equation() {
    // integrate -phi'' + V phi = 0 from the exact data at 0.1, map back to Y and
    // check (A - lambda) Y with A applied in theta by finite differences
    use teukolsky::numerics::ode::{dopri5_sampled, OdeOptions};
    let p = prob(0, 0, c(0.0, 0.0), 12);
    let form = angular_sl_form(&p);
    let lam = c(2.0, 0.0);
    let t0 = 0.1f64;
    let phi0 = t0.sin().sqrt() * t0.cos();
    let dphi0 = 0.5 * t0.cos().powi(2) / t0.sin().sqrt() - t0.sin().powf(1.5);
    let n = 3000;
    let h = (std::f64::consts::PI - 0.2) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| 0.1 + i as f64 * h).collect();
    let ys = dopri5_sampled(
        |t, y: &[f64; 2]| [y[1], (form.potential(t, lam).re) * y[0]],
        t0,
        [phi0, dphi0],
        *grid.last().unwrap(),
        &OdeOptions {
            rtol: 1e-13,
            atol: 1e-15,
            ..Default::default()
        },
        &grid,
    )
    .unwrap();
    let yv: Vec<f64> = ys
        .iter()
        .zip(&grid)
        .map(|(y, t)| y[0] * form.weight(*t))
        .collect();
    let mut worst = 0.0f64;
    for i in 2..n - 1 {
        let t = grid[i];
        let d1 = (yv[i - 2] - 8.0 * yv[i - 1] + 8.0 * yv[i + 1] - yv[i + 2]) / (12.0 * h);
        let d2 = (-yv[i - 2] + 16.0 * yv[i - 1] - 30.0 * yv[i] + 16.0 * yv[i + 1] - yv[i + 2])
            / (12.0 * h * h);
        // A = -(1/sin) d/dth sin d/dth for s = k = aw = 0
        let ay = -(d2 + t.cos() / t.sin() * d1);
        worst = worst.max((ay - 2.0 * yv[i]).abs());
    }
    assert!(worst < 1e-6, "residual {worst}");
}
