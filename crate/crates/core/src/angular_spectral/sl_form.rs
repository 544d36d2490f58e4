//! Liouville normal form of the angular equation on (0, pi) and its resolvent kernel.
//!
//! With Y = phi / sqrt(sin theta), (A - lambda) Y = 0 becomes -phi'' + V phi = 0 where
//! V = Q - lambda - 1/4 - 1/(4 sin^2), Q = (-aw sin^2 + k - s cos)^2 / sin^2.

use super::AngularProblem;
use crate::error::{Error, Result};
use crate::numerics::ode::{dopri5_sampled, OdeOptions};
use crate::numerics::C64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Leading power behaviour phi ~ theta^p at an endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointBehavior {
    pub regular_exponent: f64,
    pub singular_exponent: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct AngularSLForm {
    pub problem: AngularProblem,
    pub left: EndpointBehavior,
    pub right: EndpointBehavior,
}

impl AngularSLForm {
    /// V(theta) for separation constant `lambda`.
    pub fn potential(&self, theta: f64, lambda: C64) -> C64 {
        let p = &self.problem;
        let (s, k) = (p.s.value(), p.k.value());
        let sn = theta.sin();
        let cs = theta.cos();
        let bracket = -p.a_omega * sn * sn + (k - s * cs);
        bracket * bracket / (sn * sn) - lambda - 0.25 - 0.25 / (sn * sn)
    }

    /// Liouville weight: Y = weight(theta) * phi.
    pub fn weight(&self, theta: f64) -> f64 {
        1.0 / theta.sin().sqrt()
    }
}

pub fn angular_sl_form(problem: &AngularProblem) -> AngularSLForm {
    let alpha = (problem.k - problem.s).abs().value();
    let beta = (problem.k + problem.s).abs().value();
    AngularSLForm {
        problem: *problem,
        left: EndpointBehavior {
            regular_exponent: 0.5 + 0.5 * alpha,
            singular_exponent: 0.5 - 0.5 * alpha,
        },
        right: EndpointBehavior {
            regular_exponent: 0.5 + 0.5 * beta,
            singular_exponent: 0.5 - 0.5 * beta,
        },
    }
}

/// Solution regular at theta = 0, as (phi, dphi/dtheta), from the Frobenius series in
/// t = 1 - cos(theta). Valid for theta <= pi/2.
fn regular_left(s: f64, k: f64, aw: C64, lambda: C64, theta: f64) -> (C64, C64) {
    let alpha = (k - s).abs();
    let beta = (k + s).abs();
    let l0 = 0.5 * (alpha + beta);
    let cc = -aw;
    let q0 = lambda + s * s - l0 * (l0 + 1.0) - 2.0 * cc * (k - s);
    let q1 = -2.0 * cc * cc - 2.0 * cc * s;
    let q2 = cc * cc;
    let x = theta.cos();
    let t = 1.0 - x;
    let zero = C64::new(0.0, 0.0);
    let (mut bm2, mut bm1, mut bm) = (zero, zero, C64::new(1.0, 0.0));
    let mut g = bm;
    let mut dg = zero; // dg/dt
    let mut tp = 1.0; // t^m
    let mut small = 0;
    for m in 0..4000usize {
        let mf = m as f64;
        let next = ((mf * (mf - 1.0) + (alpha + beta + 2.0) * mf - q0) * bm - q1 * bm1 - q2 * bm2)
            / (2.0 * (mf + 1.0) * (mf + alpha + 1.0));
        dg += next * (mf + 1.0) * tp;
        tp *= t;
        let term = next * tp;
        g += term;
        bm2 = bm1;
        bm1 = bm;
        bm = next;
        if term.norm() <= 1e-17 * g.norm()
            && (next * (mf + 2.0) * tp).norm() <= 1e-17 * dg.norm().max(g.norm())
        {
            small += 1;
            if small > 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    // Y = (1-x)^(alpha/2) (1+x)^(beta/2) g ; phi = sqrt(sin) Y
    let sn = theta.sin();
    let w = t.powf(0.5 * alpha) * (1.0 + x).powf(0.5 * beta);
    let y = w * g;
    // dY/dx = w [ (-alpha/(2(1-x)) + beta/(2(1+x))) g - g_t ]
    let dydx = w * ((-0.5 * alpha / t + 0.5 * beta / (1.0 + x)) * g - dg);
    let dydth = -sn * dydx;
    let rs = sn.sqrt();
    let phi = rs * y;
    let dphi = rs * dydth + 0.5 * x / rs * y;
    (phi, dphi)
}

/// Fundamental pair phi_L (regular at 0) and phi_R (regular at pi) on a sorted grid in (0, pi).
pub struct AngularKernel {
    pub lambda: C64,
    pub wronskian: C64,
    form: AngularSLForm,
}

impl AngularKernel {
    pub fn new(problem: &AngularProblem, lambda: C64) -> Result<Self> {
        problem.validate()?;
        let form = angular_sl_form(problem);
        let (s, k, aw) = (problem.s.value(), problem.k.value(), problem.a_omega);
        let (pl, dpl) = regular_left(s, k, aw, lambda, FRAC_PI_2);
        let (pr0, dpr0) = regular_left(-s, k, aw, lambda, FRAC_PI_2);
        let (pr, dpr) = (pr0, -dpr0);
        let w = pl * dpr - dpl * pr;
        let scale = (pl.norm() + dpl.norm()) * (pr.norm() + dpr.norm());
        if w.norm() < 1e-10 * scale {
            return Err(Error::NearEigenvalue {
                lambda,
                wronskian: w.norm() / scale,
            });
        }
        Ok(AngularKernel {
            lambda,
            wronskian: w,
            form,
        })
    }

    /// phi_L and phi_L' on an ascending grid.
    pub fn left_on(&self, thetas: &[f64]) -> Result<Vec<(C64, C64)>> {
        let p = &self.form.problem;
        self.side_on(thetas, p.s.value(), false)
    }

    /// phi_R and phi_R' on an ascending grid.
    pub fn right_on(&self, thetas: &[f64]) -> Result<Vec<(C64, C64)>> {
        let p = &self.form.problem;
        let mirrored: Vec<f64> = thetas.iter().rev().map(|t| PI - t).collect();
        let vals = self.side_on(&mirrored, -p.s.value(), true)?;
        Ok(vals.into_iter().rev().map(|(f, d)| (f, -d)).collect())
    }

    /// Regular solution at 0 for spin `s` on ascending `thetas` (already mirrored when
    /// `mirror`): series up to pi/2, ODE beyond.
    fn side_on(&self, thetas: &[f64], s: f64, mirror: bool) -> Result<Vec<(C64, C64)>> {
        let p = &self.form.problem;
        let (k, aw, lam) = (p.k.value(), p.a_omega, self.lambda);
        let mut out = Vec::with_capacity(thetas.len());
        let split = thetas.partition_point(|&t| t <= FRAC_PI_2);
        for &t in &thetas[..split] {
            out.push(regular_left(s, k, aw, lam, t));
        }
        if split < thetas.len() {
            let (f0, d0) = regular_left(s, k, aw, lam, FRAC_PI_2);
            let form = self.form;
            let rhs = move |th: f64, y: &[f64; 4]| {
                // evaluated in original orientation when mirrored
                let v = if mirror {
                    form.potential(PI - th, lam)
                } else {
                    form.potential(th, lam)
                };
                let f = C64::new(y[0], y[1]);
                let d2 = v * f;
                [y[2], y[3], d2.re, d2.im]
            };
            let last = *thetas.last().unwrap();
            let opts = OdeOptions {
                rtol: 1e-12,
                atol: 1e-300,
                ..Default::default()
            };
            let ys = dopri5_sampled(
                rhs,
                FRAC_PI_2,
                [f0.re, f0.im, d0.re, d0.im],
                last,
                &opts,
                &thetas[split..],
            )?;
            for y in ys {
                out.push((C64::new(y[0], y[1]), C64::new(y[2], y[3])));
            }
        }
        Ok(out)
    }

    /// Kernel matrix G(theta_i, theta_j) = -phi_L(min) phi_R(max) / W on an ascending grid;
    /// the resolvent kernel of -d^2 + V.
    pub fn matrix_on(&self, thetas: &[f64]) -> Result<Vec<Vec<C64>>> {
        let l = self.left_on(thetas)?;
        let r = self.right_on(thetas)?;
        let n = thetas.len();
        let mut g = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                g[i][j] = -l[a].0 * r[b].0 / self.wronskian;
            }
        }
        Ok(g)
    }

    pub fn eval(&self, theta: f64, theta_p: f64) -> Result<C64> {
        let (lo, hi) = if theta <= theta_p {
            (theta, theta_p)
        } else {
            (theta_p, theta)
        };
        let l = self.left_on(&[lo])?[0].0;
        let r = self.right_on(&[hi])?[0].0;
        Ok(-l * r / self.wronskian)
    }
}

/// s_lambda(theta, theta') for the angular Sturm-Liouville operator.
pub fn angular_resolvent_kernel(
    problem: &AngularProblem,
    lambda: C64,
    theta: f64,
    theta_p: f64,
) -> Result<C64> {
    if !(theta > 0.0 && theta < PI && theta_p > 0.0 && theta_p < PI) {
        return Err(Error::Domain {
            what: "angular_resolvent_kernel",
            value: if theta > 0.0 && theta < PI {
                theta_p
            } else {
                theta
            },
        });
    }
    AngularKernel::new(problem, lambda)?.eval(theta, theta_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, HalfInt};

    fn p00() -> AngularProblem {
        AngularProblem::with_basis_size(HalfInt::ZERO, HalfInt::ZERO, c(0.0, 0.0), 12).unwrap()
    }

    #[test]
    fn real_potential_for_real_parameters() {
        let f = angular_sl_form(
            &AngularProblem::with_basis_size(
                HalfInt::from_int(1),
                HalfInt::from_int(2),
                c(0.3, 0.0),
                12,
            )
            .unwrap(),
        );
        for i in 1..20 {
            let th = i as f64 * 0.15;
            assert_eq!(f.potential(th, c(2.0, 0.0)).im, 0.0);
        }
    }

    #[test]
    fn legendre_solution_is_regular() {
        // lambda = 2 with s = k = 0: phi_L is sqrt(sin) cos up to normalization
        let (phi, dphi) = regular_left(0.0, 0.0, c(0.0, 0.0), c(2.0, 0.0), 0.7);
        let exact = 0.7f64.sin().sqrt() * 0.7f64.cos();
        let dexact = 0.5 * 0.7f64.cos().powi(2) / 0.7f64.sin().sqrt() - 0.7f64.sin().powf(1.5);
        assert!((phi - c(exact, 0.0)).norm() < 1e-13);
        assert!((dphi - c(dexact, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kernel_symmetric() {
        let k = AngularKernel::new(&p00(), c(1.0, 0.5)).unwrap();
        let a = k.eval(0.4, 2.1).unwrap();
        let b = k.eval(2.1, 0.4).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn eigenvalue_rejected() {
        assert!(AngularKernel::new(&p00(), c(2.0, 0.0)).is_err());
    }
}
