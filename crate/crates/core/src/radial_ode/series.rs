//! Local expansions of the radial solutions: a convergent Frobenius series at the horizon
//! and the asymptotic (optimally truncated) series at infinity.
//!
//! Both work with the radial function R of Delta (Delta R')' + (-K^2/Delta + q) R = 0,
//! q = 4isr omega - 4ka omega - lambda, and return phi = rho R with its u-derivative.

use super::RadialPotential;
use crate::error::{Error, Result};
use crate::numerics::C64;

const I: C64 = C64::new(0.0, 1.0);

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
        .collect()
}

fn poly_scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

fn re(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// R = x^nu sum c_m x^m with x = r - r1.
#[derive(Clone, Debug)]
pub struct HorizonSeries {
    pub nu: C64,
    coeffs: Vec<C64>,
    r1: f64,
    d: f64,
    a: f64,
    /// Largest x at which the series is evaluated.
    pub x_max: f64,
}

impl HorizonSeries {
    /// `outgoing = false` selects the exponent of e^{-i q u} at the horizon (q the horizon
    /// wavenumber), `true` the other one. Normalized so that phi ~ e^{-/+ i q u} as u -> -inf.
    pub fn new(pot: &RadialPotential, outgoing: bool) -> Result<Self> {
        let p = &pot.problem;
        let g = &p.geometry;
        let (m, a) = (g.m(), g.a());
        let (r1, rm) = (g.r1(), g.r_minus());
        let d = r1 - rm;
        let rho1 = r1 * r1 + a * a;
        let (s, k) = (p.s.value(), p.k.value());
        let w = p.omega;
        let q = p.horizon_wavenumber();
        let sign = if outgoing { 1.0 } else { -1.0 };
        let nu = sign * I * rho1 * q / d;

        // K = K0 + K1 x + K2 x^2, q(x) = q0 + q1 x, Delta = d x + x^2
        let k0 = -I * w * rho1 - C64::new((r1 - m) * s, a * k);
        let k1 = -2.0 * I * w * r1 - s;
        let k2 = -I * w;
        let q0 = 4.0 * I * s * w * r1 - 4.0 * k * a * w - p.lambda;
        let q1 = 4.0 * I * s * w;
        let kk = poly_mul(&[k0, k1, k2], &[k0, k1, k2]);
        let dq = poly_mul(&re(&[0.0, d, 1.0]), &[q0, q1]);
        let pp = poly_add(&poly_scale(&kk, C64::new(-1.0, 0.0)), &dq);

        let scale = 1.0 + w.norm() * rho1 / d;
        let x_max = d * (0.3f64).min(1.0 / scale);

        // phi ~ e^{nu u / A} with u = r1 + A ln x - B ln d + u_off + O(x)
        let big_a = 2.0 * m * r1 / d;
        let big_b = 2.0 * m * rm / d;
        let offset = r1 - big_b * d.ln() + g.cache().u_offset;
        let c0 = (nu * offset / big_a).exp() / rho1.sqrt();

        let mut coeffs = vec![c0];
        let zero = C64::new(0.0, 0.0);
        let mut small = 0;
        let mut xm = 1.0;
        let mut largest = c0.norm();
        for mi in 1..4000usize {
            let mf = mi as f64;
            let get = |j: usize| {
                if j <= mi && mi - j < coeffs.len() {
                    coeffs[mi - j]
                } else {
                    zero
                }
            };
            let denom = d * d * mf * (mf + 2.0 * nu);
            if denom.norm() < 1e-12 * d * d * mf * mf.max(nu.norm()) {
                return Err(Error::Singular(format!(
                    "horizon series normalization pole at omega = {w}"
                )));
            }
            let t1 = (d * (mf - 1.0 + nu) * (2.0 * mf + 2.0 * nu - 1.0) + pp[1]) * get(1);
            let t2 = if mi >= 2 {
                ((mf - 2.0 + nu) * (mf - 1.0 + nu) + pp[2]) * get(2)
            } else {
                zero
            };
            let t3 = if mi >= 3 { pp[3] * get(3) } else { zero };
            let t4 = if mi >= 4 { pp[4] * get(4) } else { zero };
            let cm = -(t1 + t2 + t3 + t4) / denom;
            coeffs.push(cm);
            xm *= x_max;
            let term = cm.norm() * xm;
            largest = largest.max(term);
            if term < 1e-18 * largest {
                small += 1;
                if small >= 4 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        Ok(HorizonSeries {
            nu,
            coeffs,
            r1,
            d,
            a,
            x_max,
        })
    }

    /// (phi, dphi/du) at x = r - r1 in (0, x_max].
    pub fn eval(&self, x: f64) -> (C64, C64) {
        let mut s = C64::new(0.0, 0.0);
        let mut xs = C64::new(0.0, 0.0);
        let mut xp = 1.0;
        for (mi, c) in self.coeffs.iter().enumerate() {
            s += c * xp;
            xs += c * (mi as f64 * xp);
            xp *= x;
        }
        let r = self.r1 + x;
        let rho2 = r * r + self.a * self.a;
        let rho = rho2.sqrt();
        let delta = x * (x + self.d);
        let xnu = (self.nu * x.ln()).exp();
        let big_r = xnu * s;
        let phi = rho * big_r;
        let dphi = delta / rho2 * (r / rho) * big_r + xnu * (x + self.d) * (self.nu * s + xs) / rho;
        (phi, dphi)
    }
}

/// R = e^{i eps omega u} r^p sum a_n r^-n, eps = +1 (outgoing) or -1.
#[derive(Clone, Debug)]
pub struct InfinitySeries {
    pub eps: f64,
    pub p: C64,
    coeffs: Vec<C64>,
    omega: C64,
    m: f64,
    a: f64,
}

impl InfinitySeries {
    pub fn new(pot: &RadialPotential, eps: f64, n_terms: usize) -> Result<Self> {
        let pr = &pot.problem;
        let g = &pr.geometry;
        let (m, a) = (g.m(), g.a());
        let (s, k) = (pr.s.value(), pr.k.value());
        let w = pr.omega;
        if w.norm() == 0.0 {
            return Err(Error::Domain {
                what: "asymptotic series at omega = 0",
                value: 0.0,
            });
        }
        let delta = re(&[a * a, -2.0 * m, 1.0]);
        let rho2 = re(&[a * a, 0.0, 1.0]);
        let ddelta = re(&[-2.0 * m, 2.0]);
        let khat = vec![C64::new(m * s, -a * k), C64::new(-s, 0.0)];
        let q = vec![-4.0 * k * a * w - pr.lambda, 4.0 * I * s * w];
        let iew = 2.0 * I * eps * w;
        let p2 = poly_mul(&delta, &delta);
        let p1 = poly_mul(&delta, &poly_add(&poly_scale(&rho2, iew), &ddelta));
        let mut p0 = poly_mul(&[C64::new(0.0, 0.0), iew], &delta);
        p0 = poly_add(&p0, &poly_mul(&poly_scale(&rho2, 2.0 * I * w), &khat));
        p0 = poly_add(
            &p0,
            &poly_scale(&poly_mul(&khat, &khat), C64::new(-1.0, 0.0)),
        );
        p0 = poly_add(&p0, &poly_mul(&q, &delta));
        let p = -(1.0 + eps * s) + C64::new(0.0, 0.0);
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for mi in 1..n_terms {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..=4usize {
                if mi + j >= 5 {
                    let n = mi + j - 5;
                    if n < mi {
                        let pn = p - n as f64;
                        acc += p2[j] * pn * (pn - 1.0) * coeffs[n];
                    }
                }
                if j <= 3 && mi + j >= 4 {
                    let n = mi + j - 4;
                    acc += p1[j] * (p - n as f64) * coeffs[n];
                }
                if j <= 2 && mi + j >= 3 {
                    let n = mi + j - 3;
                    acc += p0[j] * coeffs[n];
                }
            }
            coeffs.push(acc / (iew * mi as f64));
        }
        Ok(InfinitySeries {
            eps,
            p,
            coeffs,
            omega: w,
            m,
            a,
        })
    }

    /// (phi, dphi/du, relative truncation error) at radius r with tortoise coordinate u.
    pub fn eval(&self, r: f64, u: f64) -> (C64, C64, f64) {
        let mut sum = C64::new(0.0, 0.0);
        let mut dsum = C64::new(0.0, 0.0);
        let mut rp = 1.0;
        let mut last = f64::INFINITY;
        let mut err = 0.0;
        for (n, c) in self.coeffs.iter().enumerate() {
            let t = c * rp;
            let tn = t.norm();
            if n > 2 && tn > last {
                break;
            }
            sum += t;
            dsum += t * (self.p - n as f64);
            err = tn;
            last = tn;
            if n > 2 && tn < 1e-17 * sum.norm() {
                break;
            }
            rp /= r;
        }
        let rho2 = r * r + self.a * self.a;
        let rho = rho2.sqrt();
        let delta = r * r - 2.0 * self.m * r + self.a * self.a;
        let e = (I * self.eps * self.omega * u).exp();
        let rpow = (self.p * r.ln()).exp();
        let g = rpow * sum;
        let dg = rpow * dsum / r;
        let big_r = e * g;
        let big_rp = e * (dg + I * self.eps * self.omega * rho2 / delta * g);
        let phi = rho * big_r;
        let dphi = delta / rho2 * (r / rho * big_r + rho * big_rp);
        (phi, dphi, err / sum.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{radial_potential, RadialProblem};
    use super::*;
    use crate::kerr_geometry::KerrParams;
    use crate::numerics::{c, HalfInt};

    fn pot(a: f64, s: i32, k: i32, w: C64, lam: C64) -> RadialPotential {
        let p = RadialProblem::new(
            KerrParams::new(1.0, a).unwrap(),
            HalfInt::from_int(s),
            HalfInt::from_int(k),
            w,
            lam,
        )
        .unwrap();
        radial_potential(&p).unwrap()
    }

    /// -phi'' + V phi at a point by fourth-order differences of phi' = dphi/du.
    fn residual(pot: &RadialPotential, f: impl Fn(f64) -> (C64, C64), u: f64, h: f64) -> f64 {
        let d = |uu: f64| f(uu).1;
        let d2 = (d(u - 2.0 * h) - 8.0 * d(u - h) + 8.0 * d(u + h) - d(u + 2.0 * h)) / (12.0 * h);
        let (phi, _) = f(u);
        (-d2 + pot.eval_u(u) * phi).norm() / (pot.v_minus.norm() * phi.norm())
    }

    #[test]
    fn horizon_series_solves_equation() {
        for &(s, k) in &[(0, 0), (2, 2), (1, -1)] {
            let v = pot(0.5, s, k, c(0.4, 0.1), c(3.0, 0.5));
            let hs = HorizonSeries::new(&v, false).unwrap();
            let g = v.problem.geometry;
            let f = |u: f64| hs.eval(g.log_r_minus_r1(u).exp());
            let u0 = g.regge_wheeler_u(g.r1() + 0.5 * hs.x_max).unwrap();
            assert!(residual(&v, f, u0, 1e-3) < 1e-7, "s={s}");
        }
    }

    #[test]
    fn horizon_normalization_is_plane_wave() {
        let v = pot(0.5, 0, 0, c(0.4, 0.1), c(2.0, 0.0));
        let hs = HorizonSeries::new(&v, false).unwrap();
        let g = v.problem.geometry;
        let u = -40.0;
        let (phi, _) = hs.eval(g.log_r_minus_r1(u).exp());
        let q = v.problem.horizon_wavenumber();
        let exact = (-I * q * u).exp();
        assert!(
            (phi - exact).norm() < 1e-8 * exact.norm(),
            "{} {}",
            phi,
            exact
        );
    }

    #[test]
    fn infinity_series_solves_equation() {
        for &(s, eps) in &[(0, 1.0), (2, 1.0), (2, -1.0), (-1, 1.0)] {
            let v = pot(0.5, s, 1, c(0.7, 0.2), c(4.0, 0.3));
            let is = InfinitySeries::new(&v, eps, 80).unwrap();
            let g = v.problem.geometry;
            let f = |u: f64| {
                let r = g.regge_wheeler_r(u);
                let (a, b, _) = is.eval(r, u);
                (a, b)
            };
            let u0 = 100.0;
            let (_, _, err) = is.eval(g.regge_wheeler_r(u0), u0);
            assert!(err < 1e-12, "s={s} err={err}");
            let res = residual(&v, f, u0, 1e-2) * v.v_minus.norm() / v.v_plus.norm();
            assert!(res < 1e-7, "s={s} eps={eps} residual {res}");
        }
    }
}
