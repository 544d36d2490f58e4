//! Radial Teukolsky equation in Liouville normal form -phi'' + V(u) phi = 0 on the whole
//! u axis, its Jost solutions, Green's kernel and a Wronskian-zero scan.
//!
//! With R the radial function, phi = sqrt(r^2 + a^2) R and
//! V = Delta N / rho^8 + [K^2 + Delta (-4isr omega + 4ka omega + lambda)] / rho^4, where
//! rho^2 = r^2 + a^2, K = -i omega rho^2 - iak - (r - M)s and
//! N = 2Mr^3 + a^2 r^2 - 4Ma^2 r + a^4 (so that Delta N / rho^8 = rho_uu / rho).

pub mod green;
pub mod jost;
pub mod scan;
pub mod series;

pub use green::{greens_kernel, GreenApplication};
pub use jost::{jost_initializers, jost_solutions, Branch, JostInitializer, JostOptions, JostPair};
pub use scan::{
    mode_stability_scan, scan_wronskian, square_well_scan, ScanCell, ScanHit, ScanNode, ScanRegion,
    ScanReport, ScanTemplate, SquareWell,
};

use crate::error::{Error, Result};
use crate::kerr_geometry::KerrParams;
use crate::numerics::{HalfInt, C64};

#[derive(Clone, Copy, Debug)]
pub struct RadialProblem {
    pub geometry: KerrParams,
    pub s: HalfInt,
    pub k: HalfInt,
    pub omega: C64,
    pub lambda: C64,
}

impl RadialProblem {
    pub fn new(
        geometry: KerrParams,
        s: HalfInt,
        k: HalfInt,
        omega: C64,
        lambda: C64,
    ) -> Result<Self> {
        let p = RadialProblem {
            geometry,
            s,
            k,
            omega,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k - self.s).is_integer() {
            return Err(Error::InvalidParams(format!(
                "k - s must be an integer (s = {}, k = {})",
                self.s, self.k
            )));
        }
        if !(self.omega.re.is_finite()
            && self.omega.im.is_finite()
            && self.lambda.re.is_finite()
            && self.lambda.im.is_finite())
        {
            return Err(Error::InvalidParams(
                "omega and lambda must be finite".into(),
            ));
        }
        Ok(())
    }

    /// omega - omega_0 - i s kappa, the horizon wavenumber.
    pub fn horizon_wavenumber(&self) -> C64 {
        let g = &self.geometry;
        let rho1 = g.r1() * g.r1() + g.a() * g.a();
        let omega0 = -g.a() * self.k.value() / rho1;
        self.omega - omega0 - C64::new(0.0, self.s.value() * g.kappa())
    }
}

/// A potential for -phi'' + V phi = 0 with constant limits at both ends of the u axis.
///
/// The integrator carries an auxiliary coordinate alongside u (ln(r - r1) for Kerr) so that
/// evaluation needs no coordinate inversion.
pub trait Potential: Send + Sync {
    fn eval(&self, u: f64, aux: f64) -> C64;

    fn aux_at(&self, _u: f64) -> f64 {
        0.0
    }

    fn aux_rate(&self, _aux: f64) -> f64 {
        0.0
    }

    fn plateau_minus(&self) -> C64;
    fn plateau_plus(&self) -> C64;

    /// q with q^2 = -V(-inf), on the branch continued from the upper half plane.
    fn wavenumber_minus(&self) -> C64;
    /// q with q^2 = -V(+inf), likewise.
    fn wavenumber_plus(&self) -> C64;

    fn teukolsky(&self) -> Option<&RadialPotential> {
        None
    }

    fn at(&self, u: f64) -> C64 {
        self.eval(u, self.aux_at(u))
    }
}

/// How V approaches its limits: exp(rate * u) toward the horizon, u^-power at infinity.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DecayMetadata {
    pub horizon_rate: f64,
    pub infinity_power: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct RadialPotential {
    pub problem: RadialProblem,
    pub v_minus: C64,
    pub v_plus: C64,
    pub decay: DecayMetadata,
}

impl RadialPotential {
    /// V as a function of r.
    pub fn eval_r(&self, r: f64) -> C64 {
        let p = &self.problem;
        let g = &p.geometry;
        let (m, a) = (g.m(), g.a());
        let (s, k) = (p.s.value(), p.k.value());
        let w = p.omega;
        let rho2 = r * r + a * a;
        let rho4 = rho2 * rho2;
        let delta = g.delta(r);
        let n = 2.0 * m * r * r * r + a * a * r * r - 4.0 * m * a * a * r + a * a * a * a;
        let kk = C64::new(0.0, -1.0) * w * rho2 - C64::new((r - m) * s, a * k);
        let i = C64::new(0.0, 1.0);
        let q = -4.0 * i * s * r * w + 4.0 * k * a * w + p.lambda;
        (kk * kk + delta * q) / rho4 + delta * n / (rho4 * rho4)
    }

    /// V at u (inverts the tortoise map).
    pub fn eval_u(&self, u: f64) -> C64 {
        self.eval_r(self.problem.geometry.regge_wheeler_r(u))
    }
}

impl Potential for RadialPotential {
    fn eval(&self, _u: f64, aux: f64) -> C64 {
        self.eval_r(self.problem.geometry.r1() + aux.exp())
    }

    fn aux_at(&self, u: f64) -> f64 {
        self.problem.geometry.log_r_minus_r1(u)
    }

    fn aux_rate(&self, aux: f64) -> f64 {
        let g = &self.problem.geometry;
        let r = g.r1() + aux.exp();
        (r - g.r_minus()) / (r * r + g.a() * g.a())
    }

    fn plateau_minus(&self) -> C64 {
        self.v_minus
    }

    fn plateau_plus(&self) -> C64 {
        self.v_plus
    }

    fn wavenumber_minus(&self) -> C64 {
        self.problem.horizon_wavenumber()
    }

    fn wavenumber_plus(&self) -> C64 {
        self.problem.omega
    }

    fn teukolsky(&self) -> Option<&RadialPotential> {
        Some(self)
    }
}

pub fn radial_potential(problem: &RadialProblem) -> Result<RadialPotential> {
    problem.validate()?;
    let wt = problem.horizon_wavenumber();
    Ok(RadialPotential {
        problem: *problem,
        v_minus: -wt * wt,
        v_plus: -problem.omega * problem.omega,
        decay: DecayMetadata {
            horizon_rate: 2.0 * problem.geometry.kappa(),
            infinity_power: if problem.s.twice() == 0 { 2 } else { 1 },
        },
    })
}

/// Distances from the real axis at which near-real quantities are evaluated.
pub const NEAR_AXIS_EPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Least-squares straight line through (eps_i, values_i), evaluated at eps = 0, entrywise.
/// Returns the limit and the largest relative deviation of a level from it.
pub fn near_axis_limit(eps: &[f64], values: &[Vec<C64>]) -> Result<(Vec<C64>, f64)> {
    let m = eps.len();
    if m == 0 || values.len() != m || values.iter().any(|v| v.len() != values[0].len()) {
        return Err(Error::InvalidParams(
            "near-axis limit needs one equally long sample vector per level".into(),
        ));
    }
    if m == 1 {
        return Ok((values[0].clone(), 0.0));
    }
    let mean = eps.iter().sum::<f64>() / m as f64;
    let sxx: f64 = eps.iter().map(|e| (e - mean) * (e - mean)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParams("near-axis levels must differ".into()));
    }
    // intercept weights: 1/m - mean (e_i - mean) / sxx
    let wts: Vec<f64> = eps
        .iter()
        .map(|e| 1.0 / m as f64 - mean * (e - mean) / sxx)
        .collect();
    let n = values[0].len();
    let limit: Vec<C64> = (0..n)
        .map(|j| values.iter().zip(&wts).map(|(v, w)| v[j] * *w).sum())
        .collect();
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = norm(&limit);
    let spread = values
        .iter()
        .map(|v| {
            let d: Vec<C64> = v.iter().zip(&limit).map(|(a, b)| a - b).collect();
            norm(&d)
        })
        .fold(0.0, f64::max);
    Ok((limit, if scale > 0.0 { spread / scale } else { spread }))
}

/// Scalar Regge-Wheeler potential on Schwarzschild, -omega^2 + (1 - 2M/r)(lambda/r^2 + 2M/r^3).
pub fn schwarzschild_scalar_potential(m: f64, omega: C64, lambda: C64, r: f64) -> C64 {
    let f = 1.0 - 2.0 * m / r;
    -omega * omega + f * (lambda / (r * r) + 2.0 * m / (r * r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    fn problem(a: f64, s: i32, k: i32, w: C64, lam: C64) -> RadialProblem {
        RadialProblem::new(
            KerrParams::new(1.0, a).unwrap(),
            HalfInt::from_int(s),
            HalfInt::from_int(k),
            w,
            lam,
        )
        .unwrap()
    }

    #[test]
    fn horizon_plateau() {
        let v = radial_potential(&problem(0.5, 0, 0, c(0.3, 0.0), c(2.0, 0.0))).unwrap();
        assert!((v.eval_u(-40.0) - v.eval_u(-60.0)).norm() < 1e-8);
        assert!((v.eval_u(-60.0) - v.v_minus).norm() < 1e-10);
    }

    #[test]
    fn infinity_plateau() {
        let v = radial_potential(&problem(0.5, 0, 0, c(0.3, 0.0), c(2.0, 0.0))).unwrap();
        assert!((v.eval_u(500.0) + c(0.09, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn schwarzschild_reduction() {
        let w = c(0.4, 0.1);
        let lam = c(6.0, 0.0);
        let v = radial_potential(&problem(0.0, 0, 0, w, lam)).unwrap();
        for r in [2.01, 2.5, 3.0, 5.0, 20.0, 300.0] {
            let e = schwarzschild_scalar_potential(1.0, w, lam, r);
            assert!((v.eval_r(r) - e).norm() < 1e-10 * e.norm().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_pairing() {
        let g = KerrParams::new(1.0, 0.5).unwrap();
        assert!(RadialProblem::new(
            g,
            HalfInt::from_twice(1),
            HalfInt::from_int(0),
            c(0.3, 0.0),
            c(1.0, 0.0)
        )
        .is_err());
    }
}
