//! Built-in potential families for certification runs, selected by name.

use super::ComplexPotential;
use crate::error::{Error, Result};
use crate::numerics::{lagrange4, C64};
use crate::registry::Registry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

pub type Params = BTreeMap<String, f64>;

pub trait PotentialFamily: Send + Sync {
    fn name(&self) -> &'static str;
    /// Parameter names with their defaults.
    fn parameters(&self) -> &'static [(&'static str, f64)];
    fn make(&self, p: &[f64]) -> Arc<dyn ComplexPotential>;

    /// Builds a member; unknown parameter names are rejected.
    fn build(&self, params: &Params) -> Result<Arc<dyn ComplexPotential>> {
        let spec = self.parameters();
        if let Some(k) = params.keys().find(|k| !spec.iter().any(|(n, _)| n == k)) {
            let known: Vec<&str> = spec.iter().map(|(n, _)| *n).collect();
            return Err(Error::InvalidParams(format!("family '{}' has no parameter '{k}' (known: {})", self.name(), known.join(", "))));
        }
        let vals: Vec<f64> = spec.iter().map(|(n, d)| params.get(*n).copied().unwrap_or(*d)).collect();
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameter {v}")));
        }
        Ok(self.make(&vals))
    }
}

struct Closure<F>(F);

impl<F: Fn(f64) -> C64 + Send + Sync> ComplexPotential for Closure<F> {
    fn value(&self, u: f64) -> C64 {
        (self.0)(u)
    }
}

struct Constant;
struct Linear;
struct Quadratic;
struct Sine;
struct Random;

impl PotentialFamily for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn parameters(&self) -> &'static [(&'static str, f64)] {
        &[("re", 1.0), ("im", 0.0)]
    }
    fn make(&self, p: &[f64]) -> Arc<dyn ComplexPotential> {
        let z = C64::new(p[0], p[1]);
        Arc::new(Closure(move |_| z))
    }
}

/// V = offset + slope u.
impl PotentialFamily for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }
    fn parameters(&self) -> &'static [(&'static str, f64)] {
        &[("offset", 0.0), ("offset_im", 0.0), ("slope", 1.0)]
    }
    fn make(&self, p: &[f64]) -> Arc<dyn ComplexPotential> {
        let (c0, s) = (C64::new(p[0], p[1]), p[2]);
        Arc::new(Closure(move |u: f64| c0 + s * u))
    }
}

/// V = c0 + c2 u^2.
impl PotentialFamily for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }
    fn parameters(&self) -> &'static [(&'static str, f64)] {
        &[("c0", 25.0), ("c0_im", 0.0), ("c2", 1.0)]
    }
    fn make(&self, p: &[f64]) -> Arc<dyn ComplexPotential> {
        let (c0, c2) = (C64::new(p[0], p[1]), p[2]);
        Arc::new(Closure(move |u: f64| c0 + c2 * u * u))
    }
}

/// V = base + i amp sin(freq u).
impl PotentialFamily for Sine {
    fn name(&self) -> &'static str {
        "sine"
    }
    fn parameters(&self) -> &'static [(&'static str, f64)] {
        &[("base", 2.0), ("amp", 0.3), ("freq", 1.0)]
    }
    fn make(&self, p: &[f64]) -> Arc<dyn ComplexPotential> {
        let (b, a, f) = (p[0], p[1], p[2]);
        Arc::new(Closure(move |u: f64| C64::new(b, a * (f * u).sin())))
    }
}

/// Seeded smooth random potential, c0 + sum_j (alpha_j cos nu_j u + beta_j sin nu_j u).
#[derive(Clone, Debug)]
pub struct RandomSmooth {
    pub c0: C64,
    pub terms: Vec<(f64, C64, C64)>,
}

impl RandomSmooth {
    /// Re c0 in [2, 4], Im c0 in [-1, 1], four modes with nu in [0.5, 2] and coefficients of
    /// each real and imaginary part in [-0.1, 0.1], so |V| >= 0.8 everywhere.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c0 = C64::new(rng.random_range(2.0..4.0), rng.random_range(-1.0..1.0));
        let coef = |rng: &mut ChaCha8Rng| C64::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let terms = (0..4)
            .map(|_| {
                let nu = rng.random_range(0.5..2.0);
                let a = coef(&mut rng);
                let b = coef(&mut rng);
                (nu, a, b)
            })
            .collect();
        RandomSmooth { c0, terms }
    }
}

impl ComplexPotential for RandomSmooth {
    fn value(&self, u: f64) -> C64 {
        self.terms.iter().fold(self.c0, |acc, &(nu, a, b)| acc + a * (nu * u).cos() + b * (nu * u).sin())
    }

    fn derivative(&self, u: f64) -> C64 {
        self.terms.iter().fold(C64::new(0.0, 0.0), |acc, &(nu, a, b)| acc + nu * (b * (nu * u).cos() - a * (nu * u).sin()))
    }
}

impl PotentialFamily for Random {
    fn name(&self) -> &'static str {
        "random"
    }
    fn parameters(&self) -> &'static [(&'static str, f64)] {
        &[("seed", 0.0)]
    }
    fn make(&self, p: &[f64]) -> Arc<dyn ComplexPotential> {
        Arc::new(RandomSmooth::from_seed(p[0] as u64))
    }
}

/// Samples on a uniform grid, interpolated with four-point Lagrange polynomials.
#[derive(Clone, Debug)]
pub struct Tabulated {
    pub u0: f64,
    pub h: f64,
    pub values: Vec<C64>,
}

impl Tabulated {
    pub fn new(u: &[f64], values: Vec<C64>) -> Result<Self> {
        if u.len() < 4 || u.len() != values.len() {
            return Err(Error::InvalidParams("tabulated potential needs at least 4 samples, one value per abscissa".into()));
        }
        let h = (u[u.len() - 1] - u[0]) / (u.len() - 1) as f64;
        if !(h > 0.0) || u.iter().enumerate().any(|(i, &x)| (x - (u[0] + i as f64 * h)).abs() > 1e-9 * h.max(1.0)) {
            return Err(Error::InvalidParams("tabulated abscissae must be uniform and increasing".into()));
        }
        Ok(Tabulated { u0: u[0], h, values })
    }
}

impl ComplexPotential for Tabulated {
    fn value(&self, u: f64) -> C64 {
        let top = self.u0 + self.h * (self.values.len() - 1) as f64;
        lagrange4(&self.values, self.u0, self.h, u.clamp(self.u0, top))
    }
}

pub fn potential_families() -> &'static Registry<dyn PotentialFamily> {
    static REG: OnceLock<Registry<dyn PotentialFamily>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn PotentialFamily> = Registry::new("potential family");
        r.register("constant", Arc::new(Constant));
        r.register("linear", Arc::new(Linear));
        r.register("quadratic", Arc::new(Quadratic));
        r.register("sine", Arc::new(Sine));
        r.register("random", Arc::new(Random));
        r
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_parameter_rejected() {
        let f = potential_families().get("sine").unwrap();
        let mut p = Params::new();
        p.insert("phase".into(), 1.0);
        assert!(f.build(&p).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let a = RandomSmooth::from_seed(7);
        let b = RandomSmooth::from_seed(7);
        assert_eq!(a.value(1.3), b.value(1.3));
        assert_ne!(a.value(1.3), RandomSmooth::from_seed(8).value(1.3));
    }

    #[test]
    fn random_derivative_matches_difference() {
        let v = RandomSmooth::from_seed(3);
        let h = 1e-5;
        let fd = (v.value(0.7 + h) - v.value(0.7 - h)) / (2.0 * h);
        assert!((fd - v.derivative(0.7)).norm() < 1e-8);
    }
}
