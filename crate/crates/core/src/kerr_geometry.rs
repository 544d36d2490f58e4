//! Kerr background: horizon, Delta, and the Regge-Wheeler coordinate.
//!
//! The tortoise coordinate is normalized so that a = 0 gives u = r + 2M ln(r/2M - 1).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mass and specific angular momentum of a non-extreme Kerr black hole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KerrParams {
    m: f64,
    a: f64,
    #[serde(skip)]
    cache: GeometryCache,
    #[serde(skip)]
    log_in: f64,
    #[serde(skip)]
    log_out: f64,
}

/// Derived radii and the tortoise gauge constant.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct GeometryCache {
    pub r1: f64,
    pub r_minus: f64,
    pub u_offset: f64,
}

impl KerrParams {
    pub fn new(m: f64, a: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParams(format!(
                "mass must be positive, got M = {m}"
            )));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "spin must satisfy a >= 0, got a = {a}"
            )));
        }
        if m * m <= a * a {
            return Err(Error::InvalidParams(format!(
                "non-extremality M^2 > a^2 violated (M = {m}, a = {a})"
            )));
        }
        let root = (m * m - a * a).sqrt();
        let r1 = m + root;
        // r_minus via the product r1 r_minus = a^2 to avoid cancellation
        let r_minus = a * a / r1;
        let d = r1 - r_minus;
        let log_in = 2.0 * m * r1 / d;
        let log_out = 2.0 * m * r_minus / d;
        let u_offset = (log_out - log_in) * (2.0 * m).ln();
        Ok(KerrParams {
            m,
            a,
            cache: GeometryCache {
                r1,
                r_minus,
                u_offset,
            },
            log_in,
            log_out,
        })
    }

    pub fn schwarzschild(m: f64) -> Result<Self> {
        Self::new(m, 0.0)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn cache(&self) -> GeometryCache {
        self.cache
    }

    pub fn r1(&self) -> f64 {
        self.cache.r1
    }

    pub fn r_minus(&self) -> f64 {
        self.cache.r_minus
    }

    /// Surface gravity (r1 - M)/(r1^2 + a^2).
    pub fn kappa(&self) -> f64 {
        (self.cache.r1 - self.m) / (self.cache.r1 * self.cache.r1 + self.a * self.a)
    }

    /// Angular velocity of the horizon a/(r1^2 + a^2).
    pub fn omega_horizon(&self) -> f64 {
        self.a / (self.cache.r1 * self.cache.r1 + self.a * self.a)
    }

    pub fn delta(&self, r: f64) -> f64 {
        (r - self.cache.r1) * (r - self.cache.r_minus)
    }

    /// u as a function of y = ln(r - r1).
    fn u_of_y(&self, y: f64) -> (f64, f64) {
        let x = y.exp();
        let r = self.cache.r1 + x;
        let u = r + self.log_in * y - self.log_out * (self.cache.r1 - self.cache.r_minus + x).ln()
            + self.cache.u_offset;
        let dudy = (r * r + self.a * self.a) / (r - self.cache.r_minus);
        (u, dudy)
    }

    pub fn regge_wheeler_u(&self, r: f64) -> Result<f64> {
        if !(r > self.cache.r1) {
            return Err(Error::Domain {
                what: "regge_wheeler_u",
                value: r,
            });
        }
        let x = r - self.cache.r1;
        Ok(
            r + self.log_in * x.ln() - self.log_out * (r - self.cache.r_minus).ln()
                + self.cache.u_offset,
        )
    }

    /// y = ln(r - r1) at the given u, by safeguarded Newton iteration.
    pub fn log_r_minus_r1(&self, u: f64) -> f64 {
        // bracket the root
        let horizon_guess = (u - self.cache.r1 - self.cache.u_offset
            + self.log_out * (self.cache.r1 - self.cache.r_minus).ln())
            / self.log_in;
        let far_guess = (u.max(self.cache.r1 + 1.0) - self.cache.r1).ln();
        let mut lo = horizon_guess.min(far_guess) - 1.0;
        let mut hi = horizon_guess.max(far_guess) + 1.0;
        while self.u_of_y(lo).0 > u {
            lo -= 2.0 * (hi - lo);
        }
        while self.u_of_y(hi).0 < u {
            hi += 2.0 * (hi - lo);
        }
        let mut y = if u < 0.0 {
            horizon_guess.clamp(lo, hi)
        } else {
            far_guess.clamp(lo, hi)
        };
        for _ in 0..200 {
            let (f, df) = self.u_of_y(y);
            let g = f - u;
            if g > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let mut next = y - g / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - y).abs();
            y = next;
            if step <= 1e-15 * y.abs().max(1.0) || hi - lo <= 1e-15 * y.abs().max(1.0) {
                break;
            }
        }
        y
    }

    pub fn regge_wheeler_r(&self, u: f64) -> f64 {
        self.cache.r1 + self.log_r_minus_r1(u).exp()
    }
}

impl<'de> Deserialize<'de> for KerrParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(rename = "M")]
            m: f64,
            a: f64,
        }
        let raw = Raw::deserialize(d)?;
        KerrParams::new(raw.m, raw.a).map_err(serde::de::Error::custom)
    }
}

pub fn horizon_radius(p: &KerrParams) -> f64 {
    p.r1()
}

pub fn delta(p: &KerrParams, r: f64) -> f64 {
    p.delta(r)
}

pub fn regge_wheeler_u(p: &KerrParams, r: f64) -> Result<f64> {
    p.regge_wheeler_u(r)
}

pub fn regge_wheeler_r(p: &KerrParams, u: f64) -> f64 {
    p.regge_wheeler_r(u)
}
