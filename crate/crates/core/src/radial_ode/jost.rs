//! Jost solutions: phi_acute fixed by its asymptotics at u -> -inf, phi_grave at u -> +inf.
//!
//! Each end is seeded by an asymptotic initializer at a matching abscissa and integrated
//! across the grid in the direction in which it is dominant. The matching radius on the
//! infinity side is doubled until the normalization-free invariant w / (phi_acute phi_grave)
//! at the grid midpoint settles.

use super::series::{HorizonSeries, InfinitySeries};
use super::Potential;
use crate::error::{Error, Result};
use crate::numerics::ode::{dopri5_sampled, OdeOptions};
use crate::numerics::C64;
use crate::registry::Registry;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

const I: C64 = C64::new(0.0, 1.0);

/// Which exponential is selected at each end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// e^{-iqu} at the horizon and e^{i omega u} at infinity, continued analytically from
    /// the upper half plane.
    #[default]
    Physical,
    /// Whichever exponential decays at that end.
    Decaying,
}

/// Solution near one end, valid on the far side of its matching point.
pub trait EndSolution: Send + Sync {
    fn u_match(&self) -> f64;
    /// (phi, phi') at u, `aux` being the potential's auxiliary coordinate there.
    fn eval(&self, u: f64, aux: f64) -> (C64, C64);
}

pub trait JostInitializer: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether the horizon seed changes with the refinement level.
    fn left_refines(&self) -> bool;
    fn left(&self, pot: &dyn Potential, branch: Branch, level: u32)
        -> Result<Arc<dyn EndSolution>>;
    fn right(
        &self,
        pot: &dyn Potential,
        branch: Branch,
        level: u32,
    ) -> Result<Arc<dyn EndSolution>>;
    /// Second horizon solution complementing `left`, when the initializer has one in closed
    /// form; phi_grave is then continued below the horizon match point exactly.
    fn left_complement(
        &self,
        _pot: &dyn Potential,
        _branch: Branch,
    ) -> Option<Arc<dyn EndSolution>> {
        None
    }
}

fn flip_if(branch: Branch, q: C64, decays: bool) -> C64 {
    if branch == Branch::Decaying && !decays {
        -q
    } else {
        q
    }
}

/// Convergent Frobenius series at the horizon and optimally truncated asymptotic series at
/// infinity (Teukolsky potentials only).
pub struct SeriesInitializer {
    pub r_match: f64,
    pub n_terms: usize,
    pub max_truncation: f64,
}

impl Default for SeriesInitializer {
    fn default() -> Self {
        SeriesInitializer {
            r_match: 60.0,
            n_terms: 120,
            max_truncation: 1e-12,
        }
    }
}

struct HorizonEnd {
    series: HorizonSeries,
    u: f64,
}

impl EndSolution for HorizonEnd {
    fn u_match(&self) -> f64 {
        self.u
    }
    fn eval(&self, _u: f64, aux: f64) -> (C64, C64) {
        self.series.eval(aux.exp())
    }
}

struct InfinityEnd {
    series: InfinitySeries,
    u: f64,
    r1: f64,
}

impl EndSolution for InfinityEnd {
    fn u_match(&self) -> f64 {
        self.u
    }
    fn eval(&self, u: f64, aux: f64) -> (C64, C64) {
        let (a, b, _) = self.series.eval(self.r1 + aux.exp(), u);
        (a, b)
    }
}

impl JostInitializer for SeriesInitializer {
    fn name(&self) -> &'static str {
        "series"
    }

    fn left_refines(&self) -> bool {
        false
    }

    fn left(
        &self,
        pot: &dyn Potential,
        branch: Branch,
        _level: u32,
    ) -> Result<Arc<dyn EndSolution>> {
        let tp = pot.teukolsky().ok_or_else(|| {
            Error::InvalidParams("series initializer needs a Teukolsky potential".into())
        })?;
        let q = tp.problem.horizon_wavenumber();
        let outgoing = branch == Branch::Decaying && q.im < 0.0;
        let series = HorizonSeries::new(tp, outgoing)?;
        let g = &tp.problem.geometry;
        let u = g.regge_wheeler_u(g.r1() + series.x_max)?;
        Ok(Arc::new(HorizonEnd { series, u }))
    }

    fn left_complement(&self, pot: &dyn Potential, branch: Branch) -> Option<Arc<dyn EndSolution>> {
        let tp = pot.teukolsky()?;
        let q = tp.problem.horizon_wavenumber();
        let outgoing = branch == Branch::Decaying && q.im < 0.0;
        let series = HorizonSeries::new(tp, !outgoing).ok()?;
        let g = &tp.problem.geometry;
        let u = g.regge_wheeler_u(g.r1() + series.x_max).ok()?;
        Some(Arc::new(HorizonEnd { series, u }))
    }

    fn right(
        &self,
        pot: &dyn Potential,
        branch: Branch,
        level: u32,
    ) -> Result<Arc<dyn EndSolution>> {
        let tp = pot.teukolsky().ok_or_else(|| {
            Error::InvalidParams("series initializer needs a Teukolsky potential".into())
        })?;
        let w = tp.problem.omega;
        let eps = if branch == Branch::Decaying && w.im < 0.0 {
            -1.0
        } else {
            1.0
        };
        let series = InfinitySeries::new(tp, eps, self.n_terms)?;
        let g = &tp.problem.geometry;
        let r = self.r_match * g.m() * 2f64.powi(level as i32);
        let u = g.regge_wheeler_u(r)?;
        let (_, _, err) = series.eval(r, u);
        if !(err <= self.max_truncation) {
            return Err(Error::PlateauNotReached { u, change: err });
        }
        Ok(Arc::new(InfinityEnd {
            series,
            u,
            r1: g.r1(),
        }))
    }
}

/// First-order WKB plane waves (q/Q)^(1/2) e^{-/+ i q u}, Q = sqrt(-V(u)), at |u| = u_match 2^level.
pub struct WkbInitializer {
    pub u_match: f64,
}

impl Default for WkbInitializer {
    fn default() -> Self {
        WkbInitializer { u_match: 60.0 }
    }
}

struct WkbEnd {
    q: C64,
    /// -1 for e^{-iqu} at the horizon, +1 for e^{iqu} at infinity.
    dir: f64,
    u: f64,
    pot: WkbPotential,
}

/// V(u) away from the integrator.
struct WkbPotential(Box<dyn Fn(f64) -> C64 + Send + Sync>);

impl WkbEnd {
    fn local(&self, u: f64) -> (C64, C64) {
        let v = (self.pot.0)(u);
        let mut big_q = (-v).sqrt();
        if (big_q - self.q).norm() > (big_q + self.q).norm() {
            big_q = -big_q;
        }
        let h = 1e-4 * u.abs().max(1.0);
        let dv = ((self.pot.0)(u + h) - (self.pot.0)(u - h)) / (2.0 * h);
        let dq = -dv / (2.0 * big_q);
        (big_q, dq)
    }
}

impl EndSolution for WkbEnd {
    fn u_match(&self) -> f64 {
        self.u
    }
    fn eval(&self, u: f64, _aux: f64) -> (C64, C64) {
        let (big_q, dq) = self.local(u);
        let phi = (self.q / big_q).sqrt() * (self.dir * I * self.q * u).exp();
        (phi, (self.dir * I * big_q - dq / (2.0 * big_q)) * phi)
    }
}

impl WkbInitializer {
    fn end(
        &self,
        pot: &dyn Potential,
        branch: Branch,
        level: u32,
        left: bool,
    ) -> Result<Arc<dyn EndSolution>> {
        let u = self.u_match * 2f64.powi(level as i32) * if left { -1.0 } else { 1.0 };
        let (q, plateau) = if left {
            let q = pot.wavenumber_minus();
            (flip_if(branch, q, q.im >= 0.0), pot.plateau_minus())
        } else {
            let q = pot.wavenumber_plus();
            (flip_if(branch, q, q.im >= 0.0), pot.plateau_plus())
        };
        let sampler = match pot.teukolsky() {
            Some(tp) => {
                let tp = *tp;
                WkbPotential(Box::new(move |u| tp.eval_u(u)))
            }
            None => {
                let v_at_match = pot.at(u);
                // generic potentials are assumed flat beyond the matching point
                if (v_at_match - plateau).norm() > 1e-12 * plateau.norm().max(1.0) {
                    return Err(Error::PlateauNotReached {
                        u,
                        change: (v_at_match - plateau).norm(),
                    });
                }
                WkbPotential(Box::new(move |_u| plateau))
            }
        };
        let v = (sampler.0)(u);
        if (v - plateau).norm() > 1e-2 * plateau.norm() {
            return Err(Error::PlateauNotReached {
                u,
                change: (v - plateau).norm(),
            });
        }
        Ok(Arc::new(WkbEnd {
            q,
            dir: if left { -1.0 } else { 1.0 },
            u,
            pot: sampler,
        }))
    }
}

impl JostInitializer for WkbInitializer {
    fn name(&self) -> &'static str {
        "wkb"
    }

    fn left_refines(&self) -> bool {
        true
    }

    fn left(
        &self,
        pot: &dyn Potential,
        branch: Branch,
        level: u32,
    ) -> Result<Arc<dyn EndSolution>> {
        self.end(pot, branch, level, true)
    }

    fn right(
        &self,
        pot: &dyn Potential,
        branch: Branch,
        level: u32,
    ) -> Result<Arc<dyn EndSolution>> {
        self.end(pot, branch, level, false)
    }
}

/// Registered initializers: "series" (default) and "wkb".
pub fn jost_initializers() -> &'static Registry<dyn JostInitializer> {
    static REG: OnceLock<Registry<dyn JostInitializer>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn JostInitializer> = Registry::new("Jost initializer");
        r.register("series", Arc::new(SeriesInitializer::default()));
        r.register("wkb", Arc::new(WkbInitializer::default()));
        r
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JostOptions {
    pub initializer: String,
    pub branch: Branch,
    pub rtol: f64,
    pub max_level: u32,
    /// Relative change of w / (phi_acute phi_grave) accepted between matching levels.
    pub match_tol: f64,
    /// |w| below this fraction of the solution scale counts as a near-zero.
    pub near_mode_tol: f64,
    /// Compare successive matching levels; when off, the first level whose seed passes the
    /// initializer's own accuracy check is accepted.
    pub verify_match: bool,
}

impl Default for JostOptions {
    fn default() -> Self {
        JostOptions {
            initializer: "series".into(),
            branch: Branch::Physical,
            rtol: 1e-10,
            max_level: 8,
            match_tol: 1e-8,
            near_mode_tol: 1e-10,
            verify_match: true,
        }
    }
}

/// phi and phi' of both Jost solutions on sorted sample abscissae.
pub struct JostPair {
    pub samples: Vec<f64>,
    pub acute: Vec<(C64, C64)>,
    pub grave: Vec<(C64, C64)>,
    pub wronskian: C64,
    /// Largest relative deviation of the pointwise Wronskian from `wronskian`.
    pub drift: f64,
    /// (u_L, u_R) where the asymptotic data were imposed.
    pub match_points: (f64, f64),
    pub level: u32,
    /// |w| / ((|phi_a| + |phi_a'|)(|phi_g| + |phi_g'|)) at the reference sample.
    pub relative_wronskian: f64,
    pub near_mode_tol: f64,
    pub omega: Option<C64>,
    pub lambda: Option<C64>,
    pot: Arc<dyn Potential>,
    left_end: Arc<dyn EndSolution>,
    right_end: Arc<dyn EndSolution>,
    continuation: Option<Continuation>,
    rtol: f64,
}

fn integrate(
    pot: &dyn Potential,
    start: f64,
    seed: (C64, C64),
    targets: &[f64],
    rtol: f64,
) -> Result<Vec<(C64, C64)>> {
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let aux0 = pot.aux_at(start);
    let scale = seed.0.norm().max(seed.1.norm()).max(1e-300);
    let opts = OdeOptions {
        rtol,
        atol: 1e-3 * rtol * scale,
        ..Default::default()
    };
    let rhs = |u: f64, y: &[f64; 5]| {
        let v = pot.eval(u, y[0]);
        let f = C64::new(y[1], y[2]);
        let d2 = v * f;
        [pot.aux_rate(y[0]), y[3], y[4], d2.re, d2.im]
    };
    let end = *targets.last().unwrap();
    let y0 = [aux0, seed.0.re, seed.0.im, seed.1.re, seed.1.im];
    let ys = dopri5_sampled(rhs, start, y0, end, &opts, targets)?;
    Ok(ys
        .into_iter()
        .map(|y| (C64::new(y[1], y[2]), C64::new(y[3], y[4])))
        .collect())
}

fn left_values(
    pot: &dyn Potential,
    end: &dyn EndSolution,
    samples: &[f64],
    rtol: f64,
) -> Result<Vec<(C64, C64)>> {
    let ul = end.u_match();
    let split = samples.partition_point(|&u| u <= ul);
    let mut out: Vec<(C64, C64)> = samples[..split]
        .iter()
        .map(|&u| end.eval(u, pot.aux_at(u)))
        .collect();
    if split < samples.len() {
        let seed = end.eval(ul, pot.aux_at(ul));
        out.extend(integrate(pot, ul, seed, &samples[split..], rtol)?);
    }
    Ok(out)
}

/// phi_grave below the horizon match point as alpha f1 + beta f2.
#[derive(Clone)]
struct Continuation {
    f1: Arc<dyn EndSolution>,
    f2: Arc<dyn EndSolution>,
    alpha: C64,
    beta: C64,
}

impl Continuation {
    fn build(
        pot: &dyn Potential,
        f1: Arc<dyn EndSolution>,
        f2: Arc<dyn EndSolution>,
        at: f64,
        value: (C64, C64),
    ) -> Self {
        let aux = pot.aux_at(at);
        let a = f1.eval(at, aux);
        let b = f2.eval(at, aux);
        let w12 = wr(a, b);
        Continuation {
            alpha: wr(value, b) / w12,
            beta: wr(a, value) / w12,
            f1,
            f2,
        }
    }

    fn eval(&self, u: f64, aux: f64) -> (C64, C64) {
        let a = self.f1.eval(u, aux);
        let b = self.f2.eval(u, aux);
        (
            self.alpha * a.0 + self.beta * b.0,
            self.alpha * a.1 + self.beta * b.1,
        )
    }

    fn u_match(&self) -> f64 {
        self.f1.u_match()
    }
}

fn right_values(
    pot: &dyn Potential,
    end: &dyn EndSolution,
    basis: Option<(&Arc<dyn EndSolution>, &Arc<dyn EndSolution>)>,
    samples: &[f64],
    rtol: f64,
) -> Result<(Vec<(C64, C64)>, Option<Continuation>)> {
    let ur = end.u_match();
    let split = samples.partition_point(|&u| u < ur);
    let tail: Vec<(C64, C64)> = samples[split..]
        .iter()
        .map(|&u| end.eval(u, pot.aux_at(u)))
        .collect();
    let seed = end.eval(ur, pot.aux_at(ur));
    let ul = basis.map(|(f1, _)| f1.u_match()).filter(|&ul| ul < ur);
    let low = match ul {
        Some(ul) => samples.partition_point(|&u| u < ul),
        None => 0,
    };
    let mut targets: Vec<f64> = samples[low..split].iter().rev().copied().collect();
    if let Some(ul) = ul {
        targets.push(ul);
    }
    let mut mid = integrate(pot, ur, seed, &targets, rtol)?;
    let mut cont = None;
    if let (Some(ul), Some((f1, f2))) = (ul, basis) {
        let at_ul = mid.pop().unwrap_or(seed);
        let c = Continuation::build(pot, f1.clone(), f2.clone(), ul, at_ul);
        let mut low_vals: Vec<(C64, C64)> = samples[..low]
            .iter()
            .map(|&u| c.eval(u, pot.aux_at(u)))
            .collect();
        mid.reverse();
        low_vals.extend(mid);
        low_vals.extend(tail);
        cont = Some(c);
        return Ok((low_vals, cont));
    }
    mid.reverse();
    mid.extend(tail);
    Ok((mid, cont))
}

fn wr(a: (C64, C64), b: (C64, C64)) -> C64 {
    a.0 * b.1 - a.1 * b.0
}

/// Jost pair of `pot` sampled at the ascending abscissae `samples`.
pub fn jost_solutions(
    pot: Arc<dyn Potential>,
    samples: &[f64],
    opts: &JostOptions,
) -> Result<JostPair> {
    if samples.is_empty() || samples.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams(
            "Jost samples must be non-empty and strictly increasing".into(),
        ));
    }
    let init = jost_initializers()
        .get(&opts.initializer)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mid = samples.len() / 2;
    let mut left_end = init.left(pot.as_ref(), opts.branch, 0)?;
    let complement = init.left_complement(pot.as_ref(), opts.branch);
    let mut acute = left_values(pot.as_ref(), left_end.as_ref(), samples, opts.rtol)?;
    let mut previous: Option<(C64, Vec<(C64, C64)>, Arc<dyn EndSolution>)> = None;
    let mut last_err: Option<Error> = None;
    for level in 0..=opts.max_level {
        if level > 0 && init.left_refines() {
            match init.left(pot.as_ref(), opts.branch, level) {
                Ok(e) => {
                    left_end = e;
                    acute = left_values(pot.as_ref(), left_end.as_ref(), samples, opts.rtol)?;
                }
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            }
        }
        let right_end = match init.right(pot.as_ref(), opts.branch, level) {
            Ok(e) => e,
            Err(e @ Error::PlateauNotReached { .. }) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let basis = complement.as_ref().map(|c| (&left_end, c));
        let (grave, continuation) =
            right_values(pot.as_ref(), right_end.as_ref(), basis, samples, opts.rtol)?;
        let w = wr(acute[mid], grave[mid]);
        // y_grave - y_acute in terms of logarithmic derivatives
        let ya = acute[mid].1 / acute[mid].0;
        let yg = grave[mid].1 / grave[mid].0;
        let invariant = yg - ya;
        if !(invariant.re.is_finite() && invariant.im.is_finite()) {
            last_err = Some(Error::Resolution(format!(
                "Jost solutions lost precision at matching level {level}"
            )));
            break;
        }
        let settled = match &previous {
            Some((prev, _, _)) => {
                (invariant - prev).norm() <= opts.match_tol * (ya.norm() + yg.norm())
            }
            None => !opts.verify_match,
        };
        if settled {
            let drift = acute
                .iter()
                .zip(&grave)
                .map(|(a, g)| (wr(*a, *g) - w).norm() / w.norm())
                .fold(0.0, f64::max);
            let scale = (acute[mid].0.norm() + acute[mid].1.norm())
                * (grave[mid].0.norm() + grave[mid].1.norm());
            let (omega, lambda) = match pot.teukolsky() {
                Some(tp) => (Some(tp.problem.omega), Some(tp.problem.lambda)),
                None => (None, None),
            };
            return Ok(JostPair {
                samples: samples.to_vec(),
                acute,
                grave,
                wronskian: w,
                drift,
                match_points: (left_end.u_match(), right_end.u_match()),
                level,
                relative_wronskian: w.norm() / scale,
                near_mode_tol: opts.near_mode_tol,
                omega,
                lambda,
                pot,
                left_end,
                right_end,
                continuation,
                rtol: opts.rtol,
            });
        }
        previous = Some((invariant, grave, right_end));
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Resolution(format!(
            "Jost matching did not settle within {} doublings",
            opts.max_level
        ))
    }))
}

impl JostPair {
    pub fn is_near_mode(&self) -> bool {
        !(self.relative_wronskian >= self.near_mode_tol)
    }

    pub fn near_mode_error(&self) -> Error {
        Error::NearMode {
            omega: self.omega.unwrap_or_default(),
            lambda: self.lambda.unwrap_or_default(),
            wronskian: self.relative_wronskian,
        }
    }

    /// phi_acute and its derivative at an arbitrary u.
    pub fn acute_at(&self, u: f64) -> Result<(C64, C64)> {
        let ul = self.left_end.u_match();
        if u <= ul {
            return Ok(self.left_end.eval(u, self.pot.aux_at(u)));
        }
        let i = self.samples.partition_point(|&x| x <= u);
        let (start, seed) = if i > 0 && self.samples[i - 1] > ul {
            (self.samples[i - 1], self.acute[i - 1])
        } else {
            (ul, self.left_end.eval(ul, self.pot.aux_at(ul)))
        };
        if start == u {
            return Ok(seed);
        }
        Ok(integrate(self.pot.as_ref(), start, seed, &[u], self.rtol)?[0])
    }

    /// phi_grave and its derivative at an arbitrary u.
    pub fn grave_at(&self, u: f64) -> Result<(C64, C64)> {
        let ur = self.right_end.u_match();
        if u >= ur {
            return Ok(self.right_end.eval(u, self.pot.aux_at(u)));
        }
        if let Some(c) = &self.continuation {
            if u <= c.u_match() {
                return Ok(c.eval(u, self.pot.aux_at(u)));
            }
        }
        let i = self.samples.partition_point(|&x| x < u);
        let (start, seed) = if i < self.samples.len() && self.samples[i] < ur {
            (self.samples[i], self.grave[i])
        } else {
            (ur, self.right_end.eval(ur, self.pot.aux_at(ur)))
        };
        if start == u {
            return Ok(seed);
        }
        Ok(integrate(self.pot.as_ref(), start, seed, &[u], self.rtol)?[0])
    }

    pub fn potential(&self) -> &dyn Potential {
        self.pot.as_ref()
    }
}
