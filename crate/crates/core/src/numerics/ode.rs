//! Dormand-Prince 5(4) integrator with the standard continuous extension.

use thiserror::Error;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest admissible |step|.
    pub h_max: f64,
    /// Initial |step|; zero selects one automatically.
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-14,
            h_max: f64::INFINITY,
            h_init: 0.0,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step budget of {0} exhausted at t = {1}")]
    TooManySteps(usize, f64),
    #[error("step size underflow at t = {0}")]
    StepTooSmall(f64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("integration stopped by observer at t = {0}")]
    Stopped(f64),
}

/// Interpolant over one accepted step.
pub struct DenseStep<const N: usize> {
    pub t_old: f64,
    pub t_new: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t_new - self.t_old;
        let th = (t - self.t_old) / h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.rc;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }

    /// Whether `t` lies in the closed step interval (in either direction).
    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t_new >= self.t_old {
            (self.t_old, self.t_new)
        } else {
            (self.t_new, self.t_old)
        };
        t >= lo && t <= hi
    }

    pub fn end_state(&self) -> [f64; N] {
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.rc[0][i] + self.rc[1][i];
        }
        y
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (a, k) in terms {
        if *a != 0.0 {
            let ha = h * a;
            for i in 0..N {
                out[i] += ha * k[i];
            }
        }
    }
    out
}

/// Integrates y' = f(t, y) from `t0` to `t1` (either direction). `observer` sees every
/// accepted step and may stop the integration by returning `false`.
pub fn dopri5<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&DenseStep<N>) -> bool,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let scale = |y: &[f64; N], i: usize| opts.atol + opts.rtol * y[i].abs();
    let mut h = if opts.h_init > 0.0 {
        opts.h_init
    } else {
        let d0 = (0..N)
            .map(|i| (y[i] / scale(&y, i)).powi(2))
            .sum::<f64>()
            .sqrt();
        let d1 = (0..N)
            .map(|i| (k1[i] / scale(&y, i)).powi(2))
            .sum::<f64>()
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0.min(span)
    };
    h = h.min(opts.h_max).min(span);
    let mut steps = 0usize;
    let mut last_err = 1e-4f64;
    loop {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps, t));
        }
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-14 * span.max(1.0) {
            return Ok(y);
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = h * dir;
        let y2 = comb(&y, hs, &[(A21, &k1)]);
        let k2 = f(t + C2 * hs, &y2);
        let y3 = comb(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + C3 * hs, &y3);
        let y4 = comb(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + C4 * hs, &y4);
        let y5 = comb(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + C5 * hs, &y5);
        let y6 = comb(
            &y,
            hs,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let k6 = f(t + hs, &y6);
        let yn = comb(
            &y,
            hs,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + hs, &yn);
        steps += 1;
        let mut err = 0.0;
        let mut finite = true;
        for i in 0..N {
            let e =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(yn[i].abs());
            err += (e / sc).powi(2);
            finite &= yn[i].is_finite();
        }
        err = (err / N as f64).sqrt();
        if !finite || !err.is_finite() {
            h *= 0.25;
            if h < 1e-14 * span {
                return Err(OdeError::NonFinite(t));
            }
            continue;
        }
        if err <= 1.0 {
            let mut rc = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = yn[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rc[0][i] = y[i];
                rc[1][i] = ydiff;
                rc[2][i] = bspl;
                rc[3][i] = ydiff - hs * k7[i] - bspl;
                rc[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep {
                t_old: t,
                t_new: if last { t1 } else { t + hs },
                rc,
            };
            t = step.t_new;
            y = yn;
            k1 = k7;
            if !observer(&step) {
                return Err(OdeError::Stopped(t));
            }
            if last {
                return Ok(y);
            }
            // PI step-size control
            let e = err.max(1e-10);
            let fac = 0.9 * e.powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            last_err = e;
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
        } else {
            let fac = 0.9 * err.powf(-0.2);
            h *= fac.clamp(0.1, 0.9);
            if h < 1e-14 * span.max(t.abs()) {
                return Err(OdeError::StepTooSmall(t));
            }
        }
    }
}

/// Integrates and records the dense solution at the sorted `outputs` (ordered along the
/// integration direction, all within the integration interval).
pub fn dopri5_sampled<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
    outputs: &[f64],
) -> Result<Vec<[f64; N]>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut next = 0usize;
    while next < outputs.len() && outputs[next] == t0 {
        out.push(y0);
        next += 1;
    }
    dopri5(f, t0, y0, t1, opts, |st| {
        while next < outputs.len() && st.contains(outputs[next]) {
            out.push(st.eval(outputs[next]));
            next += 1;
        }
        true
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let outs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let ys = dopri5_sampled(f, 0.0, [1.0, 0.0], 10.0, &OdeOptions::default(), &outs).unwrap();
        assert_eq!(ys.len(), outs.len());
        for (t, y) in outs.iter().zip(&ys) {
            assert!(
                (y[0] - t.cos()).abs() < 1e-8,
                "t={t} err={}",
                y[0] - t.cos()
            );
        }
    }

    #[test]
    fn backward_direction() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let y = dopri5(f, 1.0, [1.0], 0.0, &OdeOptions::default(), |_| true).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-10);
    }
}
