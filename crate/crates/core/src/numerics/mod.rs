//! Small numerical building blocks shared by the solvers.

pub mod banded;
pub mod dense;
pub mod halfint;
pub mod ode;
pub mod quadrature;

pub use halfint::HalfInt;
pub use num_complex::Complex64 as C64;

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Euclidean norm of a complex slice.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sup norm of a complex slice.
pub fn norm_inf(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Four-point Lagrange interpolation on a uniform grid starting at `x0` with spacing `h`.
/// Returns zero outside the sampled interval.
pub fn lagrange4(samples: &[C64], x0: f64, h: f64, x: f64) -> C64 {
    let n = samples.len();
    if n == 0 {
        return C64::new(0.0, 0.0);
    }
    let mut s = (x - x0) / h;
    let top = (n - 1) as f64;
    if s < -1e-9 || s > top + 1e-9 {
        return C64::new(0.0, 0.0);
    }
    s = s.clamp(0.0, top);
    if n < 4 {
        let i = (s.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return samples[0];
        }
        let t = s - i as f64;
        return samples[i] * (1.0 - t) + samples[i + 1] * t;
    }
    let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let t = s - i as f64;
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    samples[i] * l0 + samples[i + 1] * l1 + samples[i + 2] * l2 + samples[i + 3] * l3
}

/// Principal square root with the branch cut moved to the negative imaginary axis
/// of the radicand: the result has arguments in (-pi/4, 3pi/4].
pub fn sqrt_cut_down(z: C64) -> C64 {
    let (r, mut th) = z.to_polar();
    if th <= -std::f64::consts::FRAC_PI_2 {
        th += 2.0 * std::f64::consts::PI;
    }
    C64::from_polar(r.sqrt(), 0.5 * th)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_reproduces_cubics() {
        let h = 0.3;
        let f = |x: f64| c(x * x * x - 2.0 * x + 1.0, 0.5 * x * x);
        let s: Vec<C64> = (0..10).map(|i| f(i as f64 * h)).collect();
        for &x in &[0.0, 0.1, 0.77, 1.5, 2.69, 2.7] {
            assert!((lagrange4(&s, 0.0, h, x) - f(x)).norm() < 1e-12);
        }
        assert_eq!(lagrange4(&s, 0.0, h, -0.1), c(0.0, 0.0));
    }

    #[test]
    fn cut_down_branch() {
        let z = c(-1.0, -1e-9);
        let w = sqrt_cut_down(z);
        assert!((w - c(0.0, 1.0)).norm() < 1e-6);
        let w = sqrt_cut_down(c(0.0, -1.0));
        assert!((w * w - c(0.0, -1.0)).norm() < 1e-14);
        assert!(w.re < 0.0);
    }
}
