//! Finite-difference discretization of the angular operator, independent of the
//! spectral basis. The reduced function g = Y / ((1-x)^(alpha/2) (1+x)^(beta/2)) satisfies
//! -(p g')'/w + q g = lambda g with w = (1-x)^alpha (1+x)^beta, p = (1 - x^2) w, which is
//! discretized on a cell-centred grid in x in flux form.

use super::AngularProblem;
use crate::error::{Error, Result};
use crate::numerics::dense::CMat;
use crate::numerics::C64;

/// Symmetric tridiagonal matrix (after the similarity with W^(1/2)).
pub struct FdOperator {
    pub diag: Vec<C64>,
    pub off: Vec<f64>,
}

pub fn fd_operator(problem: &AngularProblem, n: usize) -> FdOperator {
    let (s, k) = (problem.s.value(), problem.k.value());
    let alpha = (k - s).abs();
    let beta = (k + s).abs();
    let l0 = 0.5 * (alpha + beta);
    let aw = problem.a_omega;
    let h = 2.0 / n as f64;
    let w = |x: f64| (1.0 - x).max(0.0).powf(alpha) * (1.0 + x).max(0.0).powf(beta);
    let p = |x: f64| (1.0 - x * x).max(0.0) * w(x);
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
    let ws: Vec<f64> = xs.iter().map(|&x| w(x)).collect();
    let pf: Vec<f64> = (0..=n).map(|i| p(-1.0 + i as f64 * h)).collect();
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let x = xs[i];
        let q = l0 * (l0 + 1.0) - s * s + aw * aw * (1.0 - x * x) - 2.0 * aw * k + 2.0 * aw * s * x;
        diag.push(C64::new((pf[i] + pf[i + 1]) / (h * h) / ws[i], 0.0) + q);
        if i + 1 < n {
            off.push(-pf[i + 1] / (h * h) / (ws[i] * ws[i + 1]).sqrt());
        }
    }
    FdOperator { diag, off }
}

/// Number of eigenvalues below `x` of a real symmetric tridiagonal matrix (Sturm count).
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let e2 = if i > 0 { e[i - 1] * e[i - 1] } else { 0.0 };
        q = d[i] - x - if i > 0 { e2 / q } else { 0.0 };
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenvalues of a real symmetric tridiagonal matrix by bisection.
pub fn tridiagonal_lowest(d: &[f64], e: &[f64], count: usize) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (0..count.min(n))
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if sturm_count(d, e, m) > j {
                    b = m;
                } else {
                    a = m;
                }
                if b - a <= 1e-15 * m.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Lowest `count` eigenvalues of the finite-difference operator on `n` cells. Real a w uses
/// Sturm bisection; complex a w a dense Schur decomposition (keep `n` moderate there).
pub fn fd_eigenvalues(problem: &AngularProblem, n: usize, count: usize) -> Result<Vec<C64>> {
    let op = fd_operator(problem, n);
    if problem.a_omega.im == 0.0 {
        let d: Vec<f64> = op.diag.iter().map(|z| z.re).collect();
        Ok(tridiagonal_lowest(&d, &op.off, count)
            .into_iter()
            .map(|x| C64::new(x, 0.0))
            .collect())
    } else {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = op.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = C64::new(op.off[i], 0.0);
                m[(i + 1, i)] = C64::new(op.off[i], 0.0);
            }
        }
        let (_, t) = crate::numerics::dense::schur(&m)
            .ok_or_else(|| Error::Eigen("finite-difference oracle Schur failed".into()))?;
        let mut ev: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
        ev.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        ev.truncate(count);
        Ok(ev)
    }
}

/// Richardson-extrapolated eigenvalues from grids of `n` and `2n` cells (second-order scheme).
pub fn fd_oracle_eigenvalues(problem: &AngularProblem, n: usize, count: usize) -> Result<Vec<C64>> {
    let a = fd_eigenvalues(problem, n, count)?;
    let b = fd_eigenvalues(problem, 2 * n, count)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (4.0 * y - x) / 3.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, HalfInt};

    #[test]
    fn legendre_spectrum_converges() {
        let p =
            AngularProblem::with_basis_size(HalfInt::ZERO, HalfInt::ZERO, c(0.0, 0.0), 12).unwrap();
        let ev = fd_oracle_eigenvalues(&p, 2000, 5).unwrap();
        for (l, e) in ev.iter().enumerate() {
            let exact = (l * (l + 1)) as f64;
            assert!((e.re - exact).abs() < 1e-6, "l={l} got {e}");
        }
    }
}
