//! Spin-weighted spherical harmonics of fixed (s, k) as weighted Jacobi polynomials in x = cos(theta).
//!
//! Y_n(x) = (1-x)^(alpha/2) (1+x)^(beta/2) P_n^(alpha,beta)(x) / sqrt(h_n), orthonormal in dx,
//! with alpha = |k-s|, beta = |k+s| and l = n + max(|s|, |k|).

use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::HalfInt;
use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct SpinBasis {
    pub s: HalfInt,
    pub k: HalfInt,
    pub alpha: u32,
    pub beta: u32,
    pub n: usize,
    norms: Vec<f64>,
}

impl SpinBasis {
    /// Basis with `n` functions; (s, k) must satisfy k - s integer.
    pub fn new(s: HalfInt, k: HalfInt, n: usize) -> Self {
        let alpha = (k - s).abs().to_int().expect("k - s must be an integer") as u32;
        let beta = (k + s).abs().to_int().expect("k + s must be an integer") as u32;
        let (a, b) = (alpha as f64, beta as f64);
        let mut norms = Vec::with_capacity(n);
        // h_0 = 2^(a+b+1) a! b! / (a+b+1)!
        let mut h0 = 2f64.powi((alpha + beta + 1) as i32);
        for i in 1..=alpha {
            h0 *= i as f64;
        }
        for i in 1..=beta {
            h0 *= i as f64;
        }
        for i in 1..=(alpha + beta + 1) {
            h0 /= i as f64;
        }
        let mut h = h0;
        for j in 0..n {
            if j > 0 {
                let nn = j as f64;
                h *= (2.0 * nn + a + b - 1.0) / (2.0 * nn + a + b + 1.0) * (nn + a) * (nn + b)
                    / ((nn + a + b) * nn);
            }
            norms.push(h);
        }
        SpinBasis {
            s,
            k,
            alpha,
            beta,
            n,
            norms,
        }
    }

    /// Lowest angular index max(|s|, |k|).
    pub fn l_min(&self) -> f64 {
        0.5 * (self.alpha + self.beta) as f64
    }

    pub fn l(&self, j: usize) -> f64 {
        self.l_min() + j as f64
    }

    /// Diagonal of the aw = 0 operator: l(l+1) - s^2.
    pub fn diag_eigenvalue(&self, j: usize) -> f64 {
        let l = self.l(j);
        let s = self.s.value();
        l * (l + 1.0) - s * s
    }

    /// Jacobi polynomials P_0..P_{n-1} at x (unnormalized).
    pub fn jacobi(&self, x: f64, count: usize) -> Vec<f64> {
        jacobi_values(self.alpha as f64, self.beta as f64, x, count)
    }

    /// Orthonormal basis values Y_0..Y_{n-1} at x.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let w = self.weight_sqrt(x);
        self.jacobi(x, self.n)
            .iter()
            .zip(&self.norms)
            .map(|(p, h)| w * p / h.sqrt())
            .collect()
    }

    /// Polynomial parts P_j / sqrt(h_j), so that Y_j = weight_sqrt(x) * poly_j(x).
    pub fn eval_poly(&self, x: f64) -> Vec<f64> {
        self.jacobi(x, self.n)
            .iter()
            .zip(&self.norms)
            .map(|(p, h)| p / h.sqrt())
            .collect()
    }

    /// (1-x)^(alpha/2) (1+x)^(beta/2).
    pub fn weight_sqrt(&self, x: f64) -> f64 {
        (1.0 - x).max(0.0).powf(0.5 * self.alpha as f64)
            * (1.0 + x).max(0.0).powf(0.5 * self.beta as f64)
    }

    /// Gauss-Legendre rule exact for products Y_i x^2 Y_j of this basis.
    pub fn exact_rule(&self) -> (Vec<f64>, Vec<f64>) {
        let deg = (self.alpha + self.beta) as usize + 2 * self.n + 2;
        gauss_legendre(deg / 2 + 2)
    }

    /// Gram matrix of multiplication by f(x), computed with the exact rule when f is a
    /// polynomial of degree at most two.
    pub fn gram<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let (xs, ws) = self.exact_rule();
        let mut g = DMatrix::<f64>::zeros(self.n, self.n);
        for (x, w) in xs.iter().zip(&ws) {
            let y = self.eval(*x);
            let fx = f(*x) * w;
            for i in 0..self.n {
                for j in 0..=i {
                    g[(i, j)] += fx * y[i] * y[j];
                }
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        g
    }

    /// Matrices of x and x^2.
    pub fn x_and_x2(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let x = self.gram(|x| x);
        let x2 = self.gram(|x| x * x);
        (x, x2)
    }
}

/// P_0^(a,b)..P_{count-1}^(a,b) at x by the three-term recurrence.
pub fn jacobi_values(a: f64, b: f64, x: f64, count: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(count);
    if count == 0 {
        return p;
    }
    p.push(1.0);
    if count == 1 {
        return p;
    }
    p.push(0.5 * (a - b) + 0.5 * (a + b + 2.0) * x);
    for n in 2..count {
        let nf = n as f64;
        let s = 2.0 * nf + a + b;
        let c1 = 2.0 * nf * (nf + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (nf + a - 1.0) * (nf + b - 1.0) * s;
        let v = (c2 * p[n - 1] - c3 * p[n - 2]) / c1;
        p.push(v);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_for_several_spins() {
        for &(s2, k2) in &[(0, 0), (2, 2), (4, 4), (4, -2), (1, 1), (1, -3), (2, 6)] {
            let b = SpinBasis::new(HalfInt::from_twice(s2), HalfInt::from_twice(k2), 12);
            let g = b.gram(|_| 1.0);
            for i in 0..12 {
                for j in 0..12 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g[(i, j)] - e).abs() < 1e-12,
                        "s2={s2} k2={k2} ({i},{j}) {}",
                        g[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn legendre_special_case() {
        let b = SpinBasis::new(HalfInt::ZERO, HalfInt::ZERO, 4);
        let x: f64 = 0.3;
        let y = b.eval(x);
        assert!((y[1] - (1.5f64).sqrt() * x).abs() < 1e-14);
        assert!((y[2] - (2.5f64).sqrt() * 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn x_matrix_is_tridiagonal() {
        let b = SpinBasis::new(HalfInt::from_int(2), HalfInt::from_int(1), 10);
        let (x, x2) = b.x_and_x2();
        for i in 0..10usize {
            for j in 0..10 {
                if i.abs_diff(j) > 1 {
                    assert!(x[(i, j)].abs() < 1e-13);
                }
                if i.abs_diff(j) > 2 {
                    assert!(x2[(i, j)].abs() < 1e-13);
                }
            }
        }
    }
}
