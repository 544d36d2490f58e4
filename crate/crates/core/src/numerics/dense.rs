//! Dense complex linear algebra on top of nalgebra.

use super::C64;
use nalgebra::DMatrix;

pub type CMat = DMatrix<C64>;

/// Largest absolute row sum (the operator norm induced by the sup norm).
pub fn norm_op_inf(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn norm_fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex Schur form A = Q T Q^H with T upper triangular.
pub fn schur(a: &CMat) -> Option<(CMat, CMat)> {
    let s = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 10_000)?;
    let (q, t) = s.unpack();
    Some((q, t))
}

/// Eigenvalues (diagonal of T) and unit-norm right eigenvectors obtained by
/// back substitution on the Schur factor.
pub fn eigen(a: &CMat) -> Option<(Vec<C64>, CMat)> {
    let n = a.nrows();
    let (q, t) = schur(a)?;
    let lam: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = norm_fro(&t).max(1e-300);
    let smin = scale * 1e-14;
    let mut y = CMat::zeros(n, n);
    for j in 0..n {
        y[(j, j)] = C64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for k in (i + 1)..=j {
                acc += t[(i, k)] * y[(k, j)];
            }
            let mut d = t[(i, i)] - lam[j];
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            y[(i, j)] = -acc / d;
        }
    }
    let mut v = &q * y;
    for j in 0..n {
        let nrm = v.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..n {
                v[(i, j)] /= nrm;
            }
        }
    }
    Some((lam, v))
}

/// Orthonormal basis of the `dim` right singular directions with the smallest
/// singular values, together with those singular values (ascending).
pub fn smallest_right_singular(a: &CMat, dim: usize) -> Option<(CMat, Vec<f64>)> {
    let n = a.ncols();
    let svd = nalgebra::linalg::SVD::try_new(a.clone(), false, true, 1e-15, 10_000)?;
    let vt = svd.v_t?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap()
    });
    let mut basis = CMat::zeros(n, dim);
    let mut sv = Vec::with_capacity(dim);
    for (c, &k) in idx.iter().take(dim).enumerate() {
        sv.push(svd.singular_values[k]);
        for i in 0..n {
            basis[(i, c)] = vt[(k, i)].conj();
        }
    }
    Some((basis, sv))
}

/// All singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// 2-norm condition number.
pub fn cond2(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    #[test]
    fn eigenpairs_satisfy_definition() {
        let n = 6;
        let a = CMat::from_fn(n, n, |i, j| {
            c((i + 2 * j) as f64 % 5.0 - 1.0, ((i * j) % 3) as f64 * 0.3)
        });
        let (lam, v) = eigen(&a).unwrap();
        for j in 0..n {
            let r = &a * v.column(j) - v.column(j) * lam[j];
            assert!(r.norm() < 1e-10, "residual {}", r.norm());
        }
    }

    #[test]
    fn null_direction_found() {
        let a = CMat::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(2.0, 0.0),
                c(3.0, 0.0),
                c(2.0, 0.0),
                c(4.0, 0.0),
                c(6.0, 0.0),
                c(0.0, 1.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let (b, s) = smallest_right_singular(&a, 1).unwrap();
        assert!(s[0] < 1e-12);
        assert!((&a * b.column(0)).norm() < 1e-12);
    }
}
