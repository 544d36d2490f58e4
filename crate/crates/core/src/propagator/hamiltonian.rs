//! Discretized Hamiltonian of the k-mode Teukolsky equation.
//!
//! With psi = sqrt(r^2 + a^2) phi the equation reads M2 psi_tt + M1 psi_t + L psi = 0, where
//! (d = Delta / rho^4, B = iak + (r - M)s, X multiplication by cos(theta))
//!   L  = -d_u^2 + rho_uu / rho + B^2 / rho^4 + d A0,
//!   M1 = -2B / rho^2 + d (4sr + 2iak) + 2isa d X,
//!   M2 = 1 - a^2 d (1 - X^2),
//! and A0 is the a omega = 0 angular operator, diagonal in the spin-weighted basis.
//! For Psi = (psi, i psi_t), i d_t Psi = H Psi with H = [[0, 1], [M2^-1 L, M2^-1 C1]],
//! C1 = -i M1. The u direction uses the fourth-order five-point second difference with
//! zero extension beyond the grid.

use super::state::{TwoComponentState, UGrid};
use crate::angular_spectral::basis::SpinBasis;
use crate::angular_spectral::AngularMatrices;
use crate::error::{Error, Result};
use crate::kerr_geometry::KerrParams;
use crate::numerics::banded::{BandLu, BandMatrix};
use crate::numerics::dense::CMat;
use crate::numerics::{HalfInt, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Weights of the state scalar product
/// <Psi, Phi> = int [d_u Psi1 d_u Phi1* + Psi1 (w + d A0) Phi1* + Psi2 M2 Phi2*] du dx,
/// where the d A0 term is present when `angular` is set and M2 is replaced by 1 unless
/// `kinetic` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarProduct {
    pub weight: f64,
    pub angular: bool,
    pub kinetic: bool,
}

impl Default for ScalarProduct {
    fn default() -> Self {
        ScalarProduct::plain()
    }
}

impl ScalarProduct {
    /// The bare form with w = 1 and neither optional term.
    pub fn plain() -> Self {
        ScalarProduct {
            weight: 1.0,
            angular: false,
            kinetic: false,
        }
    }

    /// Both optional terms, which makes the principal part of H symmetric.
    pub fn energy() -> Self {
        ScalarProduct {
            weight: 1.0,
            angular: true,
            kinetic: true,
        }
    }
}

const D2: [f64; 3] = [30.0 / 12.0, -16.0 / 12.0, 1.0 / 12.0];

pub struct Hamiltonian {
    pub geometry: KerrParams,
    pub s: HalfInt,
    pub k: HalfInt,
    pub grid: UGrid,
    pub n_ang: usize,
    pub product: ScalarProduct,
    pub angular: AngularMatrices,
    pub r: Vec<f64>,
    /// Delta / rho^4.
    pub d: Vec<f64>,
    /// rho_uu / rho + B^2 / rho^4.
    pub w: Vec<C64>,
    /// Scalar part of C1.
    pub c1: Vec<C64>,
    /// Coefficient of X in C1 (2as d).
    pub c1x: Vec<f64>,
    m2: Vec<DMatrix<f64>>,
    m2_inv: Vec<DMatrix<f64>>,
    gram_lu: BandLu,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl Hamiltonian {
    pub fn new(
        geometry: KerrParams,
        s: HalfInt,
        k: HalfInt,
        grid: UGrid,
        n_ang: usize,
        product: ScalarProduct,
    ) -> Result<Self> {
        if !(k - s).is_integer() || n_ang < 2 {
            return Err(Error::InvalidParams(format!(
                "Hamiltonian needs k - s integer and at least 2 angular functions (s = {s}, k = {k}, n = {n_ang})"
            )));
        }
        if !(product.weight > 0.0) {
            return Err(Error::InvalidParams(
                "scalar-product weight must be positive".into(),
            ));
        }
        let basis = SpinBasis::new(s, k, n_ang);
        let mut angular = AngularMatrices::new(&basis);
        // X is tridiagonal and X^2 pentadiagonal; drop quadrature round-off outside the band
        for r in 0..n_ang {
            for c in 0..n_ang {
                let off = r.abs_diff(c);
                if off > 1 {
                    angular.x[(r, c)] = 0.0;
                }
                if off > 2 {
                    angular.x2[(r, c)] = 0.0;
                }
            }
        }
        let (m, a) = (geometry.m(), geometry.a());
        let (r1, rm) = (geometry.r1(), geometry.r_minus());
        let (sv, kv) = (s.value(), k.value());
        let mut r = Vec::with_capacity(grid.n);
        let mut d = Vec::with_capacity(grid.n);
        let mut w = Vec::with_capacity(grid.n);
        let mut c1 = Vec::with_capacity(grid.n);
        let mut c1x = Vec::with_capacity(grid.n);
        let mut m2 = Vec::with_capacity(grid.n);
        let mut m2_inv = Vec::with_capacity(grid.n);
        let eye = DMatrix::<f64>::identity(n_ang, n_ang);
        for i in 0..grid.n {
            let x = geometry.log_r_minus_r1(grid.node(i)).exp();
            let ri = r1 + x;
            let delta = x * (x + r1 - rm);
            let rho2 = ri * ri + a * a;
            let rho4 = rho2 * rho2;
            let di = delta / rho4;
            let n = 2.0 * m * ri * ri * ri + a * a * ri * ri - 4.0 * m * a * a * ri + a.powi(4);
            let b = C64::new((ri - m) * sv, a * kv);
            w.push(di * n / rho4 + b * b / rho4);
            let i2 = C64::new(0.0, 2.0);
            c1.push(i2 * b / rho2 + di * C64::new(2.0 * a * kv, -4.0 * sv * ri));
            c1x.push(2.0 * a * sv * di);
            let mi = &eye - (&eye - &angular.x2) * (a * a * di);
            let inv = mi.clone().try_inverse().ok_or_else(|| {
                Error::Singular(format!("kinetic matrix at u = {}", grid.node(i)))
            })?;
            m2.push(mi);
            m2_inv.push(inv);
            r.push(ri);
            d.push(di);
        }
        // Gram matrix of the first component
        let nn = grid.n * n_ang;
        let mut g = BandMatrix::zeros(nn, 2 * n_ang, 2 * n_ang);
        let h2 = grid.h * grid.h;
        for i in 0..grid.n {
            for j in 0..n_ang {
                let row = i * n_ang + j;
                let mut diag = product.weight;
                if product.angular {
                    diag += d[i] * angular.diag[j];
                }
                g.add(row, row, C64::new(grid.h * (D2[0] / h2 + diag), 0.0));
                for off in 1..=2usize {
                    let v = C64::new(grid.h * D2[off] / h2, 0.0);
                    if i >= off {
                        g.add(row, row - off * n_ang, v);
                    }
                    if i + off < grid.n {
                        g.add(row, row + off * n_ang, v);
                    }
                }
            }
        }
        let gram_lu = g
            .factor()
            .map_err(|e| Error::Singular(format!("scalar-product matrix: {e}")))?;
        Ok(Hamiltonian {
            geometry,
            s,
            k,
            grid,
            n_ang,
            product,
            angular,
            r,
            d,
            w,
            c1,
            c1x,
            m2,
            m2_inv,
            gram_lu,
        })
    }

    pub fn zero_state(&self) -> TwoComponentState {
        TwoComponentState::zeros(self.grid, self.s, self.k, self.n_ang)
    }

    fn check(&self, st: &TwoComponentState) -> Result<()> {
        if st.grid != self.grid || st.s != self.s || st.k != self.k || st.n_ang != self.n_ang {
            return Err(Error::InvalidParams(
                "state does not match the Hamiltonian discretization".into(),
            ));
        }
        Ok(())
    }

    fn n_total(&self) -> usize {
        self.grid.n * self.n_ang
    }

    /// -D2 applied along u, independently for each angular index.
    fn minus_d2(&self, v: &[C64]) -> Vec<C64> {
        let (n, na) = (self.grid.n, self.n_ang);
        let h2 = self.grid.h * self.grid.h;
        let mut out = vec![zero(); v.len()];
        for i in 0..n {
            for j in 0..na {
                let mut acc = D2[0] * v[i * na + j];
                for off in 1..=2usize {
                    if i >= off {
                        acc += D2[off] * v[(i - off) * na + j];
                    }
                    if i + off < n {
                        acc += D2[off] * v[(i + off) * na + j];
                    }
                }
                out[i * na + j] = acc / h2;
            }
        }
        out
    }

    fn apply_l(&self, v: &[C64], conjugate: bool) -> Vec<C64> {
        let na = self.n_ang;
        let mut out = self.minus_d2(v);
        for i in 0..self.grid.n {
            let wi = if conjugate { self.w[i].conj() } else { self.w[i] };
            for j in 0..na {
                out[i * na + j] += (wi + self.d[i] * self.angular.diag[j]) * v[i * na + j];
            }
        }
        out
    }

    fn block_real(&self, m: &[DMatrix<f64>], v: &[C64]) -> Vec<C64> {
        let na = self.n_ang;
        let mut out = vec![zero(); v.len()];
        for i in 0..self.grid.n {
            let mi = &m[i];
            for r in 0..na {
                let mut acc = zero();
                for c in 0..na {
                    acc += mi[(r, c)] * v[i * na + c];
                }
                out[i * na + r] = acc;
            }
        }
        out
    }

    pub(crate) fn apply_c1(&self, v: &[C64], conjugate: bool) -> Vec<C64> {
        let na = self.n_ang;
        let x = &self.angular.x;
        let mut out = vec![zero(); v.len()];
        for i in 0..self.grid.n {
            let c = if conjugate { self.c1[i].conj() } else { self.c1[i] };
            for r in 0..na {
                let mut acc = c * v[i * na + r];
                for col in r.saturating_sub(1)..(r + 2).min(na) {
                    acc += self.c1x[i] * x[(r, col)] * v[i * na + col];
                }
                out[i * na + r] = acc;
            }
        }
        out
    }

    /// M2 applied blockwise.
    pub fn apply_m2(&self, v: &[C64]) -> Vec<C64> {
        self.block_real(&self.m2, v)
    }

    /// H Psi as flat vectors.
    pub fn apply_flat(&self, psi1: &[C64], psi2: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let mut t = self.apply_l(psi1, false);
        for (a, b) in t.iter_mut().zip(self.apply_c1(psi2, false)) {
            *a += b;
        }
        (psi2.to_vec(), self.block_real(&self.m2_inv, &t))
    }

    /// Conjugate transpose of H (with respect to the plain coefficient inner product).
    fn apply_adjoint_flat(&self, y1: &[C64], y2: &[C64]) -> (Vec<C64>, Vec<C64>) {
        // M2 and its inverse are real symmetric
        let z = self.block_real(&self.m2_inv, y2);
        let out1 = self.apply_l(&z, true);
        let mut out2 = self.apply_c1(&z, true);
        for (a, b) in out2.iter_mut().zip(y1) {
            *a += b;
        }
        (out1, out2)
    }

    pub fn apply_h(&self, st: &TwoComponentState) -> Result<TwoComponentState> {
        self.check(st)?;
        let tail = st.angular_tail();
        if tail > 1e-8 {
            return Err(Error::Resolution(format!(
                "angular coefficient tail {tail:.3e} exceeds 1e-8; enlarge the basis"
            )));
        }
        let (a, b) = self.apply_flat(&st.psi1, &st.psi2);
        let mut out = st.clone();
        out.psi1 = a;
        out.psi2 = b;
        Ok(out)
    }

    /// (H - z)^p Psi.
    pub fn apply_shifted_power(
        &self,
        st: &TwoComponentState,
        z: C64,
        p: u32,
    ) -> Result<TwoComponentState> {
        self.check(st)?;
        let mut cur = st.clone();
        for _ in 0..p {
            let (a, b) = self.apply_flat(&cur.psi1, &cur.psi2);
            let mut next = cur.clone();
            for (o, (x, y)) in next.psi1.iter_mut().zip(a.iter().zip(&cur.psi1)) {
                *o = x - z * y;
            }
            for (o, (x, y)) in next.psi2.iter_mut().zip(b.iter().zip(&cur.psi2)) {
                *o = x - z * y;
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Gram operator G of the scalar product.
    fn gram_flat(&self, psi1: &[C64], psi2: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let h = self.grid.h;
        let mut g1 = self.minus_d2(psi1);
        let na = self.n_ang;
        for i in 0..self.grid.n {
            for j in 0..na {
                let mut diag = self.product.weight;
                if self.product.angular {
                    diag += self.d[i] * self.angular.diag[j];
                }
                g1[i * na + j] += diag * psi1[i * na + j];
            }
        }
        g1.iter_mut().for_each(|z| *z *= h);
        let mut g2 = if self.product.kinetic {
            self.apply_m2(psi2)
        } else {
            psi2.to_vec()
        };
        g2.iter_mut().for_each(|z| *z *= h);
        (g1, g2)
    }

    fn gram_solve(&self, y1: &[C64], y2: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let x1 = self.gram_lu.solve(y1);
        let h = self.grid.h;
        let x2 = if self.product.kinetic {
            self.block_real(&self.m2_inv, y2)
        } else {
            y2.to_vec()
        };
        (x1, x2.into_iter().map(|z| z / h).collect())
    }

    /// <a, b> = b^H G a.
    pub fn inner(&self, a: &TwoComponentState, b: &TwoComponentState) -> C64 {
        let (g1, g2) = self.gram_flat(&a.psi1, &a.psi2);
        dot(&b.psi1, &g1) + dot(&b.psi2, &g2)
    }

    pub fn norm(&self, a: &TwoComponentState) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }

    /// Banded matrix of P(omega) = L + omega C1 - omega^2 M2.
    fn pencil(&self, omega: C64) -> BandMatrix {
        let (n, na) = (self.grid.n, self.n_ang);
        let mut p = BandMatrix::zeros(n * na, 2 * na, 2 * na);
        let h2 = self.grid.h * self.grid.h;
        let x = &self.angular.x;
        let om2 = omega * omega;
        for i in 0..n {
            for r in 0..na {
                let row = i * na + r;
                p.add(
                    row,
                    row,
                    D2[0] / h2 + self.w[i] + self.d[i] * self.angular.diag[r] + omega * self.c1[i],
                );
                for off in 1..=2usize {
                    let v = C64::new(D2[off] / h2, 0.0);
                    if i >= off {
                        p.add(row, row - off * na, v);
                    }
                    if i + off < n {
                        p.add(row, row + off * na, v);
                    }
                }
                for c in r.saturating_sub(2)..(r + 3).min(na) {
                    let col = i * na + c;
                    let v = omega * (self.c1x[i] * x[(r, c)]) - om2 * self.m2[i][(r, c)];
                    if v != zero() {
                        p.add(row, col, v);
                    }
                }
            }
        }
        p
    }

    /// LU factors of P(omega) for repeated resolvent solves.
    pub fn resolvent(&self, omega: C64) -> Result<Resolvent<'_>> {
        let lu = self.pencil(omega).factor().map_err(|e| {
            Error::Singular(format!("resolvent at omega = {omega}: {e}"))
        })?;
        Ok(Resolvent {
            ham: self,
            omega,
            lu,
        })
    }

    /// Numerical-range half-width of the skew part, max |<(H - H*)/2i Psi, Psi>| / |Psi|^2,
    /// by Lanczos on the pencil (i/2)(GH - H^H G), G. Returns (c_hat, iterations).
    pub fn c_hat(&self, seed: u64) -> (f64, usize) {
        let nt = self.n_total();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<C64> = (0..2 * nt)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let bop = |v: &[C64]| -> Vec<C64> {
            let (a1, a2) = v.split_at(nt);
            let (h1, h2) = self.apply_flat(a1, a2);
            let (gh1, gh2) = self.gram_flat(&h1, &h2);
            let (g1, g2) = self.gram_flat(a1, a2);
            let (hg1, hg2) = self.apply_adjoint_flat(&g1, &g2);
            let half_i = C64::new(0.0, 0.5);
            gh1.iter()
                .zip(&hg1)
                .chain(gh2.iter().zip(&hg2))
                .map(|(a, b)| half_i * (a - b))
                .collect()
        };
        let gop = |v: &[C64]| -> Vec<C64> {
            let (a1, a2) = v.split_at(nt);
            let (g1, g2) = self.gram_flat(a1, a2);
            [g1, g2].concat()
        };
        let ginv = |v: &[C64]| -> Vec<C64> {
            let (a1, a2) = v.split_at(nt);
            let (g1, g2) = self.gram_solve(a1, a2);
            [g1, g2].concat()
        };
        let gnorm = |v: &[C64]| dot(v, &gop(v)).re.sqrt();
        let n0 = gnorm(&v);
        v.iter_mut().for_each(|z| *z /= n0);
        let mut basis: Vec<Vec<C64>> = vec![v];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut history: Vec<f64> = Vec::new();
        let max_iter = 200.min(2 * nt);
        for it in 0..max_iter {
            let q = basis.last().unwrap().clone();
            let bq = bop(&q);
            let a = dot(&bq, &q).re;
            alpha.push(a);
            let mut z = ginv(&bq);
            // full reorthogonalization in the G inner product, twice
            for _ in 0..2 {
                let gz = gop(&z);
                for qj in &basis {
                    let cj = dot(&gz, qj);
                    for (zi, qi) in z.iter_mut().zip(qj) {
                        *zi -= cj * qi;
                    }
                }
            }
            let b = gnorm(&z);
            let m = alpha.len();
            let t = DMatrix::<f64>::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let ev = SymmetricEigen::new(t).eigenvalues;
            let extreme = ev.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            history.push(extreme);
            let settled = history.len() > 10 && {
                let old = history[history.len() - 11];
                (extreme - old).abs() <= 1e-9 * extreme.max(1e-300)
            };
            if settled || !(b > 1e-14 * extreme.max(1e-300)) || it + 1 == max_iter {
                return (extreme, it + 1);
            }
            beta.push(b);
            z.iter_mut().for_each(|zi| *zi /= b);
            basis.push(z);
        }
        (*history.last().unwrap_or(&0.0), max_iter)
    }

    /// Random smooth state: a few Gaussian bumps in u times random angular coefficients in
    /// the lowest modes, in both components, supported away from the grid ends.
    pub fn random_state(&self, rng: &mut ChaCha8Rng) -> TwoComponentState {
        let mut st = self.zero_state();
        let (lo, hi) = (self.grid.u0, self.grid.hi());
        let span = hi - lo;
        let modes = self.n_ang.min(3);
        for comp in 0..2 {
            for _ in 0..2 {
                let center = lo + span * rng.random_range(0.35..0.65);
                let width = span * rng.random_range(0.02..0.05);
                let coef: Vec<C64> = (0..modes)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                for i in 0..self.grid.n {
                    let z = (self.grid.node(i) - center) / width;
                    let g = (-0.5 * z * z).exp();
                    if g < 1e-30 {
                        continue;
                    }
                    for (j, c) in coef.iter().enumerate() {
                        let v = if comp == 0 { &mut st.psi1 } else { &mut st.psi2 };
                        v[i * self.n_ang + j] += c * g;
                    }
                }
            }
        }
        st
    }

    /// Dense matrix of H (small discretizations only; used by tests).
    pub fn dense(&self) -> CMat {
        let nt = self.n_total();
        let mut m = CMat::zeros(2 * nt, 2 * nt);
        let mut e = vec![zero(); 2 * nt];
        for col in 0..2 * nt {
            e.iter_mut().for_each(|z| *z = zero());
            e[col] = C64::new(1.0, 0.0);
            let (a, b) = self.apply_flat(&e[..nt], &e[nt..]);
            for (row, v) in a.iter().chain(&b).enumerate() {
                m[(row, col)] = *v;
            }
        }
        m
    }
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    // sum a_i conj(b_i)
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Factored resolvent (H - omega)^-1.
pub struct Resolvent<'a> {
    pub ham: &'a Hamiltonian,
    pub omega: C64,
    lu: BandLu,
}

impl Resolvent<'_> {
    /// X = (H - omega)^-1 Phi: P(omega) X1 = M2 Phi2 + (omega M2 - C1) Phi1, X2 = Phi1 + omega X1.
    pub fn solve_flat(&self, phi1: &[C64], phi2: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let h = self.ham;
        let w = self.omega;
        let m2p2 = h.apply_m2(phi2);
        let m2p1 = h.apply_m2(phi1);
        let c1p1 = h.apply_c1(phi1, false);
        let rhs: Vec<C64> = (0..phi1.len())
            .map(|i| m2p2[i] + w * m2p1[i] - c1p1[i])
            .collect();
        let x1 = self.lu.solve(&rhs);
        let x2 = phi1.iter().zip(&x1).map(|(p, x)| p + w * x).collect();
        (x1, x2)
    }

    pub fn solve(&self, phi: &TwoComponentState) -> TwoComponentState {
        let (a, b) = self.solve_flat(&phi.psi1, &phi.psi2);
        let mut out = phi.clone();
        out.psi1 = a;
        out.psi2 = b;
        out
    }
}
