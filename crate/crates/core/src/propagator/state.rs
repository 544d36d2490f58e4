//! Two-component states sampled on a uniform u grid, angular part in the spin-weighted
//! harmonic basis. Index layout is u-major: entry (i, j) sits at i * n_ang + j.

use crate::angular_spectral::basis::SpinBasis;
use crate::error::{Error, Result};
use crate::kerr_geometry::KerrParams;
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::{HalfInt, C64};
use serde::{Deserialize, Serialize};

/// Nodes that must stay empty at each end of the grid.
pub const BOUNDARY_NODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UGrid {
    pub u0: f64,
    pub h: f64,
    pub n: usize,
}

impl UGrid {
    /// `n` equispaced nodes covering [lo, hi].
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 * BOUNDARY_NODES + 1 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParams(format!(
                "u grid needs lo < hi and at least {} nodes (got [{lo}, {hi}], n = {n})",
                2 * BOUNDARY_NODES + 1
            )));
        }
        Ok(UGrid {
            u0: lo,
            h: (hi - lo) / (n - 1) as f64,
            n,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn hi(&self) -> f64 {
        self.node(self.n - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoComponentState {
    pub grid: UGrid,
    pub s: HalfInt,
    pub k: HalfInt,
    pub n_ang: usize,
    /// sqrt(r^2 + a^2) phi.
    pub psi1: Vec<C64>,
    /// sqrt(r^2 + a^2) i d_t phi.
    pub psi2: Vec<C64>,
}

impl TwoComponentState {
    pub fn zeros(grid: UGrid, s: HalfInt, k: HalfInt, n_ang: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.n * n_ang];
        TwoComponentState {
            grid,
            s,
            k,
            n_ang,
            psi1: z.clone(),
            psi2: z,
        }
    }

    pub fn len(&self) -> usize {
        self.psi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi1.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.s == other.s
            && self.k == other.k
            && self.n_ang == other.n_ang
    }

    pub fn basis(&self) -> SpinBasis {
        SpinBasis::new(self.s, self.k, self.n_ang)
    }

    /// Both components flattened, first component first.
    pub fn to_vec(&self) -> Vec<C64> {
        let mut v = self.psi1.clone();
        v.extend_from_slice(&self.psi2);
        v
    }

    pub fn from_vec(like: &Self, v: Vec<C64>) -> Self {
        let n = like.len();
        assert_eq!(v.len(), 2 * n);
        let mut out = like.clone();
        out.psi1.copy_from_slice(&v[..n]);
        out.psi2.copy_from_slice(&v[n..]);
        out
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = self.clone();
        out.psi1.iter_mut().for_each(|z| *z = f(*z));
        out.psi2.iter_mut().for_each(|z| *z = f(*z));
        out
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|z| a * z)
    }

    /// self + a * other.
    pub fn axpy(&self, a: C64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        let mut out = self.clone();
        for (x, y) in out.psi1.iter_mut().zip(&other.psi1) {
            *x += a * y;
        }
        for (x, y) in out.psi2.iter_mut().zip(&other.psi2) {
            *x += a * y;
        }
        out
    }

    /// Plain Euclidean norm of the coefficient vector times sqrt(h).
    pub fn l2(&self) -> f64 {
        let s: f64 = self
            .psi1
            .iter()
            .chain(&self.psi2)
            .map(|z| z.norm_sqr())
            .sum();
        (s * self.grid.h).sqrt()
    }

    /// phi on the grid at x = cos(theta), i.e. the first component over sqrt(r^2 + a^2).
    pub fn phi_at(&self, geometry: &KerrParams, i: usize, x: f64) -> C64 {
        let y = self.basis().eval(x);
        let r = geometry.regge_wheeler_r(self.grid.node(i));
        let rho = (r * r + geometry.a() * geometry.a()).sqrt();
        let row = &self.psi1[i * self.n_ang..(i + 1) * self.n_ang];
        row.iter().zip(&y).map(|(c, y)| c * y).sum::<C64>() / rho
    }

    /// Angular coefficients of phi (first component divided by the weight).
    pub fn phi_coefficients(&self, geometry: &KerrParams) -> Vec<C64> {
        let mut out = self.psi1.clone();
        for i in 0..self.grid.n {
            let r = geometry.regge_wheeler_r(self.grid.node(i));
            let rho = (r * r + geometry.a() * geometry.a()).sqrt();
            for z in &mut out[i * self.n_ang..(i + 1) * self.n_ang] {
                *z /= rho;
            }
        }
        out
    }

    /// Relative size of the highest angular coefficient, a resolution indicator.
    pub fn angular_tail(&self) -> f64 {
        let total: f64 = self
            .psi1
            .iter()
            .chain(&self.psi2)
            .map(|z| z.norm_sqr())
            .sum();
        if total == 0.0 {
            return 0.0;
        }
        let last = self.n_ang - 1;
        let tail: f64 = (0..self.grid.n)
            .map(|i| {
                self.psi1[i * self.n_ang + last].norm_sqr()
                    + self.psi2[i * self.n_ang + last].norm_sqr()
            })
            .sum();
        (tail / total).sqrt()
    }

    /// Errors when data reach into the outermost `BOUNDARY_NODES` nodes at either end.
    pub fn check_support(&self, tol: f64) -> Result<()> {
        let scale = self
            .psi1
            .iter()
            .chain(&self.psi2)
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(());
        }
        let n = self.grid.n;
        let edge = (0..BOUNDARY_NODES).chain(n - BOUNDARY_NODES..n);
        for i in edge {
            for j in 0..self.n_ang {
                let idx = i * self.n_ang + j;
                if self.psi1[idx].norm().max(self.psi2[idx].norm()) > tol * scale {
                    return Err(Error::SupportTouchesBoundary);
                }
            }
        }
        Ok(())
    }
}

/// Samples Cauchy data phi0, phi1 (functions of u and x = cos(theta)) into a state with the
/// sqrt(r^2 + a^2) weight, projecting the angular dependence on `n_ang` basis functions.
pub fn to_hamiltonian_state<F0, F1>(
    phi0: F0,
    phi1: F1,
    geometry: &KerrParams,
    grid: UGrid,
    s: HalfInt,
    k: HalfInt,
    n_ang: usize,
) -> Result<TwoComponentState>
where
    F0: Fn(f64, f64) -> C64,
    F1: Fn(f64, f64) -> C64,
{
    if !(k - s).is_integer() || n_ang == 0 {
        return Err(Error::InvalidParams(format!(
            "state needs k - s integer and a non-empty basis (s = {s}, k = {k}, n = {n_ang})"
        )));
    }
    let basis = SpinBasis::new(s, k, n_ang);
    let (xs, ws) = gauss_legendre(n_ang + (basis.alpha + basis.beta) as usize + 24);
    let ys: Vec<Vec<f64>> = xs.iter().map(|&x| basis.eval(x)).collect();
    let mut st = TwoComponentState::zeros(grid, s, k, n_ang);
    let i_unit = C64::new(0.0, 1.0);
    for i in 0..grid.n {
        let u = grid.node(i);
        let r = geometry.regge_wheeler_r(u);
        let rho = (r * r + geometry.a() * geometry.a()).sqrt();
        for (q, (&x, &w)) in xs.iter().zip(&ws).enumerate() {
            let f0 = phi0(u, x) * (w * rho);
            let f1 = phi1(u, x) * (w * rho);
            for j in 0..n_ang {
                st.psi1[i * n_ang + j] += f0 * ys[q][j];
                st.psi2[i * n_ang + j] += i_unit * f1 * ys[q][j];
            }
        }
    }
    st.check_support(1e-12)?;
    Ok(st)
}

/// State whose phi has angular coefficients `coef` times the radial profile `f(u)`, with
/// vanishing time derivative.
pub fn separable_state(
    f: impl Fn(f64) -> f64,
    coef: &[C64],
    geometry: &KerrParams,
    grid: UGrid,
    s: HalfInt,
    k: HalfInt,
    n_ang: usize,
) -> Result<TwoComponentState> {
    if coef.len() > n_ang {
        return Err(Error::InvalidParams(
            "more coefficients than basis functions".into(),
        ));
    }
    let mut st = TwoComponentState::zeros(grid, s, k, n_ang);
    for i in 0..grid.n {
        let u = grid.node(i);
        let r = geometry.regge_wheeler_r(u);
        let rho = (r * r + geometry.a() * geometry.a()).sqrt();
        let v = f(u) * rho;
        for (j, c) in coef.iter().enumerate() {
            st.psi1[i * n_ang + j] = c * v;
        }
    }
    st.check_support(1e-12)?;
    Ok(st)
}

/// The reference data used by the cross-checks: a Gaussian of width 1.5 at u = 0 in the
/// first component, angular coefficients (1, 0.3), zero second component.
pub fn standard_bump(
    geometry: &KerrParams,
    grid: UGrid,
    s: HalfInt,
    k: HalfInt,
    n_ang: usize,
) -> Result<TwoComponentState> {
    separable_state(
        gaussian(0.0, 1.5),
        &[C64::new(1.0, 0.0), C64::new(0.3, 0.0)],
        geometry,
        grid,
        s,
        k,
        n_ang,
    )
}

/// exp(-(u - center)^2 / (2 width^2)), cut to exactly zero below 1e-30.
pub fn gaussian(center: f64, width: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| {
        let z = (u - center) / width;
        let v = (-0.5 * z * z).exp();
        if v < 1e-30 {
            0.0
        } else {
            v
        }
    }
}
