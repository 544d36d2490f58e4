//! The complex angular operator: Galerkin matrix, spectrum, clusters, Riesz projectors,
//! and the Sturm-Liouville resolvent kernel.

pub mod basis;
pub mod fd_oracle;
pub mod projector;
pub mod sl_form;

use crate::error::{Error, Result};
use crate::numerics::dense::{eigen, CMat};
use crate::numerics::{HalfInt, C64};
use basis::SpinBasis;
use serde::{Deserialize, Serialize};

pub use projector::{projector, projector_methods, ProjectorMethod, SpectralProjector};
pub use sl_form::{angular_resolvent_kernel, angular_sl_form, AngularKernel, AngularSLForm};

/// Minimum number of basis functions beyond the lowest admissible l.
pub const MIN_EXTRA_MODES: i32 = 8;

/// One (s, k, a w) angular problem truncated at l <= l_max.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularProblem {
    pub s: HalfInt,
    pub k: HalfInt,
    pub a_omega: C64,
    pub l_max: HalfInt,
}

impl AngularProblem {
    pub fn new(s: HalfInt, k: HalfInt, a_omega: C64, l_max: HalfInt) -> Result<Self> {
        let p = AngularProblem {
            s,
            k,
            a_omega,
            l_max,
        };
        p.validate()?;
        Ok(p)
    }

    /// Problem with `n_basis` functions starting at the lowest admissible l.
    pub fn with_basis_size(s: HalfInt, k: HalfInt, a_omega: C64, n_basis: usize) -> Result<Self> {
        let l_min = if s.abs() > k.abs() { s.abs() } else { k.abs() };
        let l_max = l_min + HalfInt::from_int(n_basis as i32 - 1);
        Self::new(s, k, a_omega, l_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s.twice() < 0 {
            return Err(Error::InvalidParams(format!(
                "spin weight must be non-negative, got s = {}",
                self.s
            )));
        }
        if !(self.k - self.s).is_integer() {
            return Err(Error::InvalidParams(format!(
                "k - s must be an integer (s = {}, k = {})",
                self.s, self.k
            )));
        }
        let gap = self.l_max - self.l_min();
        match gap.to_int() {
            Some(g) if g >= MIN_EXTRA_MODES => {}
            _ => {
                return Err(Error::InvalidParams(format!(
                    "l_max = {} must be l_min + integer >= l_min + {MIN_EXTRA_MODES} (l_min = {})",
                    self.l_max,
                    self.l_min()
                )))
            }
        }
        if !(self.a_omega.re.is_finite() && self.a_omega.im.is_finite()) {
            return Err(Error::InvalidParams("a*omega must be finite".into()));
        }
        Ok(())
    }

    pub fn l_min(&self) -> HalfInt {
        if self.s.abs() > self.k.abs() {
            self.s.abs()
        } else {
            self.k.abs()
        }
    }

    pub fn n_basis(&self) -> usize {
        ((self.l_max - self.l_min()).to_int().unwrap_or(0) + 1).max(0) as usize
    }

    pub fn basis(&self) -> SpinBasis {
        SpinBasis::new(self.s, self.k, self.n_basis())
    }
}

/// Matrices needed to assemble the angular operator for any a w.
#[derive(Clone, Debug)]
pub struct AngularMatrices {
    pub diag: Vec<f64>,
    pub x: nalgebra::DMatrix<f64>,
    pub x2: nalgebra::DMatrix<f64>,
    pub k: f64,
    pub s: f64,
}

impl AngularMatrices {
    pub fn new(basis: &SpinBasis) -> Self {
        let (x, x2) = basis.x_and_x2();
        let diag = (0..basis.n).map(|j| basis.diag_eigenvalue(j)).collect();
        AngularMatrices {
            diag,
            x,
            x2,
            k: basis.k.value(),
            s: basis.s.value(),
        }
    }

    /// A = diag(l(l+1) - s^2) + (aw)^2 (I - X2) - 2 aw k I + 2 aw s X.
    pub fn assemble(&self, aw: C64) -> CMat {
        let n = self.diag.len();
        let aw2 = aw * aw;
        CMat::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            let mut v = aw2 * (id - self.x2[(i, j)]) + aw * (2.0 * self.s * self.x[(i, j)]);
            if i == j {
                v += self.diag[i] - 2.0 * aw * self.k;
            }
            v
        })
    }
}

/// Galerkin matrix of the angular operator in the spin-weighted harmonic basis.
pub fn assemble_angular(problem: &AngularProblem) -> Result<CMat> {
    problem.validate()?;
    Ok(AngularMatrices::new(&problem.basis()).assemble(problem.a_omega))
}

/// Cluster-formation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterRule {
    /// Number of smallest-modulus eigenvalues forming cluster 0.
    pub n0: usize,
    /// Relative gap below which neighbours merge.
    pub merge_ratio: f64,
}

impl Default for ClusterRule {
    fn default() -> Self {
        ClusterRule {
            n0: 8,
            merge_ratio: 0.1,
        }
    }
}

/// Eigenpairs of the truncated operator, ordered by real then imaginary part.
#[derive(Clone, Debug)]
pub struct AngularSpectrum {
    pub problem: AngularProblem,
    pub matrix: CMat,
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: CMat,
    pub clusters: Vec<Vec<usize>>,
    pub n_resolved: usize,
}

impl AngularSpectrum {
    pub fn cluster_of(&self, idx: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&idx))
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Clusters all of whose members are among the resolved eigenvalues.
    pub fn resolved_clusters(&self) -> Vec<usize> {
        let resolved = self.resolved_indices();
        (0..self.clusters.len())
            .filter(|&c| self.clusters[c].iter().all(|i| resolved.contains(i)))
            .collect()
    }

    /// Indices of the lowest ceil(n/2) eigenvalues by modulus.
    pub fn resolved_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.eigenvalues.len()).collect();
        idx.sort_by(|&i, &j| {
            self.eigenvalues[i]
                .norm()
                .partial_cmp(&self.eigenvalues[j].norm())
                .unwrap()
        });
        idx.truncate(self.n_resolved);
        idx.sort_unstable();
        idx
    }
}

fn cmp_eig(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap()
        .then(a.im.partial_cmp(&b.im).unwrap())
}

/// Eigen-decomposition of the truncated operator with the default cluster rule.
pub fn angular_spectrum(problem: &AngularProblem) -> Result<AngularSpectrum> {
    angular_spectrum_with(problem, &ClusterRule::default())
}

pub fn angular_spectrum_with(
    problem: &AngularProblem,
    rule: &ClusterRule,
) -> Result<AngularSpectrum> {
    let a = assemble_angular(problem)?;
    spectrum_of_matrix(*problem, a, rule)
}

pub(crate) fn spectrum_of_matrix(
    problem: AngularProblem,
    a: CMat,
    rule: &ClusterRule,
) -> Result<AngularSpectrum> {
    let n = a.nrows();
    let (lam, v) = eigen(&a).ok_or_else(|| {
        Error::Eigen(format!(
            "Schur iteration did not converge for a*omega = {}",
            problem.a_omega
        ))
    })?;
    if lam.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_eig(&lam[i], &lam[j]));
    let eigenvalues: Vec<C64> = order.iter().map(|&i| lam[i]).collect();
    let eigenvectors = CMat::from_fn(n, n, |r, c| v[(r, order[c])]);
    let clusters = form_clusters(&eigenvalues, rule);
    Ok(AngularSpectrum {
        problem,
        matrix: a,
        eigenvalues,
        eigenvectors,
        clusters,
        n_resolved: n.div_ceil(2),
    })
}

/// Gap-rule clustering. Cluster 0 holds the `n0` smallest-modulus eigenvalues (shrunk if
/// its boundary would split a near-degenerate pair); the rest merge pairwise when closer
/// than `merge_ratio` times the local mean gap.
pub fn form_clusters(eigenvalues: &[C64], rule: &ClusterRule) -> Vec<Vec<usize>> {
    let n = eigenvalues.len();
    if n == 0 {
        return Vec::new();
    }
    let mut by_mod: Vec<usize> = (0..n).collect();
    by_mod.sort_by(|&i, &j| {
        eigenvalues[i]
            .norm()
            .partial_cmp(&eigenvalues[j].norm())
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut n0 = rule.n0.min(n).max(1);
    let typical_gap = {
        let mut g: Vec<f64> = eigenvalues
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .collect();
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if g.is_empty() {
            1.0
        } else {
            g[g.len() / 2].max(1e-12)
        }
    };
    while n0 > 1 && n0 < n {
        let inner = &by_mod[..n0];
        let outer = &by_mod[n0..];
        let split = inner.iter().any(|&i| {
            outer
                .iter()
                .any(|&j| (eigenvalues[i] - eigenvalues[j]).norm() < rule.merge_ratio * typical_gap)
        });
        let radial_gap = eigenvalues[by_mod[n0]].norm() - eigenvalues[by_mod[n0 - 1]].norm();
        if split || radial_gap < 1e-3 * typical_gap {
            n0 -= 1;
        } else {
            break;
        }
    }
    let mut c0: Vec<usize> = by_mod[..n0].to_vec();
    c0.sort_unstable();
    let rest: Vec<usize> = (0..n).filter(|i| !c0.contains(i)).collect();
    let mut clusters = vec![c0];
    let gaps: Vec<f64> = rest
        .windows(2)
        .map(|w| (eigenvalues[w[1]] - eigenvalues[w[0]]).norm())
        .collect();
    let mut i = 0;
    while i < rest.len() {
        if i + 1 < rest.len() {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(gaps.len() - 1);
            let local: Vec<f64> = (lo..=hi).map(|g| gaps[g]).collect();
            let mean = local.iter().sum::<f64>() / local.len() as f64;
            if gaps[i] < rule.merge_ratio * mean {
                clusters.push(vec![rest[i], rest[i + 1]]);
                i += 2;
                continue;
            }
        }
        clusters.push(vec![rest[i]]);
        i += 1;
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    fn prob(s: i32, k: i32, aw: C64, n: usize) -> AngularProblem {
        AngularProblem::with_basis_size(HalfInt::from_int(s), HalfInt::from_int(k), aw, n).unwrap()
    }

    #[test]
    fn legendre_diagonal() {
        let a = assemble_angular(&prob(0, 0, c(0.0, 0.0), 13)).unwrap();
        for i in 0..13 {
            for j in 0..13 {
                let e = if i == j { (i * (i + 1)) as f64 } else { 0.0 };
                assert!((a[(i, j)] - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coupling_band_at_most_two() {
        let a = assemble_angular(&prob(0, 0, c(0.1, 0.0), 12)).unwrap();
        let mut off = false;
        for i in 0..12usize {
            for j in 0..12 {
                if i.abs_diff(j) > 2 {
                    assert!(a[(i, j)].norm() < 1e-14);
                } else if i != j && a[(i, j)].norm() > 1e-8 {
                    off = true;
                }
            }
        }
        assert!(off);
    }

    #[test]
    fn invalid_pairing_rejected() {
        assert!(AngularProblem::new(
            HalfInt::from_twice(1),
            HalfInt::from_int(1),
            c(0.0, 0.0),
            HalfInt::from_int(12)
        )
        .is_err());
        assert!(AngularProblem::new(
            HalfInt::from_int(2),
            HalfInt::from_int(2),
            c(0.0, 0.0),
            HalfInt::from_int(9)
        )
        .is_err());
        assert!(AngularProblem::new(
            HalfInt::from_int(2),
            HalfInt::from_int(2),
            c(0.0, 0.0),
            HalfInt::from_int(10)
        )
        .is_ok());
    }

    #[test]
    fn clusters_have_bounded_size() {
        let sp = angular_spectrum(&prob(2, 2, c(0.15, 0.1), 20)).unwrap();
        assert_eq!(sp.clusters[0].len(), 8);
        assert!(sp.clusters[1..].iter().all(|c| c.len() <= 2));
        let total: usize = sp.clusters.iter().map(|c| c.len()).sum();
        assert_eq!(total, 20);
    }

    #[test]
    fn near_pair_merges() {
        let ev = vec![
            c(0.0, 0.0),
            c(10.0, 0.0),
            c(20.0, 0.0),
            c(20.01, 0.0),
            c(30.0, 0.0),
        ];
        let cl = form_clusters(
            &ev,
            &ClusterRule {
                n0: 1,
                merge_ratio: 0.1,
            },
        );
        assert_eq!(cl, vec![vec![0], vec![1], vec![2, 3], vec![4]]);
    }
}
