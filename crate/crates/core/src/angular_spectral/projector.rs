//! Riesz projectors onto eigenvalue clusters of the truncated angular operator.

use super::AngularSpectrum;
use crate::error::{Error, Result};
use crate::numerics::dense::{cond2, smallest_right_singular, CMat};
use crate::numerics::C64;
use crate::registry::Registry;
use std::sync::{Arc, OnceLock};

/// Finite-rank projector Q_n on the truncated basis.
#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub n: usize,
    pub matrix: CMat,
    pub dim: usize,
    /// Whether a Jordan chain was detected inside the cluster.
    pub jordan: bool,
    /// Conditioning indicator: 2-norm of the projector.
    pub norm: f64,
}

impl SpectralProjector {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.matrix.nrows();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn idempotence_defect(&self) -> f64 {
        crate::numerics::dense::norm_op_inf(&(&self.matrix * &self.matrix - &self.matrix))
    }
}

/// A way of computing cluster projectors.
pub trait ProjectorMethod: Send + Sync {
    fn name(&self) -> &'static str;
    fn projector(&self, spectrum: &AngularSpectrum, n: usize) -> Result<SpectralProjector>;
}

/// Eigenvector construction, with generalized eigenvectors for defective clusters.
pub struct EigenvectorMethod;

/// Trapezoidal quadrature of the resolvent on a circle around the cluster.
pub struct ContourMethod {
    pub max_points: usize,
}

pub fn projector_methods() -> &'static Registry<dyn ProjectorMethod> {
    static REG: OnceLock<Registry<dyn ProjectorMethod>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn ProjectorMethod> = Registry::new("projector method");
        r.register("eigen", Arc::new(EigenvectorMethod));
        r.register("contour", Arc::new(ContourMethod { max_points: 4096 }));
        r
    })
}

/// Riesz projector for cluster `n` by the primary (eigenvector) path.
pub fn projector(spectrum: &AngularSpectrum, n: usize) -> Result<SpectralProjector> {
    EigenvectorMethod.projector(spectrum, n)
}

/// Separation data of cluster `n`: center, enclosing radius, distance to the rest.
pub(crate) fn cluster_geometry(spectrum: &AngularSpectrum, n: usize) -> Result<(C64, f64, f64)> {
    let members = spectrum.clusters.get(n).ok_or(Error::NoSuchCluster(n))?;
    let ev = &spectrum.eigenvalues;
    let center = if n == 0 {
        C64::new(0.0, 0.0)
    } else {
        members.iter().map(|&i| ev[i]).sum::<C64>() / members.len() as f64
    };
    let r_in = members
        .iter()
        .map(|&i| (ev[i] - center).norm())
        .fold(0.0, f64::max);
    let d_out = (0..ev.len())
        .filter(|i| !members.contains(i))
        .map(|i| (ev[i] - center).norm())
        .fold(f64::INFINITY, f64::min);
    Ok((center, r_in, d_out))
}

fn gap_check(spectrum: &AngularSpectrum, n: usize) -> Result<()> {
    let (center, r_in, d_out) = cluster_geometry(spectrum, n)?;
    let scale = 1.0 + center.norm();
    if d_out.is_finite() && d_out - r_in < 1e-9 * scale {
        return Err(Error::ClusterGap {
            cluster: n,
            gap: d_out - r_in,
            condition: scale / (d_out - r_in).max(1e-300),
        });
    }
    Ok(())
}

/// Q = U (U^T U)^{-1} U^T for any basis U of a right invariant subspace of a
/// complex-symmetric matrix (left invariant subspace = conjugate-free transpose).
fn oblique_projector(u: &CMat) -> Result<CMat> {
    let g = u.transpose() * u;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("U^T U in projector construction".into()))?;
    Ok(u * ginv * u.transpose())
}

impl ProjectorMethod for EigenvectorMethod {
    fn name(&self) -> &'static str {
        "eigen"
    }

    fn projector(&self, spectrum: &AngularSpectrum, n: usize) -> Result<SpectralProjector> {
        gap_check(spectrum, n)?;
        let members = &spectrum.clusters[n];
        let dim = members.len();
        let nb = spectrum.matrix.nrows();
        let vj = CMat::from_fn(nb, dim, |r, c| spectrum.eigenvectors[(r, members[c])]);
        let a = &spectrum.matrix;
        let mut jordan = false;
        let basis = if dim >= 2 && cond2(&vj) > 1e6 {
            // nearly parallel eigenvectors: use the generalized eigenspace ker (A - mu)^dim
            let mu = members
                .iter()
                .map(|&i| spectrum.eigenvalues[i])
                .sum::<C64>()
                / dim as f64;
            let shifted = a - CMat::identity(nb, nb) * mu;
            let mut power = shifted.clone();
            for _ in 1..dim {
                power = &power * &shifted;
            }
            let (u, _) = smallest_right_singular(&power, dim)
                .ok_or_else(|| Error::Eigen("SVD failed".into()))?;
            // rank of (A - mu) restricted to the cluster subspace
            let image = &shifted * &u;
            let sv = crate::numerics::dense::singular_values(&image);
            let scale = crate::numerics::dense::norm_fro(a).max(1.0);
            let rank = sv.iter().filter(|&&s| s > 1e-6 * scale).count();
            if rank < dim {
                jordan = true;
                // chain v1 = (A - mu) w, v2 = w with w the direction of largest image
                let svd = image.clone().svd(false, true);
                let vt = svd.v_t.ok_or_else(|| Error::Eigen("SVD failed".into()))?;
                let mut best = 0;
                for i in 0..svd.singular_values.len() {
                    if svd.singular_values[i] > svd.singular_values[best] {
                        best = i;
                    }
                }
                let coeff: Vec<C64> = (0..dim).map(|c| vt[(best, c)].conj()).collect();
                let w: nalgebra::DVector<C64> = (0..dim)
                    .fold(nalgebra::DVector::zeros(nb), |acc, c| {
                        acc + u.column(c) * coeff[c]
                    });
                let v1 = &shifted * &w;
                let mut chain = CMat::zeros(nb, dim);
                chain.set_column(0, &v1);
                chain.set_column(1, &w);
                for c in 2..dim {
                    chain.set_column(c, &u.column(c));
                }
                chain
            } else {
                u
            }
        } else {
            vj
        };
        let q = oblique_projector(&basis)?;
        let norm = crate::numerics::dense::singular_values(&q)
            .first()
            .copied()
            .unwrap_or(0.0);
        Ok(SpectralProjector {
            n,
            matrix: q,
            dim,
            jordan,
            norm,
        })
    }
}

impl ProjectorMethod for ContourMethod {
    fn name(&self) -> &'static str {
        "contour"
    }

    fn projector(&self, spectrum: &AngularSpectrum, n: usize) -> Result<SpectralProjector> {
        gap_check(spectrum, n)?;
        let (center, r_in, d_out) = cluster_geometry(spectrum, n)?;
        let nb = spectrum.matrix.nrows();
        let radius = if d_out.is_finite() {
            0.5 * (r_in + d_out)
        } else {
            2.0 * r_in + 1.0
        };
        let ratio = if d_out.is_finite() {
            (r_in / radius).max(radius / d_out)
        } else {
            r_in / radius
        };
        let needed = if ratio > 0.0 {
            (1e-15f64.ln() / ratio.ln()).ceil() as usize
        } else {
            16
        };
        let m = needed.clamp(64, self.max_points).next_multiple_of(8);
        let a = &spectrum.matrix;
        let mut q = CMat::zeros(nb, nb);
        for j in 0..m {
            let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            let e = C64::from_polar(1.0, th);
            let lam = center + e * radius;
            let shifted = a - CMat::identity(nb, nb) * lam;
            let inv = shifted
                .try_inverse()
                .ok_or_else(|| Error::Singular("resolvent on projector contour".into()))?;
            // -(1/2 pi i) * (A - lam)^{-1} * d lam, d lam = i r e dth
            let w = -(e * radius) / m as f64;
            q += inv * w;
        }
        let dim = spectrum.clusters[n].len();
        let norm = crate::numerics::dense::singular_values(&q)
            .first()
            .copied()
            .unwrap_or(0.0);
        Ok(SpectralProjector {
            n,
            matrix: q,
            dim,
            jordan: false,
            norm,
        })
    }
}
