//! Hamiltonian form of the k-mode Teukolsky equation and its evolution by contour
//! integrals of the resolvent.
//!
//! Evolution uses
//!   Psi(t) = -(1/2 pi i) int_C e^{-i omega t} (omega - z)^{-p} R_omega (H - z)^p Psi0 d omega,
//! C the boundary of the strip |Im omega| < 2c traversed counter-clockwise and z = 3ic for
//! t >= 0 (z = -3ic backwards). Three
//! propagators are registered: "contour" (direct banded resolvent solves on both lines),
//! "separated" (upper line moved to Im omega = eps, angular projectors times radial Green's
//! kernels) and "oracle" (finite-difference time stepping).

pub mod contour;
pub mod decay;
pub mod hamiltonian;
pub mod separated;
pub mod state;

pub use contour::{evolve_contour, resolvent_bound_probe, ContourReport, ProbeReport, ProbeSample};
pub use decay::{decay_experiment, region_sup, DecayRegion, DecaySeries};
pub use hamiltonian::{Hamiltonian, Resolvent, ScalarProduct};
pub use separated::{evolve_separated, ModeLedger, SeparatedOptions, SeparatedReport};
pub use state::{gaussian, separable_state, standard_bump, to_hamiltonian_state, TwoComponentState, UGrid};

use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::timedomain_oracle::{evolve_fd_state, FdConfig, FdReport};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

/// Quadrature on the lines Im omega = +-2c, truncated at |Re omega| <= omega_max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSpec {
    /// Fixed truncation; when absent it is chosen from the tail envelope.
    pub omega_max: Option<f64>,
    /// Upper limit for the envelope-chosen truncation.
    pub omega_cap: f64,
    /// Relative tail budget used to choose omega_max.
    pub tail_tol: f64,
    /// Gauss-Legendre panel width; defaults to min(4c, 4 pi / |t|).
    pub panel_width: Option<f64>,
    pub nodes_per_panel: usize,
    /// Longest time advanced by a single contour evaluation; longer times are reached by
    /// composing steps.
    pub max_step: f64,
    /// Replace the lower line by the real-axis limit (used by the separated propagator).
    pub deformed_mode: bool,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            omega_max: None,
            omega_cap: 200.0,
            tail_tol: 1e-4,
            panel_width: None,
            nodes_per_panel: 16,
            max_step: 2.5,
            deformed_mode: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianConfig {
    /// Strip half-width; defaults to 1.25 c_hat.
    pub c: Option<f64>,
    pub p: u32,
    pub contour: ContourSpec,
    pub scalar_product: ScalarProduct,
    /// Seed of the Lanczos start vector used for c_hat.
    pub lanczos_seed: u64,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        HamiltonianConfig {
            c: None,
            p: 4,
            contour: ContourSpec::default(),
            scalar_product: ScalarProduct::default(),
            lanczos_seed: 7,
        }
    }
}

impl HamiltonianConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::InvalidParams("p must be at least 1".into()));
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParams(format!("c must be positive, got {c}")));
            }
        }
        let q = &self.contour;
        if q.nodes_per_panel < 2 || !(q.tail_tol > 0.0) || !(q.max_step > 0.0) {
            return Err(Error::InvalidParams(
                "contour needs >= 2 nodes per panel, positive tail_tol and max_step".into(),
            ));
        }
        Ok(())
    }

    /// c and the measured c_hat.
    pub fn strip(&self, ham: &Hamiltonian) -> (f64, f64) {
        let (c_hat, _) = ham.c_hat(self.lanczos_seed);
        (self.c.unwrap_or(1.25 * c_hat), c_hat)
    }
}

/// Everything a propagator needs besides the data.
pub struct EvolveSetup {
    pub ham: Arc<Hamiltonian>,
    pub config: HamiltonianConfig,
    pub separated: SeparatedOptions,
    pub oracle: FdConfig,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EvolveReport {
    pub propagator: String,
    pub contour: Option<ContourReport>,
    pub separated: Option<SeparatedReport>,
    pub oracle: Option<FdReport>,
}

pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;
    /// States at the given times (ascending, non-negative).
    fn evolve(
        &self,
        setup: &EvolveSetup,
        psi0: &TwoComponentState,
        times: &[f64],
    ) -> Result<(Vec<TwoComponentState>, EvolveReport)>;
}

struct ContourPropagator;
struct SeparatedPropagator;
struct OraclePropagator;

impl Propagator for ContourPropagator {
    fn name(&self) -> &'static str {
        "contour"
    }
    fn evolve(
        &self,
        setup: &EvolveSetup,
        psi0: &TwoComponentState,
        times: &[f64],
    ) -> Result<(Vec<TwoComponentState>, EvolveReport)> {
        let (states, rep) = evolve_contour(&setup.ham, psi0, times, &setup.config)?;
        Ok((
            states,
            EvolveReport {
                propagator: self.name().into(),
                contour: Some(rep),
                ..Default::default()
            },
        ))
    }
}

impl Propagator for SeparatedPropagator {
    fn name(&self) -> &'static str {
        "separated"
    }
    fn evolve(
        &self,
        setup: &EvolveSetup,
        psi0: &TwoComponentState,
        times: &[f64],
    ) -> Result<(Vec<TwoComponentState>, EvolveReport)> {
        let (states, rep) =
            evolve_separated(&setup.ham, psi0, times, &setup.config, &setup.separated)?;
        Ok((
            states,
            EvolveReport {
                propagator: self.name().into(),
                separated: Some(rep),
                ..Default::default()
            },
        ))
    }
}

impl Propagator for OraclePropagator {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn evolve(
        &self,
        setup: &EvolveSetup,
        psi0: &TwoComponentState,
        times: &[f64],
    ) -> Result<(Vec<TwoComponentState>, EvolveReport)> {
        let (states, rep) = evolve_fd_state(&setup.ham.geometry, psi0, times, &setup.oracle)?;
        Ok((
            states,
            EvolveReport {
                propagator: self.name().into(),
                oracle: Some(rep),
                ..Default::default()
            },
        ))
    }
}

/// Registered propagators: "contour", "separated", "oracle".
pub fn propagators() -> &'static Registry<dyn Propagator> {
    static REG: OnceLock<Registry<dyn Propagator>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn Propagator> = Registry::new("propagator");
        r.register("contour", Arc::new(ContourPropagator));
        r.register("separated", Arc::new(SeparatedPropagator));
        r.register("oracle", Arc::new(OraclePropagator));
        r
    })
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams(
            "evolution times must be finite, non-negative and ascending".into(),
        ));
    }
    Ok(())
}
