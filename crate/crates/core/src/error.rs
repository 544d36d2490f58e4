use crate::numerics::ode::OdeError;
use crate::numerics::C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("cluster {cluster} is not separated from the rest of the spectrum (gap {gap:.3e}, condition {condition:.3e})")]
    ClusterGap {
        cluster: usize,
        gap: f64,
        condition: f64,
    },
    #[error("cluster {0} does not exist in the truncation")]
    NoSuchCluster(usize),
    #[error("ODE integration failed: {0}")]
    Integration(#[from] OdeError),
    #[error("asymptotic plateau not reached at u = {u} (relative change {change:.3e})")]
    PlateauNotReached { u: f64, change: f64 },
    #[error(
        "near-mode: |w| = {wronskian:.3e} below threshold at omega = {omega}, lambda = {lambda}"
    )]
    NearMode {
        omega: C64,
        lambda: C64,
        wronskian: f64,
    },
    #[error("lambda = {lambda} lies within tolerance of an eigenvalue (|w| = {wronskian:.3e})")]
    NearEigenvalue { lambda: C64, wronskian: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("turning point: |V| below threshold at u = {u}")]
    TurningPoint { u: f64 },
    #[error("disk radius {radius:.3e} exceeded cap {cap:.3e} at u = {u}")]
    RadiusBlowup { u: f64, radius: f64, cap: f64 },
    #[error("Riccati solution has a pole in [{lo}, {hi}]")]
    Pole { lo: f64, hi: f64 },
    #[error(
        "quadrature did not converge (error estimate {estimate:.3e}, tolerance {tolerance:.3e})"
    )]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("instability detected at t = {t}: norm grew by factor {growth:.3e}")]
    Instability { t: f64, growth: f64 },
    #[error("data support touches the grid boundary")]
    SupportTouchesBoundary,
    #[error("strip condition violated: |Im omega| = {im:.3e} not above c = {c:.3e}")]
    InsideStrip { im: f64, c: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
