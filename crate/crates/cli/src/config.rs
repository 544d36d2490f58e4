//! Run configuration: strict TOML/JSON parsing, defaulting and validation.

use crate::error::CliError;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use teukolsky::angular_spectral::{AngularProblem, ClusterRule};
use teukolsky::numerics::HalfInt;
use teukolsky::propagator::{DecayRegion, HamiltonianConfig, SeparatedOptions, UGrid};
use teukolsky::radial_ode::{JostOptions, ScanRegion};
use teukolsky::riccati_certify::CertifyOptions;
use teukolsky::timedomain_oracle::FdConfig;
use teukolsky::KerrParams;

/// Everything a run needs. `M`, `a`, `s` and `k` have no defaults; every other block does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub m: f64,
    pub a: f64,
    pub s: HalfInt,
    pub k: HalfInt,
    #[serde(default)]
    pub angular: AngularBlock,
    #[serde(default)]
    pub radial: RadialBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub data: DataBlock,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    #[serde(default)]
    pub contour: HamiltonianConfig,
    #[serde(default)]
    pub separated: SeparatedOptions,
    #[serde(default)]
    pub oracle: FdConfig,
    #[serde(default)]
    pub scan: ScanBlock,
    #[serde(default)]
    pub certify: CertifyBlock,
    #[serde(default)]
    pub decay: DecayBlock,
    #[serde(default)]
    pub compare: CompareBlock,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 1 gives bit-reproducible output.
    #[serde(default = "one")]
    pub threads: usize,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngularBlock {
    /// Frequency; the spheroidicity is a * omega.
    pub omega: C64,
    pub n_basis: usize,
    pub cluster_rule: ClusterRule,
    /// Projector construction, "eigen" or "contour".
    pub method: String,
}

impl Default for AngularBlock {
    fn default() -> Self {
        AngularBlock {
            omega: C64::new(0.0, 0.0),
            n_basis: 16,
            cluster_rule: ClusterRule::default(),
            method: "eigen".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialBlock {
    pub omega: C64,
    /// Separation constant; when absent the angular eigenvalue `mode` at omega is used.
    pub lambda: Option<C64>,
    pub mode: usize,
    pub u: [f64; 2],
    pub n: usize,
    /// Second argument of the Green's kernel column written to green.csv.
    pub source: f64,
    pub jost: JostOptions,
}

impl Default for RadialBlock {
    fn default() -> Self {
        RadialBlock {
            omega: C64::new(0.4, 0.1),
            lambda: None,
            mode: 0,
            u: [-20.0, 40.0],
            n: 121,
            source: 0.0,
            jost: JostOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub u: [f64; 2],
    pub n: usize,
    /// Angular basis functions per node.
    pub n_ang: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            u: [-20.0, 20.0],
            n: 161,
            n_ang: 6,
        }
    }
}

/// Initial phi: a Gaussian in u times angular coefficients, zero time derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataBlock {
    pub center: f64,
    pub width: f64,
    pub coefficients: Vec<C64>,
}

impl Default for DataBlock {
    fn default() -> Self {
        DataBlock {
            center: 0.0,
            width: 1.5,
            coefficients: vec![C64::new(1.0, 0.0), C64::new(0.3, 0.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleBlock {
    pub times: Vec<f64>,
    /// Registered propagator used by `evolve`.
    pub propagator: String,
    /// cos(theta) values sampled in snapshots.
    pub snapshot_x: Vec<f64>,
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        ScheduleBlock {
            times: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            propagator: "contour".into(),
            snapshot_x: vec![-0.5, 0.0, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanBlock {
    pub region: ScanRegion,
    /// Angular eigenvalue indices, 0 the lowest.
    pub modes: Vec<usize>,
    pub tolerance: f64,
    /// Also scan the square-well control, whose bound state must be found.
    pub control: bool,
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            region: ScanRegion {
                re: (0.1, 1.2),
                im: (0.05, 0.5),
                n_re: 8,
                n_im: 4,
            },
            modes: vec![0, 1],
            tolerance: 1e-6,
            control: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyBlock {
    /// Registered potential family.
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub u: [f64; 2],
    /// Initial value relative to the WKB center at u[0].
    pub y0_offset: C64,
    /// Number of runs; the "random" family draws seeds seed, seed + 1, ...
    pub count: usize,
    pub options: CertifyOptions,
}

impl Default for CertifyBlock {
    fn default() -> Self {
        CertifyBlock {
            family: "random".into(),
            params: BTreeMap::new(),
            u: [0.0, 6.0],
            y0_offset: C64::new(0.02, -0.01),
            count: 1,
            options: CertifyOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayBlock {
    pub region: DecayRegion,
    pub times: Vec<f64>,
}

impl Default for DecayBlock {
    fn default() -> Self {
        DecayBlock {
            region: DecayRegion::new([-10.0, 10.0]),
            times: (0..=20).map(|i| 10.0 * i as f64).collect(),
        }
    }
}

/// Output directories of two earlier runs whose snapshots `compare` diffs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareBlock {
    pub left: Option<PathBuf>,
    pub right: Option<PathBuf>,
}

impl RunConfig {
    /// Config with the four required fields and every block at its default.
    pub fn minimal(m: f64, a: f64, s: HalfInt, k: HalfInt) -> Self {
        RunConfig {
            m,
            a,
            s,
            k,
            angular: AngularBlock::default(),
            radial: RadialBlock::default(),
            grid: GridBlock::default(),
            data: DataBlock::default(),
            schedule: ScheduleBlock::default(),
            contour: HamiltonianConfig::default(),
            separated: SeparatedOptions::default(),
            oracle: FdConfig::default(),
            scan: ScanBlock::default(),
            certify: CertifyBlock::default(),
            decay: DecayBlock::default(),
            compare: CompareBlock::default(),
            out: default_out(),
            seed: 0,
            threads: 1,
        }
    }

    pub fn geometry(&self) -> Result<KerrParams, CliError> {
        Ok(KerrParams::new(self.m, self.a)?)
    }

    pub fn u_grid(&self) -> Result<UGrid, CliError> {
        Ok(UGrid::new(self.grid.u[0], self.grid.u[1], self.grid.n)?)
    }

    /// Checks the invariants that do not need a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.geometry()?;
        if self.s.twice() < 0 {
            return Err(CliError::Invalid(format!(
                "spin weight must be non-negative, got s = {}",
                self.s
            )));
        }
        if !(self.k - self.s).is_integer() {
            return Err(CliError::Invalid(format!(
                "k - s must be an integer (s = {}, k = {})",
                self.s, self.k
            )));
        }
        AngularProblem::with_basis_size(self.s, self.k, self.angular.omega * self.a, self.angular.n_basis)?;
        self.u_grid()?;
        if self.grid.n_ang == 0 {
            return Err(CliError::Invalid("grid.n_ang must be positive".into()));
        }
        if !(self.data.width > 0.0) || self.data.coefficients.len() > self.grid.n_ang {
            return Err(CliError::Invalid(
                "data needs a positive width and at most grid.n_ang coefficients".into(),
            ));
        }
        if self.radial.n < 2 || !(self.radial.u[1] > self.radial.u[0]) {
            return Err(CliError::Invalid("radial samples need n >= 2 and u[0] < u[1]".into()));
        }
        if self.threads == 0 {
            return Err(CliError::Invalid("threads must be at least 1".into()));
        }
        if self.schedule.snapshot_x.iter().any(|x| !(-1.0..=1.0).contains(x)) {
            return Err(CliError::Invalid("snapshot_x must lie in [-1, 1]".into()));
        }
        self.contour.validate()?;
        self.separated.validate()?;
        self.oracle.validate()?;
        self.decay.region.validate()?;
        Ok(())
    }
}

/// Reads a TOML or JSON config (or a run manifest, whose embedded config is used), fills
/// defaults and validates.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let is_json = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => true,
        Some("toml") => false,
        _ => text.trim_start().starts_with('{'),
    };
    let cfg = if is_json {
        parse_json(&text).map_err(|msg| CliError::Parse {
            path: path.to_path_buf(),
            msg,
        })?
    } else {
        toml::from_str::<RunConfig>(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_json(text: &str) -> Result<RunConfig, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if let Some(obj) = value.as_object() {
        if obj.contains_key("manifest_version") {
            let inner = obj.get("config").ok_or("manifest without a config block")?;
            return serde_json::from_value(inner.clone()).map_err(|e| format!("manifest config: {e}"));
        }
    }
    // parse the text again so that errors carry line and column
    serde_json::from_str(text).map_err(|e| e.to_string())
}

/// Parses config text in the given format, then validates; used for inline configs.
pub fn parse_config_str(text: &str, json: bool) -> Result<RunConfig, CliError> {
    let cfg = if json {
        parse_json(text).map_err(|msg| CliError::Parse {
            path: PathBuf::from("<inline>"),
            msg,
        })?
    } else {
        toml::from_str::<RunConfig>(text).map_err(|e| CliError::Parse {
            path: PathBuf::from("<inline>"),
            msg: e.to_string(),
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}
