//! Run configuration: a flat TOML file, overridden key by key from the
//! command line. Angles are in units of pi.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use wqed_core::model::ModelParams;
use wqed_core::sweep::{KGrid, SweepOptions};
use wqed_core::SolverOptions;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `phi` may be one value or a list (the latter for `ep`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PhiList {
    One(f64),
    Many(Vec<f64>),
}

impl PhiList {
    fn into_vec(self) -> Vec<f64> {
        match self {
            PhiList::One(x) => vec![x],
            PhiList::Many(v) => v,
        }
    }
}

/// Keys of the config file; each one has a command-line flag of the same
/// name (underscores become dashes).
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub phi: Option<PhiList>,
    pub xi: Option<f64>,
    pub gamma_1d: Option<f64>,
    pub kmin: Option<f64>,
    pub kmax: Option<f64>,
    pub kn: Option<usize>,
    pub window: Option<f64>,
    pub jobs: Option<usize>,
    pub format: Option<Format>,
    pub out_dir: Option<PathBuf>,
    pub oracle_n: Option<usize>,
    pub emit_antibound: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigRead {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| Error::ConfigParse {
            path: path.to_owned(),
            source,
        })
    }

    /// Keys set in `other` replace those here.
    pub fn merge(self, other: FileConfig) -> FileConfig {
        FileConfig {
            phi: other.phi.or(self.phi),
            xi: other.xi.or(self.xi),
            gamma_1d: other.gamma_1d.or(self.gamma_1d),
            kmin: other.kmin.or(self.kmin),
            kmax: other.kmax.or(self.kmax),
            kn: other.kn.or(self.kn),
            window: other.window.or(self.window),
            jobs: other.jobs.or(self.jobs),
            format: other.format.or(self.format),
            out_dir: other.out_dir.or(self.out_dir),
            oracle_n: other.oracle_n.or(self.oracle_n),
            emit_antibound: other.emit_antibound.or(self.emit_antibound),
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` when neither file nor flags set it.
    pub phi_over_pi: Option<Vec<f64>>,
    pub xi: f64,
    pub gamma_1d: f64,
    pub k_min_over_pi: f64,
    pub k_max_over_pi: f64,
    pub k_n: usize,
    /// Half-width of the skipped windows around singular momenta.
    pub window_over_pi: f64,
    pub jobs: usize,
    pub format: Format,
    pub out_dir: PathBuf,
    pub oracle_n: usize,
    pub emit_antibound: bool,
    pub corrupt_dt1: Option<f64>,
}

pub const DEFAULT_PHI: f64 = 0.3;
/// Phases of the exceptional-point curve when none are given.
pub const DEFAULT_EP_PHIS: [f64; 6] = [0.15, 0.2, 0.25, 0.3, 0.35, 0.4];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phi_over_pi: None,
            xi: 0.4,
            gamma_1d: 1.0,
            k_min_over_pi: 0.01,
            k_max_over_pi: 1.99,
            k_n: 400,
            window_over_pi: 2e-3,
            jobs: default_jobs(),
            format: Format::Csv,
            out_dir: PathBuf::from("."),
            oracle_n: 400,
            emit_antibound: true,
            corrupt_dt1: None,
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn resolve(file: FileConfig, corrupt_dt1: Option<f64>) -> Result<Self> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            phi_over_pi: file.phi.map(PhiList::into_vec),
            xi: file.xi.unwrap_or(d.xi),
            gamma_1d: file.gamma_1d.unwrap_or(d.gamma_1d),
            k_min_over_pi: file.kmin.unwrap_or(d.k_min_over_pi),
            k_max_over_pi: file.kmax.unwrap_or(d.k_max_over_pi),
            k_n: file.kn.unwrap_or(d.k_n),
            window_over_pi: file.window.unwrap_or(d.window_over_pi),
            jobs: file.jobs.unwrap_or(d.jobs),
            format: file.format.unwrap_or(d.format),
            out_dir: file.out_dir.unwrap_or(d.out_dir),
            oracle_n: file.oracle_n.unwrap_or(d.oracle_n),
            emit_antibound: file.emit_antibound.unwrap_or(d.emit_antibound),
            corrupt_dt1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(phis) = &self.phi_over_pi {
            if phis.is_empty() {
                return Err(config_err("phi list is empty"));
            }
            for &phi in phis {
                self.params_at(phi)?;
            }
        }
        self.params()?;
        self.grid()?;
        if !(self.window_over_pi.is_finite() && self.window_over_pi >= 0.0) {
            return Err(config_err(format!("window = {} must be non-negative", self.window_over_pi)));
        }
        if self.jobs == 0 {
            return Err(config_err("jobs must be at least 1"));
        }
        if !(50..=1000).contains(&self.oracle_n) {
            return Err(config_err(format!("oracle_n = {} must lie in [50, 1000]", self.oracle_n)));
        }
        if let Some(f) = self.corrupt_dt1 {
            if !f.is_finite() {
                return Err(config_err("corrupt-dt1 factor must be finite"));
            }
        }
        Ok(())
    }

    fn params_at(&self, phi_over_pi: f64) -> Result<ModelParams> {
        if !(phi_over_pi > 0.0 && phi_over_pi < 0.5) {
            return Err(config_err(format!("phi = {phi_over_pi} must lie in (0, 0.5)")));
        }
        ModelParams::new(phi_over_pi * PI, self.gamma_1d, self.xi).map_err(|e| config_err(e.to_string()))
    }

    /// The single phase of a sweep-type command.
    pub fn phi(&self) -> Result<f64> {
        match self.phi_over_pi.as_deref() {
            None => Ok(DEFAULT_PHI),
            Some([x]) => Ok(*x),
            Some(v) => Err(config_err(format!("expected one phi, got {}", v.len()))),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        let phi = match self.phi_over_pi.as_deref() {
            Some([x, ..]) => *x,
            _ => DEFAULT_PHI,
        };
        self.params_at(phi)
    }

    /// Phases for the exceptional-point scan.
    pub fn ep_phis(&self) -> Result<Vec<f64>> {
        let phis = self.phi_over_pi.clone().unwrap_or_else(|| DEFAULT_EP_PHIS.to_vec());
        if phis.is_empty() {
            return Err(config_err("phi list is empty"));
        }
        Ok(phis)
    }

    pub fn grid(&self) -> Result<KGrid> {
        KGrid::new(self.k_min_over_pi * PI, self.k_max_over_pi * PI, self.k_n).map_err(|e| config_err(e.to_string()))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            singular_window: self.window_over_pi * PI,
            corrupt_dt1: self.corrupt_dt1,
            ..SolverOptions::default()
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let solver = self.solver_options();
        SweepOptions {
            window: solver.singular_window,
            solver,
            ..SweepOptions::default()
        }
    }
}
