//! Run configuration, read from TOML with sections `[system]`, `[bath1]`,
//! `[bath2]`, `[process]` and `[sweep]`. Every key is optional; missing
//! values fall back to the two-site heat-engine setup.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{PrebError, Result};
use crate::model::SystemSpec;
use crate::spectral::{BathThermal, SpectralFunction, SpectralShape, SpectralTable};

pub const DEFAULT_KAPPA: f64 = 2.0;
pub const DEFAULT_CUTOFF: f64 = 6.0;
pub const DEFAULT_WIDTH: f64 = 0.05;
pub const DEFAULT_CENTERS: [f64; 2] = [2.0, -1.0];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    bath1: Option<RawBath>,
    bath2: Option<RawBath>,
    process: Option<RawProcess>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    hopping: Option<f64>,
    hamiltonian: Option<Vec<Vec<f64>>>,
    coupling_sites: Option<[usize; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    kind: Option<String>,
    kappa: Option<f64>,
    width: Option<f64>,
    center: Option<f64>,
    cutoff: Option<f64>,
    level: Option<f64>,
    table: Option<String>,
    interpolate: Option<bool>,
    beta: Option<f64>,
    mu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcess {
    tau: Option<f64>,
    l0: Option<usize>,
    tau_r_factor: Option<f64>,
    depth: Option<usize>,
    n_modes: Option<usize>,
    chain_method: Option<String>,
    grid_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    min: f64,
    max: f64,
    points: usize,
    spacing: Option<String>,
}

/// One bath: coupling density and thermal state.
#[derive(Debug, Clone, PartialEq)]
pub struct BathConfig {
    pub spectral: SpectralFunction,
    pub thermal: BathThermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMethod {
    Tridiag,
    Recursion,
}

impl FromStr for ChainMethod {
    type Err = PrebError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tridiag" => Ok(Self::Tridiag),
            "recursion" => Ok(Self::Recursion),
            _ => Err(PrebError::Config(format!("unknown chain_method '{s}' (tridiag | recursion)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessConfig {
    pub tau: f64,
    pub l0: usize,
    pub tau_r_factor: f64,
    /// Minimum chain depth; grows with τ when the light cone needs more sites.
    pub depth: usize,
    pub n_modes: Option<usize>,
    pub chain_method: ChainMethod,
    pub grid_points: usize,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            l0: 14,
            tau_r_factor: 10.0,
            depth: 32,
            n_modes: None,
            chain_method: ChainMethod::Tridiag,
            grid_points: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub system: SystemSpec,
    pub baths: [BathConfig; 2],
    pub process: ProcessConfig,
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// β₁ = 0.1, β₂ = 1, μ = −2.
    HeatEngine,
    /// β₁ = 0.7, β₂ = 1, μ = −2.
    Refrigerator,
    /// β₁ = β₂ = 1, μ = −2.
    EqualBaths,
}

impl ModelConfig {
    /// Two sites with unit hopping, Lorentzian baths (κ = 2, centers 2 and −1,
    /// cutoff 6) of half-width `width`, cycle time `tau`.
    pub fn preset(preset: Preset, width: f64, tau: f64) -> Result<Self> {
        let (b1, b2, mu) = match preset {
            Preset::HeatEngine => (0.1, 1.0, -2.0),
            Preset::Refrigerator => (0.7, 1.0, -2.0),
            Preset::EqualBaths => (1.0, 1.0, -2.0),
        };
        let mut cfg = Self::lorentzian_pair(width, tau, [b1, b2], [mu, mu])?;
        if preset == Preset::EqualBaths {
            cfg.baths[1].spectral = cfg.baths[0].spectral.clone();
        }
        Ok(cfg)
    }

    pub fn lorentzian_pair(width: f64, tau: f64, beta: [f64; 2], mu: [f64; 2]) -> Result<Self> {
        let bath = |l: usize| -> Result<BathConfig> {
            Ok(BathConfig {
                spectral: SpectralFunction::lorentzian(DEFAULT_KAPPA, width, DEFAULT_CENTERS[l], DEFAULT_CUTOFF)?,
                thermal: BathThermal::new(beta[l], mu[l])?,
            })
        };
        Ok(Self {
            system: SystemSpec::two_site(1.0)?,
            baths: [bath(0)?, bath(1)?],
            process: ProcessConfig { tau, ..Default::default() },
        })
    }

    pub fn thermal(&self) -> [&BathThermal; 2] {
        [&self.baths[0].thermal, &self.baths[1].thermal]
    }

    pub fn spectral(&self) -> [&SpectralFunction; 2] {
        [&self.baths[0].spectral, &self.baths[1].spectral]
    }

    /// Copy with one sweep coordinate replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match axis {
            SweepAxis::Tau => {
                if !(value > 0.0) {
                    return Err(PrebError::InvalidArgument(format!("tau must be positive, got {value}")));
                }
                out.process.tau = value;
            }
            SweepAxis::Lambda => {
                for b in &mut out.baths {
                    b.spectral = match b.spectral.shape() {
                        SpectralShape::Lorentzian { kappa, center, .. } => {
                            SpectralFunction::lorentzian(*kappa, value, *center, b.spectral.cutoff())?
                        }
                        _ => return Err(PrebError::Config("a lambda sweep needs Lorentzian baths".into())),
                    };
                }
            }
            SweepAxis::Mu => {
                for b in &mut out.baths {
                    b.thermal = BathThermal::new(b.thermal.beta, value)?;
                }
            }
            SweepAxis::Beta1 => {
                out.baths[0].thermal = BathThermal::new(value, out.baths[0].thermal.mu)?;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Tau,
    Lambda,
    Mu,
    Beta1,
}

impl FromStr for SweepAxis {
    type Err = PrebError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(Self::Tau),
            "lambda" => Ok(Self::Lambda),
            "mu" => Ok(Self::Mu),
            "beta1" => Ok(Self::Beta1),
            _ => Err(PrebError::Config(format!("unknown sweep axis '{s}' (tau | lambda | mu | beta1)"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tau => "tau",
            Self::Lambda => "lambda",
            Self::Mu => "mu",
            Self::Beta1 => "beta1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, min: f64, max: f64, points: usize, spacing: Spacing) -> Result<Self> {
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(PrebError::Config(format!("sweep needs min < max (got {min}, {max})")));
        }
        if points < 2 {
            return Err(PrebError::Config("sweep needs at least two points".into()));
        }
        if spacing == Spacing::Log && !(min > 0.0) {
            return Err(PrebError::Config("log spacing needs min > 0".into()));
        }
        Ok(Self { axis, min, max, points, spacing })
    }

    /// Grid values in ascending order, endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.min;
                }
                if k == n - 1 {
                    return self.max;
                }
                let t = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PrebError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// Parses TOML; relative table paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| PrebError::Config(e.to_string()))?;
        let system = resolve_system(raw.system.unwrap_or_default())?;
        let bath1 = resolve_bath(raw.bath1.unwrap_or_default(), 0, base_dir)?;
        let bath2 = resolve_bath(raw.bath2.unwrap_or_default(), 1, base_dir)?;
        let process = resolve_process(raw.process.unwrap_or_default())?;
        let sweep = raw.sweep.map(resolve_sweep).transpose()?;
        Ok(Self { model: ModelConfig { system, baths: [bath1, bath2], process }, sweep })
    }
}

fn cfg_err(e: PrebError) -> PrebError {
    match e {
        PrebError::InvalidArgument(m) | PrebError::Dimension(m) => PrebError::Config(m),
        other => other,
    }
}

fn resolve_system(raw: RawSystem) -> Result<SystemSpec> {
    let sites = raw.coupling_sites.unwrap_or([0, 1]);
    match (raw.hamiltonian, raw.hopping) {
        (Some(_), Some(_)) => Err(PrebError::Config("give either system.hopping or system.hamiltonian".into())),
        (Some(rows), None) => {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                return Err(PrebError::Config("system.hamiltonian must be a square array".into()));
            }
            let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            SystemSpec::new(m, sites).map_err(cfg_err)
        }
        (None, hop) => {
            let g = hop.unwrap_or(1.0);
            SystemSpec::new(DMatrix::from_row_slice(2, 2, &[0.0, g, g, 0.0]), sites).map_err(cfg_err)
        }
    }
}

fn resolve_bath(raw: RawBath, l: usize, base: &Path) -> Result<BathConfig> {
    let cutoff = raw.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let kind = raw.kind.as_deref().unwrap_or("lorentzian");
    let spectral = match kind {
        "lorentzian" => SpectralFunction::lorentzian(
            raw.kappa.unwrap_or(DEFAULT_KAPPA),
            raw.width.unwrap_or(DEFAULT_WIDTH),
            raw.center.unwrap_or(DEFAULT_CENTERS[l]),
            cutoff,
        ),
        "flat" => SpectralFunction::flat(raw.level.unwrap_or(1.0), cutoff),
        "tabulated" => {
            let file = raw
                .table
                .as_ref()
                .ok_or_else(|| PrebError::Config(format!("bath{} is tabulated but has no table path", l + 1)))?;
            let mut p = PathBuf::from(file);
            if p.is_relative() {
                p = base.join(p);
            }
            let table = SpectralTable::read_csv(&p, raw.interpolate.unwrap_or(true))
                .map_err(|e| PrebError::Config(format!("bath{} table {}: {e}", l + 1, p.display())))?;
            SpectralFunction::tabulated(table, cutoff)
        }
        other => {
            return Err(PrebError::Config(format!(
                "bath{}: unknown kind '{other}' (lorentzian | flat | tabulated)",
                l + 1
            )))
        }
    }
    .map_err(cfg_err)?;
    let default_beta = if l == 0 { 0.1 } else { 1.0 };
    let thermal = BathThermal::new(raw.beta.unwrap_or(default_beta), raw.mu.unwrap_or(-2.0)).map_err(cfg_err)?;
    Ok(BathConfig { spectral, thermal })
}

fn resolve_process(raw: RawProcess) -> Result<ProcessConfig> {
    let d = ProcessConfig::default();
    let p = ProcessConfig {
        tau: raw.tau.unwrap_or(d.tau),
        l0: raw.l0.unwrap_or(d.l0),
        tau_r_factor: raw.tau_r_factor.unwrap_or(d.tau_r_factor),
        depth: raw.depth.unwrap_or(d.depth),
        n_modes: raw.n_modes,
        chain_method: raw.chain_method.as_deref().map(str::parse).transpose()?.unwrap_or(d.chain_method),
        grid_points: raw.grid_points.unwrap_or(d.grid_points),
    };
    if !(p.tau > 0.0) || !p.tau.is_finite() {
        return Err(PrebError::Config(format!("process.tau must be positive, got {}", p.tau)));
    }
    if !(p.tau_r_factor > 0.0) {
        return Err(PrebError::Config("process.tau_r_factor must be positive".into()));
    }
    if p.depth == 0 {
        return Err(PrebError::Config("process.depth must be positive".into()));
    }
    Ok(p)
}

fn resolve_sweep(raw: RawSweep) -> Result<SweepSpec> {
    let spacing = match raw.spacing.as_deref().unwrap_or("linear") {
        "linear" => Spacing::Linear,
        "log" => Spacing::Log,
        other => return Err(PrebError::Config(format!("unknown spacing '{other}' (linear | log)"))),
    };
    SweepSpec::new(raw.axis.parse()?, raw.min, raw.max, raw.points, spacing)
}
