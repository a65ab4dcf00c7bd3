//! Bath spectral functions, thermal occupations and the mapping of a bath
//! onto a semi-infinite tight-binding chain.
//!
//! Normalization: a spectral function `J(ω)` is a coupling density such that
//! the first chain hopping obeys `g_0² = (1/2π) ∫ J(ω) dω`. A discrete bath
//! with modes `(Ω_r, κ_r)` therefore has `J(ω) = 2π Σ_r |κ_r|² δ(ω − Ω_r)`,
//! and `J(ω)` is also the level width a single site acquires from the bath.

pub mod chain;
pub mod grid;
pub mod hilbert;

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PrebError, Result};

pub use chain::{
    chain_map_recursion, chain_map_tridiag, discretize_bath, tridiagonalize_modes, BathMode,
    ChainCoefficients, RecursionOptions,
};
pub use grid::{FrequencyGrid, SampledSpectrum};
pub use hilbert::{hilbert_transform, hilbert_transform_sampled};

/// Inverse temperature and chemical potential of a bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathThermal {
    pub beta: f64,
    pub mu: f64,
}

impl BathThermal {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(PrebError::InvalidArgument(format!("beta must be positive and finite, got {beta}")));
        }
        if !mu.is_finite() {
            return Err(PrebError::InvalidArgument(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { beta, mu })
    }

    pub fn occupation(&self, omega: f64) -> f64 {
        fermi_occupation(self, omega)
    }
}

/// Fermi-Dirac occupation `1/(exp(β(ω−μ)) + 1)`, evaluated without overflow.
pub fn fermi_occupation(spec: &BathThermal, omega: f64) -> f64 {
    let x = spec.beta * (omega - spec.mu);
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// A spectral function tabulated on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
    /// When false only exact grid nodes may be evaluated.
    pub interpolate: bool,
}

impl SpectralTable {
    pub fn new(start: f64, step: f64, values: Vec<f64>, interpolate: bool) -> Result<Self> {
        if values.len() < 2 || !(step > 0.0) {
            return Err(PrebError::InvalidArgument(
                "a spectral table needs at least two samples and a positive step".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PrebError::InvalidArgument(
                "tabulated spectral values must be finite and non-negative".into(),
            ));
        }
        Ok(Self { start, step, values, interpolate })
    }

    /// Builds a table from `(ω, J)` pairs, which must lie on a uniform grid.
    pub fn from_pairs(omegas: &[f64], values: Vec<f64>, interpolate: bool) -> Result<Self> {
        if omegas.len() != values.len() || omegas.len() < 2 {
            return Err(PrebError::Dimension(format!(
                "table has {} frequencies and {} values",
                omegas.len(),
                values.len()
            )));
        }
        let step = grid::check_uniform(omegas)?;
        Self::new(omegas[0], step, values, interpolate)
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.start + self.step * i as f64)
    }

    fn value_at(&self, omega: f64) -> Result<f64> {
        let pos = (omega - self.start) / self.step;
        let last = (self.values.len() - 1) as f64;
        let tol = 1e-9;
        if pos < -tol || pos > last + tol {
            return Err(PrebError::Extrapolation { omega });
        }
        let nearest = pos.round();
        if (pos - nearest).abs() <= tol {
            return Ok(self.values[nearest.clamp(0.0, last) as usize]);
        }
        if !self.interpolate {
            return Err(PrebError::OffGrid { omega });
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        Ok(self.values[i] * (1.0 - t) + self.values[i + 1] * t)
    }

    /// Reads a CSV file with header `omega,J`.
    pub fn read_csv(path: &Path, interpolate: bool) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut omegas = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (w, j) = rec?;
            omegas.push(w);
            values.push(j);
        }
        Self::from_pairs(&omegas, values, interpolate)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["omega", "J"])?;
        for (w, j) in self.nodes().zip(&self.values) {
            wtr.write_record([w.to_string(), j.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralShape {
    /// `κλ / ((ω − ω0)² + λ²)`.
    Lorentzian { kappa: f64, width: f64, center: f64 },
    /// Constant level `Γ`.
    Flat { level: f64 },
    Tabulated(SpectralTable),
}

/// A bath coupling density with a hard cutoff: `J(ω) = 0` for `|ω| > Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    shape: SpectralShape,
    cutoff: f64,
}

impl SpectralFunction {
    pub fn lorentzian(kappa: f64, width: f64, center: f64, cutoff: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !(width > 0.0) || !center.is_finite() {
            return Err(PrebError::InvalidArgument(format!(
                "lorentzian needs kappa >= 0, width > 0 and a finite center (got {kappa}, {width}, {center})"
            )));
        }
        Self::with_cutoff(SpectralShape::Lorentzian { kappa, width, center }, cutoff)
    }

    pub fn flat(level: f64, cutoff: f64) -> Result<Self> {
        if !(level >= 0.0) || !level.is_finite() {
            return Err(PrebError::InvalidArgument(format!("flat level must be non-negative, got {level}")));
        }
        Self::with_cutoff(SpectralShape::Flat { level }, cutoff)
    }

    pub fn tabulated(table: SpectralTable, cutoff: f64) -> Result<Self> {
        Self::with_cutoff(SpectralShape::Tabulated(table), cutoff)
    }

    fn with_cutoff(shape: SpectralShape, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(PrebError::InvalidArgument(format!("cutoff must be positive and finite, got {cutoff}")));
        }
        Ok(Self { shape, cutoff })
    }

    pub fn shape(&self) -> &SpectralShape {
        &self.shape
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Lorentzian half-width, if this is a Lorentzian.
    pub fn width(&self) -> Option<f64> {
        match self.shape {
            SpectralShape::Lorentzian { width, .. } => Some(width),
            _ => None,
        }
    }

    /// Lorentzian peak position, if this is a Lorentzian.
    pub fn center(&self) -> Option<f64> {
        match self.shape {
            SpectralShape::Lorentzian { center, .. } => Some(center),
            _ => None,
        }
    }

    /// `J(ω)`; exactly zero outside `[−Λ, Λ]`.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if omega.abs() > self.cutoff {
            return Ok(0.0);
        }
        match &self.shape {
            SpectralShape::Lorentzian { kappa, width, center } => {
                let d = omega - center;
                Ok(kappa * width / (d * d + width * width))
            }
            SpectralShape::Flat { level } => Ok(*level),
            SpectralShape::Tabulated(t) => t.value_at(omega),
        }
    }

    /// `(1/π) P∫ J(ω')/(ω − ω') dω'`, closed form for the analytic shapes and
    /// exact for the piecewise-linear interpolant of a table.
    pub fn hilbert_at(&self, omega: f64) -> Result<f64> {
        let lam_c = self.cutoff;
        match &self.shape {
            SpectralShape::Flat { level } => {
                Ok(level / PI * ((omega + lam_c) / (omega - lam_c)).abs().ln())
            }
            SpectralShape::Lorentzian { kappa, width, center } => {
                let a = omega - center;
                let u1 = -lam_c - center;
                let u2 = lam_c - center;
                let w2 = width * width;
                let log_term = ((a - u1) / (a - u2)).abs().ln();
                let tail = 0.5 * ((u2 * u2 + w2) / (u1 * u1 + w2)).ln();
                let arc = a / width * ((u2 / width).atan() - (u1 / width).atan());
                Ok(kappa * width / PI / (a * a + w2) * (log_term + tail + arc))
            }
            SpectralShape::Tabulated(t) => {
                let (xs, js) = self.clipped_table_samples(t);
                Ok(hilbert::pv_piecewise_linear(&xs, &js, omega) / PI)
            }
        }
    }

    /// Table nodes restricted to the cutoff window.
    fn clipped_table_samples(&self, t: &SpectralTable) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(t.values.len() + 2);
        let mut js = Vec::with_capacity(t.values.len() + 2);
        for (w, j) in t.nodes().zip(&t.values) {
            if w.abs() <= self.cutoff {
                xs.push(w);
                js.push(*j);
            }
        }
        (xs, js)
    }

    /// `∫ J(ω) dω`.
    pub fn total_weight(&self) -> f64 {
        let lam_c = self.cutoff;
        match &self.shape {
            SpectralShape::Lorentzian { kappa, width, center } => {
                kappa * (((lam_c - center) / width).atan() - ((-lam_c - center) / width).atan())
            }
            SpectralShape::Flat { level } => 2.0 * level * lam_c,
            SpectralShape::Tabulated(t) => {
                let (xs, js) = self.clipped_table_samples(t);
                xs.windows(2).zip(js.windows(2)).map(|(x, j)| 0.5 * (x[1] - x[0]) * (j[0] + j[1])).sum()
            }
        }
    }

    /// Samples `J` on a grid. A node sitting on a cutoff edge receives half the
    /// inner value, so the piecewise-linear interpolant carries the exact
    /// weight of the jump.
    pub fn sample(&self, grid: &FrequencyGrid) -> Result<Vec<f64>> {
        let edge_tol = 1e-9 * grid.step();
        grid.points()
            .map(|w| {
                if (w.abs() - self.cutoff).abs() <= edge_tol {
                    let inner = w.signum() * self.cutoff;
                    self.evaluate(inner).map(|v| 0.5 * v)
                } else if w.abs() > self.cutoff {
                    Ok(0.0)
                } else {
                    match &self.shape {
                        // Outside the table but inside the cutoff there is no data.
                        SpectralShape::Tabulated(t) if w < t.start || w > t.end() => Ok(0.0),
                        _ => self.evaluate(w),
                    }
                }
            })
            .collect()
    }

    /// Frequencies where `J` has structure worth resolving in quadrature.
    pub fn features(&self) -> Vec<f64> {
        let mut out = vec![-self.cutoff, self.cutoff];
        if let SpectralShape::Lorentzian { width, center, .. } = self.shape {
            for k in [0.0, -1.0, 1.0, -10.0, 10.0] {
                let w = center + k * width;
                if w.abs() < self.cutoff {
                    out.push(w);
                }
            }
        }
        out
    }
}
