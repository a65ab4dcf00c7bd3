//! Chain (reaction-coordinate) mapping of a bath.
//!
//! A bath with coupling density `J` is unitarily equivalent to a semi-infinite
//! chain: the system couples with `g_0` to chain site 1, site `p` has energy
//! `ε_p` and couples with `g_p` to site `p+1`. Two constructions are offered:
//! the analytic recursion on a frequency grid, and Lanczos tridiagonalization
//! of a fine discretization of `J`.

use std::f64::consts::PI;
use std::path::Path;

use super::grid::{FrequencyGrid, SampledSpectrum};
use super::hilbert::hilbert_transform;
use super::{SpectralFunction, SpectralShape};
use crate::error::{PrebError, Result};
use crate::quad::gauss_legendre;

/// Coefficients of a chain of finite depth `L`.
///
/// `eps[p-1] = ε_p` for `p = 1..=L` and `hop[p] = g_p` for `p = 0..L`, so both
/// vectors have length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCoefficients {
    eps: Vec<f64>,
    hop: Vec<f64>,
    eps_asym: f64,
    hop_asym: f64,
    residual: Option<SampledSpectrum>,
    terminated: bool,
}

impl ChainCoefficients {
    pub fn new(eps: Vec<f64>, hop: Vec<f64>) -> Result<Self> {
        if eps.is_empty() || eps.len() != hop.len() {
            return Err(PrebError::Dimension(format!(
                "chain needs matching non-empty eps ({}) and hop ({}) vectors",
                eps.len(),
                hop.len()
            )));
        }
        if eps.iter().any(|e| !e.is_finite()) || hop.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(PrebError::InvalidArgument(
                "chain energies must be finite and hoppings non-negative".into(),
            ));
        }
        let w = tail_window(eps.len());
        let eps_asym = eps[eps.len() - w..].iter().sum::<f64>() / w as f64;
        let hop_asym = hop[hop.len() - w..].iter().sum::<f64>() / w as f64;
        Ok(Self { eps, hop, eps_asym, hop_asym, residual: None, terminated: false })
    }

    fn with_residual(mut self, residual: SampledSpectrum) -> Self {
        self.residual = Some(residual);
        self
    }

    fn mark_terminated(mut self) -> Self {
        self.terminated = true;
        self
    }

    pub fn depth(&self) -> usize {
        self.eps.len()
    }

    /// Site energies `ε_1..ε_L`.
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// Hoppings `g_0..g_{L-1}`.
    pub fn hop(&self) -> &[f64] {
        &self.hop
    }

    pub fn g0(&self) -> f64 {
        self.hop[0]
    }

    pub fn eps_asym(&self) -> f64 {
        self.eps_asym
    }

    pub fn hop_asym(&self) -> f64 {
        self.hop_asym
    }

    /// Coupling density left over after `L` recursion steps (recursion only).
    pub fn residual(&self) -> Option<&SampledSpectrum> {
        self.residual.as_ref()
    }

    /// True when the chain ended early because the bath has finitely many modes.
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// `ε_p` for `p ≥ 1`, continued with the asymptotic value past the depth.
    pub fn site_energy(&self, p: usize) -> f64 {
        assert!(p >= 1, "site energies start at p = 1");
        self.eps.get(p - 1).copied().unwrap_or(self.eps_asym)
    }

    /// `g_p` for `p ≥ 0`, continued with the asymptotic value past the depth.
    pub fn hopping(&self, p: usize) -> f64 {
        self.hop.get(p).copied().unwrap_or(self.hop_asym)
    }

    /// Largest deviation of the tail window from the asymptotic values,
    /// relative to the asymptotic hopping.
    pub fn tail_deviation(&self) -> f64 {
        let w = tail_window(self.depth());
        let n = self.depth();
        let scale = self.hop_asym.abs().max(f64::MIN_POSITIVE);
        let mut dev: f64 = 0.0;
        for p in n - w..n {
            dev = dev.max((self.eps[p] - self.eps_asym).abs() / scale);
            dev = dev.max((self.hop[p] - self.hop_asym).abs() / scale);
        }
        dev
    }

    /// Fails unless the tail has settled within `tol` (relative).
    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let dev = self.tail_deviation();
        if self.terminated || dev > tol {
            return Err(PrebError::TailNotConverged(format!(
                "depth {} tail deviation {dev:.3e} exceeds {tol:e}",
                self.depth()
            )));
        }
        Ok(())
    }

    /// First `depth` sites of this chain.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.depth() {
            return Err(PrebError::InvalidArgument(format!(
                "cannot truncate a depth-{} chain to {depth}",
                self.depth()
            )));
        }
        Self::new(self.eps[..depth].to_vec(), self.hop[..depth].to_vec())
    }

    /// Writes `p,eps,hop` rows for `p = 0..=L`; `ε_0` and `g_L` are blank.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["p", "eps", "hop"])?;
        let n = self.depth();
        for p in 0..=n {
            let eps = if p == 0 { String::new() } else { self.eps[p - 1].to_string() };
            let hop = if p == n { String::new() } else { self.hop[p].to_string() };
            wtr.write_record([p.to_string(), eps, hop])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut eps = Vec::new();
        let mut hop = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<Option<f64>> {
                let s = rec.get(i).unwrap_or("").trim();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|e| PrebError::Config(format!("chain csv row {row}: {e}")))
                }
            };
            if let Some(e) = field(1)? {
                eps.push(e);
            }
            if let Some(g) = field(2)? {
                hop.push(g);
            }
        }
        Self::new(eps, hop)
    }
}

fn tail_window(depth: usize) -> usize {
    (depth / 5).max(3).min(depth)
}

/// Settings for the grid recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionOptions {
    pub grid_points: usize,
    /// Grid margin beyond the cutoff, as a fraction of the cutoff.
    pub margin: f64,
    /// The recursion stops with an error once `g_p²` falls below this
    /// fraction of `g_0²`.
    pub floor: f64,
}

impl Default for RecursionOptions {
    fn default() -> Self {
        Self { grid_points: 8192, margin: 0.05, floor: 1e-12 }
    }
}

/// Chain coefficients from the recursion
/// `J_{p+1} = 4 g_p² J_p / ((J_p^H)² + J_p²)` on a uniform grid.
pub fn chain_map_recursion(
    sf: &SpectralFunction,
    depth: usize,
    opts: &RecursionOptions,
) -> Result<ChainCoefficients> {
    if depth == 0 {
        return Err(PrebError::InvalidArgument("chain depth must be positive".into()));
    }
    let grid = FrequencyGrid::for_cutoff(sf.cutoff(), opts.margin, opts.grid_points)?;
    let mut j = sf.sample(&grid)?;
    let mut eps = Vec::with_capacity(depth);
    let mut hop = Vec::with_capacity(depth);
    let mut g0_sq = None;
    for p in 0..depth {
        let g_sq = grid.integrate(&j) / (2.0 * PI);
        let reference = *g0_sq.get_or_insert(g_sq);
        if !g_sq.is_finite() || !(g_sq > opts.floor * reference) || !(g_sq > 0.0) {
            return Err(PrebError::ChainDecouples { depth: p, value: g_sq });
        }
        let e = grid.first_moment(&j) / (2.0 * PI * g_sq);
        hop.push(g_sq.sqrt());
        eps.push(e);
        let h = hilbert_transform(&grid, &j)?;
        j = j
            .iter()
            .zip(&h)
            .map(|(&jv, &hv)| {
                let den = hv * hv + jv * jv;
                if jv > 0.0 && den > 0.0 {
                    4.0 * g_sq * jv / den
                } else {
                    0.0
                }
            })
            .collect();
    }
    Ok(ChainCoefficients::new(eps, hop)?.with_residual(SampledSpectrum { grid, values: j }))
}

/// One discrete bath mode: energy `Ω_r` and squared coupling `|κ_r|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub energy: f64,
    pub weight: f64,
}

const PANEL_ORDER: usize = 8;

/// Discretizes `J` into at least `n_modes` modes with composite Gauss-Legendre
/// panels, refined geometrically around a Lorentzian peak. The weights satisfy
/// `Σ_r |κ_r|² = (1/2π) ∫ J`.
pub fn discretize_bath(sf: &SpectralFunction, n_modes: usize) -> Result<Vec<BathMode>> {
    if n_modes == 0 {
        return Err(PrebError::InvalidArgument("n_modes must be positive".into()));
    }
    let lam_c = sf.cutoff();
    let (lo, hi) = match sf.shape() {
        SpectralShape::Tabulated(t) => (t.start.max(-lam_c), t.end().min(lam_c)),
        _ => (-lam_c, lam_c),
    };
    if !(hi > lo) {
        return Err(PrebError::InvalidArgument("spectral support is empty".into()));
    }
    let uniform = n_modes.div_ceil(PANEL_ORDER).max(1);
    let mut edges: Vec<f64> = (0..=uniform).map(|i| lo + (hi - lo) * i as f64 / uniform as f64).collect();
    match sf.shape() {
        SpectralShape::Lorentzian { width, center, .. } => {
            edges.push(*center);
            let mut d = width / 16.0;
            while d < 2.0 * lam_c {
                edges.push(center - d);
                edges.push(center + d);
                d *= 2.0;
            }
        }
        SpectralShape::Tabulated(t) => edges.extend(t.nodes()),
        SpectralShape::Flat { .. } => {}
    }
    edges.retain(|e| *e >= lo && *e <= hi);
    edges.sort_by(f64::total_cmp);
    let min_gap = 1e-12 * (hi - lo);
    edges.dedup_by(|b, a| (*b - *a).abs() <= min_gap);

    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let mut modes = Vec::with_capacity(edges.len() * PANEL_ORDER);
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in gx.iter().zip(&gw) {
            let omega = mid + half * x;
            let weight = half * w * sf.evaluate(omega)? / (2.0 * PI);
            if weight > 0.0 {
                modes.push(BathMode { energy: omega, weight });
            }
        }
    }
    if modes.is_empty() {
        return Err(PrebError::InvalidArgument("spectral function vanishes on its support".into()));
    }
    Ok(modes)
}

/// Chain coefficients by Lanczos tridiagonalization of a discretized bath.
///
/// `n_modes` defaults to `50·depth` and may not be smaller.
pub fn chain_map_tridiag(
    sf: &SpectralFunction,
    depth: usize,
    n_modes: Option<usize>,
) -> Result<ChainCoefficients> {
    let n_modes = n_modes.unwrap_or(50 * depth);
    if n_modes < 50 * depth {
        return Err(PrebError::InvalidArgument(format!(
            "n_modes = {n_modes} is below 50·depth = {}",
            50 * depth
        )));
    }
    let modes = discretize_bath(sf, n_modes)?;
    tridiagonalize_modes(&modes, depth)
}

/// Lanczos tridiagonalization of `diag(Ω)` seeded with the coupling vector,
/// with full reorthogonalization. Stops early (and marks the chain
/// terminated) when the Krylov space is exhausted.
pub fn tridiagonalize_modes(modes: &[BathMode], depth: usize) -> Result<ChainCoefficients> {
    if depth == 0 {
        return Err(PrebError::InvalidArgument("chain depth must be positive".into()));
    }
    if modes.is_empty() || modes.iter().any(|m| !(m.weight >= 0.0) || !m.energy.is_finite()) {
        return Err(PrebError::InvalidArgument("modes must have finite energies and non-negative weights".into()));
    }
    let omega: Vec<f64> = modes.iter().map(|m| m.energy).collect();
    let g0 = modes.iter().map(|m| m.weight).sum::<f64>().sqrt();
    if !(g0 > 0.0) {
        return Err(PrebError::ChainDecouples { depth: 0, value: 0.0 });
    }
    let scale = omega.iter().fold(1.0f64, |m, w| m.max(w.abs()));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(depth);
    basis.push(modes.iter().map(|m| m.weight.sqrt() / g0).collect());
    let mut eps = Vec::with_capacity(depth);
    let mut hop = vec![g0];
    let mut terminated = false;

    for p in 0..depth {
        let v = &basis[p];
        let alpha: f64 = v.iter().zip(&omega).map(|(x, w)| w * x * x).sum();
        eps.push(alpha);
        if p + 1 == depth {
            break;
        }
        let mut w: Vec<f64> = v.iter().zip(&omega).map(|(x, o)| o * x - alpha * x).collect();
        if p > 0 {
            let beta = hop[p];
            for (wi, ui) in w.iter_mut().zip(&basis[p - 1]) {
                *wi -= beta * ui;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta <= 1e-10 * scale {
            terminated = true;
            break;
        }
        for x in &mut w {
            *x /= beta;
        }
        let overlap = basis
            .iter()
            .map(|q| q.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        if overlap > 1e-8 {
            return Err(PrebError::Orthogonality { depth: p + 1, overlap });
        }
        hop.push(beta);
        basis.push(w);
    }
    hop.truncate(eps.len());
    let chain = ChainCoefficients::new(eps, hop)?;
    Ok(if terminated { chain.mark_terminated() } else { chain })
}
