//! Self-checks of the full pipeline against closed-form limits, independent
//! solvers and conservation laws.
//!
//! Every criterion is split into a measurement (runs the model) and a judge
//! (a pure function of the measured numbers), so judges can be fed doctored
//! data.

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ModelConfig, Preset, Spacing, SweepAxis, SweepSpec, DEFAULT_CENTERS, DEFAULT_KAPPA};
use crate::correlation::CorrelationMatrix;
use crate::dynamics::{cumulative_thermo, preb_step, trajectory_thermodynamics, StepThermo};
use crate::error::{PrebError, Result};
use crate::negf::{landauer_currents, NegfOptions};
use crate::pipeline::{build_chains, prepare_cycle, prepare_cycle_with, run_ness, solve_ness, solve_ness_on};
use crate::propagator::{solve_dlyap, DriveMatrix, StepPropagator};
use crate::spectral::{chain_map_recursion, chain_map_tridiag, ChainCoefficients, RecursionOptions, SpectralFunction};
use crate::thermo::{carnot_bounds, collisional_limit, tight_coupling_check, NessRates, NessReport};

/// Acceptance region of a single measured number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Above(f64),
    Within(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::AtMost(limit) }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::AtLeast(limit) }
    }

    pub fn above(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::Above(limit) }
    }

    pub fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), measured, bound: Bound::Within(lo, hi) }
    }

    fn failed(name: String) -> Self {
        Self { name, measured: f64::NAN, bound: Bound::AtMost(0.0) }
    }

    pub fn pass(&self) -> bool {
        let m = self.measured;
        m.is_finite()
            && match self.bound {
                Bound::AtMost(t) => m <= t,
                Bound::AtLeast(t) => m >= t,
                Bound::Above(t) => m > t,
                Bound::Within(lo, hi) => lo <= m && m <= hi,
            }
    }

    /// The threshold closest to the measured value.
    pub fn tolerance(&self) -> f64 {
        match self.bound {
            Bound::AtMost(t) | Bound::AtLeast(t) | Bound::Above(t) => t,
            Bound::Within(lo, hi) => {
                if (self.measured - lo).abs() < (self.measured - hi).abs() {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    /// Share of the allowance used up; values above 1 fail.
    fn load(&self) -> f64 {
        if !self.pass() {
            return f64::INFINITY;
        }
        let m = self.measured;
        match self.bound {
            Bound::AtMost(t) if t > 0.0 => m.max(0.0) / t,
            Bound::AtLeast(t) | Bound::Above(t) if t > 0.0 && m > 0.0 => t / m,
            Bound::Within(lo, hi) => {
                let half = 0.5 * (hi - lo);
                let edge = (m - lo).min(hi - m);
                if half > 0.0 {
                    1.0 - edge / half
                } else {
                    1.0
                }
            }
            _ => 0.0,
        }
    }
}

fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e4).contains(&x.abs()) {
        format!("{}", (x * 1e6).round() / 1e6)
    } else {
        format!("{x:.4e}")
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass() { "pass" } else { "FAIL" };
        let m = num(self.measured);
        match self.bound {
            Bound::AtMost(t) => write!(f, "{}: {m} <= {} {verdict}", self.name, num(t)),
            Bound::AtLeast(t) => write!(f, "{}: {m} >= {} {verdict}", self.name, num(t)),
            Bound::Above(t) => write!(f, "{}: {m} > {} {verdict}", self.name, num(t)),
            Bound::Within(lo, hi) => write!(f, "{}: {m} in [{}, {}] {verdict}", self.name, num(lo), num(hi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::pass)
    }

    /// The failing check, or the one closest to its threshold.
    pub fn binding(&self) -> Option<&Check> {
        self.checks.iter().max_by(|a, b| a.load().total_cmp(&b.load()))
    }

    /// `id,measured,tolerance,pass` fields of the binding check.
    pub fn summary_fields(&self) -> [String; 4] {
        let (m, t) = self.binding().map(|c| (c.measured, c.tolerance())).unwrap_or((f64::NAN, f64::NAN));
        [self.id.to_string(), m.to_string(), t.to_string(), self.pass().to_string()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

type Measure = fn() -> Result<Vec<Check>>;

const CRITERIA: [(&str, &str, Measure, bool); 11] = [
    ("1", "Lyapunov solution equals the iterated cycle map", criterion_lyapunov, true),
    ("2", "conservation laws and Carnot bounds on a parameter grid", criterion_conservation, false),
    ("3", "narrow-bath efficiency and COP", criterion_collisional, true),
    ("4", "engine and refrigerator windows of a mu scan", criterion_windows, false),
    ("5", "long cycles approach the continuous steady state", criterion_long_cycles, true),
    ("6", "relaxation rate grows with tau at short cycles", criterion_zeno, true),
    ("7", "power and entropy production peak at intermediate tau", criterion_peaks, false),
    ("8", "Carnot and Curzon-Ahlborn references", criterion_carnot, true),
    ("9", "chain-map golden values", criterion_chain_map, true),
    ("10", "trajectory bookkeeping", criterion_trajectory, true),
    ("lb-doubling", "rates unchanged when the chain length doubles", criterion_chain_doubling, false),
];

/// Runs one criterion by id; errors turn into a failing check.
pub fn run_criterion(id: &str) -> Result<CriterionResult> {
    let (id, title, measure, _) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| PrebError::InvalidArgument(format!("unknown criterion '{id}'")))?;
    let start = Instant::now();
    let checks = measure().unwrap_or_else(|e| vec![Check::failed(format!("error: {e}"))]);
    Ok(CriterionResult { id, title, checks, seconds: start.elapsed().as_secs_f64() })
}

pub fn criterion_ids(level: Level) -> Vec<&'static str> {
    CRITERIA.iter().filter(|c| level == Level::Full || c.3).map(|c| c.0).collect()
}

pub fn run_validation(level: Level) -> Vec<CriterionResult> {
    criterion_ids(level).into_iter().map(|id| run_criterion(id).expect("known id")).collect()
}

fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    Ok(SweepSpec::new(SweepAxis::Tau, min, max, points, Spacing::Log)?.values())
}

fn reports(cfgs: &[ModelConfig]) -> Result<Vec<NessReport>> {
    cfgs.par_iter().map(run_ness).collect()
}

fn preset_sweep(preset: Preset, width: f64, taus: &[f64]) -> Result<Vec<NessReport>> {
    let cfgs = taus.iter().map(|&t| ModelConfig::preset(preset, width, t)).collect::<Result<Vec<_>>>()?;
    reports(&cfgs)
}

// 1

/// Iterates the cycle map from `C = 0` until one step changes `C` by less
/// than `tol` (max norm).
pub fn iterate_to_fixed_point(
    prop: &StepPropagator,
    drive: &DriveMatrix,
    tol: f64,
    max_steps: usize,
) -> Result<CorrelationMatrix> {
    let mut c = CorrelationMatrix::zeros(prop.index().system_sites);
    for _ in 0..max_steps {
        let next = preb_step(&c, prop, drive)?;
        let change = next.max_distance(&c);
        c = next;
        if change < tol {
            return Ok(c);
        }
    }
    Err(PrebError::Numerical(format!("cycle map did not settle within {max_steps} steps")))
}

/// Criterion 1 with a caller-supplied Lyapunov solver.
pub fn criterion_lyapunov_with<F>(solver: F) -> Result<Vec<Check>>
where
    F: Fn(&DMatrix<Complex64>, &DriveMatrix) -> Result<CorrelationMatrix>,
{
    let start = Instant::now();
    let cfg = ModelConfig::lorentzian_pair(0.1, 1.0, [0.1, 1.0], [-2.0, -2.0])?;
    let setup = prepare_cycle(&cfg)?;
    let c = solver(&setup.propagator.g_s(), &setup.drive)?;
    let oracle = iterate_to_fixed_point(&setup.propagator, &setup.drive, 1e-12, 1_000_000)?;
    Ok(vec![
        Check::at_most("max |C_lyapunov - C_iterated|", c.max_distance(&oracle), 1e-8),
        Check::at_most("runtime [s]", start.elapsed().as_secs_f64(), 5.0),
    ])
}

fn criterion_lyapunov() -> Result<Vec<Check>> {
    criterion_lyapunov_with(solve_dlyap)
}

// 2

/// Points of the conservation grid: five log-spaced τ, five chemical
/// potentials, three widths, both machine presets.
pub fn conservation_grid() -> Result<Vec<ModelConfig>> {
    let taus = log_grid(0.1, 20.0, 5)?;
    let mus = [-3.0, -2.5, -2.0, -1.5, -1.0];
    let mut out = Vec::new();
    for preset in [Preset::HeatEngine, Preset::Refrigerator] {
        for &width in &[0.05, 0.2, 1.0] {
            for &tau in &taus {
                for &mu in &mus {
                    out.push(ModelConfig::preset(preset, width, tau)?.with_axis(SweepAxis::Mu, mu)?);
                }
            }
        }
    }
    Ok(out)
}

pub fn judge_conservation(reports: &[NessReport]) -> Vec<Check> {
    let mut first_law: f64 = 0.0;
    let mut sigma_min = f64::INFINITY;
    let mut particles: f64 = 0.0;
    let mut eta_excess: Option<f64> = None;
    let mut cop_excess: Option<f64> = None;
    for r in reports {
        let rates = &r.rates;
        first_law = first_law.max(rates.first_law_defect().abs() / rates.scale().max(f64::MIN_POSITIVE));
        sigma_min = sigma_min.min(rates.sigma);
        particles = particles.max((rates.particles[0] + rates.particles[1]).abs());
        let c = &r.classification;
        if let Some(eta) = c.efficiency {
            let e = eta - c.bounds.eta_c;
            eta_excess = Some(eta_excess.map_or(e, |x| x.max(e)));
        }
        if let (Some(cop), Some(cop_c)) = (c.cop, c.bounds.cop_c) {
            let e = cop - cop_c;
            cop_excess = Some(cop_excess.map_or(e, |x| x.max(e)));
        }
    }
    let mut checks = vec![
        Check::at_most("max |P - sum Q| / scale", first_law, 1e-8),
        Check::at_least("min sigma", sigma_min, -1e-10),
        Check::at_most("max |N1 + N2|", particles, 1e-10),
    ];
    if let Some(e) = eta_excess {
        checks.push(Check::at_most("max (eta - eta_c)", e, 0.0));
    }
    if let Some(e) = cop_excess {
        checks.push(Check::at_most("max (COP - COP_c)", e, 0.0));
    }
    checks
}

fn criterion_conservation() -> Result<Vec<Check>> {
    let start = Instant::now();
    let reports = reports(&conservation_grid()?)?;
    let mut checks = judge_conservation(&reports);
    checks.push(Check::at_most("runtime [s]", start.elapsed().as_secs_f64(), 180.0));
    Ok(checks)
}

// 3

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionalMeasurement {
    pub efficiency: Option<f64>,
    pub cop: Option<f64>,
    pub predicted_efficiency: f64,
    pub predicted_cop: f64,
    /// Tight-coupling defects relative to the heat rate, per preset and bath.
    pub tight_coupling: [[f64; 2]; 2],
}

fn relative_tight_coupling(rates: &NessRates, mu: [f64; 2]) -> [f64; 2] {
    let d = tight_coupling_check(rates, DEFAULT_CENTERS, mu);
    [0, 1].map(|l| d[l] / rates.heat[l].abs())
}

pub fn measure_collisional(width: f64, tau: f64) -> Result<CollisionalMeasurement> {
    let engine = run_ness(&ModelConfig::preset(Preset::HeatEngine, width, tau)?)?;
    let fridge = run_ness(&ModelConfig::preset(Preset::Refrigerator, width, tau)?)?;
    let [w1, w2] = DEFAULT_CENTERS;
    let pe = collisional_limit(w1, w2, engine.mu[0], engine.beta[0], engine.beta[1])?;
    let pf = collisional_limit(w1, w2, fridge.mu[0], fridge.beta[0], fridge.beta[1])?;
    Ok(CollisionalMeasurement {
        efficiency: engine.classification.efficiency,
        cop: fridge.classification.cop,
        predicted_efficiency: pe.efficiency,
        predicted_cop: pf.cop,
        tight_coupling: [
            relative_tight_coupling(&engine.rates, engine.mu),
            relative_tight_coupling(&fridge.rates, fridge.mu),
        ],
    })
}

pub fn judge_collisional(m: &CollisionalMeasurement) -> Vec<Check> {
    let rel = |x: Option<f64>, target: f64| x.map_or(f64::NAN, |v| (v - target).abs() / target.abs());
    let tight = m.tight_coupling.iter().flatten().fold(0.0f64, |a, &b| if b.is_nan() { f64::NAN } else { a.max(b) });
    vec![
        Check::at_most("|eta - eta_0| / eta_0", rel(m.efficiency, m.predicted_efficiency), 0.05),
        Check::at_most("|COP - COP_0| / COP_0", rel(m.cop, m.predicted_cop), 0.05),
        Check::at_most("max tight-coupling defect", tight, 0.02),
    ]
}

fn criterion_collisional() -> Result<Vec<Check>> {
    let m = measure_collisional(1e-3, 1.0)?;
    let mut checks = judge_collisional(&m);
    checks.insert(0, Check::at_most("|eta_0 - 3/4|", (m.predicted_efficiency - 0.75).abs(), 1e-12));
    checks.insert(1, Check::at_most("|COP_0 - 1/3|", (m.predicted_cop - 1.0 / 3.0).abs(), 1e-12));
    Ok(checks)
}

// 4

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPoint {
    pub rho: f64,
    pub p_ext: f64,
    pub q2: f64,
}

/// Values below this count as negative in the window tests.
pub const SIGN_FLOOR: f64 = 1e-10;

const WINDOW_BETA: [f64; 2] = [0.4, 1.0];

/// Chemical potential that puts the level ratio at `rho`.
pub fn mu_for_ratio(rho: f64) -> f64 {
    let [w1, w2] = DEFAULT_CENTERS;
    (w2 - rho * w1) / (1.0 - rho)
}

fn window_point(width: f64, rho: f64) -> Result<WindowPoint> {
    let mu = mu_for_ratio(rho);
    let r = run_ness(&ModelConfig::lorentzian_pair(width, 1.0, WINDOW_BETA, [mu, mu])?)?;
    Ok(WindowPoint { rho, p_ext: r.rates.p_ext, q2: r.rates.heat[1] })
}

/// 61 cell-centred ratios covering (−0.5, 1.5).
pub fn window_ratios() -> Vec<f64> {
    (0..61).map(|i| -0.5 + 2.0 * (i as f64 + 0.5) / 61.0).collect()
}

pub fn window_scan(width: f64) -> Result<Vec<WindowPoint>> {
    window_ratios().par_iter().map(|&rho| window_point(width, rho)).collect()
}

/// `scan` is judged for sign windows; `narrow` and `at_boundary` (a point at
/// `ρ = β1/β2`) come from a much narrower bath.
pub fn judge_windows(scan: &[WindowPoint], narrow: &[WindowPoint], at_boundary: &WindowPoint, b: f64) -> Vec<Check> {
    let engine_bad = scan.iter().filter(|p| p.p_ext < -SIGN_FLOOR && !(b < p.rho && p.rho < 1.0)).count();
    let fridge_bad = scan.iter().filter(|p| p.q2 < -SIGN_FLOOR && !(0.0 < p.rho && p.rho < b)).count();
    let max_p = narrow.iter().fold(0.0f64, |m, p| m.max(p.p_ext.abs()));
    let max_q = narrow.iter().fold(0.0f64, |m, p| m.max(p.q2.abs()));
    vec![
        Check::at_most("points with P_ext < 0 outside the engine window", engine_bad as f64, 0.0),
        Check::at_most("points with Q2 < 0 outside the refrigerator window", fridge_bad as f64, 0.0),
        Check::at_most("|P_ext| / max at the boundary", at_boundary.p_ext.abs() / max_p, 1e-3),
        Check::at_most("|Q2| / max at the boundary", at_boundary.q2.abs() / max_q, 1e-3),
    ]
}

fn criterion_windows() -> Result<Vec<Check>> {
    let b = WINDOW_BETA[0] / WINDOW_BETA[1];
    let scan = window_scan(0.05)?;
    let narrow = window_scan(1e-3)?;
    let boundary = window_point(1e-3, b)?;
    Ok(judge_windows(&scan, &narrow, &boundary, b))
}

// 5

fn criterion_long_cycles() -> Result<Vec<Check>> {
    let long = run_ness(&ModelConfig::preset(Preset::HeatEngine, 1.0, 20.0)?)?;
    let longer = run_ness(&ModelConfig::preset(Preset::HeatEngine, 1.0, 28.0)?)?;
    let cfg = ModelConfig::preset(Preset::HeatEngine, 1.0, 20.0)?;
    let negf = landauer_currents(&cfg.system, cfg.spectral(), cfg.thermal(), &NegfOptions::default())?;
    let sweep = preset_sweep(Preset::HeatEngine, 1.0, &log_grid(0.05, 20.0, 40)?)?;
    let max_p = sweep.iter().fold(0.0f64, |m, r| m.max(r.rates.p_ext.abs()));
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    Ok(vec![
        Check::at_most("|Q1 - Q1_negf| / |Q1_negf|", rel(long.rates.heat[0], negf.heat[0]), 0.05),
        Check::at_most("|Q2 - Q2_negf| / |Q2_negf|", rel(long.rates.heat[1], negf.heat[1]), 0.05),
        Check::at_most("|P_ext(20)| / max_tau |P_ext|", long.rates.p_ext.abs() / max_p, 0.02),
        Check::at_most("|Q1(20) - Q1(28)| / |Q1(20)|", rel(longer.rates.heat[0], long.rates.heat[0]), 0.01),
        Check::at_most("|Q2(20) - Q2(28)| / |Q2(20)|", rel(longer.rates.heat[1], long.rates.heat[1]), 0.01),
    ])
}

// 6

/// Number of neighbouring pairs where `r` fails to increase.
pub fn judge_increasing(rates: &[f64]) -> f64 {
    rates.windows(2).filter(|w| !(w[1] > w[0])).count() as f64
}

fn criterion_zeno() -> Result<Vec<Check>> {
    let taus = log_grid(0.01, 0.5, 10)?;
    let mut checks = Vec::new();
    for width in [0.05, 1.0] {
        let r: Vec<f64> = preset_sweep(Preset::HeatEngine, width, &taus)?.iter().map(|x| x.stability.rate).collect();
        checks.push(Check::at_most(format!("non-increasing steps of r, lambda = {width}"), judge_increasing(&r), 0.0));
    }
    Ok(checks)
}

// 7

/// `reports` must be sorted by τ.
pub fn judge_peaks(reports: &[NessReport]) -> Vec<Check> {
    let argmax = |f: &dyn Fn(&NessReport) -> f64| {
        reports.iter().max_by(|a, b| f(a).total_cmp(&f(b))).map_or(f64::NAN, |r| r.tau)
    };
    let tau_sigma = argmax(&|r| r.rates.sigma);
    let tau_power = argmax(&|r| -r.rates.p_ext);
    let best = reports.iter().filter_map(|r| r.classification.efficiency).fold(f64::NAN, f64::max);
    let large = reports.last().and_then(|r| r.classification.efficiency).unwrap_or(0.0);
    vec![
        Check::within("argmax sigma", tau_sigma, 0.3, 3.0),
        Check::within("argmax -P_ext", tau_power, 0.3, 3.0),
        Check::above("max eta - eta(large tau)", best - large, 0.0),
    ]
}

fn criterion_peaks() -> Result<Vec<Check>> {
    Ok(judge_peaks(&preset_sweep(Preset::HeatEngine, 0.05, &log_grid(0.05, 20.0, 40)?)?))
}

// 8

fn criterion_carnot() -> Result<Vec<Check>> {
    let eta_c = carnot_bounds(0.1, 1.0)?.eta_c;
    let cop_c = carnot_bounds(0.7, 1.0)?.cop_c.unwrap_or(f64::NAN);
    let ca = carnot_bounds(0.4, 1.0)?;
    Ok(vec![
        Check::at_most("|eta_c - 0.9|", (eta_c - 0.9).abs(), 1e-12),
        Check::at_most("|COP_c - 7/3|", (cop_c - 7.0 / 3.0).abs(), 1e-12),
        Check::within("eta_CA / eta_c", ca.eta_ca / ca.eta_c, 0.6126 - 0.0005, 0.6126 + 0.0005),
    ])
}

// 9

#[derive(Debug, Clone, PartialEq)]
pub struct ChainMeasurement {
    pub g0: f64,
    pub eps1: f64,
    /// Residual coupling density after one step, at the grid node nearest ω0.
    pub residual_at_center: f64,
    /// Largest `|ε_p|` for even coupling densities, both methods.
    pub parity: f64,
    /// Largest coefficient difference between recursion and tridiagonalization.
    pub cross: f64,
}

fn max_coefficient_gap(a: &ChainCoefficients, b: &ChainCoefficients) -> f64 {
    let e = a.eps().iter().zip(b.eps()).map(|(x, y)| (x - y).abs());
    let g = a.hop().iter().zip(b.hop()).map(|(x, y)| (x - y).abs());
    e.chain(g).fold(0.0, f64::max)
}

pub fn measure_chain_map(sf: &SpectralFunction, depth: usize) -> Result<ChainMeasurement> {
    let opts = RecursionOptions::default();
    let tri = chain_map_tridiag(sf, depth, None)?;
    let rec = chain_map_recursion(sf, depth, &opts)?;
    let one = chain_map_recursion(sf, 1, &opts)?;
    let residual = one.residual().ok_or_else(|| PrebError::Numerical("recursion kept no residual".into()))?;
    let center = sf.center().unwrap_or(0.0);
    let grid = &residual.grid;
    let k = ((center - grid.start()) / grid.step()).round().clamp(0.0, (grid.len() - 1) as f64) as usize;
    let mut parity: f64 = 0.0;
    let even = [
        SpectralFunction::flat(0.5, sf.cutoff())?,
        SpectralFunction::lorentzian(DEFAULT_KAPPA, 0.5, 0.0, sf.cutoff())?,
    ];
    for e in &even {
        for chain in [chain_map_tridiag(e, depth, None)?, chain_map_recursion(e, depth, &opts)?] {
            parity = chain.eps().iter().fold(parity, |m, x| m.max(x.abs()));
        }
    }
    Ok(ChainMeasurement {
        g0: tri.g0(),
        eps1: tri.site_energy(1),
        residual_at_center: residual.values[k],
        parity,
        cross: max_coefficient_gap(&tri, &rec),
    })
}

pub fn judge_chain_map(m: &ChainMeasurement, cutoff: f64) -> Vec<Check> {
    vec![
        Check::within("g0", m.g0, 0.98, 1.02),
        Check::within("eps1", m.eps1, 1.98, 2.02),
        Check::within("residual J at omega0", m.residual_at_center, 0.018, 0.022),
        Check::at_most("max |eps_p| / cutoff, even densities", m.parity / cutoff, 1e-8),
        Check::at_most("max |recursion - tridiag|, depth 8", m.cross, 1e-3),
    ]
}

fn criterion_chain_map() -> Result<Vec<Check>> {
    let sf = SpectralFunction::lorentzian(2.0, 0.01, 2.0, 6.0)?;
    Ok(judge_chain_map(&measure_chain_map(&sf, 8)?, 6.0))
}

// 10

/// Steps `m` whose starting state is within `tol` of the fixed point.
pub fn converged_tail(dist_to_ness: &[f64], tol: f64) -> Option<usize> {
    dist_to_ness.iter().position(|&d| d < tol).map(|k| k + 1)
}

pub fn judge_trajectory(steps: &[StepThermo], dist_to_ness: &[f64], ness: &NessRates, tau: f64) -> Vec<Check> {
    let fold = |f: &dyn Fn(&StepThermo) -> f64| steps.iter().map(f).fold(0.0f64, f64::max);
    let first_law = fold(&|s| s.first_law_defect().abs());
    let energy = fold(&|s| s.energy_closure().abs());
    let particles = fold(&|s| s.particle_closure().abs());
    let sigma_min = steps.iter().map(|s| s.entropy_production).fold(f64::INFINITY, f64::min);
    let rate_gap = match converged_tail(dist_to_ness, 1e-12) {
        Some(k) if k < steps.len() => {
            let r = cumulative_thermo(&steps[k..], tau).rates;
            let pairs = [
                (r.w_ext, ness.p_ext),
                (r.w_chem, ness.p_chem),
                (r.heat[0], ness.heat[0]),
                (r.heat[1], ness.heat[1]),
                (r.entropy_production, ness.sigma),
            ];
            let scale = ness.scale().max(ness.sigma.abs());
            pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
        }
        _ => f64::NAN,
    };
    vec![
        Check::at_most("max per-step first-law defect", first_law, 1e-10),
        Check::at_least("min per-step Sigma", sigma_min, 0.0),
        Check::at_most("max energy closure", energy, 1e-10),
        Check::at_most("max particle closure", particles, 1e-10),
        Check::at_most("converged cumulative rates vs NESS (relative)", rate_gap, 1e-6),
    ]
}

fn criterion_trajectory() -> Result<Vec<Check>> {
    let cfg = ModelConfig::preset(Preset::HeatEngine, 0.05, 1.0)?;
    let sol = solve_ness(&cfg)?;
    let s = &sol.setup;
    let (traj, steps) = trajectory_thermodynamics(
        &CorrelationMatrix::zeros(cfg.system.dim()),
        200,
        &s.hamiltonian,
        &s.propagator,
        &s.drive,
        s.bath_refs(),
        cfg.thermal(),
    )?;
    Ok(judge_trajectory(&steps, &traj.dist_to_ness, &sol.report.rates, cfg.process.tau))
}

// chain-length convergence

/// Largest change of the steady-state rates, relative to their scale, when
/// the chain length is doubled.
pub fn chain_doubling_change(cfg: &ModelConfig) -> Result<f64> {
    let base = solve_ness(cfg)?;
    let len = 2 * base.setup.chain_len;
    let chains = build_chains(cfg, len.max(cfg.process.depth))?;
    let doubled = solve_ness_on(cfg, prepare_cycle_with(cfg, chains, len)?)?;
    let (a, b) = (&base.report.rates, &doubled.report.rates);
    let diffs = [
        a.p_ext - b.p_ext,
        a.p_chem - b.p_chem,
        a.heat[0] - b.heat[0],
        a.heat[1] - b.heat[1],
        a.sigma - b.sigma,
    ];
    Ok(diffs.iter().fold(0.0f64, |m, d| m.max(d.abs())) / a.scale().max(a.sigma.abs()))
}

fn criterion_chain_doubling() -> Result<Vec<Check>> {
    let points = [
        (Preset::HeatEngine, 0.05, 0.01),
        (Preset::HeatEngine, 0.05, 0.3),
        (Preset::HeatEngine, 0.05, 1.0),
        (Preset::HeatEngine, 0.05, 3.0),
        (Preset::Refrigerator, 0.05, 1.0),
        (Preset::HeatEngine, 1.0, 20.0),
    ];
    points
        .par_iter()
        .map(|&(p, w, tau)| {
            let cfg = ModelConfig::preset(p, w, tau)?;
            let d = chain_doubling_change(&cfg)?;
            Ok(Check::at_most(format!("{p:?} lambda = {w} tau = {tau}"), d, 1e-6))
        })
        .collect()
}
