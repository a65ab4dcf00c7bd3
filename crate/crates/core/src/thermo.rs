//! Steady-state rates, regime classification and reference bounds.

use std::fmt;

use crate::correlation::CorrelationMatrix;
use crate::dynamics::{preb_step, step_thermodynamics};
use crate::error::{PrebError, Result};
use crate::model::SetupHamiltonian;
use crate::propagator::{DriveMatrix, Stability, StepPropagator};
use crate::spectral::BathThermal;

/// Steady-state rates per unit time (one cycle divided by τ).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NessRates {
    pub p_ext: f64,
    pub p_chem: f64,
    /// `P_ext + P_chem`.
    pub power: f64,
    /// Heat flow into each bath.
    pub heat: [f64; 2],
    /// Particle flow into each bath.
    pub particles: [f64; 2],
    pub hdot_bath: [f64; 2],
    pub hdot_coupling: [f64; 2],
    /// `β_1 Q̇_1 + β_2 Q̇_2`.
    pub sigma: f64,
    /// System energy and entropy change per unit time (zero at the fixed point).
    pub du_rate: f64,
    pub ds_rate: f64,
}

impl NessRates {
    /// `P − (Q̇_1 + Q̇_2)`.
    pub fn first_law_defect(&self) -> f64 {
        self.power - (self.heat[0] + self.heat[1])
    }

    pub fn scale(&self) -> f64 {
        [self.p_ext, self.p_chem, self.heat[0], self.heat[1]].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Rates of one cycle started from the fixed point `c_ness`.
pub fn ness_rates(
    c_ness: &CorrelationMatrix,
    h: &SetupHamiltonian,
    prop: &StepPropagator,
    drive: &DriveMatrix,
    baths: [&CorrelationMatrix; 2],
    specs: [&BathThermal; 2],
) -> Result<NessRates> {
    let tau = prop.tau();
    if !(tau > 0.0) {
        return Err(PrebError::InvalidArgument("rates need tau > 0".into()));
    }
    let next = preb_step(c_ness, prop, drive)?;
    let resid = next.max_distance(c_ness);
    let norm = c_ness.matrix().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if resid > 1e-9 * norm.max(1.0) {
        return Err(PrebError::Numerical(format!("state is not a fixed point of the cycle (residual {resid:e})")));
    }
    let st = step_thermodynamics(c_ness, h, prop, baths, specs)?;
    let inv = 1.0 / tau;
    let p_ext = st.w_ext * inv;
    // Ṅ_1 = −Ṅ_2 at the fixed point, so −Σ μ_ℓ Ṅ_ℓ is written in a form
    // that vanishes identically for equal chemical potentials.
    let p_chem = -0.5 * (specs[0].mu - specs[1].mu) * (st.delta_n_bath[0] - st.delta_n_bath[1]) * inv;
    let heat = st.heat.map(|q| q * inv);
    Ok(NessRates {
        p_ext,
        p_chem,
        power: p_ext + p_chem,
        heat,
        particles: st.delta_n_bath.map(|n| n * inv),
        hdot_bath: st.delta_h_bath.map(|x| x * inv),
        hdot_coupling: st.delta_h_coupling.map(|x| x * inv),
        sigma: specs[0].beta * heat[0] + specs[1].beta * heat[1],
        du_rate: st.delta_u * inv,
        ds_rate: st.delta_s * inv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    HeatEngine,
    Refrigerator,
    Dud,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::HeatEngine => "heat-engine",
            Regime::Refrigerator => "refrigerator",
            Regime::Dud => "dud",
        })
    }
}

/// Carnot efficiency, Carnot COP and the Curzon-Ahlborn efficiency for bath 1
/// hot and bath 2 cold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarnotBounds {
    pub eta_c: f64,
    /// Undefined for equal temperatures.
    pub cop_c: Option<f64>,
    pub eta_ca: f64,
}

/// Bounds for `β_1 ≤ β_2`. Equal temperatures are accepted (η_c = 0) so that
/// single-temperature setups can still be classified.
pub fn carnot_bounds(beta1: f64, beta2: f64) -> Result<CarnotBounds> {
    if !(beta1 > 0.0 && beta2 > 0.0) {
        return Err(PrebError::InvalidArgument("inverse temperatures must be positive".into()));
    }
    if beta1 > beta2 {
        return Err(PrebError::InvalidArgument(format!(
            "bath 1 must be hot: beta1 = {beta1} > beta2 = {beta2}"
        )));
    }
    let ratio = beta1 / beta2;
    Ok(CarnotBounds {
        eta_c: 1.0 - ratio,
        cop_c: (beta1 < beta2).then(|| 1.0 / (beta2 / beta1 - 1.0)),
        eta_ca: 1.0 - ratio.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub regime: Regime,
    /// `P/Q̇_1` in the heat-engine regime.
    pub efficiency: Option<f64>,
    /// `−Q̇_2/P` in the refrigerator regime.
    pub cop: Option<f64>,
    pub bounds: CarnotBounds,
}

/// Heat engine if `P < 0` and `Q̇_1 < 0`, refrigerator if `Q̇_2 < 0` and
/// `P > 0`, dud otherwise. Signs are tested against a dead-band of
/// `1e-12` times the rate scale.
pub fn classify_regime(rates: &NessRates, specs: [&BathThermal; 2]) -> Result<Classification> {
    let bounds = carnot_bounds(specs[0].beta, specs[1].beta)?;
    let band = 1e-12 * rates.scale();
    let p = rates.power;
    let (q1, q2) = (rates.heat[0], rates.heat[1]);
    let (regime, efficiency, cop) = if p < -band && q1 < -band {
        (Regime::HeatEngine, Some(p / q1), None)
    } else if q2 < -band && p > band {
        (Regime::Refrigerator, None, Some(-q2 / p))
    } else {
        (Regime::Dud, None, None)
    };
    Ok(Classification { regime, efficiency, cop, bounds })
}

/// Narrow-bath predictions for resonant levels `ω01`, `ω02`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionalPrediction {
    /// `ρ = (ω02 − μ)/(ω01 − μ)`.
    pub ratio: f64,
    pub efficiency: f64,
    pub cop: f64,
    pub engine_window: bool,
    pub fridge_window: bool,
}

pub fn collisional_limit(omega01: f64, omega02: f64, mu: f64, beta1: f64, beta2: f64) -> Result<CollisionalPrediction> {
    if omega01 == mu {
        return Err(PrebError::InvalidArgument("omega01 = mu leaves the level ratio undefined".into()));
    }
    if !(beta1 > 0.0 && beta2 > 0.0) {
        return Err(PrebError::InvalidArgument("inverse temperatures must be positive".into()));
    }
    let ratio = (omega02 - mu) / (omega01 - mu);
    let b = beta1 / beta2;
    Ok(CollisionalPrediction {
        ratio,
        efficiency: 1.0 - ratio,
        cop: ratio / (1.0 - ratio),
        engine_window: b < ratio && ratio < 1.0,
        fridge_window: 0.0 < ratio && ratio < b,
    })
}

/// `|Q̇_ℓ − (ω0ℓ − μ_ℓ) Ṅ_ℓ|` per bath.
pub fn tight_coupling_check(rates: &NessRates, omega0: [f64; 2], mu: [f64; 2]) -> [f64; 2] {
    [0, 1].map(|l| (rates.heat[l] - (omega0[l] - mu[l]) * rates.particles[l]).abs())
}

/// Full steady-state report for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct NessReport {
    pub tau: f64,
    /// Lorentzian width of the baths, when applicable.
    pub lambda: Option<f64>,
    pub mu: [f64; 2],
    pub beta: [f64; 2],
    pub rates: NessRates,
    pub classification: Classification,
    pub stability: Stability,
    /// Estimated bath copies `⌈τ_R/τ⌉ + 1`.
    pub copies: Option<usize>,
    pub chain_len: usize,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl NessReport {
    pub const HEADER: [&'static str; 19] = [
        "tau", "lambda", "mu", "beta1", "beta2", "P_ext", "P_chem", "Q1", "Q2", "N1", "sigma", "regime", "eta",
        "eta_c", "cop", "cop_c", "r", "radius", "Ncopies",
    ];

    /// CSV fields in `HEADER` order. `mu` is bath 1's chemical potential.
    pub fn csv_fields(&self) -> Vec<String> {
        let r = &self.rates;
        let c = &self.classification;
        vec![
            self.tau.to_string(),
            opt(self.lambda),
            self.mu[0].to_string(),
            self.beta[0].to_string(),
            self.beta[1].to_string(),
            r.p_ext.to_string(),
            r.p_chem.to_string(),
            r.heat[0].to_string(),
            r.heat[1].to_string(),
            r.particles[0].to_string(),
            r.sigma.to_string(),
            c.regime.to_string(),
            opt(c.efficiency),
            c.bounds.eta_c.to_string(),
            opt(c.cop),
            opt(c.bounds.cop_c),
            self.stability.rate.to_string(),
            self.stability.spectral_radius.to_string(),
            self.copies.map(|n| n.to_string()).unwrap_or_default(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(power: f64, q1: f64, q2: f64) -> NessRates {
        NessRates { p_ext: power, power, heat: [q1, q2], ..Default::default() }
    }

    #[test]
    fn carnot_examples() {
        assert!((carnot_bounds(0.1, 1.0).unwrap().eta_c - 0.9).abs() < 1e-15);
        assert!((carnot_bounds(0.7, 1.0).unwrap().cop_c.unwrap() - 7.0 / 3.0).abs() < 1e-14);
        let b = carnot_bounds(0.4, 1.0).unwrap();
        assert!((b.eta_ca / b.eta_c - 0.6126).abs() < 5e-5);
        assert!(carnot_bounds(1.0, 0.5).is_err());
        let eq = carnot_bounds(1.0, 1.0).unwrap();
        assert_eq!(eq.eta_c, 0.0);
        assert!(eq.cop_c.is_none());
    }

    #[test]
    fn regimes() {
        let s = [BathThermal::new(0.1, -2.0).unwrap(), BathThermal::new(1.0, -2.0).unwrap()];
        let c = classify_regime(&rates(-0.3, -1.0, 0.7), [&s[0], &s[1]]).unwrap();
        assert_eq!(c.regime, Regime::HeatEngine);
        assert!((c.efficiency.unwrap() - 0.3).abs() < 1e-15);
        let c = classify_regime(&rates(0.5, 0.7, -0.2), [&s[0], &s[1]]).unwrap();
        assert_eq!(c.regime, Regime::Refrigerator);
        assert!((c.cop.unwrap() - 0.4).abs() < 1e-15);
        let c = classify_regime(&rates(0.5, 0.2, 0.3), [&s[0], &s[1]]).unwrap();
        assert_eq!(c.regime, Regime::Dud);
        // Numerical zeros are not labeled.
        let c = classify_regime(&rates(-1e-20, -1.0, 1.0), [&s[0], &s[1]]).unwrap();
        assert_eq!(c.regime, Regime::Dud);
        assert!(classify_regime(&rates(0.0, 0.0, 0.0), [&s[1], &s[0]]).is_err());
    }

    #[test]
    fn collisional_examples() {
        let p = collisional_limit(2.0, -1.0, -2.0, 0.1, 1.0).unwrap();
        assert!((p.ratio - 0.25).abs() < 1e-15);
        assert!((p.efficiency - 0.75).abs() < 1e-15);
        assert!((p.efficiency / 0.9 - 0.833_333_333_333_333_4).abs() < 1e-12);
        assert!(p.engine_window && !p.fridge_window);
        let p = collisional_limit(2.0, -1.0, -2.0, 0.7, 1.0).unwrap();
        assert!((p.cop - 1.0 / 3.0).abs() < 1e-15);
        let cop_c = carnot_bounds(0.7, 1.0).unwrap().cop_c.unwrap();
        assert!((p.cop / cop_c - 1.0 / 7.0).abs() < 1e-14);
        assert!(p.fridge_window && !p.engine_window);
        assert!(collisional_limit(2.0, -1.0, 2.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn tight_coupling_zero_for_decoupled() {
        assert_eq!(tight_coupling_check(&NessRates::default(), [2.0, -1.0], [-2.0, -2.0]), [0.0, 0.0]);
    }
}
