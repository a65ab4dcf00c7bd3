//! Continuous-time steady state of the system coupled to two leads, from the
//! retarded Green's function and the Landauer formula.
//!
//! With the coupling density normalized as in [`crate::spectral`], lead `ℓ`
//! attached to site `s_ℓ` contributes the self-energy
//! `Σ_ℓ(ω) = (J_ℓ^H(ω) − i J_ℓ(ω))/2`, so a level coupled to a flat band of
//! height `Γ` decays with amplitude rate `Γ/2`, and the broadening function is
//! `Γ_ℓ(ω) = −2 Im Σ_ℓ = J_ℓ(ω)`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{PrebError, Result};
use crate::model::SystemSpec;
use crate::quad::integrate_adaptive;
use crate::spectral::{BathThermal, SpectralFunction};

/// Retarded lead self-energy at `ω`.
pub fn lead_self_energy(sf: &SpectralFunction, omega: f64) -> Result<Complex64> {
    let j = sf.evaluate(omega)?;
    let jh = sf.hilbert_at(omega)?;
    Ok(Complex64::new(0.5 * jh, -0.5 * j))
}

/// Steady-state currents. Heat is counted positive into each bath.
#[derive(Debug, Clone, PartialEq)]
pub struct NegfReport {
    /// Particle current from lead 1 to lead 2.
    pub particle_current: f64,
    /// Energy current from lead 1 to lead 2.
    pub energy_current: f64,
    pub heat: [f64; 2],
    pub occupations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegfOptions {
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for NegfOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-9, max_panels: 200_000 }
    }
}

struct Leads<'a> {
    system: &'a SystemSpec,
    leads: [&'a SpectralFunction; 2],
}

impl Leads<'_> {
    /// Retarded Green's function and the two broadenings at `ω`.
    fn green(&self, omega: f64) -> Result<(DMatrix<Complex64>, [f64; 2])> {
        let n = self.system.dim();
        let mut m = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { omega } else { 0.0 };
            Complex64::new(d - self.system.hamiltonian()[(i, j)], 0.0)
        });
        let mut gam = [0.0; 2];
        for (l, sf) in self.leads.iter().enumerate() {
            let s = self.system.coupling_sites()[l];
            let sigma = lead_self_energy(sf, omega)?;
            m[(s, s)] -= sigma;
            gam[l] = -2.0 * sigma.im;
        }
        let inv = match m.clone().try_inverse() {
            Some(g) if g.iter().all(|z| z.is_finite()) => g,
            _ => {
                for i in 0..n {
                    m[(i, i)] += Complex64::new(0.0, 1e-12);
                }
                m.try_inverse()
                    .ok_or_else(|| PrebError::Numerical(format!("retarded Green's function singular at {omega}")))?
            }
        };
        Ok((inv, gam))
    }

    fn transmission(&self, omega: f64) -> Result<f64> {
        let (g, gam) = self.green(omega)?;
        let [s1, s2] = self.system.coupling_sites();
        Ok(gam[0] * gam[1] * g[(s1, s2)].norm_sqr())
    }
}

/// `T(ω) = Γ_1 Γ_2 |G^r_{s1 s2}|²`.
pub fn transmission(system: &SystemSpec, leads: [&SpectralFunction; 2], omega: f64) -> Result<f64> {
    Leads { system, leads }.transmission(omega)
}

fn breakpoints(system: &SystemSpec, leads: [&SpectralFunction; 2]) -> Vec<f64> {
    let reach = leads.iter().map(|l| l.cutoff()).fold(0.0, f64::max) * 1.05;
    let mut pts = vec![-reach, reach];
    for l in &leads {
        pts.extend(l.features());
    }
    pts.extend(system.hamiltonian().clone().symmetric_eigenvalues().iter().copied());
    pts.retain(|x| x.abs() <= reach);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// Landauer currents and site occupations in the joint steady state.
pub fn landauer_currents(
    system: &SystemSpec,
    leads: [&SpectralFunction; 2],
    specs: [&BathThermal; 2],
    opts: &NegfOptions,
) -> Result<NegfReport> {
    let ctx = Leads { system, leads };
    let bps = breakpoints(system, leads);
    let two_pi = 2.0 * PI;
    let flow = |omega: f64| -> [f64; 2] {
        let t = ctx.transmission(omega).unwrap_or(f64::NAN);
        let df = specs[0].occupation(omega) - specs[1].occupation(omega);
        [t * df / two_pi, omega * t * df / two_pi]
    };
    let [i, j] = integrate_adaptive(flow, &bps, opts.abs_tol, opts.max_panels)?;
    if !(i.is_finite() && j.is_finite()) {
        return Err(PrebError::Numerical("transport integrand failed to evaluate".into()));
    }
    let mut occupations = Vec::with_capacity(system.dim());
    for site in 0..system.dim() {
        let occ = |omega: f64| -> [f64; 1] {
            let Ok((g, gam)) = ctx.green(omega) else { return [f64::NAN] };
            let mut acc = 0.0;
            for l in 0..2 {
                let s = system.coupling_sites()[l];
                acc += gam[l] * specs[l].occupation(omega) * g[(site, s)].norm_sqr();
            }
            [acc / two_pi]
        };
        occupations.push(integrate_adaptive(occ, &bps, opts.abs_tol, opts.max_panels)?[0]);
    }
    Ok(NegfReport {
        particle_current: i,
        energy_current: j,
        heat: [-(j - specs[0].mu * i), j - specs[1].mu * i],
        occupations,
    })
}

impl NegfReport {
    /// Header for [`NegfReport::csv_fields`] with `sites` occupation columns.
    pub fn header(sites: usize) -> Vec<String> {
        let mut h: Vec<String> = ["I", "J_E", "Q1", "Q2"].iter().map(|s| s.to_string()).collect();
        h.extend((0..sites).map(|i| format!("n{i}")));
        h
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let mut f = vec![
            self.particle_current.to_string(),
            self.energy_current.to_string(),
            self.heat[0].to_string(),
            self.heat[1].to_string(),
        ];
        f.extend(self.occupations.iter().map(|n| n.to_string()));
        f
    }
}

/// Writes `omega,T` on a uniform grid spanning the leads' supports.
pub fn write_transmission_csv(
    system: &SystemSpec,
    leads: [&SpectralFunction; 2],
    points: usize,
    path: &Path,
) -> Result<()> {
    if points < 2 {
        return Err(PrebError::InvalidArgument("need at least two points".into()));
    }
    let reach = leads.iter().map(|l| l.cutoff()).fold(0.0, f64::max) * 1.05;
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["omega", "T"])?;
    for k in 0..points {
        let w = -reach + 2.0 * reach * k as f64 / (points - 1) as f64;
        let t = transmission(system, leads, w)?;
        wtr.write_record([w.to_string(), t.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lor(center: f64, width: f64) -> SpectralFunction {
        SpectralFunction::lorentzian(2.0, width, center, 6.0).unwrap()
    }

    #[test]
    fn self_energy_conventions() {
        let flat = SpectralFunction::flat(0.3, 6.0).unwrap();
        let s = lead_self_energy(&flat, 1.0).unwrap();
        assert!((-s.im - 0.15).abs() < 1e-15);
        let s = lead_self_energy(&flat, 40.0).unwrap();
        assert_eq!(s.im, 0.0);
        let s = lead_self_energy(&lor(2.0, 1e-3), 2.0).unwrap();
        assert!((-s.im - 2.0 / (2.0 * 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn no_bias_no_current() {
        let sys = SystemSpec::two_site(1.0).unwrap();
        let spec = BathThermal::new(0.5, -2.0).unwrap();
        let r = landauer_currents(&sys, [&lor(2.0, 0.5), &lor(-1.0, 0.5)], [&spec, &spec], &NegfOptions::default())
            .unwrap();
        assert!(r.particle_current.abs() < 1e-10 && r.energy_current.abs() < 1e-10);
    }

    #[test]
    fn transmission_is_bounded() {
        let sys = SystemSpec::two_site(1.0).unwrap();
        let leads = [lor(2.0, 0.3), lor(-1.0, 0.3)];
        for k in 0..2000 {
            let w = -6.5 + 13.0 * k as f64 / 1999.0;
            let t = transmission(&sys, [&leads[0], &leads[1]], w).unwrap();
            assert!((-1e-14..=1.0 + 1e-12).contains(&t), "T({w}) = {t}");
        }
    }

    #[test]
    fn disjoint_supports_carry_nothing() {
        let sys = SystemSpec::two_site(1.0).unwrap();
        let band = |lo: f64, hi: f64| {
            let values: Vec<f64> = (0..25).map(|k| -6.0 + 0.5 * k as f64).map(|w| if w > lo && w < hi { 1.0 } else { 0.0 }).collect();
            SpectralFunction::tabulated(crate::spectral::SpectralTable::new(-6.0, 0.5, values, true).unwrap(), 6.0)
                .unwrap()
        };
        let (t1, t2) = (band(-4.5, -1.5), band(1.5, 4.5));
        let specs = [BathThermal::new(0.1, 0.0).unwrap(), BathThermal::new(1.0, 0.0).unwrap()];
        let r = landauer_currents(&sys, [&t1, &t2], [&specs[0], &specs[1]], &NegfOptions::default()).unwrap();
        assert!(r.particle_current.abs() < 1e-12 && r.energy_current.abs() < 1e-12);
    }
}
