//! Repeated application of the cycle map and the thermodynamics of each cycle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::correlation::{gaussian_entropy, CorrelationMatrix};
use crate::error::{PrebError, Result};
use crate::model::{Block, SetupHamiltonian};
use crate::propagator::{solve_dlyap, DriveMatrix, StepPropagator};
use crate::spectral::BathThermal;

/// One cycle on the system block: `C ↦ G_S† C G_S + P_S`.
pub fn preb_step(c_s: &CorrelationMatrix, prop: &StepPropagator, drive: &DriveMatrix) -> Result<CorrelationMatrix> {
    let g = prop.g_s();
    if c_s.dim() != g.nrows() {
        return Err(PrebError::Dimension(format!(
            "system correlation has {} sites, propagator block has {}",
            c_s.dim(),
            g.nrows()
        )));
    }
    CorrelationMatrix::new(g.adjoint() * c_s.matrix() * &g + drive.matrix())
}

/// States after each of `n` cycles and their distance to the fixed point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<CorrelationMatrix>,
    /// `max |C_m − C_NESS|` per step; empty when no unique fixed point exists.
    pub dist_to_ness: Vec<f64>,
}

pub fn preb_trajectory(
    c0: &CorrelationMatrix,
    n: usize,
    prop: &StepPropagator,
    drive: &DriveMatrix,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(PrebError::InvalidArgument("trajectory needs at least one step".into()));
    }
    let ness = match solve_dlyap(&prop.g_s(), drive) {
        Ok(c) => Some(c),
        Err(PrebError::NoUniqueNess { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut states = Vec::with_capacity(n);
    let mut dist = Vec::new();
    let mut c = c0.clone();
    for _ in 0..n {
        c = preb_step(&c, prop, drive)?;
        if let Some(f) = &ness {
            dist.push(c.max_distance(f));
        }
        states.push(c.clone());
    }
    Ok(Trajectory { states, dist_to_ness: dist })
}

/// Thermodynamic bookkeeping of one cycle. Bath quantities are changes of the
/// bath copy that took part in the cycle; heat is counted positive into the bath.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepThermo {
    pub delta_u: f64,
    pub w_ext: f64,
    pub w_chem: f64,
    pub heat: [f64; 2],
    /// `S_before − S_after` of the system.
    pub delta_s: f64,
    pub entropy_production: f64,
    pub delta_n_bath: [f64; 2],
    pub delta_h_bath: [f64; 2],
    pub delta_h_coupling: [f64; 2],
    pub delta_n_system: f64,
}

impl StepThermo {
    /// `δU − (W_ext + W_chem − Q_1 − Q_2)`.
    pub fn first_law_defect(&self) -> f64 {
        self.delta_u - (self.w_ext + self.w_chem - self.heat[0] - self.heat[1])
    }

    /// Change of the total energy during the unitary step (zero in exact arithmetic).
    pub fn energy_closure(&self) -> f64 {
        self.delta_u + self.delta_h_bath.iter().sum::<f64>() + self.delta_h_coupling.iter().sum::<f64>()
    }

    /// Change of the total particle number during the step.
    pub fn particle_closure(&self) -> f64 {
        self.delta_n_system + self.delta_n_bath.iter().sum::<f64>()
    }

    /// Largest magnitude among the energy-like entries.
    pub fn energy_scale(&self) -> f64 {
        [self.delta_u, self.w_ext, self.w_chem, self.heat[0], self.heat[1]]
            .iter()
            .chain(&self.delta_h_bath)
            .chain(&self.delta_h_coupling)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn accumulate(&mut self, o: &StepThermo) {
        self.delta_u += o.delta_u;
        self.w_ext += o.w_ext;
        self.w_chem += o.w_chem;
        self.delta_s += o.delta_s;
        self.entropy_production += o.entropy_production;
        self.delta_n_system += o.delta_n_system;
        for l in 0..2 {
            self.heat[l] += o.heat[l];
            self.delta_n_bath[l] += o.delta_n_bath[l];
            self.delta_h_bath[l] += o.delta_h_bath[l];
            self.delta_h_coupling[l] += o.delta_h_coupling[l];
        }
    }

    fn scaled(&self, s: f64) -> StepThermo {
        let mut o = *self;
        o.delta_u *= s;
        o.w_ext *= s;
        o.w_chem *= s;
        o.delta_s *= s;
        o.entropy_production *= s;
        o.delta_n_system *= s;
        for l in 0..2 {
            o.heat[l] *= s;
            o.delta_n_bath[l] *= s;
            o.delta_h_bath[l] *= s;
            o.delta_h_coupling[l] *= s;
        }
        o
    }
}

/// `Σ_pq H_pq C_pq` restricted to rows in `a` and columns in `b`.
fn expectation(h: &DMatrix<f64>, c: &DMatrix<Complex64>, a: std::ops::Range<usize>, b: std::ops::Range<usize>) -> f64 {
    let mut acc = 0.0;
    for p in a {
        for q in b.clone() {
            let hv = h[(p, q)];
            if hv != 0.0 {
                acc += hv * c[(p, q)].re;
            }
        }
    }
    acc
}

fn number(c: &DMatrix<Complex64>, r: std::ops::Range<usize>) -> f64 {
    r.map(|p| c[(p, p)].re).sum()
}

/// Evolves the product state `C_S ⊕ C_B1 ⊕ C_B2` for one cycle and books the
/// energy, particle and entropy changes.
pub fn step_thermodynamics(
    c_s: &CorrelationMatrix,
    h: &SetupHamiltonian,
    prop: &StepPropagator,
    baths: [&CorrelationMatrix; 2],
    specs: [&BathThermal; 2],
) -> Result<StepThermo> {
    let idx = h.index();
    if c_s.dim() != idx.system_sites || baths.iter().any(|b| b.dim() != idx.chain_len) {
        return Err(PrebError::Dimension("correlation blocks do not match the setup".into()));
    }
    let start = CorrelationMatrix::block_diag(&[c_s, baths[0], baths[1]]);
    let u = prop.matrix();
    let end = u.adjoint() * start.matrix() * u;
    let c0 = start.matrix();
    let hm = h.matrix();
    let s = idx.range(Block::System);

    let delta = |a: std::ops::Range<usize>, b: std::ops::Range<usize>| {
        expectation(hm, &end, a.clone(), b.clone()) - expectation(hm, c0, a, b)
    };
    let delta_u = delta(s.clone(), s.clone());
    let mut out = StepThermo { delta_u, ..Default::default() };
    for l in 0..2 {
        let b = idx.range(Block::Bath(l));
        out.delta_h_bath[l] = delta(b.clone(), b.clone());
        out.delta_h_coupling[l] = delta(s.clone(), b.clone()) + delta(b.clone(), s.clone());
        out.delta_n_bath[l] = number(&end, b.clone()) - number(c0, b);
        out.w_ext -= out.delta_h_coupling[l];
        out.w_chem -= specs[l].mu * out.delta_n_bath[l];
        out.heat[l] = out.delta_h_bath[l] - specs[l].mu * out.delta_n_bath[l];
    }
    out.delta_n_system = number(&end, s.clone()) - number(c0, s.clone());
    let after = CorrelationMatrix::new(end.view((s.start, s.start), (s.len(), s.len())).into_owned())?;
    out.delta_s = gaussian_entropy(c_s) - gaussian_entropy(&after);
    out.entropy_production = specs[0].beta * out.heat[0] + specs[1].beta * out.heat[1] - out.delta_s;
    Ok(out)
}

/// Per-step thermodynamics along a trajectory starting from `c0`.
pub fn trajectory_thermodynamics(
    c0: &CorrelationMatrix,
    n: usize,
    h: &SetupHamiltonian,
    prop: &StepPropagator,
    drive: &DriveMatrix,
    baths: [&CorrelationMatrix; 2],
    specs: [&BathThermal; 2],
) -> Result<(Trajectory, Vec<StepThermo>)> {
    let traj = preb_trajectory(c0, n, prop, drive)?;
    let mut steps = Vec::with_capacity(n);
    let mut prev = c0;
    for c in &traj.states {
        steps.push(step_thermodynamics(prev, h, prop, baths, specs)?);
        prev = c;
    }
    Ok((traj, steps))
}

/// Totals over a run of steps and the corresponding time-averaged rates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CumulativeThermo {
    pub steps: usize,
    pub totals: StepThermo,
    /// `totals / (n τ)`; zero for an empty run.
    pub rates: StepThermo,
}

pub fn cumulative_thermo(steps: &[StepThermo], tau: f64) -> CumulativeThermo {
    let mut totals = StepThermo::default();
    for s in steps {
        totals.accumulate(s);
    }
    let rates = if steps.is_empty() || !(tau > 0.0) {
        StepThermo::default()
    } else {
        totals.scaled(1.0 / (steps.len() as f64 * tau))
    };
    CumulativeThermo { steps: steps.len(), totals, rates }
}

pub const TRAJECTORY_HEADER: [&str; 9] =
    ["step", "deltaU", "W_ext", "W_chem", "Q1", "Q2", "dS", "Sigma", "dist_to_ness"];

/// One row per step, numbered from 1. `dist_to_ness` stays blank when no
/// fixed point exists.
pub fn write_trajectory_csv<W: std::io::Write>(out: W, steps: &[StepThermo], dist_to_ness: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(TRAJECTORY_HEADER)?;
    for (m, s) in steps.iter().enumerate() {
        wtr.write_record([
            (m + 1).to_string(),
            s.delta_u.to_string(),
            s.w_ext.to_string(),
            s.w_chem.to_string(),
            s.heat[0].to_string(),
            s.heat[1].to_string(),
            s.delta_s.to_string(),
            s.entropy_production.to_string(),
            dist_to_ness.get(m).map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_hamiltonian, thermal_correlation, SystemSpec};
    use crate::propagator::{drive_matrix, step_propagator};
    use crate::spectral::ChainCoefficients;

    struct Setup {
        h: SetupHamiltonian,
        prop: StepPropagator,
        baths: [CorrelationMatrix; 2],
        specs: [BathThermal; 2],
        drive: DriveMatrix,
    }

    fn setup(tau: f64) -> Setup {
        let sys = SystemSpec::two_site(1.0).unwrap();
        let c1 = ChainCoefficients::new(vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![1.0, 0.3, 3.0, 3.0, 3.0, 3.0]).unwrap();
        let c2 = ChainCoefficients::new(vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0], vec![1.0, 0.3, 3.0, 3.0, 3.0, 3.0]).unwrap();
        let h = assemble_hamiltonian(&sys, [&c1, &c2], 6).unwrap();
        let specs = [BathThermal::new(0.1, -2.0).unwrap(), BathThermal::new(1.0, -2.0).unwrap()];
        let baths = [0, 1].map(|l| thermal_correlation(&h.block(Block::Bath(l), Block::Bath(l)), &specs[l]).unwrap());
        let prop = step_propagator(&h, tau).unwrap();
        let drive = drive_matrix(&prop, [&baths[0], &baths[1]]).unwrap();
        Setup { h, prop, baths, specs, drive }
    }

    #[test]
    fn free_fermion_oscillation_fixes_convention() {
        // Two sites with hopping g, particle on site 0: n_0(t) = cos²(gt).
        let sys = SystemSpec::two_site(0.8).unwrap();
        let ch = ChainCoefficients::new(vec![0.0], vec![0.0]).unwrap();
        let h = assemble_hamiltonian(&sys, [&ch, &ch], 1).unwrap();
        let t = 0.9;
        let prop = step_propagator(&h, t).unwrap();
        let mut c0 = DMatrix::zeros(2, 2);
        c0[(0, 0)] = 1.0;
        let c0 = CorrelationMatrix::from_real(&c0).unwrap();
        let zero = CorrelationMatrix::zeros(1);
        let drive = drive_matrix(&prop, [&zero, &zero]).unwrap();
        let c1 = preb_step(&c0, &prop, &drive).unwrap();
        assert!((c1.occupation(0) - (0.8 * t).cos().powi(2)).abs() < 1e-14);
        // ⟨d_0† d_1⟩ = −i sin(gt) cos(gt) for U = e^{−iHt}.
        let coh = c1.matrix()[(0, 1)];
        assert!((coh.im + (0.8 * t).sin() * (0.8 * t).cos()).abs() < 1e-14);
        assert!(coh.re.abs() < 1e-14);
    }

    #[test]
    fn one_step_from_vacuum_is_the_drive() {
        let s = setup(1.0);
        let c = preb_step(&CorrelationMatrix::zeros(2), &s.prop, &s.drive).unwrap();
        assert_eq!(c.matrix(), s.drive.matrix());
    }

    #[test]
    fn closure_and_first_law_per_step() {
        let s = setup(1.0);
        let (_, steps) = trajectory_thermodynamics(
            &CorrelationMatrix::zeros(2),
            30,
            &s.h,
            &s.prop,
            &s.drive,
            [&s.baths[0], &s.baths[1]],
            [&s.specs[0], &s.specs[1]],
        )
        .unwrap();
        for st in &steps {
            assert!(st.energy_closure().abs() < 1e-10);
            assert!(st.particle_closure().abs() < 1e-10);
            assert!(st.first_law_defect().abs() < 1e-9 * st.energy_scale().max(1.0));
            assert!(st.entropy_production > -1e-10);
        }
    }

    #[test]
    fn distance_to_fixed_point_decays_with_squared_radius() {
        let s = setup(1.0);
        let traj = preb_trajectory(&CorrelationMatrix::zeros(2), 40, &s.prop, &s.drive).unwrap();
        let st = crate::propagator::stability_rate(&s.prop.g_s(), 1.0).unwrap();
        let d = &traj.dist_to_ness;
        let slope = (d[30].ln() - d[20].ln()) / 10.0;
        assert!((slope - 2.0 * st.spectral_radius.ln()).abs() < 0.05 * slope.abs());
    }

    #[test]
    fn cumulative_of_one_step_is_that_step() {
        let s = setup(0.7);
        let st = step_thermodynamics(
            &CorrelationMatrix::zeros(2),
            &s.h,
            &s.prop,
            [&s.baths[0], &s.baths[1]],
            [&s.specs[0], &s.specs[1]],
        )
        .unwrap();
        let cum = cumulative_thermo(&[st], 0.7);
        assert_eq!(cum.totals, st);
        assert_eq!(cumulative_thermo(&[], 0.7).totals, StepThermo::default());
    }

    #[test]
    fn entropy_production_is_correlation_plus_bath_displacement() {
        // Σ = I(S':B1':B2') + Σ_ℓ D(ρ_Bℓ' ‖ ρ_Bℓ), evaluated from the full final state.
        let s = setup(0.8);
        let mut c_s = DMatrix::zeros(2, 2);
        c_s[(0, 0)] = 0.7;
        c_s[(1, 1)] = 0.2;
        c_s[(0, 1)] = 0.1;
        c_s[(1, 0)] = 0.1;
        let c_s = CorrelationMatrix::from_real(&c_s).unwrap();
        let st = step_thermodynamics(&c_s, &s.h, &s.prop, [&s.baths[0], &s.baths[1]], [&s.specs[0], &s.specs[1]])
            .unwrap();
        let start = CorrelationMatrix::block_diag(&[&c_s, &s.baths[0], &s.baths[1]]);
        let u = s.prop.matrix();
        let end = CorrelationMatrix::new(u.adjoint() * start.matrix() * u).unwrap();
        let idx = s.h.index();
        let part = |b: Block| {
            let r = idx.range(b);
            end.sub_block(r.start, r.len())
        };
        let s_total = gaussian_entropy(&c_s) + gaussian_entropy(&s.baths[0]) + gaussian_entropy(&s.baths[1]);
        let mut mutual = gaussian_entropy(&part(Block::System)) - s_total;
        let mut displacement = 0.0;
        for l in 0..2 {
            let after = part(Block::Bath(l));
            mutual += gaussian_entropy(&after);
            let r = idx.range(Block::Bath(l));
            let hb = s.h.matrix().view((r.start, r.start), (r.len(), r.len())).into_owned();
            let energy = |c: &CorrelationMatrix| -> f64 {
                let mut e = 0.0;
                for p in 0..r.len() {
                    for q in 0..r.len() {
                        e += hb[(p, q)] * c.matrix()[(p, q)].re;
                    }
                }
                e - s.specs[l].mu * c.particle_number()
            };
            displacement += s.specs[l].beta * (energy(&after) - energy(&s.baths[l]))
                - (gaussian_entropy(&after) - gaussian_entropy(&s.baths[l]));
        }
        assert!(mutual > 0.0 && displacement > 0.0);
        assert!((st.entropy_production - (mutual + displacement)).abs() < 1e-10);
    }

    #[test]
    fn entropy_production_telescopes_over_a_run() {
        let s = setup(1.3);
        let c0 = CorrelationMatrix::zeros(2);
        let (traj, steps) = trajectory_thermodynamics(
            &c0,
            25,
            &s.h,
            &s.prop,
            &s.drive,
            [&s.baths[0], &s.baths[1]],
            [&s.specs[0], &s.specs[1]],
        )
        .unwrap();
        let cum = cumulative_thermo(&steps, 1.3).totals;
        let global = s.specs[0].beta * cum.heat[0] + s.specs[1].beta * cum.heat[1]
            - (gaussian_entropy(&c0) - gaussian_entropy(traj.states.last().unwrap()));
        assert!((cum.entropy_production - global).abs() < 1e-10);
    }

    #[test]
    fn uncoupled_thermal_system_produces_no_entropy() {
        let sys = SystemSpec::two_site(1.0).unwrap();
        let ch = ChainCoefficients::new(vec![0.5, 0.0, 0.0], vec![0.0, 1.0, 1.0]).unwrap();
        let h = assemble_hamiltonian(&sys, [&ch, &ch], 3).unwrap();
        let spec = BathThermal::new(0.6, -0.3).unwrap();
        let baths = [0, 1].map(|l| thermal_correlation(&h.block(Block::Bath(l), Block::Bath(l)), &spec).unwrap());
        let prop = step_propagator(&h, 1.1).unwrap();
        let c_s = thermal_correlation(sys.hamiltonian(), &spec).unwrap();
        let st = step_thermodynamics(&c_s, &h, &prop, [&baths[0], &baths[1]], [&spec, &spec]).unwrap();
        assert!(st.entropy_production.abs() < 1e-12);
        assert!(st.delta_s.abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert!(gaussian_entropy(&CorrelationMatrix::zeros(2)).abs() < 1e-12);
        let nu = 1.0 / (1.0 + std::f64::consts::E);
        let c = CorrelationMatrix::from_real(&DMatrix::from_element(1, 1, nu)).unwrap();
        let expected = -(nu * nu.ln() + (1.0 - nu) * (1.0 - nu).ln());
        assert!((gaussian_entropy(&c) - expected).abs() < 1e-14);
        assert!((gaussian_entropy(&c) - 0.582_203).abs() < 1e-5);
    }
}
