use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use preb_core::config::ModelConfig;
use preb_core::correlation::CorrelationMatrix;
use preb_core::dynamics::step_thermodynamics;
use preb_core::model::{assemble_hamiltonian, thermal_correlation, SystemSpec};
use preb_core::pipeline::{prepare_cycle, run_ness};
use preb_core::propagator::{
    drive_matrix, lyapunov_residual, solve_dlyap_direct, solve_dlyap_doubling, step_propagator, DriveMatrix,
};
use preb_core::spectral::{chain_map_tridiag, BathThermal, ChainCoefficients, SpectralFunction, SpectralTable};

fn cmat(n: usize, re: &[f64], im: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| Complex64::new(re[i * n + j], im[i * n + j]))
}

fn spectral_norm_bound(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Random physical state: `V diag(n) V†` with `V` from a Hermitian eigenbasis.
fn random_state(n: usize, re: &[f64], im: &[f64], occ: &[f64]) -> CorrelationMatrix {
    let a = cmat(n, re, im);
    let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let v = h.symmetric_eigen().eigenvectors;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        occ.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    let c = &v * d * v.adjoint();
    CorrelationMatrix::new((&c + c.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

fn chain(eps: &[f64], hop: &[f64]) -> ChainCoefficients {
    ChainCoefficients::new(eps.to_vec(), hop.iter().map(|h| h.abs()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn steady_state_obeys_both_laws(
        beta1 in 0.05f64..1.0,
        dbeta in 0.0f64..2.0,
        mu in -4.0f64..1.0,
        tau in 0.05f64..6.0,
        width in 0.02f64..1.5,
    ) {
        let beta2 = beta1 + dbeta;
        let cfg = ModelConfig::lorentzian_pair(width, tau, [beta1, beta2], [mu, mu]).unwrap();
        let r = run_ness(&cfg).unwrap();
        let rates = &r.rates;
        prop_assert!(rates.first_law_defect().abs() <= 1e-8 * rates.scale().max(1e-300));
        prop_assert!(rates.sigma >= -1e-10);
        prop_assert!((rates.particles[0] + rates.particles[1]).abs() < 1e-10);
        let c = &r.classification;
        if let Some(eta) = c.efficiency {
            prop_assert!(eta <= c.bounds.eta_c);
        }
        if let (Some(cop), Some(cop_c)) = (c.cop, c.bounds.cop_c) {
            prop_assert!(cop <= cop_c);
        }
        prop_assert!(r.stability.spectral_radius < 1.0 && r.stability.rate > 0.0);
    }

    #[test]
    fn steady_state_is_a_physical_state(
        beta in 0.05f64..2.0,
        mu1 in -3.0f64..3.0,
        mu2 in -3.0f64..3.0,
        tau in 0.05f64..4.0,
    ) {
        let cfg = ModelConfig::lorentzian_pair(0.2, tau, [beta, beta], [mu1, mu2]).unwrap();
        let sol = preb_core::pipeline::solve_ness(&cfg).unwrap();
        prop_assert!(sol.c_ness.hermiticity_defect() < 1e-12);
        prop_assert!(sol.c_ness.physicality_defect() < 1e-10);
    }

    #[test]
    fn lyapunov_solvers_agree(
        re in prop::collection::vec(-1.0f64..1.0, 9),
        im in prop::collection::vec(-1.0f64..1.0, 9),
        pre in prop::collection::vec(-1.0f64..1.0, 9),
        pim in prop::collection::vec(-1.0f64..1.0, 9),
        radius in 0.0f64..0.95,
    ) {
        let g = cmat(3, &re, &im);
        let norm = spectral_norm_bound(&g);
        let g = if norm > 0.0 { g * Complex64::new(radius / norm, 0.0) } else { g };
        let b = cmat(3, &pre, &pim);
        let p = DriveMatrix::from_matrix(&b * b.adjoint()).unwrap();
        let direct = solve_dlyap_direct(&g, &p).unwrap();
        let doubling = solve_dlyap_doubling(&g, &p).unwrap();
        let scale = direct.matrix().iter().fold(1.0f64, |m, z| m.max(z.norm()));
        prop_assert!(direct.max_distance(&doubling) < 1e-10 * scale);
        prop_assert!(lyapunov_residual(&g, &p, &direct) < 1e-10 * scale);
    }

    #[test]
    fn setup_hamiltonian_is_symmetric(
        g in -2.0f64..2.0,
        e1 in prop::collection::vec(-3.0f64..3.0, 5),
        h1 in prop::collection::vec(0.0f64..3.0, 5),
        e2 in prop::collection::vec(-3.0f64..3.0, 5),
        h2 in prop::collection::vec(0.0f64..3.0, 5),
        len in 1usize..9,
    ) {
        let sys = SystemSpec::two_site(g).unwrap();
        let h = assemble_hamiltonian(&sys, [&chain(&e1, &h1), &chain(&e2, &h2)], len).unwrap();
        let m = h.matrix();
        prop_assert_eq!(m.clone(), m.transpose());
        prop_assert_eq!(h.dim(), 2 + 2 * len);
    }

    #[test]
    fn propagator_group_property(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, g in 0.1f64..2.0) {
        let sys = SystemSpec::two_site(g).unwrap();
        let c = chain(&[0.5, -0.2, 0.1], &[0.8, 1.1, 0.9]);
        let h = assemble_hamiltonian(&sys, [&c, &c], 3).unwrap();
        let a = step_propagator(&h, t1).unwrap();
        let b = step_propagator(&h, t2).unwrap();
        let ab = step_propagator(&h, t1 + t2).unwrap();
        let prod = a.matrix() * b.matrix();
        let worst = (prod - ab.matrix()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(worst < 1e-10);
    }

    #[test]
    fn thermal_state_trace_is_the_mode_sum(
        eps in prop::collection::vec(-3.0f64..3.0, 6),
        hop in prop::collection::vec(0.0f64..2.0, 6),
        beta in 0.1f64..5.0,
        mu in -2.0f64..2.0,
    ) {
        let mut h = DMatrix::zeros(6, 6);
        for p in 0..6 {
            h[(p, p)] = eps[p];
            if p + 1 < 6 {
                h[(p, p + 1)] = hop[p];
                h[(p + 1, p)] = hop[p];
            }
        }
        let spec = BathThermal::new(beta, mu).unwrap();
        let c = thermal_correlation(&h, &spec).unwrap();
        let modes: f64 = h.symmetric_eigenvalues().iter().map(|&e| 1.0 / ((beta * (e - mu)).exp() + 1.0)).sum();
        prop_assert!((c.particle_number() - modes).abs() < 1e-10);
        prop_assert!(c.physicality_defect() < 1e-12);
    }

    #[test]
    fn one_cycle_closes_energy_and_particles(
        re in prop::collection::vec(-1.0f64..1.0, 4),
        im in prop::collection::vec(-1.0f64..1.0, 4),
        occ in prop::collection::vec(0.0f64..1.0, 2),
        tau in 0.1f64..5.0,
    ) {
        let cfg = ModelConfig::lorentzian_pair(0.3, tau, [0.2, 1.0], [-1.0, -1.0]).unwrap();
        let s = prepare_cycle(&cfg).unwrap();
        let c_s = random_state(2, &re, &im, &occ);
        let st = step_thermodynamics(&c_s, &s.hamiltonian, &s.propagator, s.bath_refs(), cfg.thermal()).unwrap();
        prop_assert!(st.energy_closure().abs() < 1e-10);
        prop_assert!(st.particle_closure().abs() < 1e-10);
        prop_assert!(st.first_law_defect().abs() < 1e-10);
        prop_assert!(st.entropy_production >= -1e-10);
    }

    #[test]
    fn tabulated_chains_keep_the_total_weight(values in prop::collection::vec(0.0f64..2.0, 13)) {
        prop_assume!(values.iter().sum::<f64>() > 0.5);
        let table = SpectralTable::new(-3.0, 0.5, values, true).unwrap();
        let sf = SpectralFunction::tabulated(table, 3.0).unwrap();
        let c = chain_map_tridiag(&sf, 3, None).unwrap();
        let weight = sf.total_weight() / (2.0 * std::f64::consts::PI);
        prop_assert!((c.g0() * c.g0() - weight).abs() < 1e-8 * weight);
        prop_assert!(c.hop().iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn drive_is_physical(occ1 in 0.0f64..1.0, occ2 in 0.0f64..1.0, tau in 0.1f64..4.0) {
        let sys = SystemSpec::two_site(1.0).unwrap();
        let c = chain(&[0.3, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0]);
        let h = assemble_hamiltonian(&sys, [&c, &c], 4).unwrap();
        let prop = step_propagator(&h, tau).unwrap();
        let bath = |x: f64| {
            CorrelationMatrix::from_real(&(DMatrix::<f64>::identity(4, 4) * x)).unwrap()
        };
        let p = drive_matrix(&prop, [&bath(occ1), &bath(occ2)]).unwrap();
        let cp = CorrelationMatrix::new(p.matrix().clone()).unwrap();
        prop_assert!(cp.physicality_defect() < 1e-12);
    }
}
