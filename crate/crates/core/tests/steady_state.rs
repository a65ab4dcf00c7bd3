use nalgebra::DMatrix;
use preb_core::config::{ModelConfig, Preset, Spacing, SweepAxis, SweepSpec};
use preb_core::correlation::CorrelationMatrix;
use preb_core::dynamics::{cumulative_thermo, preb_step, preb_trajectory, trajectory_thermodynamics};
use preb_core::model::{assemble_hamiltonian, SystemSpec};
use preb_core::negf::{landauer_currents, NegfOptions};
use preb_core::pipeline::{prepare_cycle, run_ness, solve_ness};
use preb_core::propagator::{drive_matrix, solve_dlyap, stability_rate, step_propagator};
use preb_core::spectral::ChainCoefficients;
use preb_core::sweep::{run_sweep, write_report_csv, write_sweep_csv};
use preb_core::thermo::{tight_coupling_check, Regime};
use preb_core::PrebError;

#[test]
fn presets_land_in_their_regimes() {
    let engine = run_ness(&ModelConfig::preset(Preset::HeatEngine, 0.05, 1.0).unwrap()).unwrap();
    assert_eq!(engine.classification.regime, Regime::HeatEngine);
    assert!(engine.rates.p_ext < 0.0 && engine.rates.heat[0] < 0.0);

    let fridge = run_ness(&ModelConfig::preset(Preset::Refrigerator, 0.05, 1.0).unwrap()).unwrap();
    assert_eq!(fridge.classification.regime, Regime::Refrigerator);

    let equal = run_ness(&ModelConfig::preset(Preset::EqualBaths, 0.05, 1.0).unwrap()).unwrap();
    assert_eq!(equal.classification.regime, Regime::Dud);
    assert!(equal.rates.p_ext >= -1e-10);
}

#[test]
fn single_temperature_yields_no_work() {
    for tau in [0.2, 1.0, 5.0] {
        for width in [0.05, 1.0] {
            let cfg = ModelConfig::lorentzian_pair(width, tau, [0.5, 0.5], [-1.0, -1.0]).unwrap();
            let r = run_ness(&cfg).unwrap();
            assert!(r.rates.p_ext >= -1e-10, "tau {tau} width {width}: {}", r.rates.p_ext);
            assert_eq!(r.rates.p_chem, 0.0);
        }
    }
}

#[test]
fn broad_baths_break_tight_coupling() {
    let cfg = ModelConfig::preset(Preset::HeatEngine, 2.0, 1.0).unwrap();
    let r = run_ness(&cfg).unwrap();
    let d = tight_coupling_check(&r.rates, [2.0, -1.0], r.mu);
    let rel = d[0] / r.rates.heat[0].abs();
    assert!(rel > 0.1, "relative defect {rel}");
}

#[test]
fn fixed_point_is_invariant() {
    let sol = solve_ness(&ModelConfig::preset(Preset::HeatEngine, 0.1, 1.0).unwrap()).unwrap();
    let next = preb_step(&sol.c_ness, &sol.setup.propagator, &sol.setup.drive).unwrap();
    assert!(next.max_distance(&sol.c_ness) < 1e-12);
    assert!(sol.c_ness.physicality_defect() < 1e-12);
}

#[test]
fn decoupled_setup_has_no_steady_state() {
    let sys = SystemSpec::two_site(1.0).unwrap();
    let chain = ChainCoefficients::new(vec![0.0; 4], vec![0.0, 1.0, 1.0, 1.0]).unwrap();
    let ham = assemble_hamiltonian(&sys, [&chain, &chain], 4).unwrap();
    let prop = step_propagator(&ham, 1.0).unwrap();
    let st = stability_rate(&prop.g_s(), 1.0).unwrap();
    assert!((st.spectral_radius - 1.0).abs() < 1e-12);
    assert!(st.rate.abs() < 1e-12);
    let baths = [CorrelationMatrix::zeros(4), CorrelationMatrix::zeros(4)];
    let drive = drive_matrix(&prop, [&baths[0], &baths[1]]).unwrap();
    let err = solve_dlyap(&prop.g_s(), &drive).unwrap_err();
    assert!(matches!(err, PrebError::NoUniqueNess { .. }));
    assert_eq!(err.exit_code(), 3);

    // Closed system: particle number is conserved along the trajectory.
    let mut c0 = DMatrix::zeros(2, 2);
    c0[(0, 0)] = 0.8;
    c0[(1, 1)] = 0.1;
    let c0 = CorrelationMatrix::from_real(&c0).unwrap();
    let traj = preb_trajectory(&c0, 10, &prop, &drive).unwrap();
    assert!(traj.dist_to_ness.is_empty());
    for c in &traj.states {
        assert!((c.particle_number() - 0.9).abs() < 1e-12);
    }
}

#[test]
fn trajectory_of_one_step_is_one_cycle() {
    let sol = solve_ness(&ModelConfig::preset(Preset::Refrigerator, 0.2, 0.7).unwrap()).unwrap();
    let s = &sol.setup;
    let c0 = CorrelationMatrix::zeros(2);
    let traj = preb_trajectory(&c0, 1, &s.propagator, &s.drive).unwrap();
    assert_eq!(traj.states[0], preb_step(&c0, &s.propagator, &s.drive).unwrap());
    assert_eq!(traj.states[0].matrix(), s.drive.matrix());
}

#[test]
fn long_trajectory_reproduces_steady_rates() {
    let cfg = ModelConfig::preset(Preset::Refrigerator, 0.05, 1.0).unwrap();
    let sol = solve_ness(&cfg).unwrap();
    let s = &sol.setup;
    let (traj, steps) = trajectory_thermodynamics(
        &CorrelationMatrix::zeros(2),
        150,
        &s.hamiltonian,
        &s.propagator,
        &s.drive,
        s.bath_refs(),
        cfg.thermal(),
    )
    .unwrap();
    let mut total = 0.0;
    for st in &steps {
        assert!(st.entropy_production >= 0.0);
        let next = total + st.entropy_production;
        assert!(next >= total);
        total = next;
    }
    let start = traj.dist_to_ness.iter().position(|&d| d < 1e-12).unwrap() + 1;
    let r = cumulative_thermo(&steps[start..], cfg.process.tau).rates;
    let ness = &sol.report.rates;
    let scale = ness.scale();
    assert!((r.w_ext - ness.p_ext).abs() < 1e-6 * scale);
    assert!((r.heat[0] - ness.heat[0]).abs() < 1e-6 * scale);
    assert!((r.heat[1] - ness.heat[1]).abs() < 1e-6 * scale);
}

#[test]
fn long_cycles_reach_the_continuous_occupations() {
    let cfg = ModelConfig::preset(Preset::HeatEngine, 1.0, 20.0).unwrap();
    let setup = prepare_cycle(&cfg).unwrap();
    let traj = preb_trajectory(&CorrelationMatrix::zeros(2), 30, &setup.propagator, &setup.drive).unwrap();
    let end = traj.states.last().unwrap();
    let negf = landauer_currents(&cfg.system, cfg.spectral(), cfg.thermal(), &NegfOptions::default()).unwrap();
    for site in 0..2 {
        let rel = (end.occupation(site) - negf.occupations[site]).abs() / negf.occupations[site];
        assert!(rel < 0.02, "site {site}: {} vs {}", end.occupation(site), negf.occupations[site]);
    }
}

#[test]
fn sweep_rows_match_single_runs_and_are_deterministic() {
    let base = ModelConfig::preset(Preset::HeatEngine, 0.05, 1.0).unwrap();
    let spec = SweepSpec::new(SweepAxis::Tau, 0.1, 4.0, 6, Spacing::Log).unwrap();
    let rows = run_sweep(&base, &spec, 3).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.windows(2).all(|w| w[0].value < w[1].value));
    for row in &rows {
        let single = run_ness(&base.with_axis(SweepAxis::Tau, row.value).unwrap()).unwrap();
        assert_eq!(row.outcome.as_ref().unwrap(), &single);
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_sweep_csv(&mut a, &rows).unwrap();
    write_sweep_csv(&mut b, &run_sweep(&base, &spec, 1).unwrap()).unwrap();
    assert_eq!(a, b);

    let mut one = Vec::new();
    write_report_csv(&mut one, &[run_ness(&base).unwrap()]).unwrap();
    let mut two = Vec::new();
    write_report_csv(&mut two, &[run_ness(&base).unwrap()]).unwrap();
    assert_eq!(one, two);
}

#[test]
fn failing_sweep_points_are_recorded() {
    let base = ModelConfig::preset(Preset::HeatEngine, 0.05, 1.0).unwrap();
    // beta1 above beta2 violates the hot/cold ordering for part of the grid.
    let spec = SweepSpec::new(SweepAxis::Beta1, 0.5, 2.0, 4, Spacing::Linear).unwrap();
    let rows = run_sweep(&base, &spec, 2).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].outcome.is_ok());
    assert!(rows[3].outcome.is_err());
    let mut out = Vec::new();
    write_sweep_csv(&mut out, &rows).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].ends_with(",Ncopies,error"));
    assert_eq!(lines.len(), 5);
    let last: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(last[0], "1");
    assert_eq!(last[3], "2");
    assert!(last.last().unwrap().contains("beta"));
}
