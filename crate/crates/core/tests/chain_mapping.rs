use std::f64::consts::PI;

use preb_core::spectral::{
    chain_map_recursion, chain_map_tridiag, hilbert_transform, ChainCoefficients, FrequencyGrid, RecursionOptions,
    SpectralFunction, SpectralTable,
};

fn golden() -> SpectralFunction {
    SpectralFunction::lorentzian(2.0, 0.01, 2.0, 6.0).unwrap()
}

/// Orthonormal Legendre recurrence on [−Λ, Λ]: `g_p = Λ p / √(4p² − 1)`.
fn legendre_hopping(cutoff: f64, p: usize) -> f64 {
    let p = p as f64;
    cutoff * p / (4.0 * p * p - 1.0).sqrt()
}

#[test]
fn lorentzian_reaction_coordinate() {
    let sf = golden();
    for chain in [
        chain_map_tridiag(&sf, 4, None).unwrap(),
        chain_map_recursion(&sf, 4, &RecursionOptions::default()).unwrap(),
    ] {
        assert!((chain.g0() - 1.0).abs() < 0.02, "g0 = {}", chain.g0());
        assert!((chain.site_energy(1) - 2.0).abs() < 0.02, "eps1 = {}", chain.site_energy(1));
    }
    let one = chain_map_recursion(&sf, 1, &RecursionOptions::default()).unwrap();
    let res = one.residual().unwrap();
    let k = ((2.0 - res.grid.start()) / res.grid.step()).round() as usize;
    assert!((res.values[k] - 0.02).abs() < 0.02 * 0.02);
}

#[test]
fn flat_band_follows_legendre_recurrence() {
    let (level, cutoff) = (0.7, 6.0);
    let sf = SpectralFunction::flat(level, cutoff).unwrap();
    let tri = chain_map_tridiag(&sf, 9, None).unwrap();
    let rec = chain_map_recursion(&sf, 9, &RecursionOptions::default()).unwrap();
    let g0 = (level * cutoff / PI).sqrt();
    for chain in [&tri, &rec] {
        assert!((chain.g0() - g0).abs() < 1e-6 * g0);
        for p in 1..9 {
            let want = legendre_hopping(cutoff, p);
            assert!((chain.hopping(p) - want).abs() < 1e-4 * want, "p = {p}: {} vs {want}", chain.hopping(p));
            assert!(chain.site_energy(p).abs() < 1e-8);
        }
    }
    for p in 0..9 {
        assert!((tri.hopping(p) - rec.hopping(p)).abs() < 1e-4 * tri.hopping(p));
    }
}

#[test]
fn even_densities_have_zero_site_energies() {
    let values: Vec<f64> = (0..41).map(|k| -4.0 + 0.2 * k as f64).map(|w: f64| (-(w * w) / 3.0).exp()).collect();
    let table = SpectralTable::new(-4.0, 0.2, values, true).unwrap();
    let shapes = [
        SpectralFunction::lorentzian(2.0, 0.3, 0.0, 6.0).unwrap(),
        SpectralFunction::tabulated(table, 4.0).unwrap(),
    ];
    for sf in &shapes {
        for chain in [
            chain_map_tridiag(sf, 8, None).unwrap(),
            chain_map_recursion(sf, 8, &RecursionOptions::default()).unwrap(),
        ] {
            let worst = chain.eps().iter().fold(0.0f64, |m, e| m.max(e.abs()));
            assert!(worst < 1e-8, "max |eps_p| = {worst}");
        }
    }
}

#[test]
fn methods_agree_on_the_golden_density() {
    let sf = golden();
    let tri = chain_map_tridiag(&sf, 8, None).unwrap();
    let rec = chain_map_recursion(&sf, 8, &RecursionOptions::default()).unwrap();
    for p in 0..8 {
        assert!((tri.eps()[p] - rec.eps()[p]).abs() < 1e-3);
        assert!((tri.hop()[p] - rec.hop()[p]).abs() < 1e-3);
    }
}

#[test]
fn chain_csv_round_trip() {
    let chain = chain_map_tridiag(&golden(), 6, None).unwrap();
    let path = std::env::temp_dir().join(format!("preb-chain-{}.csv", std::process::id()));
    chain.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p,eps,hop\n0,,"));
    let back = ChainCoefficients::read_csv(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(back.eps(), chain.eps());
    assert_eq!(back.hop(), chain.hop());
}

#[test]
fn spectral_table_round_trip() {
    let table = SpectralTable::new(-1.0, 0.25, vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.2, 0.1, 0.0, 0.0], true).unwrap();
    let path = std::env::temp_dir().join(format!("preb-table-{}.csv", std::process::id()));
    table.write_csv(&path).unwrap();
    let back = SpectralTable::read_csv(&path, true).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(back.values, table.values);
    assert!((back.start - table.start).abs() < 1e-15 && (back.step - table.step).abs() < 1e-15);
}

#[test]
fn hilbert_of_zero_is_zero() {
    let grid = FrequencyGrid::new(-3.0, 0.01, 601).unwrap();
    let h = hilbert_transform(&grid, &vec![0.0; 601]).unwrap();
    assert!(h.iter().all(|&x| x == 0.0));
}
