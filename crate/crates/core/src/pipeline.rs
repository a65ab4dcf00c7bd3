//! End-to-end evaluation of one parameter point: chain mapping, setup
//! Hamiltonian, propagator, fixed point and steady-state report.

use crate::config::{ChainMethod, ModelConfig};
use crate::correlation::CorrelationMatrix;
use crate::error::{PrebError, Result};
use crate::model::{
    assemble_hamiltonian, chain_length_for_tau, copies_required, rethermalization_estimate, thermal_correlation,
    Block, SetupHamiltonian,
};
use crate::propagator::{drive_matrix, solve_dlyap, stability_rate, DriveMatrix, Stability, StepPropagator};
use crate::spectral::{chain_map_recursion, chain_map_tridiag, ChainCoefficients, RecursionOptions};
use crate::thermo::{classify_regime, ness_rates, NessReport};

/// Chain coefficients of both baths to the given depth.
pub fn build_chains(cfg: &ModelConfig, depth: usize) -> Result<[ChainCoefficients; 2]> {
    let one = |l: usize| -> Result<ChainCoefficients> {
        let sf = &cfg.baths[l].spectral;
        match cfg.process.chain_method {
            ChainMethod::Tridiag => {
                let n = cfg.process.n_modes.map(|n| n.max(50 * depth));
                chain_map_tridiag(sf, depth, n)
            }
            ChainMethod::Recursion => {
                let opts = RecursionOptions { grid_points: cfg.process.grid_points, ..Default::default() };
                chain_map_recursion(sf, depth, &opts)
            }
        }
    };
    Ok([one(0)?, one(1)?])
}

/// Everything needed to run cycles at one parameter point.
#[derive(Debug, Clone)]
pub struct CycleSetup {
    pub chains: [ChainCoefficients; 2],
    pub hamiltonian: SetupHamiltonian,
    pub propagator: StepPropagator,
    pub baths: [CorrelationMatrix; 2],
    pub drive: DriveMatrix,
    pub chain_len: usize,
}

impl CycleSetup {
    pub fn bath_refs(&self) -> [&CorrelationMatrix; 2] {
        [&self.baths[0], &self.baths[1]]
    }
}

/// Chain length for the configured τ: the light cone of the asymptotic
/// hopping plus `l0` sites.
pub fn chain_len_for(cfg: &ModelConfig, chains: &[ChainCoefficients; 2]) -> Result<usize> {
    let g_b = chains.iter().map(|c| c.hop_asym()).fold(0.0, f64::max);
    chain_length_for_tau(g_b, cfg.process.tau, cfg.process.l0)
}

pub fn prepare_cycle(cfg: &ModelConfig) -> Result<CycleSetup> {
    let depth = cfg.process.depth;
    let mut chains = build_chains(cfg, depth)?;
    let chain_len = chain_len_for(cfg, &chains)?;
    if chain_len > depth {
        chains = build_chains(cfg, chain_len)?;
    }
    prepare_cycle_with(cfg, chains, chain_len)
}

/// Like [`prepare_cycle`] with precomputed chains and an explicit length.
pub fn prepare_cycle_with(cfg: &ModelConfig, chains: [ChainCoefficients; 2], chain_len: usize) -> Result<CycleSetup> {
    let hamiltonian = assemble_hamiltonian(&cfg.system, [&chains[0], &chains[1]], chain_len)?;
    let baths = [0, 1].map(|l| {
        thermal_correlation(&hamiltonian.block(Block::Bath(l), Block::Bath(l)), &cfg.baths[l].thermal)
    });
    let [b0, b1] = baths;
    let baths = [b0?, b1?];
    let propagator = crate::propagator::step_propagator(&hamiltonian, cfg.process.tau)?;
    let unitarity = propagator.unitarity_defect();
    if unitarity > 1e-10 {
        return Err(PrebError::Numerical(format!("propagator is not unitary ({unitarity:e})")));
    }
    let drive = drive_matrix(&propagator, [&baths[0], &baths[1]])?;
    Ok(CycleSetup { chains, hamiltonian, propagator, baths, drive, chain_len })
}

#[derive(Debug, Clone)]
pub struct NessSolution {
    pub setup: CycleSetup,
    pub c_ness: CorrelationMatrix,
    pub report: NessReport,
}

pub fn solve_ness(cfg: &ModelConfig) -> Result<NessSolution> {
    solve_ness_on(cfg, prepare_cycle(cfg)?)
}

pub fn solve_ness_on(cfg: &ModelConfig, setup: CycleSetup) -> Result<NessSolution> {
    let g_s = setup.propagator.g_s();
    let stability: Stability = stability_rate(&g_s, cfg.process.tau)?;
    let c_ness = solve_dlyap(&g_s, &setup.drive)?;
    let rates = ness_rates(&c_ness, &setup.hamiltonian, &setup.propagator, &setup.drive, setup.bath_refs(), cfg.thermal())?;
    let classification = classify_regime(&rates, cfg.thermal())?;
    let widths: Vec<f64> = cfg.baths.iter().filter_map(|b| b.spectral.width()).collect();
    let copies = if widths.len() == 2 {
        let w = widths.iter().copied().fold(f64::INFINITY, f64::min);
        let tau_r = rethermalization_estimate(w, cfg.process.tau_r_factor)?;
        Some(copies_required(tau_r, cfg.process.tau)?)
    } else {
        None
    };
    let report = NessReport {
        tau: cfg.process.tau,
        lambda: cfg.baths[0].spectral.width(),
        mu: [cfg.baths[0].thermal.mu, cfg.baths[1].thermal.mu],
        beta: [cfg.baths[0].thermal.beta, cfg.baths[1].thermal.beta],
        rates,
        classification,
        stability,
        copies,
        chain_len: setup.chain_len,
    };
    Ok(NessSolution { setup, c_ness, report })
}

pub fn run_ness(cfg: &ModelConfig) -> Result<NessReport> {
    Ok(solve_ness(cfg)?.report)
}
