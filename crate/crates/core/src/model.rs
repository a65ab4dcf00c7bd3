//! Single-particle Hamiltonian of system plus two truncated chains.
//!
//! Site ordering is `[S | B1 | B2]`: the system sites, then chain 1 sites
//! `1..=L_B`, then chain 2 sites `1..=L_B`.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::correlation::CorrelationMatrix;
use crate::error::{PrebError, Result};
use crate::spectral::{BathThermal, ChainCoefficients};

/// Quadratic system Hamiltonian and the sites that couple to each bath.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    hamiltonian: DMatrix<f64>,
    coupling_sites: [usize; 2],
}

impl SystemSpec {
    pub fn new(hamiltonian: DMatrix<f64>, coupling_sites: [usize; 2]) -> Result<Self> {
        let n = hamiltonian.nrows();
        if n == 0 || !hamiltonian.is_square() {
            return Err(PrebError::Dimension("system hamiltonian must be square and non-empty".into()));
        }
        if hamiltonian.iter().any(|x| !x.is_finite()) {
            return Err(PrebError::InvalidArgument("system hamiltonian has non-finite entries".into()));
        }
        let asym = (&hamiltonian - hamiltonian.transpose()).amax();
        if asym > 1e-12 * hamiltonian.amax().max(1.0) {
            return Err(PrebError::InvalidArgument(format!("system hamiltonian is not symmetric ({asym:e})")));
        }
        if coupling_sites.iter().any(|&s| s >= n) {
            return Err(PrebError::InvalidArgument(format!(
                "coupling sites {coupling_sites:?} out of range for {n} system sites"
            )));
        }
        Ok(Self { hamiltonian, coupling_sites })
    }

    /// Two sites with zero on-site energy joined by `hopping`; site 0 couples
    /// to bath 1 and site 1 to bath 2.
    pub fn two_site(hopping: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[0.0, hopping, hopping, 0.0]), [0, 1])
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn coupling_sites(&self) -> [usize; 2] {
        self.coupling_sites
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

/// Part of the composite single-particle space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    System,
    Bath(usize),
}

/// Index ranges of the blocks in `[S | B1 | B2]` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub system_sites: usize,
    pub chain_len: usize,
}

impl BlockIndex {
    pub fn range(&self, block: Block) -> Range<usize> {
        match block {
            Block::System => 0..self.system_sites,
            Block::Bath(l) => {
                assert!(l < 2, "bath index must be 0 or 1");
                let start = self.system_sites + l * self.chain_len;
                start..start + self.chain_len
            }
        }
    }

    pub fn total(&self) -> usize {
        self.system_sites + 2 * self.chain_len
    }
}

/// Hamiltonian of one collision: system plus two chains of `L_B` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupHamiltonian {
    matrix: DMatrix<f64>,
    index: BlockIndex,
    coupling_sites: [usize; 2],
}

impl SetupHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index(&self) -> BlockIndex {
        self.index
    }

    pub fn coupling_sites(&self) -> [usize; 2] {
        self.coupling_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rectangular block `H[rows, cols]`.
    pub fn block(&self, rows: Block, cols: Block) -> DMatrix<f64> {
        let r = self.index.range(rows);
        let c = self.index.range(cols);
        self.matrix.view((r.start, c.start), (r.len(), c.len())).into_owned()
    }

    /// Hamiltonian restricted to `{X}` with all other blocks zeroed, in the
    /// full space. Used to take expectation values.
    pub fn embedded(&self, rows: Block, cols: Block) -> DMatrix<f64> {
        let r = self.index.range(rows);
        let c = self.index.range(cols);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        m.view_mut((r.start, c.start), (r.len(), c.len()))
            .copy_from(&self.matrix.view((r.start, c.start), (r.len(), c.len())));
        m
    }
}

/// Builds the `(L_S + 2 L_B)`-dimensional setup Hamiltonian.
///
/// Chains shorter than `chain_len` are continued with their asymptotic
/// coefficients; a chain that terminated (finite bath) cannot be extended.
pub fn assemble_hamiltonian(
    system: &SystemSpec,
    chains: [&ChainCoefficients; 2],
    chain_len: usize,
) -> Result<SetupHamiltonian> {
    if chain_len == 0 {
        return Err(PrebError::InvalidArgument("chain length must be at least 1".into()));
    }
    for (l, c) in chains.iter().enumerate() {
        if c.terminated() && c.depth() < chain_len {
            return Err(PrebError::Dimension(format!(
                "bath {} has only {} chain sites, {} requested",
                l + 1,
                c.depth(),
                chain_len
            )));
        }
    }
    let index = BlockIndex { system_sites: system.dim(), chain_len };
    let n = index.total();
    let mut h = DMatrix::zeros(n, n);
    let ls = system.dim();
    h.view_mut((0, 0), (ls, ls)).copy_from(system.hamiltonian());
    for (l, chain) in chains.iter().enumerate() {
        let off = index.range(Block::Bath(l)).start;
        let s = system.coupling_sites[l];
        let g0 = chain.hopping(0);
        h[(s, off)] = g0;
        h[(off, s)] = g0;
        for p in 1..=chain_len {
            let i = off + p - 1;
            h[(i, i)] = chain.site_energy(p);
            if p < chain_len {
                let g = chain.hopping(p);
                h[(i, i + 1)] = g;
                h[(i + 1, i)] = g;
            }
        }
    }
    Ok(SetupHamiltonian { matrix: h, index, coupling_sites: system.coupling_sites })
}

/// Thermal correlation matrix `f(H_B)` of a quadratic bath Hamiltonian.
pub fn thermal_correlation(h_b: &DMatrix<f64>, spec: &BathThermal) -> Result<CorrelationMatrix> {
    if !h_b.is_square() {
        return Err(PrebError::Dimension("bath hamiltonian must be square".into()));
    }
    let eig = h_b
        .clone()
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or_else(|| PrebError::Numerical("bath hamiltonian diagonalization failed".into()))?;
    let f = eig.eigenvalues.map(|e| spec.occupation(e));
    let v = &eig.eigenvectors;
    let c = v * DMatrix::from_diagonal(&f) * v.transpose();
    let c = (&c + c.transpose()) * 0.5;
    CorrelationMatrix::new(c.map(|x| Complex64::new(x, 0.0)))
}

/// Round up with a relative slack so that exact products are not bumped.
fn ceil_tol(x: f64) -> usize {
    let c = (x * (1.0 - 1e-12)).ceil();
    if c < 0.0 { 0 } else { c as usize }
}

/// Chain sites needed so that the light cone `g_B τ` stays inside the chain,
/// plus a safety margin `l0`.
pub fn chain_length_for_tau(g_b: f64, tau: f64, l0: usize) -> Result<usize> {
    if !(g_b > 0.0) || !(tau >= 0.0) || !tau.is_finite() {
        return Err(PrebError::InvalidArgument(format!("need g_B > 0 and tau >= 0 (got {g_b}, {tau})")));
    }
    let n = ceil_tol(g_b * tau) + l0;
    if n == 0 {
        return Err(PrebError::InvalidArgument("chain length evaluates to zero; use l0 >= 1".into()));
    }
    Ok(n)
}

/// Number of fresh bath copies so that a copy is reused only after the
/// rethermalization time: `⌈τ_R/τ⌉ + 1`.
pub fn copies_required(tau_r: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !(tau_r >= 0.0) {
        return Err(PrebError::InvalidArgument(format!("need tau > 0 and tau_R >= 0 (got {tau}, {tau_r})")));
    }
    Ok(ceil_tol(tau_r / tau) + 1)
}

/// Rethermalization time estimate `factor/(2λ)` for a Lorentzian of half-width λ.
pub fn rethermalization_estimate(width: f64, factor: f64) -> Result<f64> {
    if !(width > 0.0) || !(factor > 0.0) {
        return Err(PrebError::InvalidArgument("width and factor must be positive".into()));
    }
    Ok(factor / (2.0 * width))
}
