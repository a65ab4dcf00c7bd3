use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{PrebError, Result};

/// Single-particle correlation matrix `C[p][q] = ⟨d_p† d_q⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    matrix: DMatrix<Complex64>,
}

impl CorrelationMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(PrebError::Dimension(format!(
                "correlation matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, n) }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// Occupation of site `p`.
    pub fn occupation(&self, p: usize) -> f64 {
        self.matrix[(p, p)].re
    }

    /// Total particle number `Tr C`.
    pub fn particle_number(&self) -> f64 {
        (0..self.dim()).map(|p| self.occupation(p)).sum()
    }

    /// `max |C − C†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                d = d.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Distance of the spectrum from `[0, 1]` (zero for a physical state).
    pub fn physicality_defect(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0f64, |d, &x| d.max(-x).max(x - 1.0))
    }

    /// Entry-wise maximum distance.
    pub fn max_distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Block-diagonal matrix with the given blocks in order.
    pub fn block_diag(blocks: &[&CorrelationMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let k = b.dim();
            m.view_mut((off, off), (k, k)).copy_from(&b.matrix);
            off += k;
        }
        Self { matrix: m }
    }

    /// Square sub-block starting at `start` of size `len`.
    pub fn sub_block(&self, start: usize, len: usize) -> Self {
        Self { matrix: self.matrix.view((start, start), (len, len)).into_owned() }
    }
}

/// Von Neumann entropy of a Gaussian state, `−Σ [n ln n + (1−n) ln(1−n)]`
/// over the eigenvalues `n` of `C`, clipped to `[1e-14, 1 − 1e-14]`.
pub fn gaussian_entropy(c: &CorrelationMatrix) -> f64 {
    const CLIP: f64 = 1e-14;
    c.eigenvalues()
        .into_iter()
        .map(|n| {
            let n = n.clamp(CLIP, 1.0 - CLIP);
            -(n * n.ln() + (1.0 - n) * (1.0 - n).ln())
        })
        .sum()
}
