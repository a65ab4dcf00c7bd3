//! One-cycle propagator, drive matrix and the discrete Lyapunov equation
//! `C − G† C G = P` whose solution is the cycle's fixed point.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::correlation::CorrelationMatrix;
use crate::error::{PrebError, Result};
use crate::model::{Block, BlockIndex, SetupHamiltonian};

type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigendecomposition `H = V diag(ε) Vᵀ`, reusable for any τ.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    index: BlockIndex,
}

impl SpectralDecomposition {
    pub fn new(h: &SetupHamiltonian) -> Result<Self> {
        let eig = h
            .matrix()
            .clone()
            .try_symmetric_eigen(1e-15, 10_000)
            .ok_or_else(|| PrebError::Numerical("setup hamiltonian diagonalization failed".into()))?;
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors, index: h.index() })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// `U = e^{−iHτ}`.
    pub fn propagator(&self, tau: f64) -> Result<StepPropagator> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(PrebError::InvalidArgument(format!("tau must be finite and non-negative, got {tau}")));
        }
        let v = self.vectors.map(c);
        let phases = self.values.map(|e| Complex64::from_polar(1.0, -e * tau));
        let mut vp = v.clone();
        for (j, ph) in phases.iter().enumerate() {
            for x in vp.column_mut(j).iter_mut() {
                *x *= ph;
            }
        }
        let u = vp * v.transpose();
        Ok(StepPropagator { u, index: self.index, tau })
    }
}

/// `U = e^{−iHτ}` with its blocks addressed through the setup's index map.
#[derive(Debug, Clone)]
pub struct StepPropagator {
    u: CMatrix,
    index: BlockIndex,
    tau: f64,
}

impl StepPropagator {
    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn index(&self) -> BlockIndex {
        self.index
    }

    pub fn block(&self, rows: Block, cols: Block) -> CMatrix {
        let r = self.index.range(rows);
        let cl = self.index.range(cols);
        self.u.view((r.start, cl.start), (r.len(), cl.len())).into_owned()
    }

    /// `G_S`, the system-to-system block.
    pub fn g_s(&self) -> CMatrix {
        self.block(Block::System, Block::System)
    }

    /// `G_{BℓS}`, rows in bath `ℓ`, columns in the system.
    pub fn g_bs(&self, bath: usize) -> CMatrix {
        self.block(Block::Bath(bath), Block::System)
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.u.nrows();
        let prod = self.u.adjoint() * &self.u - CMatrix::identity(n, n);
        prod.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `e^{−iHτ}` from a fresh eigendecomposition.
pub fn step_propagator(h: &SetupHamiltonian, tau: f64) -> Result<StepPropagator> {
    SpectralDecomposition::new(h)?.propagator(tau)
}

/// Inhomogeneous term `P_S = Σ_ℓ G_{BℓS}† C_{Bℓ} G_{BℓS}` of the cycle map.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveMatrix {
    matrix: CMatrix,
    asymmetry: f64,
}

impl DriveMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Hermiticity defect before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(PrebError::Dimension("drive matrix must be square".into()));
        }
        let asymmetry = (&matrix - matrix.adjoint()).iter().fold(0.0, |m: f64, z| m.max(z.norm()));
        if asymmetry > 1e-8 {
            return Err(PrebError::Numerical(format!("drive matrix is not hermitian ({asymmetry:e})")));
        }
        let matrix = (&matrix + matrix.adjoint()) * c(0.5);
        Ok(Self { matrix, asymmetry })
    }
}

pub fn drive_matrix(prop: &StepPropagator, baths: [&CorrelationMatrix; 2]) -> Result<DriveMatrix> {
    let ls = prop.index.system_sites;
    let mut p = CMatrix::zeros(ls, ls);
    for (l, cb) in baths.iter().enumerate() {
        let g = prop.g_bs(l);
        if cb.dim() != g.nrows() {
            return Err(PrebError::Dimension(format!(
                "bath {} correlation is {}x{} but the chain has {} sites",
                l + 1,
                cb.dim(),
                cb.dim(),
                g.nrows()
            )));
        }
        p += g.adjoint() * cb.matrix() * &g;
    }
    DriveMatrix::from_matrix(p)
}

/// Spectral radius of `G_S` and the relaxation rate `r = −ln(radius)/τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub spectral_radius: f64,
    pub rate: f64,
}

pub fn stability_rate(g_s: &CMatrix, tau: f64) -> Result<Stability> {
    if !g_s.is_square() {
        return Err(PrebError::Dimension("G_S must be square".into()));
    }
    let ev = g_s
        .clone()
        .eigenvalues()
        .ok_or_else(|| PrebError::Numerical("eigenvalues of G_S did not converge".into()))?;
    let spectral_radius = ev.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let rate = if tau > 0.0 { -spectral_radius.ln() / tau } else { 0.0 };
    Ok(Stability { spectral_radius, rate })
}

const CRITICAL_RADIUS: f64 = 1.0 - 1e-12;

fn check_shapes(g: &CMatrix, p: &DriveMatrix) -> Result<()> {
    if !g.is_square() || g.nrows() != p.matrix.nrows() {
        return Err(PrebError::Dimension(format!(
            "G is {}x{}, P is {}x{}",
            g.nrows(),
            g.ncols(),
            p.matrix.nrows(),
            p.matrix.ncols()
        )));
    }
    Ok(())
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * c(0.5)
}

/// Solves `C − G†CG = P` as a dense `n² × n²` linear system.
pub fn solve_dlyap_direct(g: &CMatrix, p: &DriveMatrix) -> Result<CorrelationMatrix> {
    check_shapes(g, p)?;
    let st = stability_rate(g, 1.0)?;
    if st.spectral_radius >= CRITICAL_RADIUS {
        return Err(PrebError::NoUniqueNess { radius: st.spectral_radius });
    }
    let n = g.nrows();
    // vec index of C_kl is k + l·n; (G†CG)_ij = Σ_kl conj(G_ki) G_lj C_kl.
    let mut a = CMatrix::identity(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                for k in 0..n {
                    a[(row, k + l * n)] -= g[(k, i)].conj() * g[(l, j)];
                }
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, p.matrix.iter().copied());
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| PrebError::Numerical("Lyapunov system is singular".into()))?;
    let cm = CMatrix::from_iterator(n, n, sol.iter().copied());
    CorrelationMatrix::new(hermitize(cm))
}

/// Solves `C − G†CG = P` by doubling: `X ← X + A†XA`, `A ← A²`.
pub fn solve_dlyap_doubling(g: &CMatrix, p: &DriveMatrix) -> Result<CorrelationMatrix> {
    check_shapes(g, p)?;
    let mut x = p.matrix.clone();
    let mut a = g.clone();
    for _ in 0..200 {
        let upd = a.adjoint() * &x * &a;
        x += &upd;
        let un = upd.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let xn = x.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if !xn.is_finite() {
            break;
        }
        if un < 1e-14 * xn.max(1.0) {
            return CorrelationMatrix::new(hermitize(x));
        }
        a = &a * &a;
    }
    Err(PrebError::Numerical("Lyapunov doubling did not converge in 200 iterations".into()))
}

/// Direct solve for small systems, doubling beyond 32 sites.
pub fn solve_dlyap(g: &CMatrix, p: &DriveMatrix) -> Result<CorrelationMatrix> {
    if g.nrows() <= 32 {
        solve_dlyap_direct(g, p)
    } else {
        let st = stability_rate(g, 1.0)?;
        if st.spectral_radius >= CRITICAL_RADIUS {
            return Err(PrebError::NoUniqueNess { radius: st.spectral_radius });
        }
        solve_dlyap_doubling(g, p)
    }
}

/// `max |C − G†CG − P|`.
pub fn lyapunov_residual(g: &CMatrix, p: &DriveMatrix, cm: &CorrelationMatrix) -> f64 {
    let r = cm.matrix() - g.adjoint() * cm.matrix() * g - &p.matrix;
    r.iter().fold(0.0, |m, z| m.max(z.norm()))
}
