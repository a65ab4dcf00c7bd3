use crate::error::{PrebError, Result};

/// Uniform frequency grid `ω_j = start + j·step`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len < 2 || !(step > 0.0) || !start.is_finite() {
            return Err(PrebError::InvalidArgument(format!(
                "grid needs len >= 2 and a positive step (len {len}, step {step})"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Grid symmetric about zero covering `[−Λ−δ, Λ+δ]` with `δ ≈ margin·Λ`.
    ///
    /// The margin is nudged so that `±Λ` fall exactly on nodes.
    pub fn for_cutoff(cutoff: f64, margin: f64, len: usize) -> Result<Self> {
        if len < 8 || !(cutoff > 0.0) || !(margin > 0.0) {
            return Err(PrebError::InvalidArgument(format!(
                "cutoff grid needs len >= 8, cutoff > 0 and margin > 0 (len {len}, cutoff {cutoff}, margin {margin})"
            )));
        }
        let n1 = (len - 1) as f64;
        let h0 = 2.0 * cutoff * (1.0 + margin) / n1;
        let m = ((cutoff * margin / h0).round() as usize).max(1);
        if 2 * m + 1 >= len {
            return Err(PrebError::InvalidArgument("margin too large for the grid size".into()));
        }
        let step = 2.0 * cutoff / (n1 - 2.0 * m as f64);
        let half = cutoff + m as f64 * step;
        Self::new(-half, step, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn point(&self, j: usize) -> f64 {
        self.start + self.step * j as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |j| self.point(j))
    }

    /// `∫ f` of the piecewise-linear interpolant.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let inner: f64 = values.iter().sum();
        self.step * (inner - 0.5 * (values[0] + values[self.len - 1]))
    }

    /// `∫ ω f(ω) dω` of the piecewise-linear interpolant (exact).
    pub fn first_moment(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let h = self.step;
        let mut acc = 0.0;
        for j in 0..self.len - 1 {
            let (a, b) = (self.point(j), self.point(j + 1));
            let (fa, fb) = (values[j], values[j + 1]);
            acc += 2.0 * a * fa + a * fb + b * fa + 2.0 * b * fb;
        }
        acc * h / 6.0
    }
}

/// Values of a function on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
}

/// Returns the common step of `omegas`, or an error if the spacing varies by
/// more than a relative `1e-9`.
pub fn check_uniform(omegas: &[f64]) -> Result<f64> {
    if omegas.len() < 2 {
        return Err(PrebError::InvalidArgument("need at least two frequencies".into()));
    }
    let n = omegas.len();
    let step = (omegas[n - 1] - omegas[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(PrebError::InvalidArgument("frequencies must be increasing".into()));
    }
    for (i, w) in omegas.windows(2).enumerate() {
        let dev = ((w[1] - w[0]) - step).abs() / step;
        if dev > 1e-9 {
            return Err(PrebError::NonUniformGrid { index: i, deviation: dev });
        }
    }
    Ok(step)
}
