//! Principal-value Hilbert transform `J^H(ω) = (1/π) P∫ J(ω')/(ω − ω') dω'`
//! of a piecewise-linear function.
//!
//! On a single cell `[a, b]` with `J` linear, the integral is
//! `A·ln|(ω−a)/(ω−b)| − (J_b − J_a)` where `A` is the linear extension of `J`
//! evaluated at `ω`. When `ω` is itself a node the two logarithms of the
//! neighbouring cells cancel exactly, which is what makes the transform
//! well defined on the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{check_uniform, FrequencyGrid};
use crate::error::{PrebError, Result};

/// `P∫ J(x)/(ω − x) dx` for the piecewise-linear interpolant through
/// `(xs, js)`, without the `1/π`. O(N) per evaluation point.
pub fn pv_piecewise_linear(xs: &[f64], js: &[f64], omega: f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let (a, b) = (xs[i], xs[i + 1]);
        let (fa, fb) = (js[i], js[i + 1]);
        let h = b - a;
        let tol = 1e-12 * h;
        let da = omega - a;
        let db = omega - b;
        if da.abs() > tol && db.abs() > tol {
            let slope = (fb - fa) / h;
            let at_omega = fa + slope * da;
            acc += at_omega * (da / db).abs().ln();
        }
        acc -= fb - fa;
    }
    acc
}

/// Hilbert transform of samples on a uniform grid, evaluated at the grid
/// nodes. Uses an FFT convolution, O(N log N).
pub fn hilbert_transform(grid: &FrequencyGrid, values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if values.len() != n {
        return Err(PrebError::Dimension(format!(
            "grid has {n} points but {} values were given",
            values.len()
        )));
    }
    let cells = n - 1;
    // Kernel offsets d = k − i range over [−(n−2), n−1].
    let klen = 2 * n - 2;
    let log_kernel = |d: i64| -> f64 {
        if d == 0 || d == 1 {
            0.0
        } else {
            let d = d as f64;
            (d / (d - 1.0)).abs().ln()
        }
    };
    let size = (cells + klen - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    // J_i convolved with L_d plus Δ_i = J_{i+1} − J_i convolved with
    // M_d = d·L_d, summed in frequency space.
    let mut sig_a = vec![Complex64::new(0.0, 0.0); size];
    let mut sig_b = vec![Complex64::new(0.0, 0.0); size];
    for i in 0..cells {
        sig_a[i] = Complex64::new(values[i], 0.0);
        sig_b[i] = Complex64::new(values[i + 1] - values[i], 0.0);
    }
    let mut ker_l = vec![Complex64::new(0.0, 0.0); size];
    let mut ker_m = vec![Complex64::new(0.0, 0.0); size];
    let offset = (n - 2) as i64;
    for (j, (l, m)) in ker_l.iter_mut().zip(ker_m.iter_mut()).take(klen).enumerate() {
        let d = j as i64 - offset;
        let lv = log_kernel(d);
        *l = Complex64::new(lv, 0.0);
        *m = Complex64::new(d as f64 * lv, 0.0);
    }
    for buf in [&mut sig_a, &mut sig_b, &mut ker_l, &mut ker_m] {
        fwd.process(buf);
    }
    let mut prod: Vec<Complex64> =
        sig_a.iter().zip(&ker_l).zip(sig_b.iter().zip(&ker_m)).map(|((a, l), (b, m))| a * l + b * m).collect();
    inv.process(&mut prod);
    let scale = 1.0 / size as f64;
    let boundary = values[n - 1] - values[0];
    Ok((0..n)
        .map(|k| (prod[k + n - 2].re * scale - boundary) / PI)
        .collect())
}

/// Hilbert transform of `(ω, J)` samples; the frequencies must be uniform.
pub fn hilbert_transform_sampled(omegas: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if omegas.len() != values.len() {
        return Err(PrebError::Dimension(format!(
            "{} frequencies but {} values",
            omegas.len(),
            values.len()
        )));
    }
    let step = check_uniform(omegas)?;
    let grid = FrequencyGrid::new(omegas[0], step, omegas.len())?;
    hilbert_transform(&grid, values)
}
