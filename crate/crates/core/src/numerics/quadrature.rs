use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::SampledFunction1D;
use crate::error::{domain, Result};

/// Quadrature weights for `count` uniformly spaced samples with spacing `step`.
///
/// Odd counts use composite Simpson. Even counts ≥ 4 use Simpson on all but
/// the last three intervals and Simpson's 3/8 rule on those, which keeps the
/// O(step⁴) order. Two points fall back to the trapezoid rule.
pub fn quadrature_weights(count: usize, step: f64) -> Result<Vec<f64>> {
    if count < 2 {
        return domain(format!("quadrature needs at least 2 samples, got {count}"));
    }
    let mut w = vec![0.0; count];
    if count == 2 {
        w[0] = 0.5 * step;
        w[1] = 0.5 * step;
        return Ok(w);
    }
    let simpson_end = if count % 2 == 1 { count - 1 } else { count - 4 };
    for start in (0..simpson_end).step_by(2) {
        w[start] += step / 3.0;
        w[start + 1] += 4.0 * step / 3.0;
        w[start + 2] += step / 3.0;
    }
    if count.is_multiple_of(2) {
        let s = simpson_end;
        let c = 3.0 * step / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    Ok(w)
}

/// Integral of uniformly spaced samples.
pub fn integrate_values(values: &[f64], step: f64) -> Result<f64> {
    let w = quadrature_weights(values.len(), step)?;
    Ok(w.iter().zip(values).map(|(w, v)| w * v).sum())
}

pub fn integrate(f: &SampledFunction1D) -> Result<f64> {
    integrate_values(f.values(), f.grid().step())
}

/// Index `n` such that `value = n · grain`, or a domain error when `value`
/// is not on the discrete scale.
pub fn grain_index(value: f64, grain: f64) -> Result<i64> {
    if !value.is_finite() || !(grain > 0.0) {
        return domain(format!("invalid value {value} or grain {grain}"));
    }
    let ratio = value / grain;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * n.abs().max(1.0) {
        return domain(format!(
            "{value} is not an integer multiple of the grain {grain}"
        ));
    }
    Ok(n as i64)
}

/// `(1/√T) ∫₀ᵀ f(t) e^{iωt} dt` for samples on `[start, start + T]`; `ω` must be
/// a multiple of `2π/T`.
pub fn spectral_projection_values(values: &[f64], step: f64, omega: f64) -> Result<Complex64> {
    if values.len() < 2 {
        return domain("spectral projection needs at least 2 samples");
    }
    let period = step * (values.len() - 1) as f64;
    grain_index(omega, 2.0 * PI / period)?;
    let w = quadrature_weights(values.len(), step)?;
    let mut re = 0.0;
    let mut im = 0.0;
    for (j, (w, v)) in w.iter().zip(values).enumerate() {
        let phase = omega * step * j as f64;
        re += w * v * phase.cos();
        im += w * v * phase.sin();
    }
    Ok(Complex64::new(re, im) / period.sqrt())
}

pub fn spectral_projection(f: &SampledFunction1D, omega: f64) -> Result<Complex64> {
    if f.grid().start() != 0.0 {
        return domain("spectral projection expects a function sampled on [0, T]");
    }
    spectral_projection_values(f.values(), f.grid().step(), omega)
}
