//! Schmidt modes of the full memory cycle.
//!
//! The cycle kernel satisfies `∫ G(t, t′) φᵢ(t′) dt′ = √λᵢ φᵢ(t)`: the
//! eigensolver returns the *operator* eigenvalues `√λᵢ`, while `λᵢ` (what the
//! read-out formulas consume) is their square. Both are kept, under distinct
//! names.
//!
//! The integral operator is discretised with the same Simpson weights `w` used
//! everywhere else, in the symmetric Nyström form `W^{1/2} G W^{1/2}`, so that
//! the sampled modes are orthonormal under Simpson quadrature.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::kernels::{CycleKernel, WriteKernel};
use crate::numerics::{
    eigh_symmetric, quadrature_weights, spectral_projection, SampledFunction1D, UniformGrid,
};

pub const DEFAULT_MODES: usize = 8;

/// Spatial modes are only formed above this λ; the `(4λ)^{-1/4}` factor
/// diverges as λ → 0.
pub const SPATIAL_MODE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClampDiagnostics {
    /// Number of negative operator eigenvalues (whole spectrum) set to zero.
    pub clamped: usize,
    /// Most negative operator eigenvalue encountered, 0 when none.
    pub worst_negative: f64,
}

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    t_grid: UniformGrid,
    z_grid: UniformGrid,
    /// Every operator eigenvalue √λ of the discretised kernel, descending,
    /// before clamping.
    spectrum: Vec<f64>,
    lambdas: Vec<f64>,
    temporal_modes: Vec<SampledFunction1D>,
    spatial_modes: Vec<SampledFunction1D>,
    clamp: ClampDiagnostics,
}

pub fn decompose(ck: &CycleKernel, wk: &WriteKernel, n_modes: usize) -> Result<SchmidtDecomposition> {
    let t_grid = *ck.t_grid();
    if wk.t_grid() != &t_grid {
        return domain("cycle kernel and write kernel must share the time grid");
    }
    let n = t_grid.count();
    if n_modes > n {
        return domain(format!("{n_modes} modes requested but the grid has {n} points"));
    }
    let w = quadrature_weights(n, t_grid.step())?;
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |a, b| sqrt_w[a] * ck.values()[(a, b)] * sqrt_w[b]);
    let eig = eigh_symmetric(&m)?;

    let negatives: Vec<f64> = eig.values.iter().copied().filter(|&e| e < 0.0).collect();
    let clamp = ClampDiagnostics {
        clamped: negatives.len(),
        worst_negative: negatives.iter().copied().fold(0.0, f64::min),
    };
    if clamp.clamped > 0 {
        log::debug!(
            "clamped {} negative cycle-kernel eigenvalues (worst {:e})",
            clamp.clamped,
            clamp.worst_negative
        );
    }

    let mut lambdas = Vec::with_capacity(n_modes);
    let mut temporal_modes = Vec::with_capacity(n_modes);
    for i in 0..n_modes {
        let e = eig.values[i].max(0.0);
        lambdas.push(e * e);
        let mut phi: Vec<f64> = (0..n).map(|a| eig.vectors[(a, i)] / sqrt_w[a]).collect();
        orient(&mut phi, &w);
        temporal_modes.push(SampledFunction1D::new(t_grid, phi)?);
    }

    let z_grid = *wk.z_grid();
    let mut spatial_modes = Vec::new();
    for (lambda, phi) in lambdas.iter().zip(&temporal_modes) {
        if *lambda <= SPATIAL_MODE_THRESHOLD {
            break;
        }
        let weighted: Vec<f64> = phi.values().iter().zip(&w).map(|(p, w)| p * w).collect();
        let norm = (4.0 * lambda).powf(-0.25);
        let g: Vec<f64> = wk
            .values()
            .row_iter()
            .map(|row| norm * row.iter().zip(&weighted).map(|(g, p)| g * p).sum::<f64>())
            .collect();
        spatial_modes.push(SampledFunction1D::new(z_grid, g)?);
    }

    Ok(SchmidtDecomposition {
        t_grid,
        z_grid,
        spectrum: eig.values,
        lambdas,
        temporal_modes,
        spatial_modes,
        clamp,
    })
}

/// Modes are defined up to sign: make ∫φ ≥ 0, or the first nonzero sample
/// positive when the integral vanishes.
fn orient(phi: &mut [f64], w: &[f64]) {
    let integral: f64 = phi.iter().zip(w).map(|(p, w)| p * w).sum();
    let scale: f64 = phi.iter().zip(w).map(|(p, w)| p.abs() * w).sum();
    let flip = if integral.abs() > 1e-12 * scale {
        integral < 0.0
    } else {
        phi.iter()
            .find(|p| p.abs() > 1e-14 * scale)
            .is_some_and(|p| *p < 0.0)
    };
    if flip {
        phi.iter_mut().for_each(|p| *p = -*p);
    }
}

impl SchmidtDecomposition {
    pub fn t_grid(&self) -> &UniformGrid {
        &self.t_grid
    }

    pub fn z_grid(&self) -> &UniformGrid {
        &self.z_grid
    }

    pub fn n_modes_kept(&self) -> usize {
        self.lambdas.len()
    }

    /// λᵢ of the kept modes, descending.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `√λᵢ` of the kept modes (clamped at zero).
    pub fn operator_eigenvalues(&self) -> Vec<f64> {
        self.spectrum[..self.lambdas.len()]
            .iter()
            .map(|e| e.max(0.0))
            .collect()
    }

    /// Every operator eigenvalue of the discretised kernel, unclamped.
    pub fn full_spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn temporal_modes(&self) -> &[SampledFunction1D] {
        &self.temporal_modes
    }

    /// `gᵢ(z)` for the leading modes with λᵢ above [`SPATIAL_MODE_THRESHOLD`].
    pub fn spatial_modes(&self) -> &[SampledFunction1D] {
        &self.spatial_modes
    }

    pub fn clamp_diagnostics(&self) -> ClampDiagnostics {
        self.clamp
    }

    /// Largest deviation of `∫φᵢφⱼ dt` from δᵢⱼ over the kept modes.
    pub fn temporal_orthonormality_residual(&self) -> f64 {
        gram_residual(&self.temporal_modes)
    }

    /// Largest deviation of `∫gᵢgⱼ dz` from δᵢⱼ over modes with λ above
    /// `min_lambda`.
    pub fn spatial_orthonormality_residual(&self, min_lambda: f64) -> f64 {
        let count = self.lambdas.iter().take_while(|l| **l > min_lambda).count();
        gram_residual(&self.spatial_modes[..count.min(self.spatial_modes.len())])
    }

    /// `φ_{i,ω} = (1/√T) ∫₀ᵀ φᵢ(t) e^{iωt} dt`, `mode` counted from 0.
    pub fn mode_spectrum(&self, mode: usize, omega: f64) -> Result<Complex64> {
        let phi = self.temporal_modes.get(mode).ok_or_else(|| {
            crate::Error::Domain(format!(
                "mode {mode} out of range ({} kept)",
                self.temporal_modes.len()
            ))
        })?;
        spectral_projection(phi, omega)
    }

    /// `Σ_{i<n} √λᵢ φᵢ(t) φᵢ(t′)` on the time grid.
    pub fn reconstruct(&self, n: usize) -> Result<CycleKernel> {
        if n > self.n_modes_kept() {
            return domain(format!(
                "cannot reconstruct from {n} modes, only {} kept",
                self.n_modes_kept()
            ));
        }
        let size = self.t_grid.count();
        let mut g = DMatrix::zeros(size, size);
        for (e, phi) in self.operator_eigenvalues().iter().zip(&self.temporal_modes).take(n) {
            let v = nalgebra::DVector::from_column_slice(phi.values());
            g += &v * v.transpose() * *e;
        }
        CycleKernel::from_matrix(self.t_grid, g)
    }

    pub fn summary(&self) -> Result<SchmidtSummary> {
        let zero_frequency = (0..self.n_modes_kept())
            .map(|i| self.mode_spectrum(i, 0.0).map(|c| c.norm()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SchmidtSummary {
            lambdas: self.lambdas.clone(),
            operator_eigenvalues: self.operator_eigenvalues(),
            zero_frequency_magnitudes: zero_frequency,
            temporal_orthonormality_residual: self.temporal_orthonormality_residual(),
            spatial_orthonormality_residual: self.spatial_orthonormality_residual(1e-3),
            clamp: self.clamp,
        })
    }
}

fn gram_residual(modes: &[SampledFunction1D]) -> f64 {
    let Some(first) = modes.first() else {
        return 0.0;
    };
    let w = quadrature_weights(first.grid().count(), first.grid().step())
        .expect("mode grids have >= 2 points");
    let mut worst: f64 = 0.0;
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate().skip(i) {
            let dot: f64 = a
                .values()
                .iter()
                .zip(b.values())
                .zip(&w)
                .map(|((x, y), w)| x * y * w)
                .sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// JSON-friendly digest of a decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtSummary {
    pub lambdas: Vec<f64>,
    pub operator_eigenvalues: Vec<f64>,
    pub zero_frequency_magnitudes: Vec<f64>,
    pub temporal_orthonormality_residual: f64,
    pub spatial_orthonormality_residual: f64,
    pub clamp: ClampDiagnostics,
}
