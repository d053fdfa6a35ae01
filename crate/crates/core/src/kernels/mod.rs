//! Memory kernels in dimensionless units.
//!
//! The write kernel maps the time-reversed input pulse onto the spin wave
//! left in the cell after writing:
//!
//! ```text
//! G_ab(z, t) = ∫₀ᵗ cos(t − 2t′) J0(√(z t′)) J0(√(z (t − t′))) dt′
//! ```
//!
//! (the complex exponentials of the original form combine into a real
//! integrand because the Bessel product is symmetric under t′ → t − t′).
//! Backward read-out with equal write and read times gives the full-cycle
//! kernel `G(t, t′) = ½ ∫₀ᴸ G_ab(z, t) G_ab(z, t′) dz`.

mod pde;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{
    grain_index, j0, quadrature_weights, SampledFunction1D, SampledFunction2D, UniformGrid,
};

pub use pde::{
    pde_agreement, pde_oracle_write, probe_pulse, reference_pulse, PdeAgreement, PdeOracle,
    PdeSettings, PdeWrite,
};

/// Smallest grid accepted by [`MemoryConfig::validate`].
pub const MIN_GRID_POINTS: usize = 129;
pub const DEFAULT_GRID_POINTS: usize = 257;

/// Dimensionless cell length, write/read durations and grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "Tw")]
    pub write_time: f64,
    #[serde(rename = "Tr")]
    pub read_time: f64,
    pub n_z: usize,
    pub n_t: usize,
}

impl MemoryConfig {
    /// Square grid, `T_R = T_W`, validated.
    pub fn new(length: f64, write_time: f64, grid_points: usize) -> Result<Self> {
        let cfg = Self {
            length,
            write_time,
            read_time: write_time,
            n_z: grid_points,
            n_t: grid_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full check: physical parameters plus grids of the form 2ⁿ + 1 with at
    /// least [`MIN_GRID_POINTS`] points.
    pub fn validate(&self) -> Result<()> {
        self.validate_physical()?;
        for (name, n) in [("n_z", self.n_z), ("n_t", self.n_t)] {
            if n < MIN_GRID_POINTS || !(n - 1).is_power_of_two() {
                return domain(format!(
                    "{name} = {n} must be of the form 2^k + 1 and at least {MIN_GRID_POINTS}"
                ));
            }
        }
        Ok(())
    }

    /// Physical parameters only; grids merely need an odd count ≥ 5. Used by
    /// diagnostics that deliberately run on coarse grids.
    pub fn validate_physical(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return domain(format!("cell length L must be > 0, got {}", self.length));
        }
        if !(self.write_time.is_finite() && self.write_time > 0.0) {
            return domain(format!("write time must be > 0, got {}", self.write_time));
        }
        if self.read_time != self.write_time {
            return domain(format!(
                "read time {} must equal write time {}",
                self.read_time, self.write_time
            ));
        }
        for (name, n) in [("n_z", self.n_z), ("n_t", self.n_t)] {
            if n < 5 || n % 2 == 0 {
                return domain(format!("{name} = {n} must be odd and at least 5"));
            }
        }
        Ok(())
    }

    pub fn z_grid(&self) -> UniformGrid {
        UniformGrid::new(0.0, self.length, self.n_z).expect("validated config")
    }

    pub fn t_grid(&self) -> UniformGrid {
        UniformGrid::new(0.0, self.write_time, self.n_t).expect("validated config")
    }

    /// Spacing 2π/L of the discrete wavenumber scale.
    pub fn k_grain(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Spacing 2π/T_W of the discrete frequency scale.
    pub fn omega_grain(&self) -> f64 {
        2.0 * PI / self.write_time
    }

    pub fn with_grid(&self, grid_points: usize) -> Self {
        Self {
            n_z: grid_points,
            n_t: grid_points,
            ..*self
        }
    }
}

/// Real weights `ω_k` with `Σ_k ω_k f(s_k) ≈ ∫₀ᵗ cos(t − 2s) f(s) ds` for samples
/// `s_k = k·step`, `t = (count − 1)·step`.
///
/// Filon-type product rule: `f` is interpolated by piecewise quadratics (a
/// cubic on the last three intervals when the interval count is odd, a line
/// when there is a single interval) and the trigonometric factor is integrated
/// exactly against each interpolant. The rule is exact for f ≡ 1.
pub(crate) fn oscillatory_weights(count: usize, step: f64) -> Result<Vec<f64>> {
    Ok(complex_oscillatory_weights(count, step)?.iter().map(|w| w.re).collect())
}

/// Weights for the full `∫₀ᵗ e^{i(t − 2s)} f(s) ds`; the real parts are
/// [`oscillatory_weights`].
fn complex_oscillatory_weights(count: usize, step: f64) -> Result<Vec<Complex64>> {
    if count < 2 {
        return domain(format!("oscillatory rule needs at least 2 samples, got {count}"));
    }
    let intervals = count - 1;
    let t = intervals as f64 * step;
    let mut weights = vec![Complex64::new(0.0, 0.0); count];
    let mut add_panel = |start: usize, panel: &[Complex64]| {
        // ∫ over the panel of e^{−2is} ℓ_q(s) ds = step·e^{−2i s_start}·panel[q]
        let shift = Complex64::from_polar(step, -2.0 * start as f64 * step);
        for (q, mu) in panel.iter().enumerate() {
            weights[start + q] += shift * mu;
        }
    };
    if intervals == 1 {
        add_panel(0, &panel_moments(step, 1));
    } else {
        let quadratic = panel_moments(step, 2);
        let quadratic_end = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
        for start in (0..quadratic_end).step_by(2) {
            add_panel(start, &quadratic);
        }
        if intervals % 2 == 1 {
            add_panel(quadratic_end, &panel_moments(step, 3));
        }
    }
    let carrier = Complex64::from_polar(1.0, t);
    Ok(weights.iter().map(|w| carrier * w).collect())
}

/// `∫₀^P e^{−2i·step·x} ℓ_q(x) dx` for the Lagrange basis on nodes `0..=P`.
fn panel_moments(step: f64, degree: usize) -> Vec<Complex64> {
    let p = degree as f64;
    // monomial moments ∫₀^P x^j e^{−2i·step·x} dx as a power series in step
    let a = Complex64::new(0.0, -2.0 * step * p);
    let moments: Vec<Complex64> = (0..=degree)
        .map(|j| {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for n in 0..200 {
                if n > 0 {
                    term *= a / n as f64;
                }
                let contrib = term / (n + j + 1) as f64;
                sum += contrib;
                if n > 4 && contrib.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            sum * p.powi(j as i32 + 1)
        })
        .collect();
    // Lagrange basis polynomials, coefficients in ascending powers of x
    let basis: Vec<Vec<f64>> = match degree {
        1 => vec![vec![1.0, -1.0], vec![0.0, 1.0]],
        2 => vec![
            vec![1.0, -1.5, 0.5],
            vec![0.0, 2.0, -1.0],
            vec![0.0, -0.5, 0.5],
        ],
        3 => vec![
            vec![1.0, -11.0 / 6.0, 1.0, -1.0 / 6.0],
            vec![0.0, 3.0, -2.5, 0.5],
            vec![0.0, -1.5, 2.0, -0.5],
            vec![0.0, 1.0 / 3.0, -0.5, 1.0 / 6.0],
        ],
        _ => unreachable!("panels are linear, quadratic or cubic"),
    };
    basis
        .iter()
        .map(|coeffs| coeffs.iter().zip(&moments).map(|(c, m)| m * *c).sum())
        .collect()
}

/// Shared tables for evaluating `G_ab(z, t_m)` on a fixed time grid, where the
/// inner integral over t′ uses the samples `t_0..=t_m`.
struct KernelRows {
    times: Vec<f64>,
    /// Oscillatory weights over `t_0..=t_m`, one vector per `m ≥ 1`.
    weights: Vec<Vec<f64>>,
}

impl KernelRows {
    fn new(t_grid: &UniformGrid) -> Result<Self> {
        let n = t_grid.count();
        let step = t_grid.step();
        let mut weights = vec![Vec::new()];
        for m in 1..n {
            weights.push(oscillatory_weights(m + 1, step)?);
        }
        Ok(Self {
            times: t_grid.points(),
            weights,
        })
    }

    fn row(&self, z: f64) -> Vec<f64> {
        let n = self.times.len();
        let bessel: Vec<f64> = self.times.iter().map(|&t| j0((z * t).sqrt())).collect();
        let mut out = vec![0.0; n];
        for m in 1..n {
            out[m] = self.weights[m]
                .iter()
                .enumerate()
                .map(|(k, w)| w * bessel[k] * bessel[m - k])
                .sum();
        }
        out
    }
}

/// `G_ab(z, t)` with the inner integral resolved by `inner_points` uniformly
/// spaced samples on `[0, t]`.
pub fn write_kernel_point(z: f64, t: f64, write_time: f64, inner_points: usize) -> Result<f64> {
    if !(z.is_finite() && z >= 0.0) {
        return domain(format!("z = {z} must be finite and non-negative"));
    }
    if !(t.is_finite() && (0.0..=write_time).contains(&t)) {
        return domain(format!("t = {t} must lie in [0, {write_time}]"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let grid = UniformGrid::new(0.0, t, inner_points)?;
    let w = oscillatory_weights(inner_points, grid.step())?;
    let bessel: Vec<f64> = grid.points().iter().map(|&s| j0((z * s).sqrt())).collect();
    Ok(w
        .iter()
        .enumerate()
        .map(|(k, w)| w * bessel[k] * bessel[inner_points - 1 - k])
        .sum())
}

/// The original complex form `∫₀ᵗ e^{i(t − 2t′)} J0 J0 dt′` with the same
/// rule as [`write_kernel_point`]. Its imaginary part vanishes analytically;
/// what remains measures how well the rule keeps the mirror symmetry.
pub fn write_kernel_complex_point(z: f64, t: f64, write_time: f64, inner_points: usize) -> Result<Complex64> {
    // same argument checks as the real form
    write_kernel_point(z, t, write_time, inner_points)?;
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let grid = UniformGrid::new(0.0, t, inner_points)?;
    let w = complex_oscillatory_weights(inner_points, grid.step())?;
    let bessel: Vec<f64> = grid.points().iter().map(|&s| j0((z * s).sqrt())).collect();
    Ok(w
        .iter()
        .enumerate()
        .map(|(k, w)| w * (bessel[k] * bessel[inner_points - 1 - k]))
        .sum())
}

/// `G_ab(z, t)` sampled on the `z × t` grid of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteKernel {
    samples: SampledFunction2D,
}

impl WriteKernel {
    pub fn z_grid(&self) -> &UniformGrid {
        self.samples.rows()
    }

    pub fn t_grid(&self) -> &UniformGrid {
        self.samples.cols()
    }

    /// Row index is z, column index is t.
    pub fn values(&self) -> &DMatrix<f64> {
        self.samples.values()
    }

    pub fn samples(&self) -> &SampledFunction2D {
        &self.samples
    }

    pub fn length(&self) -> f64 {
        self.z_grid().stop()
    }

    pub fn write_time(&self) -> f64 {
        self.t_grid().stop()
    }
}

pub fn sample_write_kernel(cfg: &MemoryConfig) -> Result<WriteKernel> {
    cfg.validate_physical()?;
    let z_grid = cfg.z_grid();
    let t_grid = cfg.t_grid();
    let rows = KernelRows::new(&t_grid)?;
    let computed: Vec<Vec<f64>> = z_grid
        .points()
        .par_iter()
        .map(|&z| rows.row(z))
        .collect();
    let values = DMatrix::from_fn(cfg.n_z, cfg.n_t, |j, m| computed[j][m]);
    Ok(WriteKernel {
        samples: SampledFunction2D::new(z_grid, t_grid, values)?,
    })
}

/// `G_ab(z, t_m)` for a single position `z` on the configuration's time grid.
pub fn write_kernel_row(cfg: &MemoryConfig, z: f64) -> Result<Vec<f64>> {
    cfg.validate_physical()?;
    if !(z.is_finite() && (0.0..=cfg.length).contains(&z)) {
        return domain(format!("z = {z} must lie in [0, {}]", cfg.length));
    }
    Ok(KernelRows::new(&cfg.t_grid())?.row(z))
}

/// Largest asymmetry tolerated before symmetrization, relative to max|G|.
const CYCLE_ASYMMETRY_LIMIT: f64 = 1e-7;

/// Real symmetric full-cycle kernel `G(t, t′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleKernel {
    t_grid: UniformGrid,
    values: DMatrix<f64>,
    raw_asymmetry: f64,
}

impl CycleKernel {
    /// Wraps an externally supplied matrix (e.g. a re-imported CSV). Fails
    /// with a numerical-quality error when the matrix is not symmetric to
    /// 1e-7 relative; otherwise it is symmetrized.
    pub fn from_matrix(t_grid: UniformGrid, values: DMatrix<f64>) -> Result<Self> {
        let samples = SampledFunction2D::new(t_grid, t_grid, values)?;
        Self::symmetrized(t_grid, samples.values().clone())
    }

    fn symmetrized(t_grid: UniformGrid, raw: DMatrix<f64>) -> Result<Self> {
        let scale = raw.amax();
        let asym = crate::numerics::eigen_max_asymmetry(&raw);
        let relative = if scale > 0.0 { asym / scale } else { 0.0 };
        if relative > CYCLE_ASYMMETRY_LIMIT {
            return Err(Error::NumericalQuality(format!(
                "cycle kernel asymmetry {relative:e} (relative) exceeds {CYCLE_ASYMMETRY_LIMIT:e}"
            )));
        }
        let values = (&raw + raw.transpose()) * 0.5;
        Ok(Self {
            t_grid,
            values,
            raw_asymmetry: relative,
        })
    }

    pub fn t_grid(&self) -> &UniformGrid {
        &self.t_grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// max|G − Gᵀ| / max|G| measured before symmetrization.
    pub fn raw_asymmetry(&self) -> f64 {
        self.raw_asymmetry
    }
}

pub fn cycle_kernel(wk: &WriteKernel) -> Result<CycleKernel> {
    let z_grid = wk.z_grid();
    let w = quadrature_weights(z_grid.count(), z_grid.step())?;
    let mut scaled = wk.values().clone();
    for (j, mut row) in scaled.row_iter_mut().enumerate() {
        row *= w[j].sqrt();
    }
    let raw = scaled.tr_mul(&scaled) * 0.5;
    CycleKernel::symmetrized(*wk.t_grid(), raw)
}

/// `G_ab(k, t_m) = (1/√L) ∫₀ᴸ G_ab(z, t_m) e^{−ikz} dz` for `k` on the 2π/L
/// scale.
pub fn spatial_spectrum_kernel(wk: &WriteKernel, k: f64) -> Result<Vec<Complex64>> {
    let length = wk.length();
    grain_index(k, 2.0 * PI / length)?;
    let z_grid = wk.z_grid();
    let w = quadrature_weights(z_grid.count(), z_grid.step())?;
    let phase: Vec<Complex64> = (0..z_grid.count())
        .map(|j| Complex64::from_polar(w[j], -k * z_grid.point(j)))
        .collect();
    let norm = 1.0 / length.sqrt();
    Ok(wk
        .values()
        .column_iter()
        .map(|col| {
            col.iter()
                .zip(&phase)
                .map(|(g, p)| p * g)
                .sum::<Complex64>()
                * norm
        })
        .collect())
}

/// Spin-wave amplitude along the cell at the end of writing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinWaveProfile {
    pub z_grid: UniformGrid,
    pub values: Vec<Complex64>,
}

impl SpinWaveProfile {
    pub fn zeros(z_grid: UniformGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); z_grid.count()],
            z_grid,
        }
    }

    /// Signal parts of `b₁ = (b₊ + b₋)/√2` and `b₂ = (b₊ − b₋)/√2` when this
    /// profile is `b₊` and `b₋` carries no signal.
    pub fn split_channels(&self) -> (SpinWaveProfile, SpinWaveProfile) {
        let half: Vec<Complex64> = self.values.iter().map(|v| v * FRAC_1_SQRT_2).collect();
        (
            SpinWaveProfile {
                z_grid: self.z_grid,
                values: half.clone(),
            },
            SpinWaveProfile {
                z_grid: self.z_grid,
                values: half,
            },
        )
    }

    /// `(∫|b|² dz)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let w = quadrature_weights(self.z_grid.count(), self.z_grid.step())
            .expect("profile grids have >= 2 points");
        w.iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self − other‖ / ‖other‖` in the L² sense.
    pub fn relative_l2_distance(&self, other: &SpinWaveProfile) -> Result<f64> {
        if self.z_grid != other.z_grid {
            return domain("profiles live on different grids");
        }
        let diff = SpinWaveProfile {
            z_grid: self.z_grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        };
        Ok(diff.l2_norm() / other.l2_norm())
    }
}

/// `b₊(z) = −(1/√2) ∫₀^{T_W} a_in(T_W − t) G_ab(z, t) dt`, vacuum terms
/// omitted.
pub fn write_spin_wave(wk: &WriteKernel, input: &SampledFunction1D) -> Result<SpinWaveProfile> {
    if input.grid() != wk.t_grid() {
        return domain("input pulse must be sampled on the kernel's time grid");
    }
    let t_grid = wk.t_grid();
    let n = t_grid.count();
    let w = quadrature_weights(n, t_grid.step())?;
    let a = input.values();
    let reversed: Vec<f64> = (0..n).map(|m| w[m] * a[n - 1 - m]).collect();
    let values = wk
        .values()
        .row_iter()
        .map(|row| {
            let s: f64 = row.iter().zip(&reversed).map(|(g, a)| g * a).sum();
            Complex64::new(-FRAC_1_SQRT_2 * s, 0.0)
        })
        .collect();
    Ok(SpinWaveProfile {
        z_grid: *wk.z_grid(),
        values,
    })
}
