//! Quadrature statistics of spin waves after writing and of the retrieved
//! light for simultaneous and successive read-out.
//!
//! Every variance is in the `4⟨·⟩` convention (vacuum = 1). The source enters
//! through its normally ordered correlator; in the white-noise limit that is
//! `(p/4)·(1−μ)/(1−μ/2)²·δ(t − t′)`, otherwise the exact exponential kernel
//! with decay `κ(1 − μ/2)` is integrated on the time grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::kernels::{
    cycle_kernel, sample_write_kernel, spatial_spectrum_kernel, write_kernel_row, CycleKernel,
    MemoryConfig, WriteKernel,
};
use crate::numerics::{grain_index, quadrature_weights};
use crate::schmidt::{decompose, SchmidtDecomposition};
use crate::source_model::{exponential_smoothing, LaserSource, NoiseModel};

/// Curves span `2·DEFAULT_HALF_WIDTH + 1` grain points centred on zero.
pub const DEFAULT_HALF_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    Wavenumber,
    Frequency,
}

impl AxisKind {
    pub fn symbol(self) -> &'static str {
        match self {
            AxisKind::Wavenumber => "k",
            AxisKind::Frequency => "omega",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub argument: f64,
    pub value: f64,
}

/// Samples of a spectrum on the discrete `grain` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub label: String,
    pub axis_kind: AxisKind,
    pub grain: f64,
    pub points: Vec<CurvePoint>,
}

impl SpectralCurve {
    fn tabulate(
        label: impl Into<String>,
        axis_kind: AxisKind,
        grain: f64,
        indices: &[i64],
        f: impl Fn(f64) -> Result<f64> + Sync,
    ) -> Result<Self> {
        let points = indices
            .par_iter()
            .map(|&n| {
                let argument = n as f64 * grain;
                let value = f(argument)?;
                if !value.is_finite() {
                    return Err(crate::Error::NumericalQuality(format!(
                        "non-finite spectrum value at argument {argument}"
                    )));
                }
                Ok(CurvePoint { argument, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: label.into(),
            axis_kind,
            grain,
            points,
        })
    }

    /// Value at the sample whose argument is `n·grain`.
    pub fn value_at_index(&self, n: i64) -> Option<f64> {
        let target = n as f64 * self.grain;
        self.points
            .iter()
            .find(|p| (p.argument - target).abs() <= 1e-9 * self.grain)
            .map(|p| p.value)
    }

    pub fn zero_value(&self) -> Option<f64> {
        self.value_at_index(0)
    }

    /// Largest `|value(x) − value(−x)|` over sampled pairs.
    pub fn evenness_defect(&self) -> f64 {
        self.points
            .iter()
            .filter_map(|p| {
                let n = (p.argument / self.grain).round() as i64;
                self.value_at_index(-n).map(|v| (v - p.value).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// `[−h, …, h]`, the grain indices of a centred curve.
pub fn centered_indices(half_width: usize) -> Vec<i64> {
    let h = half_width as i64;
    (-h..=h).collect()
}

/// Kernels and Schmidt modes of one parameter set, computed once and shared
/// by every protocol evaluated on it.
#[derive(Debug, Clone)]
pub struct Memory {
    config: MemoryConfig,
    write_kernel: WriteKernel,
    cycle_kernel: CycleKernel,
    schmidt: SchmidtDecomposition,
}

impl Memory {
    pub fn build(cfg: &MemoryConfig, n_modes: usize) -> Result<Self> {
        cfg.validate()?;
        Self::build_unchecked_grid(cfg, n_modes)
    }

    /// Like [`Memory::build`] but accepts any odd grid, for convergence
    /// diagnostics on deliberately coarse grids.
    pub fn build_unchecked_grid(cfg: &MemoryConfig, n_modes: usize) -> Result<Self> {
        cfg.validate_physical()?;
        let write_kernel = sample_write_kernel(cfg)?;
        let cycle_kernel = cycle_kernel(&write_kernel)?;
        let schmidt = decompose(&cycle_kernel, &write_kernel, n_modes)?;
        Ok(Self {
            config: *cfg,
            write_kernel,
            cycle_kernel,
            schmidt,
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn write_kernel(&self) -> &WriteKernel {
        &self.write_kernel
    }

    pub fn cycle_kernel(&self) -> &CycleKernel {
        &self.cycle_kernel
    }

    pub fn schmidt(&self) -> &SchmidtDecomposition {
        &self.schmidt
    }
}

fn time_weights(mem: &Memory) -> Vec<f64> {
    let t = mem.config.t_grid();
    quadrature_weights(t.count(), t.step()).expect("validated grid")
}

/// `∫∫ C(t, t′) f(t) f*(t′) dt dt′` with `C = κ′e^{−κ′|t−t′|}` (exact) or
/// `2δ(t − t′)` (white noise), for complex samples `f`.
fn correlated_energy(mem: &Memory, src: &LaserSource, noise: NoiseModel, f: &[Complex64]) -> f64 {
    let w = time_weights(mem);
    match noise {
        NoiseModel::WhiteNoise => 2.0 * f.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>(),
        NoiseModel::ExactSource => {
            let step = mem.config.t_grid().step();
            let kappa = src.decay_rate();
            let re: Vec<f64> = f.iter().map(|v| v.re).collect();
            let im: Vec<f64> = f.iter().map(|v| v.im).collect();
            let sre = exponential_smoothing(&re, step, kappa);
            let sim = exponential_smoothing(&im, step, kappa);
            (0..f.len())
                .map(|m| w[m] * (re[m] * sre[m] + im[m] * sim[m]))
                .sum()
        }
    }
}

/// Normally ordered part `(p/4)·(1−μ)/(1−μ/2)²·∫|G_ab(k,t)|² dt` of the
/// spin-wave spectrum.
fn spin_normal_part(mem: &Memory, src: &LaserSource, noise: NoiseModel, k: f64) -> Result<f64> {
    let gk = spatial_spectrum_kernel(&mem.write_kernel, k)?;
    Ok(src.noise_coefficient() / 8.0 * correlated_energy(mem, src, noise, &gk))
}

/// `4⟨|δX_{j,k}|²⟩` of either spin wave at a single `k` on the 2π/L scale.
pub fn spin_wave_spectrum_at(mem: &Memory, src: &LaserSource, noise: NoiseModel, k: f64) -> Result<f64> {
    src.validate()?;
    Ok(1.0 + spin_normal_part(mem, src, noise, k)?)
}

pub fn spin_wave_spectrum(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    indices: &[i64],
) -> Result<SpectralCurve> {
    SpectralCurve::tabulate(
        "spin-wave",
        AxisKind::Wavenumber,
        mem.config.k_grain(),
        indices,
        |k| spin_wave_spectrum_at(mem, src, noise, k),
    )
}

/// Duan parameter of the spin-wave pair `(k, −k)`; it coincides with the
/// spectrum because both waves carry identical signal parts.
pub fn spin_wave_duan(mem: &Memory, src: &LaserSource, noise: NoiseModel, k: f64) -> Result<f64> {
    spin_wave_spectrum_at(mem, src, noise, k)
}

/// Normally ordered `⟨:δX_j(z) δX_j(z′):⟩` of one spin wave, raw units.
pub fn spin_wave_covariance(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    z: f64,
    z_prime: f64,
) -> Result<f64> {
    src.validate()?;
    let length = mem.config.length;
    for x in [z, z_prime] {
        if !(0.0..=length).contains(&x) {
            return domain(format!("position {x} lies outside [0, {length}]"));
        }
    }
    let a = write_kernel_row(&mem.config, z)?;
    let b = write_kernel_row(&mem.config, z_prime)?;
    let w = time_weights(mem);
    let overlap = match noise {
        NoiseModel::WhiteNoise => 2.0 * a.iter().zip(&b).zip(&w).map(|((a, b), w)| a * b * w).sum::<f64>(),
        NoiseModel::ExactSource => {
            let smooth = exponential_smoothing(&b, mem.config.t_grid().step(), src.decay_rate());
            a.iter().zip(&smooth).zip(&w).map(|((a, s), w)| a * s * w).sum()
        }
    };
    Ok(src.noise_coefficient() / 32.0 * overlap)
}

/// Source-noise matrix `N_ij` of the kept Schmidt modes, normalised so that
/// the white-noise limit gives `(p/4)·(1−μ)/(1−μ/2)²·δ_ij`.
fn mode_noise_matrix(mem: &Memory, src: &LaserSource, noise: NoiseModel) -> DMatrix<f64> {
    let modes = mem.schmidt.temporal_modes();
    let n = modes.len();
    let c = src.noise_coefficient();
    match noise {
        NoiseModel::WhiteNoise => DMatrix::from_diagonal_element(n, n, c / 4.0),
        NoiseModel::ExactSource => {
            let w = time_weights(mem);
            let step = mem.config.t_grid().step();
            let smooth: Vec<Vec<f64>> = modes
                .iter()
                .map(|m| exponential_smoothing(m.values(), step, src.decay_rate()))
                .collect();
            let raw = DMatrix::from_fn(n, n, |i, j| {
                c / 8.0
                    * modes[i]
                        .values()
                        .iter()
                        .zip(&smooth[j])
                        .zip(&w)
                        .map(|((a, b), w)| a * b * w)
                        .sum::<f64>()
            });
            (&raw + raw.transpose()) * 0.5
        }
    }
}

/// Normally ordered part of the simultaneous read-out spectrum at one ω.
fn readout_normal_part(mem: &Memory, noise_matrix: &DMatrix<f64>, omega: f64) -> Result<f64> {
    let sd = &mem.schmidt;
    let e = sd.operator_eigenvalues();
    let amps: Vec<Complex64> = (0..sd.n_modes_kept())
        .map(|i| sd.mode_spectrum(i, omega).map(|a| a * e[i]))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for (i, ai) in amps.iter().enumerate() {
        for (j, aj) in amps.iter().enumerate() {
            let nij = noise_matrix[(i, j)];
            if nij != 0.0 {
                total += nij * (ai * aj.conj()).re;
            }
        }
    }
    Ok(4.0 * total)
}

fn check_frequency(mem: &Memory, omega: f64) -> Result<()> {
    grain_index(omega, mem.config.omega_grain()).map(|_| ())
}

/// `4⟨|δX_out,ω|²⟩` for simultaneous read-out of both channels at one ω.
pub fn simultaneous_readout_at(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    omega: f64,
) -> Result<f64> {
    src.validate()?;
    check_frequency(mem, omega)?;
    let nm = mode_noise_matrix(mem, src, noise);
    Ok(1.0 + readout_normal_part(mem, &nm, omega)?)
}

pub fn simultaneous_readout_spectrum(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    indices: &[i64],
) -> Result<SpectralCurve> {
    src.validate()?;
    let nm = mode_noise_matrix(mem, src, noise);
    SpectralCurve::tabulate(
        "read-simultaneous",
        AxisKind::Frequency,
        mem.config.omega_grain(),
        indices,
        |w| Ok(1.0 + readout_normal_part(mem, &nm, w)?),
    )
}

/// Per-pulse `4⟨|δX^{(1,2)}_out,ω|²⟩` for successive read-out: each pulse
/// carries half of the normally ordered part.
pub fn successive_readout_at(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    omega: f64,
) -> Result<f64> {
    Ok(successive_readout_duan(mem, src, noise, omega)?.value)
}

pub fn successive_readout_spectrum(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    indices: &[i64],
) -> Result<SpectralCurve> {
    src.validate()?;
    let nm = mode_noise_matrix(mem, src, noise);
    SpectralCurve::tabulate(
        "read-successive",
        AxisKind::Frequency,
        mem.config.omega_grain(),
        indices,
        |w| Ok(1.0 + 0.5 * readout_normal_part(mem, &nm, w)?),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutDuan {
    /// Normally ordered part; negative signals entanglement.
    pub normal_ordered: f64,
    /// Full Duan value `1 + normal_ordered`.
    pub value: f64,
}

impl ReadoutDuan {
    pub fn entangled(&self) -> bool {
        self.value < 1.0
    }
}

/// Duan parameter for the two successively retrieved pulses at `(ω, −ω)`.
pub fn successive_readout_duan(
    mem: &Memory,
    src: &LaserSource,
    noise: NoiseModel,
    omega: f64,
) -> Result<ReadoutDuan> {
    src.validate()?;
    check_frequency(mem, omega)?;
    let nm = mode_noise_matrix(mem, src, noise);
    let normal_ordered = 0.5 * readout_normal_part(mem, &nm, omega)?;
    Ok(ReadoutDuan {
        normal_ordered,
        value: 1.0 + normal_ordered,
    })
}

/// The delay between the two read-out pulses changes no second moment; it
/// only has to be long compared with the read-out itself.
pub fn validate_successive_delay(cfg: &MemoryConfig, delay: f64) -> Result<()> {
    if !(delay.is_finite() && delay >= 10.0 * cfg.read_time) {
        return domain(format!(
            "successive read-out delay {delay} must be at least 10 T_R = {}",
            10.0 * cfg.read_time
        ));
    }
    Ok(())
}

/// Duan parameter of the `b₁/b₂` pair at `(k, −k)` after two orthogonally
/// squeezed pulses: the first writes `b₊` (X squeezed), the second `b₋`
/// (Y squeezed). Each pulse feeds a single spin wave, so the prefactor is
/// `p/2` instead of the `p/4` of a two-channel write.
pub fn two_pulse_conversion(
    mem: &Memory,
    first: &LaserSource,
    second: &LaserSource,
    noise: NoiseModel,
    k: f64,
) -> Result<f64> {
    first.validate()?;
    second.validate()?;
    let plus_x = 1.0 + 2.0 * spin_normal_part(mem, first, noise, k)?;
    let minus_y = 1.0 + 2.0 * spin_normal_part(mem, second, noise, k)?;
    Ok(0.5 * (plus_x + minus_y))
}

pub fn two_pulse_spectrum(
    mem: &Memory,
    first: &LaserSource,
    second: &LaserSource,
    noise: NoiseModel,
    indices: &[i64],
) -> Result<SpectralCurve> {
    SpectralCurve::tabulate(
        "two-pulse",
        AxisKind::Wavenumber,
        mem.config.k_grain(),
        indices,
        |k| two_pulse_conversion(mem, first, second, noise, k),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Write,
    #[default]
    ReadSimultaneous,
    ReadSuccessive,
    TwoPulse,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Write => "write",
            Protocol::ReadSimultaneous => "read-simultaneous",
            Protocol::ReadSuccessive => "read-successive",
            Protocol::TwoPulse => "two-pulse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Headline {
    pub zero_argument_value: f64,
    pub squeezing_percent: f64,
    pub duan: f64,
    pub entangled: bool,
}

impl Headline {
    pub fn from_curve(curve: &SpectralCurve) -> Result<Self> {
        let v = curve
            .zero_value()
            .ok_or_else(|| crate::Error::Domain("curve has no zero-argument sample".into()))?;
        Ok(Self {
            zero_argument_value: v,
            squeezing_percent: 100.0 * (1.0 - v),
            duan: v,
            entangled: v < 1.0,
        })
    }
}

/// Everything one protocol run produces, with the inputs that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolResult {
    pub protocol: Protocol,
    pub config: MemoryConfig,
    pub sources: Vec<LaserSource>,
    pub noise_model: NoiseModel,
    pub n_modes: usize,
    pub curve: SpectralCurve,
    pub headline: Headline,
    pub notes: Vec<String>,
}

/// Runs `protocol` on a centred curve. `sources` holds one source, or two
/// for [`Protocol::TwoPulse`] (a single source is then used for both pulses).
pub fn run_protocol(
    mem: &Memory,
    protocol: Protocol,
    sources: &[LaserSource],
    noise: NoiseModel,
    half_width: usize,
) -> Result<ProtocolResult> {
    let Some(first) = sources.first() else {
        return domain("at least one source is required");
    };
    let indices = centered_indices(half_width);
    let mut notes = Vec::new();
    let curve = match protocol {
        Protocol::Write => spin_wave_spectrum(mem, first, noise, &indices)?,
        Protocol::ReadSimultaneous => simultaneous_readout_spectrum(mem, first, noise, &indices)?,
        Protocol::ReadSuccessive => {
            notes.push("per-pulse spectrum; equals the Duan parameter of the pulse pair".into());
            successive_readout_spectrum(mem, first, noise, &indices)?
        }
        Protocol::TwoPulse => {
            let second = sources.get(1).unwrap_or(first);
            notes.push(
                "derived composition: single-channel prefactor p/2 per pulse, not a published value"
                    .into(),
            );
            two_pulse_spectrum(mem, first, second, noise, &indices)?
        }
    };
    let headline = Headline::from_curve(&curve)?;
    Ok(ProtocolResult {
        protocol,
        config: mem.config,
        sources: sources.to_vec(),
        noise_model: noise,
        n_modes: mem.schmidt.n_modes_kept(),
        curve,
        headline,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn matched() -> &'static Memory {
        static MEM: OnceLock<Memory> = OnceLock::new();
        MEM.get_or_init(|| Memory::build(&MemoryConfig::new(10.0, 5.5, 129).unwrap(), 8).unwrap())
    }

    fn src(p: f64, mu: f64) -> LaserSource {
        LaserSource::with_default_kappa(p, mu, 5.5).unwrap()
    }

    const NOISES: [NoiseModel; 2] = [NoiseModel::WhiteNoise, NoiseModel::ExactSource];

    #[test]
    fn poissonian_source_gives_flat_curves() {
        let mem = matched();
        let idx = centered_indices(4);
        let s = src(0.0, 0.3);
        for noise in NOISES {
            for curve in [
                spin_wave_spectrum(mem, &s, noise, &idx).unwrap(),
                simultaneous_readout_spectrum(mem, &s, noise, &idx).unwrap(),
                successive_readout_spectrum(mem, &s, noise, &idx).unwrap(),
                two_pulse_spectrum(mem, &s, &s, noise, &idx).unwrap(),
            ] {
                assert!(curve.points.iter().all(|p| p.value == 1.0), "{}", curve.label);
            }
            assert_eq!(spin_wave_covariance(mem, &s, noise, 3.0, 4.0).unwrap(), 0.0);
            let d = successive_readout_duan(mem, &s, noise, 0.0).unwrap();
            assert_eq!((d.normal_ordered, d.value), (0.0, 1.0));
        }
    }

    #[test]
    fn curves_are_even() {
        let mem = matched();
        let idx = centered_indices(6);
        let s = src(-1.0, 0.0);
        for noise in NOISES {
            assert!(spin_wave_spectrum(mem, &s, noise, &idx).unwrap().evenness_defect() < 1e-12);
            assert!(simultaneous_readout_spectrum(mem, &s, noise, &idx).unwrap().evenness_defect() < 1e-12);
        }
    }

    #[test]
    fn read_out_identities() {
        let mem = matched();
        let idx = centered_indices(8);
        let s = src(-1.0, 0.2);
        for noise in NOISES {
            let sim = simultaneous_readout_spectrum(mem, &s, noise, &idx).unwrap();
            let suc = successive_readout_spectrum(mem, &s, noise, &idx).unwrap();
            for (a, b) in sim.points.iter().zip(&suc.points) {
                assert!((b.value - 0.5 * (1.0 + a.value)).abs() < 1e-12);
                let d = successive_readout_duan(mem, &s, noise, a.argument).unwrap();
                assert!((d.value - b.value).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spin_duan_is_the_spectrum() {
        let mem = matched();
        let s = src(-0.7, 0.1);
        for n in -5..=5 {
            let k = n as f64 * mem.config().k_grain();
            let a = spin_wave_duan(mem, &s, NoiseModel::WhiteNoise, k).unwrap();
            let b = spin_wave_spectrum_at(mem, &s, NoiseModel::WhiteNoise, k).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simultaneous_bounds_and_lower_envelope() {
        let mem = matched();
        let sd = mem.schmidt();
        for p in [-1.0, -0.6, -0.2, 0.0] {
            let s = src(p, 0.0);
            for n in -6..=6 {
                let w = n as f64 * mem.config().omega_grain();
                let v = simultaneous_readout_at(mem, &s, NoiseModel::WhiteNoise, w).unwrap();
                let overlap: f64 = (0..sd.n_modes_kept())
                    .map(|i| sd.lambdas()[i] * sd.mode_spectrum(i, w).unwrap().norm_sqr())
                    .sum();
                assert!(v > 0.0 && v <= 1.0);
                assert!(v >= 1.0 - overlap - 1e-12);
            }
        }
    }

    #[test]
    fn monotone_in_pump_statistics() {
        let mem = matched();
        let grid = [0.0, -0.25, -0.5, -0.75, -1.0];
        for noise in NOISES {
            for n in [0, 1, 3] {
                let k = n as f64 * mem.config().k_grain();
                let w = n as f64 * mem.config().omega_grain();
                let spin: Vec<f64> = grid
                    .iter()
                    .map(|&p| spin_wave_spectrum_at(mem, &src(p, 0.0), noise, k).unwrap())
                    .collect();
                let read: Vec<f64> = grid
                    .iter()
                    .map(|&p| simultaneous_readout_at(mem, &src(p, 0.0), noise, w).unwrap())
                    .collect();
                assert!(spin.windows(2).all(|v| v[1] <= v[0]));
                assert!(read.windows(2).all(|v| v[1] <= v[0]));
            }
        }
    }

    #[test]
    fn exact_source_approaches_white_noise() {
        let mem = matched();
        let s = src(-1.0, 0.0);
        let white = spin_wave_covariance(mem, &s, NoiseModel::WhiteNoise, 5.0, 5.0).unwrap();
        let exact = spin_wave_covariance(mem, &s, NoiseModel::ExactSource, 5.0, 5.0).unwrap();
        assert!(((exact - white) / white).abs() < 0.02, "{exact} vs {white}");
        let a = simultaneous_readout_at(mem, &s, NoiseModel::WhiteNoise, 0.0).unwrap();
        let b = simultaneous_readout_at(mem, &s, NoiseModel::ExactSource, 0.0).unwrap();
        assert!(((a - 1.0) - (b - 1.0)).abs() < 0.02 * (a - 1.0).abs());
    }

    #[test]
    fn covariance_fourier_transform_is_the_spectrum() {
        // (1/L)∫∫ C(z,z′) e^{−ik(z−z′)} dz dz′ = (S(k) − 1)/4.
        let mem = matched();
        let s = src(-1.0, 0.0);
        let cfg = mem.config();
        let zg = cfg.z_grid();
        let stride = 4;
        let zs: Vec<f64> = (0..zg.count()).step_by(stride).map(|j| zg.point(j)).collect();
        let w = quadrature_weights(zs.len(), zg.step() * stride as f64).unwrap();
        let cov = DMatrix::from_fn(zs.len(), zs.len(), |a, b| {
            spin_wave_covariance(mem, &s, NoiseModel::WhiteNoise, zs[a], zs[b]).unwrap()
        });
        for n in 0..3 {
            let k = n as f64 * cfg.k_grain();
            let mut total = Complex64::new(0.0, 0.0);
            for a in 0..zs.len() {
                for b in 0..zs.len() {
                    total += Complex64::from_polar(w[a] * w[b] * cov[(a, b)], -k * (zs[a] - zs[b]));
                }
            }
            let lhs = total.re / cfg.length;
            let rhs = (spin_wave_spectrum_at(mem, &s, NoiseModel::WhiteNoise, k).unwrap() - 1.0) / 4.0;
            assert!(((lhs - rhs) / rhs).abs() < 0.01, "k index {n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn two_pulse_composition() {
        let mem = matched();
        let regular = src(-1.0, 0.0);
        let poisson = src(0.0, 0.0);
        let nm = NoiseModel::WhiteNoise;
        assert_eq!(two_pulse_conversion(mem, &poisson, &poisson, nm, 0.0).unwrap(), 1.0);
        assert!(two_pulse_conversion(mem, &regular, &regular, nm, 0.0).unwrap() < 1.0);
        let spin = spin_wave_spectrum_at(mem, &regular, nm, 0.0).unwrap();
        let single_channel = 1.0 + 2.0 * (spin - 1.0);
        let mixed = two_pulse_conversion(mem, &regular, &poisson, nm, 0.0).unwrap();
        assert!((mixed - 0.5 * (single_channel + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn off_grain_arguments_are_rejected() {
        let mem = matched();
        let s = src(-1.0, 0.0);
        let nm = NoiseModel::WhiteNoise;
        assert!(spin_wave_spectrum_at(mem, &s, nm, 0.3 * mem.config().k_grain()).is_err());
        assert!(simultaneous_readout_at(mem, &s, nm, 0.5 * mem.config().omega_grain()).is_err());
        assert!(successive_readout_duan(mem, &s, nm, 1.5 * mem.config().omega_grain()).is_err());
        assert!(spin_wave_covariance(mem, &s, nm, -1.0, 2.0).is_err());
    }

    #[test]
    fn delay_validation() {
        let cfg = MemoryConfig::new(10.0, 5.5, 129).unwrap();
        assert!(validate_successive_delay(&cfg, 55.0).is_ok());
        assert!(validate_successive_delay(&cfg, 54.9).is_err());
    }

    #[test]
    fn protocol_result_headline_matches_curve() {
        let mem = matched();
        let r = run_protocol(mem, Protocol::ReadSuccessive, &[src(-1.0, 0.0)], NoiseModel::WhiteNoise, 4).unwrap();
        assert_eq!(r.curve.points.len(), 9);
        let v = r.curve.zero_value().unwrap();
        assert_eq!(r.headline.zero_argument_value, v);
        assert!((r.headline.squeezing_percent - 100.0 * (1.0 - v)).abs() < 1e-12);
        assert!(r.headline.entangled);
    }
}
