use std::path::Path;

use qmem_core::kernels::{pde_agreement, MemoryConfig};
use qmem_core::protocols::{
    centered_indices, simultaneous_readout_spectrum, spin_wave_covariance, spin_wave_duan,
    spin_wave_spectrum, successive_readout_spectrum, Memory,
};
use qmem_core::source_model::{LaserSource, NoiseModel};

use crate::config::RunConfig;
use crate::export;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: anyhow::Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e:#}"),
        },
    }
}

fn within(value: f64, limit: f64) -> (bool, String) {
    (value <= limit, format!("{value:.3e} (limit {limit:.0e})"))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run(cfg: &RunConfig, import: Option<&Path>) -> Vec<Check> {
    let mut checks = Vec::new();
    let memory = cfg.memory;
    checks.push(check(
        "grid resolution",
        Ok(match memory.validate() {
            Ok(()) => (true, format!("{} points", memory.n_t)),
            Err(e) => (false, e.to_string()),
        }),
    ));
    let mem = match Memory::build_unchecked_grid(&memory, cfg.n_modes) {
        Ok(m) => m,
        Err(e) => {
            checks.push(check("kernel construction", Err(e.into())));
            return checks;
        }
    };
    checks.push(check("eigenvalue convergence", convergence(&mem)));
    checks.push(check("boundary kernel equals sin t", {
        let wk = mem.write_kernel();
        let row: Vec<f64> = wk.values().row(0).iter().copied().collect();
        let exact: Vec<f64> = wk.t_grid().points().iter().map(|t| t.sin()).collect();
        Ok(within(max_abs_diff(&row, &exact), 1e-8))
    }));
    checks.push(check(
        "cycle kernel symmetry",
        Ok(within(mem.cycle_kernel().raw_asymmetry(), 1e-9)),
    ));
    checks.push(check("passivity", {
        let s = mem.schmidt().full_spectrum();
        let (lo, hi) = (s[s.len() - 1], s[0]);
        Ok((
            lo >= -1e-6 && hi <= 1.0 + 1e-3,
            format!("operator eigenvalues in [{lo:.3e}, {hi:.6}]"),
        ))
    }));
    checks.push(check(
        "temporal mode orthonormality",
        Ok(within(mem.schmidt().temporal_orthonormality_residual(), 1e-6)),
    ));
    checks.push(check(
        "spatial mode orthonormality",
        Ok(within(mem.schmidt().spatial_orthonormality_residual(1e-3), 1e-4)),
    ));
    checks.push(check("PDE oracle agreement", {
        pde_agreement(&memory, mem.write_kernel())
            .map(|a| within(a.relative_l2, 1e-2))
            .map_err(Into::into)
    }));
    checks.push(check("read-out and Duan identities", identities(&mem, cfg)));
    checks.push(check("Poissonian source is flat", flat(&mem, cfg)));
    checks.push(check("exact source approaches white noise", exact_vs_white(&mem)));
    checks.push(check("source spectrum is even", source_evenness(cfg)));
    if let Some(path) = import {
        checks.push(check("imported kernel symmetry", imported_symmetry(path)));
    }
    checks
}

fn source_evenness(cfg: &RunConfig) -> anyhow::Result<(bool, String)> {
    let src = cfg.source;
    let grain = cfg.memory.omega_grain();
    let mut worst: f64 = 0.0;
    for n in 0..=cfg.half_width as i64 {
        let w = n as f64 * grain;
        worst = worst.max((src.input_spectrum(w)? - src.input_spectrum(-w)?).abs());
    }
    Ok(within(worst, 1e-12))
}

fn convergence(mem: &Memory) -> anyhow::Result<(bool, String)> {
    let cfg = mem.config();
    let fine = MemoryConfig {
        n_z: 2 * cfg.n_z - 1,
        n_t: 2 * cfg.n_t - 1,
        ..*cfg
    };
    let refined = Memory::build_unchecked_grid(&fine, 2)?;
    let a = mem.schmidt().lambdas()[0];
    let b = refined.schmidt().lambdas()[0];
    Ok((
        (a - b).abs() < 1e-3 && cfg.validate().is_ok(),
        format!("lambda_1 {a:.6} at {} points, {b:.6} at {}", cfg.n_t, fine.n_t),
    ))
}

fn identities(mem: &Memory, cfg: &RunConfig) -> anyhow::Result<(bool, String)> {
    let idx = centered_indices(cfg.half_width);
    let nm = cfg.noise_model;
    let sim = simultaneous_readout_spectrum(mem, &cfg.source, nm, &idx)?;
    let suc = successive_readout_spectrum(mem, &cfg.source, nm, &idx)?;
    let mut worst: f64 = 0.0;
    for (a, b) in sim.points.iter().zip(&suc.points) {
        worst = worst.max((b.value - 0.5 * (1.0 + a.value)).abs());
    }
    let spin = spin_wave_spectrum(mem, &cfg.source, nm, &idx)?;
    for p in &spin.points {
        worst = worst.max((spin_wave_duan(mem, &cfg.source, nm, p.argument)? - p.value).abs());
    }
    Ok(within(worst, 1e-12))
}

fn flat(mem: &Memory, cfg: &RunConfig) -> anyhow::Result<(bool, String)> {
    let src = LaserSource { p: 0.0, ..cfg.source };
    let idx = centered_indices(cfg.half_width);
    let nm = cfg.noise_model;
    let curves = [
        spin_wave_spectrum(mem, &src, nm, &idx)?,
        simultaneous_readout_spectrum(mem, &src, nm, &idx)?,
        successive_readout_spectrum(mem, &src, nm, &idx)?,
    ];
    let off = curves
        .iter()
        .flat_map(|c| &c.points)
        .filter(|p| p.value != 1.0)
        .count();
    Ok((off == 0, format!("{off} samples differ from 1")))
}

fn exact_vs_white(mem: &Memory) -> anyhow::Result<(bool, String)> {
    let cfg = mem.config();
    let src = LaserSource::with_default_kappa(-1.0, 0.0, cfg.write_time)?;
    let z = 0.5 * cfg.length;
    let white = spin_wave_covariance(mem, &src, NoiseModel::WhiteNoise, z, z)?;
    let exact = spin_wave_covariance(mem, &src, NoiseModel::ExactSource, z, z)?;
    let rel = ((exact - white) / white).abs();
    Ok((rel < 0.02, format!("relative difference {rel:.3e} at kappa*Tw = 200")))
}

fn imported_symmetry(path: &Path) -> anyhow::Result<(bool, String)> {
    let k = export::import_kernel_csv(path)?;
    if k.rows != k.cols {
        return Ok((false, "row and column grids differ".into()));
    }
    let scale = k.values.amax();
    let asym = (&k.values - k.values.transpose()).amax() / scale.max(f64::MIN_POSITIVE);
    Ok(within(asym, 1e-9))
}
