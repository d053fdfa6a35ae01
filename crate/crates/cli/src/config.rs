use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use qmem_core::kernels::{MemoryConfig, DEFAULT_GRID_POINTS};
use qmem_core::protocols::{Protocol, DEFAULT_HALF_WIDTH};
use qmem_core::schmidt::DEFAULT_MODES;
use qmem_core::source_model::{LaserSource, NoiseModel};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Settings shared by every subcommand. Flags override the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON config file with the same keys as the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dimensionless cell length
    #[arg(long = "L", global = true)]
    pub length: Option<f64>,
    /// Dimensionless write (and read) time
    #[arg(long = "Tw", global = true)]
    pub write_time: Option<f64>,
    /// Pump statistics parameter, -1 for perfectly regular pumping
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    /// Laser linewidth; defaults to 200/Tw
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Synchronization parameter in [0, 1)
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Grid points along z and t
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Number of Schmidt modes kept
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// write, read-simultaneous (default), read-successive or two-pulse
    #[arg(long, global = true, value_parser = parse_protocol)]
    pub protocol: Option<Protocol>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use the finite-linewidth source correlator instead of white noise
    #[arg(long, global = true)]
    pub exact_source: bool,
    /// Curves span 2*half-width+1 grain points
    #[arg(long, global = true)]
    pub half_width: Option<usize>,
    /// Delay between the two successive read-out pulses
    #[arg(long, global = true)]
    pub delay: Option<f64>,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
        format!("unknown protocol '{s}' (write, read-simultaneous, read-successive, two-pulse)")
    })
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub p: Option<f64>,
    pub kappa: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "L")]
    pub length: Option<f64>,
    #[serde(rename = "Tw")]
    pub write_time: Option<f64>,
    pub p: Option<f64>,
    pub kappa: Option<f64>,
    pub mu: Option<f64>,
    pub grid: Option<usize>,
    pub modes: Option<usize>,
    pub protocol: Option<Protocol>,
    pub out: Option<PathBuf>,
    pub exact_source: Option<bool>,
    pub half_width: Option<usize>,
    pub delay: Option<f64>,
    /// Second pulse of the two-pulse protocol; missing keys fall back to the
    /// first source.
    pub second_source: Option<SourceFile>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
    }
}

/// Fully resolved inputs of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub memory: MemoryConfig,
    pub source: LaserSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_source: Option<LaserSource>,
    pub protocol: Protocol,
    pub noise_model: NoiseModel,
    pub n_modes: usize,
    pub half_width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
    /// Where outputs go; not part of the physics, so not serialized.
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    /// Merges flags over the config file over defaults. `coarse_ok` admits
    /// grids below the production minimum (used by `validate`).
    pub fn resolve(args: &CommonArgs, coarse_ok: bool) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let length = args.length.or(file.length).unwrap_or(10.0);
        let write_time = args.write_time.or(file.write_time).unwrap_or(5.5);
        let grid = args.grid.or(file.grid).unwrap_or(DEFAULT_GRID_POINTS);
        let memory = MemoryConfig {
            length,
            write_time,
            read_time: write_time,
            n_z: grid,
            n_t: grid,
        };
        let checked = if coarse_ok {
            memory.validate_physical()
        } else {
            memory.validate()
        };
        checked.map_err(|e| UsageError(e.to_string()))?;

        let p = args.p.or(file.p).unwrap_or(-1.0);
        let mu = args.mu.or(file.mu).unwrap_or(0.0);
        let kappa = args.kappa.or(file.kappa).unwrap_or(200.0 / write_time);
        let source = LaserSource::new(p, kappa, mu).map_err(|e| UsageError(e.to_string()))?;
        let second_source = file
            .second_source
            .map(|s| {
                LaserSource::new(
                    s.p.unwrap_or(p),
                    s.kappa.unwrap_or(kappa),
                    s.mu.unwrap_or(mu),
                )
                .map_err(|e| UsageError(format!("second source: {e}")))
            })
            .transpose()?;

        let n_modes = args.modes.or(file.modes).unwrap_or(DEFAULT_MODES);
        if n_modes == 0 || n_modes > grid {
            return Err(UsageError(format!("mode count {n_modes} must lie in 1..={grid}")).into());
        }
        let protocol = args.protocol.or(file.protocol).unwrap_or_default();
        let exact = args.exact_source || file.exact_source.unwrap_or(false);
        let delay = args.delay.or(file.delay);
        if let Some(d) = delay {
            qmem_core::protocols::validate_successive_delay(&memory, d)
                .map_err(|e| UsageError(e.to_string()))?;
        }
        Ok(Self {
            memory,
            source,
            second_source,
            protocol,
            noise_model: if exact {
                NoiseModel::ExactSource
            } else {
                NoiseModel::WhiteNoise
            },
            n_modes,
            half_width: args.half_width.or(file.half_width).unwrap_or(DEFAULT_HALF_WIDTH),
            delay,
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    pub fn sources(&self) -> Vec<LaserSource> {
        std::iter::once(self.source).chain(self.second_source).collect()
    }

    /// Same run on another `(L, T_W)` with grid and mode count pinned. The
    /// linewidth keeps κT_W fixed unless it was set explicitly.
    pub fn with_set(&self, length: f64, write_time: f64, args: &CommonArgs) -> anyhow::Result<Self> {
        let mut next = self.clone();
        next.memory.length = length;
        next.memory.write_time = write_time;
        next.memory.read_time = write_time;
        if args.kappa.is_none() {
            next.source.kappa = self.source.kappa * self.memory.write_time / write_time;
        }
        next.memory.validate().map_err(|e| UsageError(e.to_string()))?;
        next.source.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(next)
    }

    pub fn output_path(&self, name: &str) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output directory {}", self.out.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        Ok(self.out.join(name))
    }
}
