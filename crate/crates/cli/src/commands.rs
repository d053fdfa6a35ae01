use std::fmt::Write as _;

use clap::ValueEnum;
use qmem_core::protocols::{
    centered_indices, run_protocol, spin_wave_spectrum, successive_readout_spectrum, Headline,
    Memory, ProtocolResult, SpectralCurve,
};
use serde::Serialize;

use crate::config::{CommonArgs, RunConfig};
use crate::export;

pub fn spectrum(cfg: &RunConfig) -> anyhow::Result<()> {
    let mem = Memory::build(&cfg.memory, cfg.n_modes)?;
    let result = run_protocol(&mem, cfg.protocol, &cfg.sources(), cfg.noise_model, cfg.half_width)?;
    let name = cfg.protocol.name();
    export::write(&cfg.output_path(&format!("{name}.csv"))?, &export::curve_csv(&result.curve))?;
    export::write(&cfg.output_path(&format!("{name}.json"))?, &export::json(&SpectrumOutput::new(cfg, &result))?)?;
    println!(
        "{name}: value at zero {:.6}, squeezing {:.2}%",
        result.headline.zero_argument_value, result.headline.squeezing_percent
    );
    Ok(())
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    config: &'a RunConfig,
    headline: Headline,
    n_modes_kept: usize,
    notes: &'a [String],
}

impl<'a> SpectrumOutput<'a> {
    fn new(config: &'a RunConfig, r: &'a ProtocolResult) -> Self {
        Self {
            config,
            headline: r.headline,
            n_modes_kept: r.n_modes,
            notes: &r.notes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2a,
    Fig2b,
    Fig45a,
    Fig45b,
    Fig3,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig45a => "fig45a",
            Figure::Fig45b => "fig45b",
            Figure::Fig3 => "fig3",
        }
    }

    /// Matched set first, then the unmatched one.
    fn sets(self) -> [(f64, f64); 2] {
        match self {
            Figure::Fig2a | Figure::Fig45a => [(10.0, 5.5), (10.0, 7.25)],
            _ => [(10.0, 5.5), (30.0, 5.5)],
        }
    }
}

#[derive(Serialize)]
struct FigureCurve {
    curve: usize,
    file: String,
    config: RunConfig,
    headline: Headline,
}

#[derive(Serialize)]
struct FigureOutput {
    figure: &'static str,
    quantity: &'static str,
    curves: Vec<FigureCurve>,
    /// Curve 2 minus curve 1 at zero argument.
    difference_at_zero: f64,
}

pub fn figure(which: Figure, cfg: &RunConfig, args: &CommonArgs) -> anyhow::Result<()> {
    if which == Figure::Fig3 {
        return fig3(cfg);
    }
    let quantity = match which {
        Figure::Fig2a | Figure::Fig2b => "spin-wave quadrature spectrum",
        _ => "one-channel read-out spectrum",
    };
    let indices = centered_indices(cfg.half_width);
    let mut curves = Vec::new();
    for (i, (length, write_time)) in which.sets().into_iter().enumerate() {
        let run = cfg.with_set(length, write_time, args)?;
        let mem = Memory::build(&run.memory, run.n_modes)?;
        let curve: SpectralCurve = match which {
            Figure::Fig2a | Figure::Fig2b => spin_wave_spectrum(&mem, &run.source, run.noise_model, &indices)?,
            _ => successive_readout_spectrum(&mem, &run.source, run.noise_model, &indices)?,
        };
        let file = format!("{}_curve{}.csv", which.name(), i + 1);
        export::write(&run.output_path(&file)?, &export::curve_csv(&curve))?;
        curves.push(FigureCurve {
            curve: i + 1,
            file,
            headline: Headline::from_curve(&curve)?,
            config: run,
        });
    }
    let difference_at_zero = curves[1].headline.zero_argument_value - curves[0].headline.zero_argument_value;
    let out = FigureOutput {
        figure: which.name(),
        quantity,
        curves,
        difference_at_zero,
    };
    export::write(&cfg.output_path(&format!("{}.json", which.name()))?, &export::json(&out)?)?;
    for c in &out.curves {
        println!(
            "{} curve {} (L={}, Tw={}): value at zero {:.6}",
            out.figure, c.curve, c.config.memory.length, c.config.memory.write_time, c.headline.zero_argument_value
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct Fig3Output<'a> {
    figure: &'static str,
    config: &'a RunConfig,
    schmidt: qmem_core::schmidt::SchmidtSummary,
}

fn fig3(cfg: &RunConfig) -> anyhow::Result<()> {
    let mem = Memory::build(&cfg.memory, cfg.n_modes)?;
    let summary = mem.schmidt().summary()?;
    let mut csv = String::from("# table=schmidt; axis=mode; units=dimensionless\nmode,lambda,phi_abs_at_zero\n");
    for (i, (l, f)) in summary.lambdas.iter().zip(&summary.zero_frequency_magnitudes).enumerate() {
        let _ = writeln!(csv, "{},{},{}", i + 1, export::num(*l), export::num(*f));
    }
    export::write(&cfg.output_path("fig3.csv")?, &csv)?;
    let out = Fig3Output {
        figure: "fig3",
        config: cfg,
        schmidt: summary,
    };
    export::write(&cfg.output_path("fig3.json")?, &export::json(&out)?)?;
    for (i, (l, f)) in out.schmidt.lambdas.iter().zip(&out.schmidt.zero_frequency_magnitudes).take(4).enumerate() {
        println!("mode {}: lambda {l:.6}, |phi(0)| {f:.6}", i + 1);
    }
    Ok(())
}

#[derive(Serialize)]
struct SchmidtOutput<'a> {
    config: &'a RunConfig,
    schmidt: qmem_core::schmidt::SchmidtSummary,
}

pub fn schmidt(cfg: &RunConfig) -> anyhow::Result<()> {
    let mem = Memory::build(&cfg.memory, cfg.n_modes)?;
    let sd = mem.schmidt();
    export::write(
        &cfg.output_path("schmidt_temporal_modes.csv")?,
        &export::modes_csv("temporal", "t", "phi", sd.temporal_modes()),
    )?;
    export::write(
        &cfg.output_path("schmidt_spatial_modes.csv")?,
        &export::modes_csv("spatial", "z", "g", sd.spatial_modes()),
    )?;
    let out = SchmidtOutput {
        config: cfg,
        schmidt: sd.summary()?,
    };
    export::write(&cfg.output_path("schmidt.json")?, &export::json(&out)?)?;
    println!(
        "kept {} modes, leading lambdas {:?}",
        sd.n_modes_kept(),
        &sd.lambdas()[..sd.n_modes_kept().min(3)]
    );
    Ok(())
}

pub fn kernel(cfg: &RunConfig) -> anyhow::Result<()> {
    let mem = Memory::build(&cfg.memory, cfg.n_modes)?;
    let wk = mem.write_kernel();
    let ck = mem.cycle_kernel();
    export::write(
        &cfg.output_path("write_kernel.csv")?,
        &export::kernel_csv("write", "z", "t", wk.z_grid(), wk.t_grid(), wk.values()),
    )?;
    export::write(
        &cfg.output_path("cycle_kernel.csv")?,
        &export::kernel_csv("cycle", "t", "t_prime", ck.t_grid(), ck.t_grid(), ck.values()),
    )?;
    println!("cycle kernel raw asymmetry {:e}", ck.raw_asymmetry());
    Ok(())
}
