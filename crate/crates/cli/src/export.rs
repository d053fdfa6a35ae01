//! Flat-file outputs: CSV with 17 significant digits and LF endings, pretty
//! JSON.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use qmem_core::numerics::{SampledFunction1D, UniformGrid};
use qmem_core::protocols::SpectralCurve;
use serde::Serialize;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curve_csv(curve: &SpectralCurve) -> String {
    let axis = curve.axis_kind.symbol();
    let mut s = format!(
        "# axis_kind={}; grain={}; units=dimensionless; curve={}\n{axis},value\n",
        axis_name(curve),
        num(curve.grain),
        curve.label
    );
    for p in &curve.points {
        let _ = writeln!(s, "{},{}", num(p.argument), num(p.value));
    }
    s
}

fn axis_name(curve: &SpectralCurve) -> &'static str {
    match curve.axis_kind {
        qmem_core::protocols::AxisKind::Wavenumber => "wavenumber",
        qmem_core::protocols::AxisKind::Frequency => "frequency",
    }
}

/// Matrix with a header row of column coordinates and a leading column of
/// row coordinates.
pub fn kernel_csv(name: &str, row_axis: &str, col_axis: &str, rows: &UniformGrid, cols: &UniformGrid, m: &DMatrix<f64>) -> String {
    let mut s = format!(
        "# kernel={name}; rows={row_axis}; cols={col_axis}; row_step={}; col_step={}; units=dimensionless\n{row_axis}\\{col_axis}",
        num(rows.step()),
        num(cols.step())
    );
    for x in cols.points() {
        let _ = write!(s, ",{}", num(x));
    }
    s.push('\n');
    for (j, r) in rows.points().iter().enumerate() {
        s.push_str(&num(*r));
        for v in m.row(j).iter() {
            let _ = write!(s, ",{}", num(*v));
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone)]
pub struct ImportedKernel {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub values: DMatrix<f64>,
}

pub fn parse_kernel_csv(text: &str) -> anyhow::Result<ImportedKernel> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().context("kernel CSV has no header row")?;
    let cols = header
        .split(',')
        .skip(1)
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .context("bad column coordinate in kernel CSV header")?;
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("bad number on kernel row {}", i + 1))?;
        if fields.len() != cols.len() + 1 {
            bail!("kernel row {} has {} values, expected {}", i + 1, fields.len() - 1, cols.len());
        }
        rows.push(fields[0]);
        data.extend_from_slice(&fields[1..]);
    }
    let values = DMatrix::from_row_slice(rows.len(), cols.len(), &data);
    Ok(ImportedKernel { rows, cols, values })
}

pub fn import_kernel_csv(path: &Path) -> anyhow::Result<ImportedKernel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read kernel CSV {}", path.display()))?;
    parse_kernel_csv(&text)
}

/// One column per mode, numbered from 1.
pub fn modes_csv(kind: &str, axis: &str, prefix: &str, modes: &[SampledFunction1D]) -> String {
    let mut s = format!("# modes={kind}; axis={axis}; units=dimensionless\n{axis}");
    for i in 0..modes.len() {
        let _ = write!(s, ",{prefix}_{}", i + 1);
    }
    s.push('\n');
    if let Some(first) = modes.first() {
        for (j, x) in first.grid().points().iter().enumerate() {
            s.push_str(&num(*x));
            for m in modes {
                let _ = write!(s, ",{}", num(m.values()[j]));
            }
            s.push('\n');
        }
    }
    s
}

pub fn json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).map_err(|e| {
        crate::UsageError(format!("cannot write {}: {e}", path.display())).into()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmem_core::protocols::{AxisKind, CurvePoint};

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 6.02e23, 1e-300, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn curve_header_names_axis_grain_and_units() {
        let c = SpectralCurve {
            label: "read-simultaneous".into(),
            axis_kind: AxisKind::Frequency,
            grain: 0.5,
            points: vec![CurvePoint { argument: 0.0, value: 1.0 }],
        };
        let s = curve_csv(&c);
        let first = s.lines().next().unwrap();
        assert!(first.contains("axis_kind=frequency"));
        assert!(first.contains("grain=5.0000000000000000e-1"));
        assert!(first.contains("units=dimensionless"));
        assert!(!s.contains('\r'));
    }

    #[test]
    fn kernel_round_trip() {
        let g = UniformGrid::new(0.0, 1.0, 3).unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 / 7.0);
        let k = parse_kernel_csv(&kernel_csv("cycle", "t", "t_prime", &g, &g, &m)).unwrap();
        assert_eq!(k.values, m);
        assert_eq!(k.rows, g.points());
        assert_eq!(k.cols, g.points());
    }

    #[test]
    fn ragged_kernel_is_rejected() {
        assert!(parse_kernel_csv("t\\t,0,1\n0,1,2\n1,3\n").is_err());
        assert!(parse_kernel_csv("t\\t,0,1\n0,1,x\n").is_err());
    }
}
