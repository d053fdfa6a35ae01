use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `count` equally spaced samples covering `[start, stop]`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    start: f64,
    stop: f64,
    count: usize,
}

impl UniformGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite()) {
            return domain(format!("grid bounds must be finite, got [{start}, {stop}]"));
        }
        if count < 2 {
            return domain(format!("grid needs at least 2 points, got {count}"));
        }
        if stop <= start {
            return domain(format!("grid must have stop > start, got [{start}, {stop}]"));
        }
        Ok(Self { start, stop, count })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn length(&self) -> f64 {
        self.stop - self.start
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    /// Sample `j`, computed as `start + j * step` (the last sample is `stop`
    /// up to rounding).
    pub fn point(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.point(j)).collect()
    }

    /// The grid with every interval halved (`2·count − 1` points).
    pub fn refined(&self) -> Self {
        Self {
            count: 2 * self.count - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction1D {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl SampledFunction1D {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return domain(format!(
                "sample count {} does not match grid count {}",
                values.len(),
                grid.count()
            ));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("sample {j} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Real samples on a rectangular grid; row index follows `rows`, column
/// index follows `cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction2D {
    rows: UniformGrid,
    cols: UniformGrid,
    values: DMatrix<f64>,
}

impl SampledFunction2D {
    pub fn new(rows: UniformGrid, cols: UniformGrid, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != rows.count() || values.ncols() != cols.count() {
            return domain(format!(
                "matrix is {}x{} but grids are {}x{}",
                values.nrows(),
                values.ncols(),
                rows.count(),
                cols.count()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("matrix contains non-finite samples");
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> &UniformGrid {
        &self.rows
    }

    pub fn cols(&self) -> &UniformGrid {
        &self.cols
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.values.row(row).iter().copied().collect()
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values.column(col).iter().copied().collect()
    }
}
