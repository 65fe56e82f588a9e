//! Uniform cell-centred grids and sampled fields.

use crate::error::{Error, Result};

/// Values at or below this magnitude count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-14;

/// A cube [-half_width, half_width]^dim split into `cells` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub cells: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, cells: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!(
                "grid dimension must be 1..3, got {dim}"
            )));
        }
        if cells < 2 || !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Parameter(format!(
                "grid needs >= 2 cells and positive width, got {cells} cells, half width {half_width}"
            )));
        }
        Ok(Grid {
            dim,
            cells,
            half_width,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Centre coordinate of cell `i` along any axis. Symmetric about 0 by construction.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.cells as f64) * self.spacing()
    }

    /// Cell centre for a flat row-major index (last axis fastest); unused axes are 0.
    pub fn center(&self, flat: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            x[axis] = self.coord(rem % self.cells);
            rem /= self.cells;
        }
        x
    }

    /// True if the cell touches the outer boundary layer.
    pub fn on_boundary(&self, flat: usize) -> bool {
        let mut rem = flat;
        for _ in 0..self.dim {
            let i = rem % self.cells;
            if i == 0 || i + 1 == self.cells {
                return true;
            }
            rem /= self.cells;
        }
        false
    }
}

/// Sampled field: one or more components on a grid, plus its declared support radius.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub components: Vec<Vec<f64>>,
    pub support_radius: f64,
}

impl GridField {
    pub fn sample(
        grid: Grid,
        ncomp: usize,
        support_radius: f64,
        f: impl Fn(&[f64; 3]) -> Vec<f64>,
    ) -> Self {
        let mut components = vec![vec![0.0; grid.len()]; ncomp];
        for flat in 0..grid.len() {
            let v = f(&grid.center(flat));
            for (c, val) in components.iter_mut().zip(v) {
                c[flat] = val;
            }
        }
        GridField {
            grid,
            components,
            support_radius,
        }
    }

    pub fn zeros(grid: Grid, ncomp: usize, support_radius: f64) -> Self {
        GridField {
            grid,
            components: vec![vec![0.0; grid.len()]; ncomp],
            support_radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// Check the support declaration and that nothing reaches the outer cells.
    pub fn check_support(&self) -> Result<()> {
        for flat in 0..self.grid.len() {
            let live = self.components.iter().any(|c| c[flat].abs() > SUPPORT_TOL);
            if !live {
                continue;
            }
            if self.grid.on_boundary(flat) {
                return Err(Error::Truncation {
                    edge: format!("cell {flat} on the grid boundary"),
                });
            }
            let x = self.grid.center(flat);
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            // a cell centre may sit up to half a diagonal outside the true support
            let slack = 0.5 * self.grid.spacing() * (self.grid.dim as f64).sqrt();
            if r > self.support_radius + slack {
                return Err(Error::Truncation {
                    edge: format!(
                        "nonzero value at |x| = {r:.6} beyond declared support {}",
                        self.support_radius
                    ),
                });
            }
        }
        Ok(())
    }
}
