use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::math;
use crate::operators::{KernelSpec, KernelTable};

/// Largest commutator order accepted.
pub const MAX_ORDER: u32 = 4;

/// `T_b^m` for a homogeneous kernel `T` and a symbol `b`; `m = 0` is `T`.
#[derive(Debug, Clone)]
pub struct CommutatorSpec {
    kernel: KernelSpec,
    b: GridFunction,
    m: u32,
}

impl CommutatorSpec {
    pub fn new(kernel: KernelSpec, b: GridFunction, m: u32) -> Result<CommutatorSpec> {
        if m > MAX_ORDER {
            return Err(invalid(format!("commutator order {m} exceeds {MAX_ORDER}")));
        }
        if kernel.dim() != b.grid().dim() {
            return Err(invalid("kernel and symbol dimensions differ"));
        }
        Ok(CommutatorSpec { kernel, b, m })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
    pub fn symbol(&self) -> &GridFunction {
        &self.b
    }
    pub fn order(&self) -> u32 {
        self.m
    }
}

fn coords(grid: &Grid) -> Vec<[usize; 2]> {
    (0..grid.len()).map(|i| grid.unflat(i)).collect()
}

/// Direct summation of the truncated singular integral at every sample.
pub fn apply_t(kernel: &KernelSpec, f: &GridFunction) -> Result<GridFunction> {
    let grid = *f.grid();
    let table = kernel.table(&grid)?;
    let xs = coords(&grid);
    let fs = f.samples();
    let out = xs
        .iter()
        .map(|&x| {
            xs.iter()
                .zip(fs)
                .filter(|(_, &fj)| fj != 0.0)
                .map(|(&y, &fj)| table.weight_or_zero(x, y) * fj)
                .sum()
        })
        .collect();
    GridFunction::new(grid, out)
}

/// `T_b^m f = b·T_b^{m-1} f - T_b^{m-1}(b f)`, expanded literally.
pub fn commutator_recursive(spec: &CommutatorSpec, f: &GridFunction) -> Result<GridFunction> {
    fn go(kernel: &KernelSpec, b: &GridFunction, m: u32, f: &GridFunction) -> Result<GridFunction> {
        if m == 0 {
            return apply_t(kernel, f);
        }
        let left = b.mul(&go(kernel, b, m - 1, f)?)?;
        let right = go(kernel, b, m - 1, &b.mul(f)?)?;
        left.sub(&right)
    }
    if !spec.b.grid().is_compatible(f.grid()) {
        return Err(Error::IncompatibleGrids);
    }
    go(&spec.kernel, &spec.b, spec.m, f)
}

/// `∫ (b(x) - b(y))^m K(x, y) f(y) dy` at the sample `x`, which must lie at
/// least two cells (in every-axis index distance) away from `supp f`.
pub fn commutator_kernel_form(spec: &CommutatorSpec, f: &GridFunction, x: usize) -> Result<f64> {
    let grid = *f.grid();
    if !spec.b.grid().is_compatible(&grid) {
        return Err(Error::IncompatibleGrids);
    }
    if x >= grid.len() {
        return Err(Error::NotASamplePoint(format!("index {x} out of range")));
    }
    let xi = grid.unflat(x);
    let near = f.samples().iter().enumerate().any(|(j, &v)| {
        if v == 0.0 {
            return false;
        }
        let yj = grid.unflat(j);
        let d = (0..grid.dim().get())
            .map(|k| xi[k].abs_diff(yj[k]))
            .max()
            .unwrap_or(0);
        d < 2
    });
    if near {
        return Err(Error::RepresentationNotApplicable(format!(
            "sample {x} is within two cells of supp f"
        )));
    }
    let table = spec.kernel.table(&grid)?;
    Ok(kernel_row(&table, &grid, spec.b.samples(), spec.m, xi, f.samples()))
}

fn kernel_row(table: &KernelTable, grid: &Grid, b: &[f64], m: u32, xi: [usize; 2], f: &[f64]) -> f64 {
    let bx = b[grid.flat(xi)];
    f.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, &fj)| {
            let yj = grid.unflat(j);
            math::powi(bx - b[j], m) * table.weight_or_zero(xi, yj) * fj
        })
        .sum()
}

/// The discretised `T_b^m` as a matrix-free operator with kernel
/// `(b(x) - b(y))^m K(x, y)`. On the grid this coincides with the literal
/// recursion at every sample, not only off the support of the input.
#[derive(Debug, Clone)]
pub struct CommutatorOperator {
    grid: Grid,
    table: KernelTable,
    b: Vec<f64>,
    m: u32,
    coords: Vec<[usize; 2]>,
}

impl CommutatorOperator {
    pub fn new(spec: &CommutatorSpec) -> Result<CommutatorOperator> {
        let grid = *spec.b.grid();
        Ok(CommutatorOperator {
            table: spec.kernel.table(&grid)?,
            b: spec.b.samples().to_vec(),
            m: spec.m,
            coords: coords(&grid),
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if !self.grid.is_compatible(f.grid()) {
            return Err(Error::IncompatibleGrids);
        }
        let fs = f.samples();
        let support: Vec<usize> = (0..fs.len()).filter(|&j| fs[j] != 0.0).collect();
        let out = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let bx = self.b[i];
                support
                    .iter()
                    .map(|&j| {
                        math::powi(bx - self.b[j], self.m)
                            * self.table.weight_or_zero(x, self.coords[j])
                            * fs[j]
                    })
                    .sum()
            })
            .collect();
        GridFunction::new(self.grid, out)
    }

    /// Adjoint with respect to `∫ f g` on the grid.
    pub fn apply_transpose(&self, g: &GridFunction) -> Result<GridFunction> {
        if !self.grid.is_compatible(g.grid()) {
            return Err(Error::IncompatibleGrids);
        }
        let gs = g.samples();
        let support: Vec<usize> = (0..gs.len()).filter(|&i| gs[i] != 0.0).collect();
        let out = self
            .coords
            .iter()
            .enumerate()
            .map(|(j, &y)| {
                let by = self.b[j];
                support
                    .iter()
                    .map(|&i| {
                        math::powi(self.b[i] - by, self.m)
                            * self.table.weight_or_zero(self.coords[i], y)
                            * gs[i]
                    })
                    .sum()
            })
            .collect();
        GridFunction::new(self.grid, out)
    }
}

/// Kernel-form evaluation of `T_b^m f` at every sample.
pub fn commutator_apply(spec: &CommutatorSpec, f: &GridFunction) -> Result<GridFunction> {
    CommutatorOperator::new(spec)?.apply(f)
}
