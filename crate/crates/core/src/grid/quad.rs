use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operators::KernelSpec;

use alloc::format;

/// Outcome of a truncated principal-value sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub value: f64,
    pub cells_used: usize,
    /// Cells inside the truncation radius, left out of the sum.
    pub cells_excluded: usize,
}

/// `Σ K(x, y) f(y) |cell|` over every sample `y` with `|x - y|` at least the
/// kernel's truncation radius. Offsets are formed from integer index
/// differences, so cells paired symmetrically about `x` cancel exactly.
pub fn pv_integral(kernel: &KernelSpec, f: &GridFunction, x: usize) -> Result<QuadratureReport> {
    let grid = f.grid();
    if x >= grid.len() {
        return Err(Error::NotASamplePoint(format!("index {x} out of range")));
    }
    let table = kernel.table(grid)?;
    let xi = grid.unflat(x);
    let mut value = 0.0;
    let mut cells_used = 0;
    let mut cells_excluded = 0;
    for (j, &fj) in f.samples().iter().enumerate() {
        let yj = grid.unflat(j);
        match table.weight(xi, yj) {
            Some(w) => {
                value += w * fj;
                cells_used += 1;
            }
            None => cells_excluded += 1,
        }
    }
    Ok(QuadratureReport {
        value,
        cells_used,
        cells_excluded,
    })
}

/// [`pv_integral`] at a point given by coordinates; the point must be a
/// cell midpoint.
pub fn pv_integral_at(kernel: &KernelSpec, f: &GridFunction, x: &[f64]) -> Result<QuadratureReport> {
    let idx = f
        .grid()
        .sample_index(x)
        .ok_or_else(|| Error::NotASamplePoint(format!("{x:?}")))?;
    pv_integral(kernel, f, idx)
}
