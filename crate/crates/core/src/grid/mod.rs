//! Uniform grids over a box, sampled functions and cubes.
//!
//! Samples sit at cell midpoints. In dimension two, sample `(i, j)` (with `i`
//! along the first axis) is stored at flat index `i * n + j`.

mod quad;

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;

pub use quad::{pv_integral, pv_integral_at, QuadratureReport};

/// Relative slack used when snapping cube boundaries onto cell edges.
const EDGE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn new(n: usize) -> Result<Dim> {
        match n {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            _ => Err(invalid("dimension must be 1 or 2")),
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    /// Number of dyadic children, `2^dim`.
    #[inline]
    pub fn fanout(self) -> usize {
        1 << self.get()
    }
}

/// An axis-parallel cube `corner + [0, side)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    dim: Dim,
    corner: [f64; 2],
    side: f64,
}

impl Cube {
    pub fn new(dim: Dim, corner: &[f64], side: f64) -> Result<Cube> {
        if corner.len() != dim.get() {
            return Err(invalid("corner length does not match dimension"));
        }
        if !(side > 0.0) || !side.is_finite() || corner.iter().any(|c| !c.is_finite()) {
            return Err(invalid("cube side must be positive and finite"));
        }
        let mut c = [0.0; 2];
        c[..corner.len()].copy_from_slice(corner);
        Ok(Cube { dim, corner: c, side })
    }

    pub fn interval(a: f64, side: f64) -> Result<Cube> {
        Cube::new(Dim::One, &[a], side)
    }

    pub fn square(x: f64, y: f64, side: f64) -> Result<Cube> {
        Cube::new(Dim::Two, &[x, y], side)
    }

    /// The cube with the given center and side.
    pub fn centered(dim: Dim, center: &[f64], side: f64) -> Result<Cube> {
        let corner: Vec<f64> = center.iter().map(|c| c - side / 2.0).collect();
        Cube::new(dim, &corner, side)
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }
    #[inline]
    pub fn corner(&self) -> &[f64] {
        &self.corner[..self.dim.get()]
    }
    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        math::powi(self.side, self.dim.get() as u32)
    }

    pub fn center(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (k, ck) in c.iter_mut().enumerate().take(self.dim.get()) {
            *ck = self.corner[k] + self.side / 2.0;
        }
        c
    }

    /// Radius of the smallest ball about the center that contains the cube.
    pub fn circumradius(&self) -> f64 {
        self.side * math::sqrt(self.dim.get() as f64) / 2.0
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius()
    }

    /// `λQ`: same center, side multiplied by `factor`.
    pub fn dilate(&self, factor: f64) -> Result<Cube> {
        let c = self.center();
        Cube::centered(self.dim, &c[..self.dim.get()], self.side * factor)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim.get()).all(|k| x[k] >= self.corner[k] && x[k] < self.corner[k] + self.side)
    }

    /// `true` if `other` lies inside `self` (closed containment, with a small
    /// relative slack for rounding).
    pub fn contains_cube(&self, other: &Cube) -> bool {
        let tol = EDGE_SNAP * self.side;
        (0..self.dim.get()).all(|k| {
            other.corner[k] >= self.corner[k] - tol
                && other.corner[k] + other.side <= self.corner[k] + self.side + tol
        })
    }

    /// The `2^dim` congruent halves, ordered with the last axis fastest.
    pub fn children(&self) -> Vec<Cube> {
        let h = self.side / 2.0;
        let mut out = Vec::with_capacity(self.dim.fanout());
        match self.dim {
            Dim::One => {
                out.push(Cube { side: h, ..*self });
                out.push(Cube {
                    corner: [self.corner[0] + h, 0.0],
                    side: h,
                    ..*self
                });
            }
            Dim::Two => {
                for a in 0..2 {
                    for b in 0..2 {
                        out.push(Cube {
                            dim: self.dim,
                            corner: [
                                self.corner[0] + h * a as f64,
                                self.corner[1] + h * b as f64,
                            ],
                            side: h,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Geometry of a uniform grid: `n` cells per axis over `corner + [0, side)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: Dim,
    corner: [f64; 2],
    side: f64,
    n: usize,
}

/// Cells of a grid meeting a cube, with the covered volume of each.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub cells: Vec<(usize, f64)>,
    pub volume: f64,
}

impl Grid {
    pub fn new(dim: Dim, corner: &[f64], side: f64, n: usize) -> Result<Grid> {
        let cube = Cube::new(dim, corner, side)?;
        if n == 0 {
            return Err(invalid("resolution must be positive"));
        }
        Ok(Grid {
            dim,
            corner: cube.corner,
            side,
            n,
        })
    }

    /// Grid on `(-half_width, half_width)^dim`.
    pub fn symmetric(dim: Dim, half_width: f64, n: usize) -> Result<Grid> {
        let corner = [-half_width; 2];
        Grid::new(dim, &corner[..dim.get()], 2.0 * half_width, n)
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn corner(&self) -> &[f64] {
        &self.corner[..self.dim.get()]
    }
    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }
    #[inline]
    pub fn cell_width(&self) -> f64 {
        self.side / self.n as f64
    }
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        math::powi(self.cell_width(), self.dim.get() as u32)
    }
    /// Total number of samples, `n^dim`.
    #[inline]
    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.n,
            Dim::Two => self.n * self.n,
        }
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> Cube {
        Cube {
            dim: self.dim,
            corner: self.corner,
            side: self.side,
        }
    }

    #[inline]
    pub fn flat(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            Dim::One => idx[0],
            Dim::Two => idx[0] * self.n + idx[1],
        }
    }

    #[inline]
    pub fn unflat(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            Dim::One => [flat, 0],
            Dim::Two => [flat / self.n, flat % self.n],
        }
    }

    /// Midpoint of the cell with the given flat index.
    pub fn midpoint(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflat(flat);
        let h = self.cell_width();
        let mut p = [0.0; 2];
        for k in 0..self.dim.get() {
            p[k] = self.corner[k] + (idx[k] as f64 + 0.5) * h;
        }
        p
    }

    /// The cell `[i, i+1) x ...` as a cube.
    pub fn cell_cube(&self, flat: usize) -> Cube {
        let idx = self.unflat(flat);
        let h = self.cell_width();
        let mut c = [0.0; 2];
        for k in 0..self.dim.get() {
            c[k] = self.corner[k] + idx[k] as f64 * h;
        }
        Cube {
            dim: self.dim,
            corner: c,
            side: h,
        }
    }

    /// Flat index of the sample at `x`, if `x` is a midpoint to within
    /// `1e-9` cell widths.
    pub fn sample_index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim.get() {
            return None;
        }
        let h = self.cell_width();
        let mut idx = [0usize; 2];
        for k in 0..self.dim.get() {
            let t = (x[k] - self.corner[k]) / h - 0.5;
            let r = math::round(t);
            if math::abs(t - r) > 1e-9 || r < 0.0 || r >= self.n as f64 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(self.flat(idx))
    }

    pub fn is_compatible(&self, other: &Grid) -> bool {
        self == other
    }

    /// Per-axis overlap of `[a, b)` with the grid cells: `(cell, length)`.
    fn axis_overlap(&self, axis: usize, a: f64, b: f64) -> Vec<(usize, f64)> {
        let h = self.cell_width();
        let c0 = self.corner[axis];
        let lo = math::floor((a - c0) / h).max(0.0);
        let hi = math::ceil((b - c0) / h).min(self.n as f64);
        let mut out = Vec::new();
        if hi <= lo {
            return out;
        }
        for k in (lo as usize)..(hi as usize) {
            let s = c0 + k as f64 * h;
            let len = (s + h).min(b) - s.max(a);
            if len <= EDGE_SNAP * h {
                continue;
            }
            let len = if len >= h * (1.0 - EDGE_SNAP) { h } else { len };
            out.push((k, len));
        }
        out
    }

    /// Cells meeting `q ∩ domain`, weighted by covered volume.
    pub fn coverage(&self, q: &Cube) -> Result<Coverage> {
        if q.dim != self.dim {
            return Err(invalid("cube dimension does not match grid"));
        }
        let ax0 = self.axis_overlap(0, q.corner[0], q.corner[0] + q.side);
        let mut cells = Vec::new();
        match self.dim {
            Dim::One => cells = ax0,
            Dim::Two => {
                let ax1 = self.axis_overlap(1, q.corner[1], q.corner[1] + q.side);
                cells.reserve(ax0.len() * ax1.len());
                for &(i, li) in &ax0 {
                    for &(j, lj) in &ax1 {
                        cells.push((i * self.n + j, li * lj));
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::CubeOutsideDomain);
        }
        let volume = cells.iter().map(|c| c.1).sum();
        Ok(Coverage { cells, volume })
    }

    /// Coverage of a cube required to lie inside the domain.
    pub fn coverage_inside(&self, q: &Cube) -> Result<Coverage> {
        let cov = self.coverage(q)?;
        if cov.volume < q.volume() * (1.0 - 1e-9) {
            return Err(Error::CubeOutsideDomain);
        }
        Ok(cov)
    }

    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<GridFunction> {
        let samples = (0..self.len())
            .map(|i| {
                let p = self.midpoint(i);
                f(&p[..self.dim.get()])
            })
            .collect();
        GridFunction::new(*self, samples)
    }

    pub fn constant(&self, c: f64) -> Result<GridFunction> {
        GridFunction::new(*self, alloc::vec![c; self.len()])
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction {
            grid: *self,
            samples: alloc::vec![0.0; self.len()],
        }
    }

    /// Indicator of a set of flat cell indices.
    pub fn indicator(&self, cells: &[usize]) -> GridFunction {
        let mut g = self.zeros();
        for &c in cells {
            g.samples[c] = 1.0;
        }
        g
    }
}

/// A real function sampled at the cell midpoints of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<GridFunction> {
        if samples.len() != grid.len() {
            return Err(Error::SampleCount {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(GridFunction { grid, samples })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
    #[inline]
    pub fn get(&self, flat: usize) -> f64 {
        self.samples[flat]
    }
    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Pointwise map. The result must stay finite.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridFunction> {
        GridFunction::new(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Result<GridFunction> {
        if !self.grid.is_compatible(&other.grid) {
            return Err(Error::IncompatibleGrids);
        }
        GridFunction::new(
            self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a * b)
    }
    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }
    pub fn abs(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            samples: self.samples.iter().map(|v| math::abs(*v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    /// Volume-weighted midpoint rule over `q ∩ domain`.
    pub fn integrate(&self, q: &Cube) -> Result<f64> {
        let cov = self.grid.coverage(q)?;
        Ok(self.integrate_coverage(&cov))
    }

    pub fn integrate_coverage(&self, cov: &Coverage) -> f64 {
        cov.cells.iter().map(|&(c, w)| self.samples[c] * w).sum()
    }

    /// `integrate(q) / |q|`.
    pub fn average(&self, q: &Cube) -> Result<f64> {
        Ok(self.integrate(q)? / q.volume())
    }

    /// Integral over the whole domain.
    pub fn total(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Integral over a set of whole cells.
    pub fn integrate_cells(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&c| self.samples[c]).sum::<f64>() * self.grid.cell_volume()
    }

    /// `(∫ |f|^p w)^{1/p}` over the whole domain.
    pub fn lp_norm(&self, p: f64, w: Option<&GridFunction>) -> f64 {
        let h = self.grid.cell_volume();
        let s: f64 = match w {
            Some(w) => self
                .samples
                .iter()
                .zip(w.samples())
                .map(|(v, wv)| math::powf(math::abs(*v), p) * wv)
                .sum(),
            None => self.samples.iter().map(|v| math::powf(math::abs(*v), p)).sum(),
        };
        math::powf(s * h, 1.0 / p)
    }

    /// `∫ f g` over the whole domain.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        if !self.grid.is_compatible(&other.grid) {
            return Err(Error::IncompatibleGrids);
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_preserves_center() {
        let q = Cube::square(1.0, -2.0, 3.0).unwrap();
        let d = q.dilate(5.0).unwrap();
        assert_eq!(q.center(), d.center());
        assert_eq!(d.side(), 15.0);
    }

    #[test]
    fn rejects_bad_cubes_and_samples() {
        assert!(Cube::interval(0.0, 0.0).is_err());
        assert!(Cube::interval(0.0, -1.0).is_err());
        let g = Grid::new(Dim::One, &[0.0], 1.0, 4).unwrap();
        assert!(matches!(
            GridFunction::new(g, alloc::vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFiniteSample { index: 1 })
        ));
        assert!(GridFunction::new(g, alloc::vec![0.0; 3]).is_err());
    }

    #[test]
    fn even_symmetric_grid_avoids_origin() {
        let g = Grid::symmetric(Dim::Two, 1.0, 16).unwrap();
        for i in 0..g.len() {
            let p = g.midpoint(i);
            assert!(p[0] != 0.0 && p[1] != 0.0);
        }
    }

    #[test]
    fn sample_index_roundtrip() {
        let g = Grid::new(Dim::Two, &[-1.0, 0.5], 3.0, 12).unwrap();
        for i in 0..g.len() {
            let p = g.midpoint(i);
            assert_eq!(g.sample_index(&p), Some(i));
        }
        assert_eq!(g.sample_index(&[-1.0, 0.5]), None);
    }

    #[test]
    fn incompatible_arithmetic_is_an_error() {
        let a = Grid::new(Dim::One, &[0.0], 1.0, 4).unwrap().zeros();
        let b = Grid::new(Dim::One, &[0.0], 1.0, 8).unwrap().zeros();
        assert_eq!(a.add(&b), Err(Error::IncompatibleGrids));
    }

    #[test]
    fn partial_cells_count_by_volume() {
        let g = Grid::new(Dim::One, &[0.0], 1.0, 4).unwrap();
        let one = g.constant(1.0).unwrap();
        let q = Cube::interval(0.1, 0.5).unwrap();
        assert!((one.integrate(&q).unwrap() - 0.5).abs() < 1e-15);
        let outside = Cube::interval(2.0, 1.0).unwrap();
        assert_eq!(one.integrate(&outside), Err(Error::CubeOutsideDomain));
    }
}
