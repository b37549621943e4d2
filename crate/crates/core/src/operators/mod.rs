//! Homogeneous kernels `Ω((x-y)/|x-y|) / |x-y|^n`, their Dini modulus, and
//! iterated commutators.
//!
//! The Hilbert kernel is `Ω(+1) = 1, Ω(-1) = -1`, i.e. `1/(x-y)` with no
//! `1/π` normalisation.

mod commutator;

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::{Dim, Grid};
use crate::math;

pub use commutator::{
    apply_t, commutator_apply, commutator_kernel_form, commutator_recursive, CommutatorOperator,
    CommutatorSpec,
};

/// Default truncation radius in cell sides.
pub const DEFAULT_TRUNCATION: f64 = 1.5;
/// Default number of angular samples on the circle.
pub const DEFAULT_ANGLES: usize = 4096;

/// Values of `Ω` on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub enum Omega {
    /// The zero-dimensional sphere `{+1, -1}`.
    Line { plus: f64, minus: f64 },
    /// Samples at angles `2πj/M`, linearly interpolated.
    Circle { samples: Vec<f64> },
}

/// A point of `S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Line(f64),
    /// Angle in radians.
    Circle(f64),
}

impl SpherePoint {
    pub fn vector(&self) -> [f64; 2] {
        match *self {
            SpherePoint::Line(s) => [s, 0.0],
            SpherePoint::Circle(t) => [math::cos(t), math::sin(t)],
        }
    }

    /// Euclidean (chordal) distance in `R^n`.
    pub fn chord(&self, other: &SpherePoint) -> f64 {
        let a = self.vector();
        let b = other.vector();
        math::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
    }

    pub fn dim(&self) -> Dim {
        match self {
            SpherePoint::Line(_) => Dim::One,
            SpherePoint::Circle(_) => Dim::Two,
        }
    }
}

/// Angle in `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t - 2.0 * PI * math::floor(t / (2.0 * PI));
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Chord length between two points of the circle at angular distance `a`.
#[inline]
pub fn chord_of_angle(a: f64) -> f64 {
    2.0 * math::sin(a.min(PI) / 2.0)
}

/// Angular distance corresponding to a chord length.
#[inline]
pub fn angle_of_chord(c: f64) -> f64 {
    2.0 * math::asin((c / 2.0).min(1.0))
}

impl Omega {
    pub fn dim(&self) -> Dim {
        match self {
            Omega::Line { .. } => Dim::One,
            Omega::Circle { .. } => Dim::Two,
        }
    }

    pub fn circle_from_fn<F: Fn(f64) -> f64>(m: usize, f: F) -> Omega {
        Omega::Circle {
            samples: (0..m).map(|j| f(2.0 * PI * j as f64 / m as f64)).collect(),
        }
    }

    /// `Ω` at a sphere point (linear interpolation on the circle).
    pub fn at(&self, p: SpherePoint) -> f64 {
        match (self, p) {
            (Omega::Line { plus, minus }, SpherePoint::Line(s)) => {
                if s >= 0.0 {
                    *plus
                } else {
                    *minus
                }
            }
            (Omega::Circle { samples }, SpherePoint::Circle(t)) => {
                let m = samples.len();
                let pos = wrap_angle(t) / (2.0 * PI) * m as f64;
                let j = (math::floor(pos) as usize).min(m - 1);
                let frac = pos - j as f64;
                samples[j] * (1.0 - frac) + samples[(j + 1) % m] * frac
            }
            _ => f64::NAN,
        }
    }

    /// `Ω` in the direction of a nonzero vector.
    pub fn at_direction(&self, u: &[f64]) -> f64 {
        match self {
            Omega::Line { .. } => self.at(SpherePoint::Line(u[0])),
            Omega::Circle { .. } => self.at(SpherePoint::Circle(math::atan2(u[1], u[0]))),
        }
    }

    /// Sample points of the sphere with their `Ω` values.
    pub fn sphere_samples(&self) -> Vec<(SpherePoint, f64)> {
        match self {
            Omega::Line { plus, minus } => {
                alloc::vec![(SpherePoint::Line(1.0), *plus), (SpherePoint::Line(-1.0), *minus)]
            }
            Omega::Circle { samples } => {
                let m = samples.len();
                samples
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (SpherePoint::Circle(2.0 * PI * j as f64 / m as f64), v))
                    .collect()
            }
        }
    }

    /// Whether `∫ Ω dσ = 0` on the samples, to `1e-9` of `max |Ω|`.
    pub fn has_mean_zero(&self) -> bool {
        let s = self.sphere_samples();
        let max = s.iter().fold(0.0f64, |m, p| m.max(math::abs(p.1)));
        let mean = s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
        math::abs(mean) <= 1e-9 * max.max(f64::MIN_POSITIVE)
    }
}

/// A homogeneous kernel with a truncation radius expressed in cell sides.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    omega: Omega,
    truncation_cells: f64,
    mean_zero: bool,
}

impl KernelSpec {
    pub fn new(omega: Omega, truncation_cells: f64) -> Result<KernelSpec> {
        if !(truncation_cells > 0.0) {
            return Err(invalid("truncation must be positive"));
        }
        let bounded = omega.sphere_samples().iter().all(|p| p.1.is_finite());
        if !bounded {
            return Err(invalid("Ω must be finite on its samples"));
        }
        let mean_zero = omega.has_mean_zero();
        Ok(KernelSpec {
            omega,
            truncation_cells,
            mean_zero,
        })
    }

    pub fn hilbert() -> KernelSpec {
        KernelSpec::new(Omega::Line { plus: 1.0, minus: -1.0 }, DEFAULT_TRUNCATION)
            .expect("hilbert kernel is valid")
    }

    /// `Ω(θ) = cos θ` on the circle.
    pub fn cosine(m: usize) -> KernelSpec {
        KernelSpec::new(Omega::circle_from_fn(m, math::cos), DEFAULT_TRUNCATION).expect("valid")
    }

    /// `Ω = 1` on the arc of the given width centred at `center`, `0` elsewhere.
    pub fn sign_patch(center: f64, width: f64, m: usize) -> Result<KernelSpec> {
        if !(width > 0.0 && width < 2.0 * PI) {
            return Err(invalid("arc width must be in (0, 2π)"));
        }
        let omega = Omega::circle_from_fn(m, |t| {
            if angular_distance(t, center) < width / 2.0 {
                1.0
            } else {
                0.0
            }
        });
        KernelSpec::new(omega, DEFAULT_TRUNCATION)
    }

    pub fn with_truncation(mut self, cells: f64) -> Result<KernelSpec> {
        if !(cells > 0.0) {
            return Err(invalid("truncation must be positive"));
        }
        self.truncation_cells = cells;
        Ok(self)
    }

    #[inline]
    pub fn omega(&self) -> &Omega {
        &self.omega
    }
    #[inline]
    pub fn dim(&self) -> Dim {
        self.omega.dim()
    }
    #[inline]
    pub fn truncation_cells(&self) -> f64 {
        self.truncation_cells
    }
    #[inline]
    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// `Ω(u/|u|) / |u|^n` for a nonzero displacement `u = x - y`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        let r = match self.dim() {
            Dim::One => math::abs(u[0]),
            Dim::Two => math::sqrt(u[0] * u[0] + u[1] * u[1]),
        };
        let rn = math::powi(r, self.dim().get() as u32);
        self.omega.at_direction(u) / rn
    }

    /// Kernel weights for every index offset of a grid.
    pub fn table(&self, grid: &Grid) -> Result<KernelTable> {
        KernelTable::new(self, grid)
    }
}

/// Angular distance on the circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

/// `K(x, y)·|cell|` for every offset `x - y` between cells of one grid;
/// `None` marks offsets inside the truncation radius.
#[derive(Debug, Clone)]
pub struct KernelTable {
    dim: Dim,
    n: usize,
    weights: Vec<f64>,
    excluded: Vec<bool>,
}

impl KernelTable {
    fn new(kernel: &KernelSpec, grid: &Grid) -> Result<KernelTable> {
        if kernel.dim() != grid.dim() {
            return Err(invalid("kernel and grid dimensions differ"));
        }
        let h = grid.cell_width();
        let radius = kernel.truncation_cells * h;
        let diameter = h * math::sqrt(grid.dim().get() as f64);
        if radius < diameter * (1.0 - 1e-12) {
            return Err(invalid("truncation radius is below one cell diameter"));
        }
        let n = grid.n();
        let span = 2 * n - 1;
        let len = match grid.dim() {
            Dim::One => span,
            Dim::Two => span * span,
        };
        let vol = grid.cell_volume();
        let mut weights = alloc::vec![0.0; len];
        let mut excluded = alloc::vec![false; len];
        for (k, (w, ex)) in weights.iter_mut().zip(excluded.iter_mut()).enumerate() {
            let (d0, d1) = match grid.dim() {
                Dim::One => (k as i64 - (n as i64 - 1), 0),
                Dim::Two => (
                    (k / span) as i64 - (n as i64 - 1),
                    (k % span) as i64 - (n as i64 - 1),
                ),
            };
            let u = [d0 as f64 * h, d1 as f64 * h];
            let dist = math::sqrt(u[0] * u[0] + u[1] * u[1]);
            if dist < radius {
                *ex = true;
                continue;
            }
            let v = kernel.eval(&u[..grid.dim().get()]);
            if v.is_nan() {
                return Err(Error::KernelNaN([d0, d1]));
            }
            *w = v * vol;
        }
        Ok(KernelTable {
            dim: grid.dim(),
            n,
            weights,
            excluded,
        })
    }

    #[inline]
    fn slot(&self, x: [usize; 2], y: [usize; 2]) -> usize {
        let off = self.n - 1;
        match self.dim {
            Dim::One => x[0] + off - y[0],
            Dim::Two => (x[0] + off - y[0]) * (2 * self.n - 1) + (x[1] + off - y[1]),
        }
    }

    /// `K(x, y)·|cell|`, or `None` inside the truncation radius.
    #[inline]
    pub fn weight(&self, x: [usize; 2], y: [usize; 2]) -> Option<f64> {
        let s = self.slot(x, y);
        if self.excluded[s] {
            None
        } else {
            Some(self.weights[s])
        }
    }

    /// Same as [`weight`](Self::weight) but zero inside the truncation radius.
    #[inline]
    pub fn weight_or_zero(&self, x: [usize; 2], y: [usize; 2]) -> f64 {
        self.weights[self.slot(x, y)]
    }
}

/// Modulus of continuity of `Ω` and its Dini integral.
#[derive(Debug, Clone, PartialEq)]
pub struct DiniReport {
    /// `ω(δ)` at each requested `δ`.
    pub omega_of_delta: Vec<f64>,
    /// `∫_0^1 ω(t) dt/t`, midpoint rule in `log t`.
    pub dini_integral: f64,
    pub divergent: bool,
}

/// Partial sums of the Dini integral above this value are flagged divergent.
pub const DINI_DIVERGENCE_THRESHOLD: f64 = 1e3;

/// `ω(δ) = sup_{|θ-θ'| ≤ δ} |Ω(θ) - Ω(θ')|`, with chordal distance, taken
/// over pairs of sphere samples.
pub fn dini_modulus(omega: &Omega, delta_grid: &[f64]) -> DiniReport {
    // (chord, max difference) per pair class, sorted by chord.
    let mut classes: Vec<(f64, f64)> = match omega {
        Omega::Line { plus, minus } => alloc::vec![(2.0, math::abs(plus - minus))],
        Omega::Circle { samples } => {
            let m = samples.len();
            (1..=m / 2)
                .map(|k| {
                    let chord = chord_of_angle(2.0 * PI * k as f64 / m as f64);
                    let d = (0..m).fold(0.0f64, |acc, j| {
                        acc.max(math::abs(samples[j] - samples[(j + k) % m]))
                    });
                    (chord, d)
                })
                .collect()
        }
    };
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut running = 0.0f64;
    for c in classes.iter_mut() {
        running = running.max(c.1);
        c.1 = running;
    }
    let modulus = |delta: f64| -> f64 {
        // largest chord ≤ δ
        match classes.partition_point(|c| c.0 <= delta) {
            0 => 0.0,
            k => classes[k - 1].1,
        }
    };
    let omega_of_delta = delta_grid.iter().map(|&d| modulus(d)).collect();

    let min_chord = classes.first().map(|c| c.0).unwrap_or(1.0);
    let step = core::f64::consts::LN_2 / 8.0;
    let mut integral = 0.0;
    let mut divergent = false;
    let mut hi = 1.0f64;
    for _ in 0..(8 * 64) {
        let lo = hi * math::exp(-step);
        if hi < min_chord {
            break;
        }
        integral += modulus(math::sqrt(lo * hi)) * step;
        if integral > DINI_DIVERGENCE_THRESHOLD {
            divergent = true;
            break;
        }
        hi = lo;
    }
    DiniReport {
        omega_of_delta,
        dini_integral: integral,
        divergent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_omega_has_zero_modulus() {
        let om = Omega::circle_from_fn(512, |_| 3.0);
        let r = dini_modulus(&om, &[0.01, 0.1, 1.0, 2.0]);
        assert!(r.omega_of_delta.iter().all(|&w| w == 0.0));
        assert_eq!(r.dini_integral, 0.0);
        assert!(!r.divergent);
    }

    #[test]
    fn cosine_is_lipschitz_with_dini_integral_at_most_one() {
        let om = Omega::circle_from_fn(DEFAULT_ANGLES, math::cos);
        let deltas = [1e-3, 1e-2, 0.1, 0.5, 1.0];
        let r = dini_modulus(&om, &deltas);
        for (d, w) in deltas.iter().zip(&r.omega_of_delta) {
            assert!(*w <= *d + 1e-12, "ω({d}) = {w}");
        }
        assert!(r.dini_integral <= 1.0 && r.dini_integral > 0.9, "{}", r.dini_integral);
    }

    #[test]
    fn two_point_sphere_modulus() {
        let om = Omega::Line { plus: 1.0, minus: -1.0 };
        let r = dini_modulus(&om, &[0.5, 1.0, 1.999, 2.0]);
        assert_eq!(r.omega_of_delta, alloc::vec![0.0, 0.0, 0.0, 2.0]);
        assert_eq!(r.dini_integral, 0.0);
    }

    #[test]
    fn mean_zero_flag() {
        assert!(KernelSpec::hilbert().is_mean_zero());
        assert!(KernelSpec::cosine(1024).is_mean_zero());
        assert!(!KernelSpec::sign_patch(0.0, 1.0, 1024).unwrap().is_mean_zero());
    }

    #[test]
    fn truncation_below_cell_diameter_is_rejected() {
        let g = Grid::new(Dim::Two, &[0.0, 0.0], 1.0, 8).unwrap();
        let k = KernelSpec::cosine(64).with_truncation(1.2).unwrap();
        assert!(k.table(&g).is_err());
        let g1 = Grid::new(Dim::One, &[0.0], 1.0, 8).unwrap();
        assert!(KernelSpec::hilbert().with_truncation(1.0).unwrap().table(&g1).is_ok());
    }

    #[test]
    fn interpolation_is_linear_between_samples() {
        let om = Omega::Circle {
            samples: alloc::vec![0.0, 1.0, 0.0, -1.0],
        };
        assert!((om.at(SpherePoint::Circle(PI / 4.0)) - 0.5).abs() < 1e-12);
        assert!((om.at(SpherePoint::Circle(-PI / 4.0)) + 0.5).abs() < 1e-12);
    }
}
