//! Weights, Muckenhoupt constants and `A_∞` diagnostics over finite cube
//! dictionaries, `BMO_η` norms and Bloom weights.
//!
//! Every supremum over "all cubes" is replaced by a maximum over a
//! [`CubeDictionary`], so each constant computed here is a lower bound for
//! the true one.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dyadic::DyadicTree;
use crate::error::{invalid, Error, Result};
use crate::grid::{Coverage, Cube, Dim, Grid, GridFunction};
use crate::math;

/// Closed-form description of a weight, when one is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightTag {
    /// `|x|^a`.
    Power(f64),
    Constant(f64),
    /// `1 + h` on the lower half of the domain along the first axis, `1`
    /// elsewhere.
    TwoLevel(f64),
}

/// A strictly positive grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    w: GridFunction,
    tag: Option<WeightTag>,
}

impl Weight {
    pub fn new(w: GridFunction) -> Result<Weight> {
        if let Some((index, &value)) = w.samples().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(Weight { w, tag: None })
    }

    pub fn with_tag(mut self, tag: WeightTag) -> Weight {
        self.tag = Some(tag);
        self
    }

    /// `|x|^a` (Euclidean norm in dimension 2).
    pub fn power(grid: &Grid, a: f64) -> Result<Weight> {
        let w = grid.sample(|x| {
            let r = math::sqrt(x.iter().map(|v| v * v).sum());
            math::powf(r, a)
        })?;
        Ok(Weight::new(w)?.with_tag(WeightTag::Power(a)))
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Weight> {
        Ok(Weight::new(grid.constant(c)?)?.with_tag(WeightTag::Constant(c)))
    }

    pub fn two_level(grid: &Grid, h: f64) -> Result<Weight> {
        let mid = grid.corner()[0] + grid.side() / 2.0;
        let w = grid.sample(|x| if x[0] < mid { 1.0 + h } else { 1.0 })?;
        Ok(Weight::new(w)?.with_tag(WeightTag::TwoLevel(h)))
    }

    pub fn function(&self) -> &GridFunction {
        &self.w
    }
    pub fn grid(&self) -> &Grid {
        self.w.grid()
    }
    pub fn samples(&self) -> &[f64] {
        self.w.samples()
    }
    pub fn tag(&self) -> Option<WeightTag> {
        self.tag
    }
    pub fn into_function(self) -> GridFunction {
        self.w
    }

    /// `w^e`, pointwise. Tags are carried through where the closed form is
    /// still known.
    pub fn pow(&self, e: f64) -> Weight {
        let w = self.w.map(|v| math::powf(v, e)).expect("positive powers stay finite");
        let tag = match self.tag {
            Some(WeightTag::Power(a)) => Some(WeightTag::Power(a * e)),
            Some(WeightTag::Constant(c)) => Some(WeightTag::Constant(math::powf(c, e))),
            _ => None,
        };
        Weight { w, tag }
    }

    /// `self^{1-t} other^t`.
    pub fn interpolate(&self, other: &Weight, t: f64) -> Result<Weight> {
        let w = self
            .w
            .zip_with(&other.w, |a, b| math::powf(a, 1.0 - t) * math::powf(b, t))?;
        Weight::new(w)
    }

    /// `self / other`.
    pub fn ratio(&self, other: &Weight) -> Result<Weight> {
        Weight::new(self.w.zip_with(&other.w, |a, b| a / b)?)
    }

    /// `w(Q)`.
    pub fn measure(&self, q: &Cube) -> Result<f64> {
        self.w.integrate(q)
    }
}

/// A finite list of cubes inside a domain standing in for "all cubes".
#[derive(Debug, Clone, PartialEq)]
pub struct CubeDictionary {
    grid: Grid,
    cubes: Vec<Cube>,
}

impl CubeDictionary {
    pub fn new(grid: Grid, cubes: Vec<Cube>) -> Result<CubeDictionary> {
        let domain = grid.domain();
        if let Some(q) = cubes.iter().find(|q| q.dim() != grid.dim() || !domain.contains_cube(q)) {
            return Err(invalid(format!("dictionary cube {q:?} is not inside the domain")));
        }
        if cubes.is_empty() {
            return Err(invalid("cube dictionary is empty"));
        }
        Ok(CubeDictionary { grid, cubes })
    }

    /// All cubes of a tree down to `depth` levels.
    pub fn dyadic(tree: &DyadicTree, depth: u32) -> Result<CubeDictionary> {
        let cubes = tree.cubes_to_depth(depth).iter().map(|q| tree.cube(q)).collect();
        CubeDictionary::new(*tree.grid(), cubes)
    }

    /// Side lengths `h_0 2^{-k}` from the largest `h_0` for which an
    /// origin-centred cube `(-h_0, h_0)^n` fits, down to one cell.
    pub fn ladder(grid: &Grid) -> Vec<f64> {
        let reach = grid
            .corner()
            .iter()
            .take(grid.dim().get())
            .map(|&c| (-c).min(c + grid.side()))
            .fold(f64::INFINITY, f64::min);
        let mut out = Vec::new();
        let mut h = reach;
        while h >= grid.cell_width() * (1.0 - 1e-9) && h > 0.0 {
            out.push(h);
            h /= 2.0;
        }
        out
    }

    /// Cubes with a vertex at the origin, `(0, h)^n` and its reflections.
    pub fn origin_anchored(grid: &Grid, ladder: &[f64]) -> Result<CubeDictionary> {
        let mut cubes = Vec::new();
        for &h in ladder {
            match grid.dim() {
                Dim::One => {
                    cubes.push(Cube::interval(0.0, h)?);
                    cubes.push(Cube::interval(-h, h)?);
                }
                Dim::Two => {
                    for &(x, y) in &[(0.0, 0.0), (-h, 0.0), (0.0, -h), (-h, -h)] {
                        cubes.push(Cube::square(x, y, h)?);
                    }
                }
            }
        }
        let domain = grid.domain();
        cubes.retain(|q| domain.contains_cube(q));
        CubeDictionary::new(*grid, cubes)
    }

    /// Cubes `(-h, h)^n`.
    pub fn origin_centered(grid: &Grid, ladder: &[f64]) -> Result<CubeDictionary> {
        let zero = [0.0; 2];
        let mut cubes = Vec::new();
        for &h in ladder {
            cubes.push(Cube::centered(grid.dim(), &zero[..grid.dim().get()], 2.0 * h)?);
        }
        let domain = grid.domain();
        cubes.retain(|q| domain.contains_cube(q));
        CubeDictionary::new(*grid, cubes)
    }

    /// Every interval with both endpoints among `points` equally spaced
    /// points spanning the domain (dimension 1).
    pub fn lattice_intervals(grid: &Grid, points: usize) -> Result<CubeDictionary> {
        if grid.dim() != Dim::One || points < 2 {
            return Err(invalid("lattice intervals need dimension 1 and at least two points"));
        }
        let a = grid.corner()[0];
        let step = grid.side() / (points - 1) as f64;
        let mut cubes = Vec::with_capacity(points * (points - 1) / 2);
        for i in 0..points {
            for j in (i + 1)..points {
                cubes.push(Cube::interval(a + i as f64 * step, (j - i) as f64 * step)?);
            }
        }
        CubeDictionary::new(*grid, cubes)
    }

    /// Dyadic cubes of the whole domain (when `n` is a power of two) plus
    /// origin-anchored and origin-centred cubes when the origin is interior.
    pub fn standard(grid: &Grid, depth: u32) -> Result<CubeDictionary> {
        let mut cubes = Vec::new();
        if grid.n().is_power_of_two() {
            let tree = DyadicTree::over_grid(*grid)?;
            let depth = depth.min(tree.max_depth());
            cubes.extend(CubeDictionary::dyadic(&tree, depth)?.cubes);
        }
        let ladder = CubeDictionary::ladder(grid);
        if !ladder.is_empty() {
            if let Ok(d) = CubeDictionary::origin_anchored(grid, &ladder) {
                cubes.extend(d.cubes);
            }
            if let Ok(d) = CubeDictionary::origin_centered(grid, &ladder) {
                cubes.extend(d.cubes);
            }
        }
        CubeDictionary::new(*grid, cubes)
    }

    pub fn merge(mut self, other: CubeDictionary) -> Result<CubeDictionary> {
        if !self.grid.is_compatible(&other.grid) {
            return Err(Error::IncompatibleGrids);
        }
        self.cubes.extend(other.cubes);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }
    pub fn len(&self) -> usize {
        self.cubes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    fn coverages(&self) -> Result<Vec<Coverage>> {
        self.cubes.iter().map(|q| self.grid.coverage_inside(q)).collect()
    }
}

/// `μ`, `λ`, `p`, the Bloom weight `ν = (μ/λ)^{1/p}` and `η = ν^{1/m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BloomSetup {
    pub mu: Weight,
    pub lambda: Weight,
    pub p: f64,
    pub m: u32,
    pub nu: Weight,
    pub eta: Weight,
}

impl BloomSetup {
    pub fn new(mu: Weight, lambda: Weight, p: f64, m: u32) -> Result<BloomSetup> {
        if !(p > 1.0) || m == 0 {
            return Err(invalid("Bloom setup needs p > 1 and m ≥ 1"));
        }
        let nu = mu.ratio(&lambda)?.pow(1.0 / p);
        let eta = nu.pow(1.0 / m as f64);
        Ok(BloomSetup {
            mu,
            lambda,
            p,
            m,
            nu,
            eta,
        })
    }
}

fn check_compatible(a: &Grid, dict: &CubeDictionary) -> Result<()> {
    if a.is_compatible(dict.grid()) {
        Ok(())
    } else {
        Err(Error::IncompatibleGrids)
    }
}

fn avg(values: &[f64], cov: &Coverage) -> f64 {
    cov.cells.iter().map(|&(c, v)| values[c] * v).sum::<f64>() / cov.volume
}

/// `(w)_Q ((w^{-1/(p-1)})_Q)^{p-1}` on one cube.
pub fn ap_product(w: &Weight, p: f64, q: &Cube) -> Result<f64> {
    let cov = w.grid().coverage_inside(q)?;
    let s = w.samples();
    let dual: Vec<f64> = cov
        .cells
        .iter()
        .map(|&(c, v)| math::powf(s[c], -1.0 / (p - 1.0)) * v)
        .collect();
    let dual_avg = dual.iter().sum::<f64>() / cov.volume;
    Ok(avg(s, &cov) * math::powf(dual_avg, p - 1.0))
}

/// `[w]_{A_p}` restricted to the dictionary.
pub fn ap_constant(w: &Weight, p: f64, dict: &CubeDictionary) -> Result<f64> {
    if !(p > 1.0) {
        return Err(invalid("A_p needs p > 1"));
    }
    check_compatible(w.grid(), dict)?;
    dict.cubes
        .iter()
        .try_fold(0.0f64, |acc, q| Ok(acc.max(ap_product(w, p, q)?)))
}

/// `∫_Q |b - b_Q|` over a covered region.
fn mean_oscillation_mass(b: &[f64], cov: &Coverage) -> f64 {
    let bq = avg(b, cov);
    cov.cells.iter().map(|&(c, v)| math::abs(b[c] - bq) * v).sum()
}

/// `(1/η(Q)) ∫_Q |b - b_Q|`.
pub fn bmo_ratio(b: &GridFunction, eta: &Weight, q: &Cube) -> Result<f64> {
    if !b.grid().is_compatible(eta.grid()) {
        return Err(Error::IncompatibleGrids);
    }
    let cov = b.grid().coverage_inside(q)?;
    let eq: f64 = cov.cells.iter().map(|&(c, v)| eta.samples()[c] * v).sum();
    Ok(mean_oscillation_mass(b.samples(), &cov) / eq)
}

/// `‖b‖_{BMO_η}` restricted to the dictionary.
pub fn bmo_eta_norm(b: &GridFunction, eta: &Weight, dict: &CubeDictionary) -> Result<f64> {
    check_compatible(b.grid(), dict)?;
    dict.cubes
        .iter()
        .try_fold(0.0f64, |acc, q| Ok(acc.max(bmo_ratio(b, eta, q)?)))
}

/// `max w(factor·Q) / w(Q)` over dictionary cubes whose dilate stays inside
/// the domain.
pub fn doubling_constant(w: &Weight, factor: f64, dict: &CubeDictionary) -> Result<f64> {
    if !(factor > 1.0) {
        return Err(invalid("dilation factor must exceed 1"));
    }
    check_compatible(w.grid(), dict)?;
    let domain = w.grid().domain();
    let mut best: Option<f64> = None;
    for q in &dict.cubes {
        let big = q.dilate(factor)?;
        if !domain.contains_cube(&big) {
            continue;
        }
        let r = w.function().integrate(&big)? / w.function().integrate(q)?;
        best = Some(best.map_or(r, |b| b.max(r)));
    }
    best.ok_or_else(|| invalid("no dictionary cube has its dilate inside the domain"))
}

/// Largest `γ` with `|{x ∈ Q : w(x) ≥ γ w_Q}| ≥ |Q|/2` on one cube.
fn gamma_on(w: &[f64], cov: &Coverage) -> f64 {
    let wq = avg(w, cov);
    let mut cells: Vec<(f64, f64)> = cov.cells.iter().map(|&(c, v)| (w[c], v)).collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let half = cov.volume / 2.0;
    let mut acc = 0.0;
    for (value, vol) in cells {
        acc += vol;
        if acc >= half * (1.0 - 1e-12) {
            return value / wq;
        }
    }
    0.0
}

/// Largest `γ` for which every dictionary cube satisfies
/// `|{x ∈ Q : w(x) ≥ γ w_Q}| ≥ |Q|/2`. The threshold is attained at a sample
/// value, so the search is exact on the grid.
pub fn level_set_gamma(w: &Weight, dict: &CubeDictionary) -> Result<f64> {
    check_compatible(w.grid(), dict)?;
    Ok(dict
        .coverages()?
        .iter()
        .map(|cov| gamma_on(w.samples(), cov))
        .fold(f64::INFINITY, f64::min))
}

/// Outcome of the reverse Jensen check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseJensen {
    /// `max_Q (w)_Q / ((w^δ)_Q)^{1/δ}`.
    pub value: f64,
    pub gamma: f64,
    /// `2^{1/δ} / γ`.
    pub bound: f64,
    pub holds: bool,
}

pub fn reverse_jensen(w: &Weight, delta: f64, dict: &CubeDictionary) -> Result<ReverseJensen> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("reverse Jensen exponent must lie in (0, 1)"));
    }
    check_compatible(w.grid(), dict)?;
    let s = w.samples();
    let wd: Vec<f64> = s.iter().map(|&v| math::powf(v, delta)).collect();
    let mut value = 0.0f64;
    for cov in dict.coverages()? {
        value = value.max(avg(s, &cov) / math::powf(avg(&wd, &cov), 1.0 / delta));
    }
    let gamma = level_set_gamma(w, dict)?;
    let bound = math::powf(2.0, 1.0 / delta) / gamma;
    Ok(ReverseJensen {
        value,
        gamma,
        bound,
        holds: value <= bound * (1.0 + 1e-12),
    })
}

/// Empirical `β`: the smallest `w(E)/w(Q)` over cell sets `E ⊆ Q` with
/// `|E| ≥ α|Q|`. The adversarial set (cells of smallest `w`) is exact; random
/// sets of the same size are tried as well.
pub fn density_beta<R: Rng + ?Sized>(
    w: &Weight,
    alpha: f64,
    q: &Cube,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("density fraction must lie in (0, 1]"));
    }
    let cov = w.grid().coverage_inside(q)?;
    let s = w.samples();
    let total: f64 = cov.cells.iter().map(|&(c, v)| s[c] * v).sum();
    let need = alpha * cov.volume * (1.0 - 1e-12);
    let take = |cells: &[(usize, f64)]| -> f64 {
        let mut vol = 0.0;
        let mut mass = 0.0;
        for &(c, v) in cells {
            if vol >= need {
                break;
            }
            vol += v;
            mass += s[c] * v;
        }
        mass / total
    };
    let mut sorted = cov.cells.clone();
    sorted.sort_by(|a, b| s[a.0].total_cmp(&s[b.0]));
    let mut beta = take(&sorted);
    let mut shuffled = cov.cells.clone();
    for _ in 0..trials {
        shuffled.shuffle(rng);
        beta = beta.min(take(&shuffled));
    }
    Ok(beta)
}
