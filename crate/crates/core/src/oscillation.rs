//! Decreasing rearrangements, local mean oscillations, medians, the
//! Chebyshev bound behind the John–Strömberg characterisation, and the two
//! sparse decompositions built by stopping times on dyadic trees.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::dyadic::{carve_greedy_achieved, DyadicCube, DyadicTree, SparseFamily};
use crate::error::{invalid, Error, Result};
use crate::grid::{Cube, GridFunction};
use crate::math;
use crate::weights::{bmo_eta_norm, CubeDictionary, Weight};

/// Slack on measure comparisons, relative to the cube measure.
const MASS_SLACK: f64 = 1e-12;

/// `(value, mass)` pairs of `f` restricted to a cube.
fn masses(f: &GridFunction, q: &Cube) -> Result<(Vec<(f64, f64)>, f64)> {
    let cov = f.grid().coverage_inside(q)?;
    let s = f.samples();
    Ok((cov.cells.iter().map(|&(c, v)| (s[c], v)).collect(), cov.volume))
}

fn cell_masses(f: &GridFunction, cells: &[usize]) -> Vec<(f64, f64)> {
    let h = f.grid().cell_volume();
    cells.iter().map(|&c| (f.get(c), h)).collect()
}

/// `inf{s ≥ 0 : |{|g| > s}| ≤ t}` for a discrete distribution.
fn rearrangement_of(mut vm: Vec<(f64, f64)>, total: f64, t: f64) -> f64 {
    for e in vm.iter_mut() {
        e.0 = math::abs(e.0);
    }
    vm.sort_by(|a, b| b.0.total_cmp(&a.0));
    let slack = MASS_SLACK * total;
    let mut above = 0.0;
    let mut best = vm.first().map_or(0.0, |e| e.0);
    let mut i = 0;
    while i < vm.len() {
        let v = vm[i].0;
        if above > t + slack {
            break;
        }
        best = v;
        while i < vm.len() && vm[i].0 == v {
            above += vm[i].1;
            i += 1;
        }
    }
    best
}

/// `(gχ_Q)^*(t)`, exact on the grid.
pub fn rearrangement_value(g: &GridFunction, q: &Cube, t: f64) -> Result<f64> {
    let (vm, total) = masses(g, q)?;
    if !(t > 0.0 && t < total) {
        return Err(invalid("rearrangement level must lie in (0, |Q|)"));
    }
    Ok(rearrangement_of(vm, total, t))
}

/// A request for `ω_λ(f; Q)`.
#[derive(Debug, Clone, Copy)]
pub struct OscillationQuery<'a> {
    pub f: &'a GridFunction,
    pub q: Cube,
    pub lambda: f64,
}

impl<'a> OscillationQuery<'a> {
    pub fn new(f: &'a GridFunction, q: Cube, lambda: f64) -> Result<OscillationQuery<'a>> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid("lambda must lie in (0, 1)"));
        }
        if lambda * q.volume() < f.grid().cell_volume() * (1.0 - 1e-9) {
            return Err(invalid("lambda |Q| is below one cell"));
        }
        Ok(OscillationQuery { f, q, lambda })
    }
}

/// Smallest `m` among the values with `max(|{f > m}|, |{f < m}|) ≤ total/2`.
fn median_of(mut vm: Vec<(f64, f64)>, total: f64) -> f64 {
    vm.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = total / 2.0 + MASS_SLACK * total;
    let mut below = 0.0;
    let mut i = 0;
    while i < vm.len() {
        let v = vm[i].0;
        let mut here = 0.0;
        let mut j = i;
        while j < vm.len() && vm[j].0 == v {
            here += vm[j].1;
            j += 1;
        }
        let above = total - below - here;
        if below <= half && above <= half {
            return v;
        }
        below += here;
        i = j;
    }
    vm.last().map_or(0.0, |e| e.0)
}

/// `(ω_λ, c)`: the narrowest closed window `[c - ω, c + ω]` of values holding
/// at least `(1-λ)` of the mass. Among equally narrow windows the one centred
/// closest to the median wins.
fn osc_of(mut vm: Vec<(f64, f64)>, total: f64, lambda: f64) -> (f64, f64) {
    if vm.is_empty() {
        return (0.0, 0.0);
    }
    let median = median_of(vm.clone(), total);
    vm.sort_by(|a, b| a.0.total_cmp(&b.0));
    let need = (1.0 - lambda) * total - MASS_SLACK * total;
    let mut best: Option<(f64, f64)> = None;
    let mut j = 0;
    let mut mass = 0.0;
    for i in 0..vm.len() {
        if i > 0 {
            mass -= vm[i - 1].1;
        }
        while mass < need && j < vm.len() {
            mass += vm[j].1;
            j += 1;
        }
        if mass < need {
            break;
        }
        let (lo, hi) = (vm[i].0, vm[j - 1].0);
        let width = hi - lo;
        let center = lo + width / 2.0;
        best = match best {
            None => Some((width, center)),
            Some((w, c)) => {
                let tol = 1e-12 * (w.abs() + width.abs());
                if width < w - tol
                    || (width <= w + tol && math::abs(center - median) < math::abs(c - median))
                {
                    Some((width.min(w), center))
                } else {
                    Some((w, c))
                }
            }
        };
    }
    let (w, c) = best.unwrap_or((0.0, median));
    (w / 2.0, c)
}

/// `ω_λ(f; Q) = inf_c ((f - c)χ_Q)^*(λ|Q|)` and a minimising `c`.
pub fn local_mean_osc(q: &OscillationQuery<'_>) -> Result<(f64, f64)> {
    let (vm, total) = masses(q.f, &q.q)?;
    Ok(osc_of(vm, total, q.lambda))
}

/// `ω_λ` over a set of whole cells.
pub fn local_mean_osc_cells(f: &GridFunction, cells: &[usize], lambda: f64) -> (f64, f64) {
    let vm = cell_masses(f, cells);
    let total = vm.iter().map(|e| e.1).sum();
    osc_of(vm, total, lambda)
}

/// The smallest sample value that is a median of `f` over the cell set `e`.
pub fn median_value(f: &GridFunction, e: &[usize]) -> Result<f64> {
    if e.is_empty() {
        return Err(invalid("median of an empty set"));
    }
    if let Some(&c) = e.iter().find(|&&c| c >= f.grid().len()) {
        return Err(invalid(alloc::format!("cell {c} is outside the grid")));
    }
    let vm = cell_masses(f, e);
    let total = vm.iter().map(|x| x.1).sum();
    Ok(median_of(vm, total))
}

/// The Chebyshev side of the John–Strömberg characterisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JohnStromberg {
    /// `max_Q ω_λ(f; Q) |Q| / η(Q)`.
    pub sup: f64,
    /// `‖f‖_{BMO_η}` on the same dictionary.
    pub bmo: f64,
    /// `bmo / λ`.
    pub bound: f64,
    pub holds: bool,
}

/// `max_Q ω_λ(f; Q) |Q| / η(Q)` over the dictionary cubes with `λ|Q|` at
/// least one cell.
pub fn oscillation_sup(f: &GridFunction, eta: &Weight, dict: &CubeDictionary, lambda: f64) -> Result<f64> {
    let cell = f.grid().cell_volume() * (1.0 - 1e-9);
    let mut sup = 0.0f64;
    for q in dict.cubes().iter().filter(|q| lambda * q.volume() >= cell) {
        let (w, _) = local_mean_osc(&OscillationQuery::new(f, *q, lambda)?)?;
        sup = sup.max(w * q.volume() / eta.measure(q)?);
    }
    Ok(sup)
}

pub fn john_stromberg_upper(
    f: &GridFunction,
    eta: &Weight,
    dict: &CubeDictionary,
    lambda: f64,
) -> Result<JohnStromberg> {
    let sup = oscillation_sup(f, eta, dict, lambda)?;
    let bmo = bmo_eta_norm(f, eta, dict)?;
    let bound = bmo / lambda;
    Ok(JohnStromberg {
        sup,
        bmo,
        bound,
        holds: sup <= bound * (1.0 + 1e-9) + 1e-12,
    })
}

/// Output of [`sparse_decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    /// A `1/2`-sparse family; cubes with zero oscillation are left out.
    pub family: SparseFamily,
    /// `ω_{2^{-n-2}}(f; P)` for each cube of the family.
    pub coefficients: Vec<f64>,
    pub root_median: f64,
    /// `max_x |f(x) - m_f(Q_0)| - 2 Σ_{P ∋ x} ω(P)`.
    pub pointwise_defect: f64,
    /// Cells where the defect exceeds `1e-12`.
    pub exceptional_cells: Vec<usize>,
    /// The tree stopped before single cells.
    pub truncated: bool,
}

/// `2^{-n-2}`.
pub fn decomposition_lambda(dim: usize) -> f64 {
    1.0 / (1u32 << (dim + 2)) as f64
}

/// Maximal cubes strictly below `q` where `select` holds, searched top-down.
fn maximal_below<F: FnMut(&DyadicCube) -> bool>(tree: &DyadicTree, q: &DyadicCube, mut select: F) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    let mut stack: Vec<DyadicCube> = tree.children(q);
    stack.reverse();
    while let Some(p) = stack.pop() {
        if select(&p) {
            out.push(p);
        } else {
            let mut ch = tree.children(&p);
            ch.reverse();
            stack.extend(ch);
        }
    }
    out
}

/// Stopping-time decomposition on the tree's root:
/// `|f - m_f(Q_0)| ≤ 2 Σ_{P ∈ S} ω_{2^{-n-2}}(f; P) χ_P`.
///
/// Children of `Q` are the maximal `P` with
/// `|{|f - m_f(Q)| > 2ω(Q)} ∩ P| ≥ 2^{-n-1}|P|`; the carve-out of `Q` is `Q`
/// minus its children.
pub fn sparse_decompose(f: &GridFunction, tree: &DyadicTree) -> Result<DecompositionResult> {
    if !f.grid().is_compatible(tree.grid()) {
        return Err(Error::IncompatibleGrids);
    }
    let n = tree.dim().get();
    let lambda = decomposition_lambda(n);
    let stop_fraction = 2.0 * lambda;
    let root = tree.root();
    let root_cells = tree.cells(&root);
    let root_median = median_value(f, &root_cells)?;
    let mut truncated = false;

    let mut cubes = Vec::new();
    let mut carve_outs = Vec::new();
    let mut coefficients = Vec::new();
    let mut work = alloc::vec![root];
    let mut bad = alloc::vec![false; f.grid().len()];
    while let Some(q) = work.pop() {
        let cells = tree.cells(&q);
        if cells.len() == 1 {
            continue;
        }
        let m = median_value(f, &cells)?;
        let (w, _) = local_mean_osc_cells(f, &cells, lambda);
        for &c in &cells {
            bad[c] = math::abs(f.get(c) - m) > 2.0 * w;
        }
        let children = if q.level < tree.max_depth() {
            maximal_below(tree, &q, |p| {
                let hits = tree.cells(p).iter().filter(|&&c| bad[c]).count();
                hits as f64 >= stop_fraction * tree.cell_count(p) as f64
            })
        } else {
            if cells.iter().any(|&c| bad[c]) {
                truncated = true;
            }
            Vec::new()
        };
        if w > 0.0 {
            let inside: BTreeSet<usize> = children.iter().flat_map(|p| tree.cells(p)).collect();
            cubes.push(q);
            carve_outs.push(cells.iter().copied().filter(|c| !inside.contains(c)).collect::<Vec<_>>());
            coefficients.push(w);
        }
        work.extend(children.into_iter().rev());
    }

    let mut rhs = alloc::vec![0.0; f.grid().len()];
    for (q, &w) in cubes.iter().zip(&coefficients) {
        for c in tree.cells(q) {
            rhs[c] += 2.0 * w;
        }
    }
    let mut pointwise_defect = f64::NEG_INFINITY;
    let mut exceptional_cells = Vec::new();
    for &c in &root_cells {
        let d = math::abs(f.get(c) - root_median) - rhs[c];
        pointwise_defect = pointwise_defect.max(d);
        if d > 1e-12 {
            exceptional_cells.push(c);
        }
    }
    let family = SparseFamily::new(tree.clone(), cubes, carve_outs, 0.5)?;
    Ok(DecompositionResult {
        family,
        coefficients,
        root_median,
        pointwise_defect,
        exceptional_cells,
        truncated,
    })
}

/// Output of [`augment_family`].
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentResult {
    /// `S̃ ⊇ S`, carved greedily; its `alpha` is the fraction achieved.
    pub family: SparseFamily,
    /// `(1/|P|) ∫_P |f - f_P|` for each cube of the family.
    pub oscillations: Vec<f64>,
    /// `max_{Q ∈ S̃, x ∈ Q} |f(x) - f_Q| - 2^{n+2} Σ_{P ∈ S̃, x ∈ P ⊆ Q} osc(P)`.
    pub max_defect: f64,
}

fn mean_and_osc(f: &GridFunction, cells: &[usize]) -> (f64, f64) {
    let k = cells.len() as f64;
    let mean = cells.iter().map(|&c| f.get(c)).sum::<f64>() / k;
    let osc = cells.iter().map(|&c| math::abs(f.get(c) - mean)).sum::<f64>() / k;
    (mean, osc)
}

/// Enlarge `S` to `S̃` so that every `Q ∈ S̃` satisfies
/// `|f - f_Q| ≤ 2^{n+2} Σ_{P ∈ S̃, P ⊆ Q} osc(P) χ_P` on `Q`.
///
/// Children of `Q` are the maximal `P ⊊ Q` that either belong to `S` or have
/// `(1/|P|)∫_P |f - f_Q| > 2 osc(Q)`.
pub fn augment_family(s: &SparseFamily, f: &GridFunction) -> Result<AugmentResult> {
    let tree = s.tree();
    if !f.grid().is_compatible(tree.grid()) {
        return Err(Error::IncompatibleGrids);
    }
    if s.is_empty() {
        return Ok(AugmentResult {
            family: s.clone(),
            oscillations: Vec::new(),
            max_defect: 0.0,
        });
    }
    let in_s: BTreeSet<DyadicCube> = s.cubes().iter().copied().collect();
    let mut osc: BTreeMap<DyadicCube, f64> = BTreeMap::new();
    let mut work: Vec<DyadicCube> = in_s.iter().copied().collect();
    while let Some(q) = work.pop() {
        if osc.contains_key(&q) {
            continue;
        }
        let cells = tree.cells(&q);
        let (mean, o) = mean_and_osc(f, &cells);
        osc.insert(q, o);
        let children = maximal_below(tree, &q, |p| {
            if in_s.contains(p) {
                return true;
            }
            let pc = tree.cells(p);
            let a = pc.iter().map(|&c| math::abs(f.get(c) - mean)).sum::<f64>() / pc.len() as f64;
            a > 2.0 * o * (1.0 + 1e-12)
        });
        work.extend(children);
    }
    // Members other than those of S contribute nothing when flat.
    let members: Vec<DyadicCube> = osc
        .iter()
        .filter(|(q, &o)| o > 0.0 || in_s.contains(q))
        .map(|(q, _)| *q)
        .collect();

    let n = tree.dim().get();
    let factor = (1u32 << (n + 2)) as f64;
    let mut max_defect = f64::NEG_INFINITY;
    let levels: BTreeSet<u32> = members.iter().map(|q| q.level).collect();
    for &q in &members {
        let cells = tree.cells(&q);
        let (mean, _) = mean_and_osc(f, &cells);
        for &c in &cells {
            let mut rhs = 0.0;
            for &l in levels.range(q.level..) {
                if let Some(p) = tree.locate(c, l) {
                    if let Some(&o) = osc.get(&p) {
                        rhs += o;
                    }
                }
            }
            max_defect = max_defect.max(math::abs(f.get(c) - mean) - factor * rhs);
        }
    }

    let mut ordered: Vec<DyadicCube> = s.cubes().to_vec();
    ordered.extend(members.iter().filter(|q| !in_s.contains(q)));
    let family = carve_greedy_achieved(tree, &ordered)?;
    let oscillations = ordered.iter().map(|q| osc[q]).collect();
    Ok(AugmentResult {
        family,
        oscillations,
        max_defect,
    })
}
