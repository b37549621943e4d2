//! Sparse averaging operators `A_S h = Σ_Q h_Q χ_Q`, their weighted
//! iterates, the commutator forms `A_b^{m,k}`, and numerical checks of the
//! inequalities that chain them together.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::dyadic::{verify_sparse, DyadicCube, DyadicTree, SparseFamily};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::math;
use crate::operators::{CommutatorOperator, CommutatorSpec};
use crate::oscillation::augment_family;
use crate::weights::Weight;

/// `A_S`, or `A_{S,η} h = η A_S h` when a weight is attached.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    family: SparseFamily,
    eta: Option<Weight>,
    cells: Vec<Vec<usize>>,
}

impl SparseOperator {
    pub fn new(family: SparseFamily, eta: Option<Weight>) -> Result<SparseOperator> {
        if let Err(v) = verify_sparse(&family) {
            return Err(invalid(format!("family is not sparse: {v:?}")));
        }
        if let Some(e) = &eta {
            if !e.grid().is_compatible(family.tree().grid()) {
                return Err(Error::IncompatibleGrids);
            }
        }
        let cells = family.cubes().iter().map(|q| family.tree().cells(q)).collect();
        Ok(SparseOperator { family, eta, cells })
    }

    pub fn family(&self) -> &SparseFamily {
        &self.family
    }
    pub fn eta(&self) -> Option<&Weight> {
        self.eta.as_ref()
    }
    pub fn grid(&self) -> &Grid {
        self.family.tree().grid()
    }

    /// The same family without the weight.
    pub fn unweighted(&self) -> SparseOperator {
        SparseOperator {
            family: self.family.clone(),
            eta: None,
            cells: self.cells.clone(),
        }
    }

    fn plain(&self, h: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; h.len()];
        for cells in &self.cells {
            let a = cells.iter().map(|&c| h[c]).sum::<f64>() / cells.len() as f64;
            for &c in cells {
                out[c] += a;
            }
        }
        out
    }

    fn check(&self, h: &GridFunction) -> Result<()> {
        if self.grid().is_compatible(h.grid()) {
            Ok(())
        } else {
            Err(Error::IncompatibleGrids)
        }
    }
}

/// `A_S h`, times `η` if present.
pub fn apply_as(op: &SparseOperator, h: &GridFunction) -> Result<GridFunction> {
    op.check(h)?;
    let mut out = op.plain(h.samples());
    if let Some(e) = &op.eta {
        for (o, w) in out.iter_mut().zip(e.samples()) {
            *o *= w;
        }
    }
    GridFunction::new(*h.grid(), out)
}

/// `A_{S,η}` applied `l ≥ 1` times.
pub fn apply_as_iterated(op: &SparseOperator, h: &GridFunction, l: u32) -> Result<GridFunction> {
    if l == 0 {
        return Err(invalid("iteration count must be at least 1"));
    }
    let mut g = apply_as(op, h)?;
    for _ in 1..l {
        g = apply_as(op, &g)?;
    }
    Ok(g)
}

/// `A_b^{m,k}`.
#[derive(Debug, Clone)]
pub struct CommutatorSparseForm {
    pub family: SparseFamily,
    pub b: GridFunction,
    pub m: u32,
    pub k: u32,
}

impl CommutatorSparseForm {
    pub fn new(family: SparseFamily, b: GridFunction, m: u32, k: u32) -> Result<CommutatorSparseForm> {
        if k > m {
            return Err(invalid("k must not exceed m"));
        }
        if !b.grid().is_compatible(family.tree().grid()) {
            return Err(Error::IncompatibleGrids);
        }
        Ok(CommutatorSparseForm { family, b, m, k })
    }
}

/// `Σ_Q |b(x) - b_Q|^{m-k} ((1/|Q|) ∫_Q |b - b_Q|^k |f|) χ_Q(x)`.
pub fn apply_abmk(form: &CommutatorSparseForm, f: &GridFunction) -> Result<GridFunction> {
    if !form.b.grid().is_compatible(f.grid()) {
        return Err(Error::IncompatibleGrids);
    }
    let tree = form.family.tree();
    let b = form.b.samples();
    let mut out = alloc::vec![0.0; f.grid().len()];
    for q in form.family.cubes() {
        let cells = tree.cells(q);
        let k = cells.len() as f64;
        let bq = cells.iter().map(|&c| b[c]).sum::<f64>() / k;
        let inner = cells
            .iter()
            .map(|&c| math::powi(math::abs(b[c] - bq), form.k) * math::abs(f.get(c)))
            .sum::<f64>()
            / k;
        for &c in &cells {
            out[c] += math::powi(math::abs(b[c] - bq), form.m - form.k) * inner;
        }
    }
    GridFunction::new(*f.grid(), out)
}

/// `|∫ A_S(f) g - ∫ f A_S(g)|` for the unweighted operator.
pub fn check_selfadjoint(op: &SparseOperator, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let a = op.unweighted();
    let left = apply_as(&a, f)?.inner(g)?;
    let right = f.inner(&apply_as(&a, g)?)?;
    Ok(math::abs(left - right))
}

/// Both sides of a checked inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack) + f64::MIN_POSITIVE
    }
}

/// Members of the family inside `q`, with `η_P` (the average of `η` over `P`)
/// and the cells of `P`.
fn members_below(family: &SparseFamily, eta: Option<&Weight>, q: &DyadicCube) -> Vec<(DyadicCube, f64, Vec<usize>)> {
    let tree = family.tree();
    family
        .cubes()
        .iter()
        .filter(|p| tree.contains(q, p))
        .map(|p| {
            let cells = tree.cells(p);
            let ep = eta.map_or(1.0, |e| {
                cells.iter().map(|&c| e.samples()[c]).sum::<f64>() / cells.len() as f64
            });
            (*p, ep, cells)
        })
        .collect()
}

/// `∫_Q |h| (Σ_{P ⊆ Q} η_P χ_P)^l` against
/// `l! Σ_{P_l ⊆ … ⊆ P_1 ⊆ Q} η_{P_1}⋯η_{P_l} |h|_{P_l} |P_l|`.
pub fn check_chain_expansion(
    family: &SparseFamily,
    eta: Option<&Weight>,
    q: &DyadicCube,
    l: u32,
    h: &GridFunction,
) -> Result<Inequality> {
    if !(1..=3).contains(&l) {
        return Err(invalid("chain length must be 1, 2 or 3"));
    }
    let tree = family.tree();
    let vol = tree.grid().cell_volume();
    let members = members_below(family, eta, q);
    let mut density = alloc::vec![0.0; tree.grid().len()];
    for (_, ep, cells) in &members {
        for &c in cells {
            density[c] += ep;
        }
    }
    let lhs = tree
        .cells(q)
        .iter()
        .map(|&c| math::abs(h.get(c)) * math::powi(density[c], l))
        .sum::<f64>()
        * vol;

    // mass[i] = |h|_{P_i} |P_i| = ∫_{P_i} |h|
    let mass: Vec<f64> = members
        .iter()
        .map(|(_, _, cells)| cells.iter().map(|&c| math::abs(h.get(c))).sum::<f64>() * vol)
        .collect();
    fn chains(
        tree: &DyadicTree,
        members: &[(DyadicCube, f64, Vec<usize>)],
        mass: &[f64],
        outer: usize,
        left: u32,
        acc: f64,
    ) -> f64 {
        if left == 0 {
            return acc * mass[outer];
        }
        (0..members.len())
            .filter(|&j| tree.contains(&members[outer].0, &members[j].0))
            .map(|j| chains(tree, members, mass, j, left - 1, acc * members[j].1))
            .sum()
    }
    let sum: f64 = (0..members.len())
        .map(|i| chains(tree, &members, &mass, i, l - 1, members[i].1))
        .sum();
    Ok(Inequality {
        lhs,
        rhs: math::factorial(l) * sum,
    })
}

/// `∫_Q |h| (Σ_{P ⊆ Q} η_P χ_P)^l` against `∫_Q A^l_{S,η}|h|`; the ratio is
/// at most `l!`.
pub fn check_iteration_bound(op: &SparseOperator, q: &DyadicCube, l: u32, h: &GridFunction) -> Result<Inequality> {
    let chain = check_chain_expansion(&op.family, op.eta.as_ref(), q, l, h)?;
    let it = apply_as_iterated(op, &h.abs(), l)?;
    let rhs = it.integrate_cells(&op.family.tree().cells(q));
    Ok(Inequality { lhs: chain.lhs, rhs })
}

/// `∫ A_S(A^k_{S,η}|f|) A^{m-k}_{S,η}(|g|λ)` for `k = 0..=m`. Self-adjointness
/// of `A_S` makes all entries equal.
pub fn adjoint_shift_values(op: &SparseOperator, f: &GridFunction, g_lambda: &GridFunction, m: u32) -> Result<Vec<f64>> {
    if op.eta.is_none() {
        return Err(invalid("the shift identity needs a weighted operator"));
    }
    let plain = op.unweighted();
    let iterate = |h: &GridFunction, k: u32| -> Result<GridFunction> {
        if k == 0 {
            Ok(h.clone())
        } else {
            apply_as_iterated(op, h, k)
        }
    };
    let fa = f.abs();
    let ga = g_lambda.abs();
    (0..=m)
        .map(|k| {
            let left = apply_as(&plain, &iterate(&fa, k)?)?;
            left.inner(&iterate(&ga, m - k)?)
        })
        .collect()
}

/// Both sides of
/// `Σ_{Q∈S} (∫_Q |gλ||b-b_Q|^{m-k}) (1/|Q|)∫_Q |b-b_Q|^k|f|
///  ≤ (2^{n+2}‖b‖_{BMO_η})^m Σ_{Q∈S̃} (1/|Q|)∫_Q |gλ| Φ_Q^{m-k} · (1/|Q|)∫_Q Φ_Q^k |f| · |Q|`,
/// with `Φ_Q = Σ_{P∈S̃, P⊆Q} η_P χ_P`, `S̃` from [`augment_family`], and the
/// `BMO_η` norm taken over the cubes of `S̃`.
pub fn check_dual_chain(
    family: &SparseFamily,
    b: &GridFunction,
    eta: &Weight,
    f: &GridFunction,
    g_lambda: &GridFunction,
    m: u32,
    k: u32,
) -> Result<Inequality> {
    if k > m {
        return Err(invalid("k must not exceed m"));
    }
    let tree = family.tree();
    let vol = tree.grid().cell_volume();
    let bs = b.samples();
    let mut lhs = 0.0;
    for q in family.cubes() {
        let cells = tree.cells(q);
        let bq = cells.iter().map(|&c| bs[c]).sum::<f64>() / cells.len() as f64;
        let a: f64 = cells
            .iter()
            .map(|&c| math::abs(g_lambda.get(c)) * math::powi(math::abs(bs[c] - bq), m - k))
            .sum::<f64>()
            * vol;
        let bavg: f64 = cells
            .iter()
            .map(|&c| math::powi(math::abs(bs[c] - bq), k) * math::abs(f.get(c)))
            .sum::<f64>()
            / cells.len() as f64;
        lhs += a * bavg;
    }
    let aug = augment_family(family, b)?;
    let tilde = &aug.family;
    let mut norm = 0.0f64;
    for (p, &o) in tilde.cubes().iter().zip(&aug.oscillations) {
        let cells = tree.cells(p);
        let ep = cells.iter().map(|&c| eta.samples()[c]).sum::<f64>() / cells.len() as f64;
        norm = norm.max(o / ep);
    }
    let mut rhs = 0.0;
    for q in tilde.cubes() {
        let members = members_below(tilde, Some(eta), q);
        let mut phi = alloc::vec![0.0; tree.grid().len()];
        for (_, ep, cells) in &members {
            for &c in cells {
                phi[c] += ep;
            }
        }
        let cells = tree.cells(q);
        let qv = cells.len() as f64 * vol;
        let a: f64 = cells
            .iter()
            .map(|&c| math::abs(g_lambda.get(c)) * math::powi(phi[c], m - k))
            .sum::<f64>()
            * vol
            / qv;
        let bb: f64 = cells
            .iter()
            .map(|&c| math::powi(phi[c], k) * math::abs(f.get(c)))
            .sum::<f64>()
            * vol
            / qv;
        rhs += a * bb * qv;
    }
    let n = tree.dim().get();
    let c = math::powi((1u32 << (n + 2)) as f64 * norm, m);
    Ok(Inequality { lhs, rhs: c * rhs })
}

/// A linear map on grid functions with its transpose relative to `∫ f g`.
pub trait LinearMap {
    fn grid(&self) -> &Grid;
    fn apply(&self, f: &GridFunction) -> Result<GridFunction>;
    fn apply_transpose(&self, g: &GridFunction) -> Result<GridFunction>;
}

impl LinearMap for SparseOperator {
    fn grid(&self) -> &Grid {
        SparseOperator::grid(self)
    }
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        apply_as(self, f)
    }
    fn apply_transpose(&self, g: &GridFunction) -> Result<GridFunction> {
        match &self.eta {
            None => apply_as(self, g),
            Some(e) => apply_as(&self.unweighted(), &g.mul(e.function())?),
        }
    }
}

impl LinearMap for CommutatorOperator {
    fn grid(&self) -> &Grid {
        CommutatorOperator::grid(self)
    }
    fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        CommutatorOperator::apply(self, f)
    }
    fn apply_transpose(&self, g: &GridFunction) -> Result<GridFunction> {
        CommutatorOperator::apply_transpose(self, g)
    }
}

/// `‖A f‖_{L^p(w_out)} / ‖f‖_{L^p(w_in)}`, or `None` when `f` vanishes.
pub fn norm_ratio<M: LinearMap + ?Sized>(
    map: &M,
    f: &GridFunction,
    w_in: &Weight,
    w_out: &Weight,
    p: f64,
) -> Result<Option<f64>> {
    let den = f.lp_norm(p, Some(w_in.function()));
    if !(den > 0.0) {
        return Ok(None);
    }
    Ok(Some(map.apply(f)?.lp_norm(p, Some(w_out.function())) / den))
}

fn dual_power(v: f64, q: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        math::powf(math::abs(v), q - 1.0).copysign(v)
    }
}

/// Boyd's power method for `‖A‖_{L^p(w_in) → L^p(w_out)}`, started from `f`.
/// Returns the largest ratio seen, a lower bound for the norm.
pub fn power_method<M: LinearMap + ?Sized>(
    map: &M,
    start: &GridFunction,
    w_in: &Weight,
    w_out: &Weight,
    p: f64,
    iterations: usize,
) -> Result<f64> {
    if !(p > 1.0) {
        return Err(invalid("p must exceed 1"));
    }
    let q = p / (p - 1.0);
    let win = w_in.samples();
    let wout = w_out.samples();
    // Work with u = w_in^{1/p} f, so the problem is unweighted in u.
    let mut u: Vec<f64> = start
        .samples()
        .iter()
        .zip(win)
        .map(|(f, w)| f * math::powf(*w, 1.0 / p))
        .collect();
    let grid = *start.grid();
    let mut best = 0.0f64;
    for _ in 0..iterations {
        let f = GridFunction::new(
            grid,
            u.iter().zip(win).map(|(x, w)| x * math::powf(*w, -1.0 / p)).collect(),
        )?;
        match norm_ratio(map, &f, w_in, w_out, p)? {
            Some(r) => best = best.max(r),
            None => break,
        }
        let af = map.apply(&f)?;
        // ψ_p(B u) with B u = w_out^{1/p} A f, then B^T.
        let psi: Vec<f64> = af
            .samples()
            .iter()
            .zip(wout)
            .map(|(v, w)| dual_power(v * math::powf(*w, 1.0 / p), p) * math::powf(*w, 1.0 / p))
            .collect();
        let back = map.apply_transpose(&GridFunction::new(grid, psi)?)?;
        let next: Vec<f64> = back
            .samples()
            .iter()
            .zip(win)
            .map(|(v, w)| dual_power(v * math::powf(*w, -1.0 / p), q))
            .collect();
        let norm = math::powf(next.iter().map(|v| math::powf(math::abs(*v), p)).sum::<f64>(), 1.0 / p);
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        u = next.into_iter().map(|v| v / norm).collect();
    }
    Ok(best)
}

/// Lower bound for `‖A_S‖_{L^p(w)}` with the test functions used.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub tested: usize,
}

/// Test functions for sparse norms: indicators of the family's cubes,
/// Haar-type differences of their children, and random `±1` functions.
pub fn sparse_test_functions<R: Rng + ?Sized>(family: &SparseFamily, randoms: usize, rng: &mut R) -> Vec<GridFunction> {
    let tree = family.tree();
    let grid = *tree.grid();
    let mut out = Vec::new();
    for q in family.cubes() {
        out.push(grid.indicator(&tree.cells(q)));
        let ch = tree.children(q);
        if ch.len() >= 2 {
            let mut g = grid.indicator(&tree.cells(&ch[0]));
            let minus = grid.indicator(&tree.cells(&ch[ch.len() - 1]));
            g = g.sub(&minus).expect("same grid");
            out.push(g);
        }
    }
    for _ in 0..randoms {
        let s = (0..grid.len()).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        out.push(GridFunction::new(grid, s).expect("finite"));
    }
    out
}

/// Largest ratio over the test functions, refined by `iterations` steps of
/// the power method from the best one.
pub fn estimate_as_weighted_norm(
    op: &SparseOperator,
    w: &Weight,
    p: f64,
    tests: &[GridFunction],
    iterations: usize,
) -> Result<NormEstimate> {
    if op.family.is_empty() {
        return Ok(NormEstimate { value: 0.0, tested: 0 });
    }
    let mut best: Option<(f64, &GridFunction)> = None;
    let mut tested = 0;
    for t in tests {
        if let Some(r) = norm_ratio(op, t, w, w, p)? {
            tested += 1;
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, t));
            }
        }
    }
    let Some((mut value, start)) = best else {
        return Ok(NormEstimate { value: 0.0, tested });
    };
    if iterations > 0 {
        value = value.max(power_method(op, start, w, w, p, iterations)?);
    }
    Ok(NormEstimate { value, tested })
}

/// Stopping-time families on one tree: children of `Q` are the maximal `P`
/// with `⟨|f|⟩_P > 4⟨|f|⟩_Q` or `⟨u⟩_P > 4⟨u⟩_Q`; each criterion claims at
/// most a quarter of `Q`, so the family is `1/2`-sparse.
pub fn domination_family(tree: &DyadicTree, f: &GridFunction, u: &GridFunction) -> Result<SparseFamily> {
    let avg = |g: &GridFunction, cells: &[usize]| -> f64 {
        cells.iter().map(|&c| math::abs(g.get(c))).sum::<f64>() / cells.len() as f64
    };
    let mut cubes = Vec::new();
    let mut carve_outs = Vec::new();
    let mut work = alloc::vec![tree.root()];
    while let Some(q) = work.pop() {
        let cells = tree.cells(&q);
        let (af, au) = (avg(f, &cells), avg(u, &cells));
        if af == 0.0 && au == 0.0 {
            continue;
        }
        let mut children = Vec::new();
        let mut stack = tree.children(&q);
        while let Some(p) = stack.pop() {
            let pc = tree.cells(&p);
            if avg(f, &pc) > 4.0 * af || avg(u, &pc) > 4.0 * au {
                children.push(p);
            } else {
                stack.extend(tree.children(&p));
            }
        }
        let mut claimed = alloc::vec![false; f.grid().len()];
        for p in &children {
            for c in tree.cells(p) {
                claimed[c] = true;
            }
        }
        cubes.push(q);
        carve_outs.push(cells.into_iter().filter(|&c| !claimed[c]).collect());
        work.extend(children);
    }
    SparseFamily::new(tree.clone(), cubes, carve_outs, 0.5)
}

/// Outcome of a pointwise domination check.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    /// Smallest `c` with `|T_b^m f| ≤ c Σ_j Σ_k C(m,k) A_b^{m,k}|f|` on the
    /// checked cells.
    pub fitted_c: f64,
    pub pointwise_ok: bool,
    /// Cells with a nonzero left side and a zero right side.
    pub failures: Vec<usize>,
    /// Cells outside every lattice root.
    pub unchecked: usize,
    pub families: Vec<SparseFamily>,
}

pub fn check_sparse_domination(spec: &CommutatorSpec, f: &GridFunction, lattices: &[DyadicTree]) -> Result<DominationReport> {
    if lattices.is_empty() {
        return Err(invalid("at least one lattice is required"));
    }
    let op = CommutatorOperator::new(spec)?;
    let lhs = op.apply(f)?.abs();
    let m = spec.order();
    let grid = *f.grid();
    let mut rhs = alloc::vec![0.0; grid.len()];
    let mut covered = alloc::vec![false; grid.len()];
    let mut families = Vec::new();
    for tree in lattices {
        for c in tree.cells(&tree.root()) {
            covered[c] = true;
        }
        let fam = domination_family(tree, f, &lhs)?;
        for k in 0..=m {
            let form = CommutatorSparseForm::new(fam.clone(), spec.symbol().clone(), m, k)?;
            let a = apply_abmk(&form, f)?;
            let coef = math::binomial(m, k);
            for (r, v) in rhs.iter_mut().zip(a.samples()) {
                *r += coef * v;
            }
        }
        families.push(fam);
    }
    let mut fitted_c = 0.0f64;
    let mut failures = Vec::new();
    for c in 0..grid.len() {
        if !covered[c] {
            continue;
        }
        let l = lhs.get(c);
        if l == 0.0 {
            continue;
        }
        if rhs[c] > 0.0 {
            fitted_c = fitted_c.max(l / rhs[c]);
        } else if l > 1e-12 * lhs.max_abs() {
            failures.push(c);
        }
    }
    Ok(DominationReport {
        fitted_c,
        pointwise_ok: failures.is_empty() && fitted_c.is_finite(),
        failures,
        unchecked: covered.iter().filter(|&&c| !c).count(),
        families,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::carve_greedy;
    use crate::grid::Dim;
    use crate::operators::KernelSpec;

    fn setup() -> (DyadicTree, Grid) {
        let g = Grid::new(Dim::One, &[0.0], 1.0, 64).unwrap();
        (DyadicTree::over_grid(g).unwrap(), g)
    }

    fn dc(level: u32, i: u32) -> DyadicCube {
        DyadicCube { level, index: [i, 0] }
    }

    fn two(tree: &DyadicTree) -> SparseFamily {
        carve_greedy(tree, &[dc(0, 0), dc(1, 0)], 0.5).unwrap()
    }

    #[test]
    fn averaging_examples() {
        let (tree, g) = setup();
        let one = g.constant(1.0).unwrap();
        let single = SparseOperator::new(carve_greedy(&tree, &[tree.root()], 0.5).unwrap(), None).unwrap();
        assert_eq!(apply_as(&single, &one).unwrap(), one);
        assert_eq!(apply_as_iterated(&single, &one, 3).unwrap(), one);
        let op = SparseOperator::new(two(&tree), None).unwrap();
        let a = apply_as(&op, &one).unwrap();
        assert_eq!(a.get(0), 2.0);
        assert_eq!(a.get(40), 1.0);
        let a2 = apply_as_iterated(&op, &one, 2).unwrap();
        assert_eq!(a2.get(0), 3.5);
        assert_eq!(a2.get(40), 1.5);
        let eta = Weight::power(&g, 0.25).unwrap();
        let w = SparseOperator::new(carve_greedy(&tree, &[tree.root()], 0.5).unwrap(), Some(eta.clone())).unwrap();
        assert_eq!(apply_as(&w, &one).unwrap(), eta.function().clone());
    }

    #[test]
    fn abmk_examples() {
        let (tree, g) = setup();
        let fam = carve_greedy(&tree, &[tree.root()], 0.5).unwrap();
        let b = g.sample(|x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let one = g.constant(1.0).unwrap();
        let a = apply_abmk(&CommutatorSparseForm::new(fam.clone(), b, 2, 1).unwrap(), &one).unwrap();
        assert!(a.samples().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let c = g.constant(3.0).unwrap();
        let a = apply_abmk(&CommutatorSparseForm::new(fam, c, 2, 1).unwrap(), &one).unwrap();
        assert_eq!(a.max_abs(), 0.0);
    }

    #[test]
    fn chain_expansion_by_hand() {
        let (tree, g) = setup();
        let one = g.constant(1.0).unwrap();
        let fam = two(&tree);
        let ch = check_chain_expansion(&fam, None, &tree.root(), 2, &one).unwrap();
        assert!((ch.lhs - 2.5).abs() < 1e-12 && (ch.rhs - 4.0).abs() < 1e-12);
        let ch = check_chain_expansion(&fam, None, &tree.root(), 1, &one).unwrap();
        assert!((ch.lhs - ch.rhs).abs() < 1e-12);
        let single = carve_greedy(&tree, &[tree.root()], 0.5).unwrap();
        let eta = Weight::power(&g, 0.5).unwrap();
        let h = g.sample(|x| x[0]).unwrap();
        for l in 1..=3 {
            let ch = check_chain_expansion(&single, Some(&eta), &tree.root(), l, &h).unwrap();
            assert!((ch.lhs - ch.rhs / math::factorial(l)).abs() <= 1e-12 * ch.lhs);
            let op = SparseOperator::new(single.clone(), Some(eta.clone())).unwrap();
            let it = check_iteration_bound(&op, &tree.root(), l, &h).unwrap();
            assert!((it.ratio() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_family_has_zero_norm() {
        let (tree, g) = setup();
        let op = SparseOperator::new(SparseFamily::empty(tree, 0.5).unwrap(), None).unwrap();
        let w = Weight::constant(&g, 1.0).unwrap();
        assert_eq!(estimate_as_weighted_norm(&op, &w, 2.0, &[], 50).unwrap().value, 0.0);
        let f = g.sample(|x| x[0]).unwrap();
        assert_eq!(check_selfadjoint(&op, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn single_cube_norm_is_one() {
        let (tree, g) = setup();
        let op = SparseOperator::new(carve_greedy(&tree, &[tree.root()], 0.5).unwrap(), None).unwrap();
        let w = Weight::constant(&g, 1.0).unwrap();
        let tests = alloc::vec![g.sample(|x| x[0] * x[0]).unwrap(), g.constant(1.0).unwrap()];
        let est = estimate_as_weighted_norm(&op, &w, 2.0, &tests, 50).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn domination_trivial_cases() {
        let g = Grid::symmetric(Dim::One, 2.0, 96).unwrap();
        let lattices = DyadicTree::shifted_lattices(g, 32).unwrap();
        let b = g.sample(|x| x[0]).unwrap();
        let spec = CommutatorSpec::new(KernelSpec::hilbert(), b, 1).unwrap();
        let r = check_sparse_domination(&spec, &g.zeros(), &lattices).unwrap();
        assert_eq!(r.fitted_c, 0.0);
        let spec = CommutatorSpec::new(KernelSpec::hilbert(), g.constant(2.0).unwrap(), 2).unwrap();
        let f = g.sample(|x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let r = check_sparse_domination(&spec, &f, &lattices).unwrap();
        assert_eq!(r.fitted_c, 0.0);
        assert!(r.pointwise_ok);
        for fam in &r.families {
            assert_eq!(verify_sparse(fam), Ok(()));
        }
    }
}
