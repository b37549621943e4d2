//! Dyadic trees `D(Q_0)` over grid-aligned roots, and sparse families whose
//! carve-out sets are unions of grid cells.
//!
//! Only finite trees are built: a root cube and its descendants down to
//! single cells. A dyadic cube is addressed by `(level, index)`, which keeps
//! parent/child navigation exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::grid::{Cube, Dim, Grid};

/// A cube of a [`DyadicTree`]: `level` subdivisions below the root, at
/// integer position `index` among the `2^level` cubes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: u32,
    pub index: [u32; 2],
}

/// `D(Q_0)` for a root made of `root_cells` (a power of two) grid cells per
/// axis, with its corner at cell `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicTree {
    grid: Grid,
    origin: [usize; 2],
    root_cells: usize,
    max_depth: u32,
}

impl DyadicTree {
    pub fn new(grid: Grid, origin: &[usize], root_cells: usize) -> Result<DyadicTree> {
        if origin.len() != grid.dim().get() {
            return Err(invalid("origin length does not match dimension"));
        }
        if !root_cells.is_power_of_two() {
            return Err(invalid("root side must be a power of two cells"));
        }
        if origin.iter().any(|&o| o + root_cells > grid.n()) {
            return Err(Error::CubeOutsideDomain);
        }
        let mut o = [0; 2];
        o[..origin.len()].copy_from_slice(origin);
        Ok(DyadicTree {
            grid,
            origin: o,
            root_cells,
            max_depth: root_cells.trailing_zeros(),
        })
    }

    /// The tree rooted at the whole domain (`n` must be a power of two).
    pub fn over_grid(grid: Grid) -> Result<DyadicTree> {
        let origin = [0usize; 2];
        DyadicTree::new(grid, &origin[..grid.dim().get()], grid.n())
    }

    /// Stop subdividing after `depth` levels. Cubes below grid resolution are
    /// never produced.
    pub fn with_max_depth(mut self, depth: u32) -> Result<DyadicTree> {
        if depth > self.root_cells.trailing_zeros() {
            return Err(invalid("max depth below grid resolution"));
        }
        self.max_depth = depth;
        Ok(self)
    }

    /// `3^dim` trees whose roots of `root_cells` cells are shifted by thirds
    /// of the root side along each axis, placed centrally in the grid.
    pub fn shifted_lattices(grid: Grid, root_cells: usize) -> Result<Vec<DyadicTree>> {
        let third = |k: usize| (root_cells * k + 1) / 3;
        let span = root_cells + third(2);
        if span > grid.n() {
            return Err(invalid("grid too small for shifted lattices"));
        }
        let base = (grid.n() - span) / 2;
        let offsets = [base, base + third(1), base + third(2)];
        let mut out = Vec::new();
        match grid.dim() {
            Dim::One => {
                for &o in &offsets {
                    out.push(DyadicTree::new(grid, &[o], root_cells)?);
                }
            }
            Dim::Two => {
                for &a in &offsets {
                    for &b in &offsets {
                        out.push(DyadicTree::new(grid, &[a, b], root_cells)?);
                    }
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    pub fn dim(&self) -> Dim {
        self.grid.dim()
    }
    #[inline]
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }
    #[inline]
    pub fn origin(&self) -> &[usize] {
        &self.origin[..self.dim().get()]
    }
    #[inline]
    pub fn root_cells(&self) -> usize {
        self.root_cells
    }

    pub fn root(&self) -> DyadicCube {
        DyadicCube {
            level: 0,
            index: [0, 0],
        }
    }

    /// Side of a level-`level` cube, in cells.
    #[inline]
    pub fn side_cells(&self, level: u32) -> usize {
        self.root_cells >> level
    }

    pub fn is_member(&self, q: &DyadicCube) -> bool {
        q.level <= self.max_depth
            && (0..self.dim().get()).all(|k| (q.index[k] as usize) < (1usize << q.level))
            && (self.dim() == Dim::Two || q.index[1] == 0)
    }

    /// Geometric cube in domain coordinates.
    pub fn cube(&self, q: &DyadicCube) -> Cube {
        let h = self.grid.cell_width();
        let s = self.side_cells(q.level);
        let d = self.dim().get();
        let mut corner = [0.0; 2];
        for k in 0..d {
            corner[k] = self.grid.corner()[k] + (self.origin[k] + q.index[k] as usize * s) as f64 * h;
        }
        Cube::new(self.dim(), &corner[..d], s as f64 * h).expect("tree cubes are valid")
    }

    /// Number of cells in a cube, `side^dim`.
    pub fn cell_count(&self, q: &DyadicCube) -> usize {
        let s = self.side_cells(q.level);
        match self.dim() {
            Dim::One => s,
            Dim::Two => s * s,
        }
    }

    /// Measure of a cube.
    pub fn measure(&self, q: &DyadicCube) -> f64 {
        self.cell_count(q) as f64 * self.grid.cell_volume()
    }

    /// Half-open cell index range along each axis.
    pub fn cell_range(&self, q: &DyadicCube) -> [(usize, usize); 2] {
        let s = self.side_cells(q.level);
        let mut r = [(0, 1); 2];
        for (k, rk) in r.iter_mut().enumerate().take(self.dim().get()) {
            let lo = self.origin[k] + q.index[k] as usize * s;
            *rk = (lo, lo + s);
        }
        r
    }

    /// Flat indices of the cells of `q`, in increasing order.
    pub fn cells(&self, q: &DyadicCube) -> Vec<usize> {
        let r = self.cell_range(q);
        let mut out = Vec::with_capacity(self.cell_count(q));
        match self.dim() {
            Dim::One => out.extend(r[0].0..r[0].1),
            Dim::Two => {
                for i in r[0].0..r[0].1 {
                    for j in r[1].0..r[1].1 {
                        out.push(self.grid.flat([i, j]));
                    }
                }
            }
        }
        out
    }

    pub fn contains_cell(&self, q: &DyadicCube, cell: usize) -> bool {
        let r = self.cell_range(q);
        let c = self.grid.unflat(cell);
        (0..self.dim().get()).all(|k| c[k] >= r[k].0 && c[k] < r[k].1)
    }

    pub fn children(&self, q: &DyadicCube) -> Vec<DyadicCube> {
        if q.level >= self.max_depth {
            return Vec::new();
        }
        let l = q.level + 1;
        let [a, b] = q.index;
        match self.dim() {
            Dim::One => alloc::vec![
                DyadicCube { level: l, index: [2 * a, 0] },
                DyadicCube { level: l, index: [2 * a + 1, 0] },
            ],
            Dim::Two => {
                let mut out = Vec::with_capacity(4);
                for da in 0..2 {
                    for db in 0..2 {
                        out.push(DyadicCube {
                            level: l,
                            index: [2 * a + da, 2 * b + db],
                        });
                    }
                }
                out
            }
        }
    }

    pub fn parent(&self, q: &DyadicCube) -> Option<DyadicCube> {
        if q.level == 0 {
            return None;
        }
        Some(DyadicCube {
            level: q.level - 1,
            index: [q.index[0] / 2, q.index[1] / 2],
        })
    }

    /// The ancestor of `q` at `level` (which must not exceed `q.level`).
    pub fn ancestor(&self, q: &DyadicCube, level: u32) -> DyadicCube {
        let shift = q.level - level;
        DyadicCube {
            level,
            index: [q.index[0] >> shift, q.index[1] >> shift],
        }
    }

    /// `inner ⊆ outer`.
    pub fn contains(&self, outer: &DyadicCube, inner: &DyadicCube) -> bool {
        inner.level >= outer.level && self.ancestor(inner, outer.level) == *outer
    }

    /// The level-`level` cube containing a cell, if the cell is under the root.
    pub fn locate(&self, cell: usize, level: u32) -> Option<DyadicCube> {
        let c = self.grid.unflat(cell);
        let s = self.side_cells(level);
        let mut index = [0u32; 2];
        for k in 0..self.dim().get() {
            if c[k] < self.origin[k] || c[k] >= self.origin[k] + self.root_cells {
                return None;
            }
            index[k] = ((c[k] - self.origin[k]) / s) as u32;
        }
        Some(DyadicCube { level, index })
    }

    /// Every cube of the tree down to `depth`, coarsest first.
    pub fn cubes_to_depth(&self, depth: u32) -> Vec<DyadicCube> {
        let mut out = alloc::vec![self.root()];
        let mut frontier = alloc::vec![self.root()];
        for _ in 0..depth.min(self.max_depth) {
            let next: Vec<DyadicCube> = frontier.iter().flat_map(|q| self.children(q)).collect();
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }

    /// Recover the tree cube matching a geometric cube, if any.
    pub fn find(&self, cube: &Cube) -> Option<DyadicCube> {
        let h = self.grid.cell_width();
        let s_cells = cube.side() / h;
        let s = crate::math::round(s_cells) as usize;
        if s == 0 || crate::math::abs(s_cells - s as f64) > 1e-9 || !s.is_power_of_two() || s > self.root_cells {
            return None;
        }
        let level = (self.root_cells / s).trailing_zeros();
        let mut index = [0u32; 2];
        for k in 0..self.dim().get() {
            let t = (cube.corner()[k] - self.grid.corner()[k]) / h - self.origin[k] as f64;
            let ti = crate::math::round(t);
            if crate::math::abs(t - ti) > 1e-9 || ti < 0.0 {
                return None;
            }
            let ti = ti as usize;
            if !ti.is_multiple_of(s) {
                return None;
            }
            index[k] = (ti / s) as u32;
        }
        let q = DyadicCube { level, index };
        self.is_member(&q).then_some(q)
    }
}

/// Cubes from one tree with pairwise disjoint carve-out sets `E_Q ⊆ Q`,
/// each of measure at least `alpha·|Q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    tree: DyadicTree,
    cubes: Vec<DyadicCube>,
    carve_outs: Vec<Vec<usize>>,
    alpha: f64,
}

/// The first way a family fails to be sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum SparseViolation {
    /// `E_Q` has a cell outside `Q`.
    NotContained { cube: usize, cell: usize },
    /// `|E_Q| < alpha |Q|`.
    TooSmall { cube: usize, fraction: f64 },
    /// `E_first` and `E_second` share a cell.
    Overlap { first: usize, second: usize, cell: usize },
}

impl SparseFamily {
    /// Assemble a family without checking it; see [`verify_sparse`].
    pub fn new(
        tree: DyadicTree,
        cubes: Vec<DyadicCube>,
        carve_outs: Vec<Vec<usize>>,
        alpha: f64,
    ) -> Result<SparseFamily> {
        if cubes.len() != carve_outs.len() {
            return Err(invalid("one carve-out set per cube is required"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        if let Some(q) = cubes.iter().find(|q| !tree.is_member(q)) {
            return Err(invalid(format!("{q:?} is not a cube of the tree")));
        }
        let mut carve_outs = carve_outs;
        for e in carve_outs.iter_mut() {
            e.sort_unstable();
            e.dedup();
        }
        Ok(SparseFamily {
            tree,
            cubes,
            carve_outs,
            alpha,
        })
    }

    pub fn empty(tree: DyadicTree, alpha: f64) -> Result<SparseFamily> {
        SparseFamily::new(tree, Vec::new(), Vec::new(), alpha)
    }

    pub fn tree(&self) -> &DyadicTree {
        &self.tree
    }
    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }
    pub fn carve_outs(&self) -> &[Vec<usize>] {
        &self.carve_outs
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn len(&self) -> usize {
        self.cubes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `|E_Q| / |Q|` for each member.
    pub fn carve_fractions(&self) -> Vec<f64> {
        self.cubes
            .iter()
            .zip(&self.carve_outs)
            .map(|(q, e)| e.len() as f64 / self.tree.cell_count(q) as f64)
            .collect()
    }

    /// `max_R Σ_{Q ∈ S, Q ⊆ R} |Q| / |R|` over all dyadic `R` of the tree.
    pub fn max_packing_ratio(&self) -> f64 {
        let mut mass: BTreeMap<DyadicCube, f64> = BTreeMap::new();
        for q in &self.cubes {
            let m = self.tree.cell_count(q) as f64;
            for level in 0..=q.level {
                *mass.entry(self.tree.ancestor(q, level)).or_insert(0.0) += m;
            }
        }
        mass.iter()
            .map(|(r, m)| m / self.tree.cell_count(r) as f64)
            .fold(0.0, f64::max)
    }
}

/// Check containment, size and pairwise disjointness of the carve-outs,
/// cell by cell.
pub fn verify_sparse(s: &SparseFamily) -> core::result::Result<(), SparseViolation> {
    let tree = &s.tree;
    let mut owner: Vec<Option<usize>> = alloc::vec![None; tree.grid().len()];
    for (i, (q, e)) in s.cubes.iter().zip(&s.carve_outs).enumerate() {
        if let Some(&cell) = e.iter().find(|&&c| c >= owner.len() || !tree.contains_cell(q, c)) {
            return Err(SparseViolation::NotContained { cube: i, cell });
        }
        let fraction = e.len() as f64 / tree.cell_count(q) as f64;
        if fraction < s.alpha * (1.0 - 1e-12) {
            return Err(SparseViolation::TooSmall { cube: i, fraction });
        }
        for &c in e {
            if let Some(first) = owner[c] {
                return Err(SparseViolation::Overlap {
                    first,
                    second: i,
                    cell: c,
                });
            }
            owner[c] = Some(i);
        }
    }
    Ok(())
}

/// Greedy carving, deepest cubes first: each cube keeps its cells not yet
/// claimed. Returns the carve-outs in input order and the smallest fraction
/// kept, or the index of the first cube left with nothing.
fn carve(tree: &DyadicTree, cubes: &[DyadicCube]) -> (Vec<Vec<usize>>, Vec<f64>) {
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| cubes[b].level.cmp(&cubes[a].level).then(a.cmp(&b)));
    let mut claimed = alloc::vec![false; tree.grid().len()];
    let mut carve_outs = alloc::vec![Vec::new(); cubes.len()];
    let mut fractions = alloc::vec![0.0; cubes.len()];
    for i in order {
        let q = &cubes[i];
        let e: Vec<usize> = tree.cells(q).into_iter().filter(|&c| !claimed[c]).collect();
        for &c in &e {
            claimed[c] = true;
        }
        fractions[i] = e.len() as f64 / tree.cell_count(q) as f64;
        carve_outs[i] = e;
    }
    (carve_outs, fractions)
}

/// Realise a list of tree cubes as an `alpha`-sparse family by greedy
/// carving, or report the first cube that cannot keep an `alpha` fraction.
pub fn carve_greedy(tree: &DyadicTree, cubes: &[DyadicCube], alpha: f64) -> Result<SparseFamily> {
    if let Some(q) = cubes.iter().find(|q| !tree.is_member(q)) {
        return Err(invalid(format!("{q:?} is not a cube of the tree")));
    }
    let (carve_outs, fractions) = carve(tree, cubes);
    if let Some((i, f)) = fractions
        .iter()
        .enumerate()
        .find(|(_, &f)| f < alpha * (1.0 - 1e-12))
    {
        return Err(Error::CarveFailure(format!(
            "cube #{i} {:?} keeps only {f} of its measure",
            cubes[i]
        )));
    }
    SparseFamily::new(tree.clone(), cubes.to_vec(), carve_outs, alpha)
}

/// Greedy carving with `alpha` set to the smallest fraction achieved.
pub fn carve_greedy_achieved(tree: &DyadicTree, cubes: &[DyadicCube]) -> Result<SparseFamily> {
    let (carve_outs, fractions) = carve(tree, cubes);
    let alpha = fractions.iter().copied().fold(1.0, f64::min).min(1.0 - 1e-12);
    if alpha <= 0.0 {
        let i = fractions.iter().position(|&f| f <= 0.0).unwrap_or(0);
        return Err(Error::CarveFailure(format!(
            "cube #{i} {:?} is covered by deeper cubes",
            cubes[i]
        )));
    }
    SparseFamily::new(tree.clone(), cubes.to_vec(), carve_outs, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree1(n: usize) -> DyadicTree {
        DyadicTree::over_grid(Grid::new(Dim::One, &[0.0], 1.0, n).unwrap()).unwrap()
    }

    fn dc(level: u32, i: u32) -> DyadicCube {
        DyadicCube {
            level,
            index: [i, 0],
        }
    }

    #[test]
    fn children_partition_the_unit_interval() {
        let q = Cube::interval(0.0, 1.0).unwrap();
        let c = q.children();
        assert_eq!(c, alloc::vec![Cube::interval(0.0, 0.5).unwrap(), Cube::interval(0.5, 0.5).unwrap()]);
        let q = Cube::square(0.0, 0.0, 1.0).unwrap();
        let c = q.children();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|x| x.side() == 0.5));
        let q = Cube::interval(1.0, 3.0).unwrap();
        let c = q.children();
        assert_eq!(c[0].corner(), &[1.0]);
        assert_eq!(c[1].corner(), &[2.5]);
        assert_eq!(c[1].side(), 1.5);
    }

    #[test]
    fn tree_navigation() {
        let t = DyadicTree::over_grid(Grid::new(Dim::Two, &[0.0, 0.0], 1.0, 8).unwrap()).unwrap();
        for q in t.cubes_to_depth(3) {
            for c in t.children(&q) {
                assert_eq!(t.parent(&c), Some(q));
                assert!(t.contains(&q, &c));
            }
            assert_eq!(t.find(&t.cube(&q)), Some(q));
        }
        assert_eq!(t.cubes_to_depth(3).len(), 1 + 4 + 16 + 64);
        assert!(t.children(&DyadicCube { level: 3, index: [0, 0] }).is_empty());
    }

    #[test]
    fn too_deep_trees_are_refused() {
        assert!(tree1(8).with_max_depth(4).is_err());
        assert!(DyadicTree::new(Grid::new(Dim::One, &[0.0], 1.0, 8).unwrap(), &[0], 6).is_err());
        assert!(DyadicTree::new(Grid::new(Dim::One, &[0.0], 1.0, 8).unwrap(), &[2], 8).is_err());
    }

    #[test]
    fn verify_examples() {
        let t = tree1(8);
        assert_eq!(verify_sparse(&SparseFamily::empty(t.clone(), 0.5).unwrap()), Ok(()));
        let s = SparseFamily::new(t.clone(), alloc::vec![dc(0, 0)], alloc::vec![alloc::vec![0, 1, 2, 3]], 0.5).unwrap();
        assert_eq!(verify_sparse(&s), Ok(()));
        let s = SparseFamily::new(
            t.clone(),
            alloc::vec![dc(0, 0), dc(1, 0)],
            alloc::vec![alloc::vec![0, 1, 2, 3], alloc::vec![0, 1]],
            0.5,
        )
        .unwrap();
        assert!(matches!(
            verify_sparse(&s),
            Err(SparseViolation::Overlap { first: 0, second: 1, .. })
        ));
        let s = SparseFamily::new(t.clone(), alloc::vec![dc(1, 0)], alloc::vec![alloc::vec![4]], 0.25).unwrap();
        assert!(matches!(verify_sparse(&s), Err(SparseViolation::NotContained { cube: 0, cell: 4 })));
        let s = SparseFamily::new(t, alloc::vec![dc(0, 0)], alloc::vec![alloc::vec![0, 1, 2]], 0.5).unwrap();
        assert!(matches!(verify_sparse(&s), Err(SparseViolation::TooSmall { cube: 0, .. })));
    }

    #[test]
    fn greedy_on_a_nested_chain() {
        let t = tree1(8);
        let s = carve_greedy(&t, &[dc(0, 0), dc(1, 0), dc(2, 0)], 0.5).unwrap();
        assert_eq!(s.carve_outs()[0], alloc::vec![4, 5, 6, 7]);
        assert_eq!(s.carve_outs()[1], alloc::vec![2, 3]);
        assert_eq!(s.carve_outs()[2], alloc::vec![0, 1]);
        assert_eq!(verify_sparse(&s), Ok(()));
    }

    #[test]
    fn greedy_single_and_duplicates() {
        let t = tree1(8);
        let s = carve_greedy(&t, &[dc(1, 1)], 0.99).unwrap();
        assert_eq!(s.carve_outs()[0], t.cells(&dc(1, 1)));
        let err = carve_greedy(&t, &[dc(1, 1), dc(1, 1), dc(1, 1)], 0.1).unwrap_err();
        assert!(matches!(err, Error::CarveFailure(_)));
    }

    #[test]
    fn shifted_lattices_fit_inside() {
        let g = Grid::new(Dim::Two, &[0.0, 0.0], 1.0, 64).unwrap();
        let ls = DyadicTree::shifted_lattices(g, 32).unwrap();
        assert_eq!(ls.len(), 9);
        let g1 = Grid::new(Dim::One, &[0.0], 1.0, 64).unwrap();
        assert_eq!(DyadicTree::shifted_lattices(g1, 32).unwrap().len(), 3);
        assert!(DyadicTree::shifted_lattices(g1, 64).is_err());
    }
}
