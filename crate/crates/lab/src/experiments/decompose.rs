//! Batch sparse decompositions and augmented families of random functions.

use bloomlab_core::dyadic::{verify_sparse, DyadicTree};
use bloomlab_core::oscillation::{augment_family, decomposition_lambda, sparse_decompose};
use bloomlab_core::{Dim, Grid, GridFunction};
use rand::Rng;
use rayon::prelude::*;

use super::{point_rng, real, Check, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::io::{format_sparse_family, Table};
use crate::specs::step_function;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub kind: &'static str,
    pub cubes: usize,
    pub alpha: f64,
    pub sparse_ok: bool,
    pub packing: f64,
    pub defect: f64,
    pub exceptional: usize,
    pub augmented_cubes: usize,
    pub augmented_alpha: f64,
    pub augmented_sparse_ok: bool,
    pub augmented_defect: f64,
}

/// Even trials are step functions, odd ones are `|x - c|^e`.
pub fn trial_function(grid: &Grid, seed: u64, index: u64) -> Result<(&'static str, GridFunction), LabError> {
    let mut rng = point_rng(seed, index);
    if index.is_multiple_of(2) {
        let blocks = rng.gen_range(2..=64);
        Ok(("step", step_function(grid, blocks, &mut rng)?))
    } else {
        let e = rng.gen_range(-0.4..0.8);
        let c: [f64; 2] = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let d = grid.dim().get();
        let f = grid.sample(|x| {
            let r2: f64 = x.iter().zip(&c).take(d).map(|(a, b)| (a - b) * (a - b)).sum();
            r2.sqrt().powf(e)
        })?;
        Ok(("power", f))
    }
}

pub fn run_trial(grid: &Grid, f: &GridFunction, kind: &'static str) -> Result<Trial, LabError> {
    let tree = DyadicTree::over_grid(*grid)?;
    let dec = sparse_decompose(f, &tree)?;
    let aug = augment_family(&dec.family, f)?;
    Ok(Trial {
        kind,
        cubes: dec.family.len(),
        alpha: dec.family.alpha(),
        sparse_ok: verify_sparse(&dec.family).is_ok(),
        packing: dec.family.max_packing_ratio(),
        defect: dec.pointwise_defect,
        exceptional: dec.exceptional_cells.len(),
        augmented_cubes: aug.family.len(),
        augmented_alpha: aug.family.alpha(),
        augmented_sparse_ok: verify_sparse(&aug.family).is_ok(),
        augmented_defect: aug.max_defect,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, LabError> {
    let dim = Dim::new(cfg.dim)?;
    let grid = Grid::symmetric(dim, cfg.half_width, cfg.n)?;
    let trials = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let (kind, f) = trial_function(&grid, cfg.seed, i)?;
            run_trial(&grid, &f, kind)
        })
        .collect::<Result<Vec<_>, LabError>>()?;

    let mut table = Table::new(
        "decompose",
        &[
            "trial", "kind", "cubes", "alpha", "sparse_ok", "packing", "defect", "exceptional",
            "augmented_cubes", "augmented_alpha", "augmented_sparse_ok", "augmented_defect",
        ],
    );
    for (i, t) in trials.iter().enumerate() {
        table.push(vec![
            i.into(),
            t.kind.into(),
            t.cubes.into(),
            real(t.alpha),
            t.sparse_ok.into(),
            real(t.packing),
            real(t.defect),
            t.exceptional.into(),
            t.augmented_cubes.into(),
            real(t.augmented_alpha),
            t.augmented_sparse_ok.into(),
            real(t.augmented_defect),
        ]);
    }

    // Per-cube dump of the first trial.
    let mut files = Vec::new();
    let mut dump = Table::new("decompose_cubes", &["level", "index_x", "index_y", "coefficient", "carve_fraction"]);
    if cfg.count > 0 {
        let (_, f) = trial_function(&grid, cfg.seed, 0)?;
        let dec = sparse_decompose(&f, &DyadicTree::over_grid(grid)?)?;
        let fr = dec.family.carve_fractions();
        for ((q, c), e) in dec.family.cubes().iter().zip(&dec.coefficients).zip(&fr) {
            dump.push(vec![q.level.into(), q.index[0].into(), q.index[1].into(), real(*c), real(*e)]);
        }
        files.push(("decompose_family.txt".to_string(), format_sparse_family(&dec.family)));
    }

    let cells = grid.len() as f64;
    let allowed = decomposition_lambda(dim.get()) * cells;
    let count = |p: &dyn Fn(&Trial) -> bool| trials.iter().filter(|t| p(t)).count();
    let n = trials.len();
    let sparse = count(&|t| t.sparse_ok && t.alpha >= 0.5 && t.packing <= 2.0 + 1e-12);
    let pointwise = count(&|t| (t.exceptional as f64) <= allowed);
    let augmented = count(&|t| t.augmented_sparse_ok && t.augmented_defect <= 1e-12);
    let checks = vec![
        Check::new("sparse_families", sparse == n, format!("{sparse}/{n} families 1/2-sparse")),
        Check::new("pointwise_bound", pointwise == n, format!("{pointwise}/{n} within the exceptional budget")),
        Check::new("augmented_families", augmented == n, format!("{augmented}/{n} augmented families")),
    ];
    Ok(ExperimentOutput {
        tables: vec![table, dump],
        plots: Vec::new(),
        files,
        checks,
    })
}
