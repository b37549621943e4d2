//! `BMO_u ∩ BMO ⊆ BMO_{u^{1/r}}` for power weights, and a symbol that lies
//! in `BMO_{u^{1/r}}` but not in `BMO`.

use bloomlab_core::weights::{bmo_ratio, reverse_jensen, CubeDictionary, Weight};
use bloomlab_core::{Cube, Dim, Grid, GridFunction};
use rayon::prelude::*;

use super::bloom_failure::power_ratio_closed_form;
use super::{loglog_slope, plot, point_rng, real, Check, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::io::Table;
use crate::specs::SymbolSpec;
use crate::LabError;

/// `(1/|Q|) ∫_Q |b - b_Q|`.
fn mean_osc(b: &GridFunction, q: &Cube) -> Result<f64, LabError> {
    let one = Weight::constant(b.grid(), 1.0)?;
    Ok(bmo_ratio(b, &one, q)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, LabError> {
    let (alpha, r) = (cfg.alpha, cfg.r);
    let grid = Grid::symmetric(Dim::One, cfg.half_width, cfg.n)?;
    let b = SymbolSpec::parse(&cfg.b)?.build(&grid, &mut point_rng(cfg.seed, 0))?;
    let u = Weight::power(&grid, alpha)?;
    let ur = u.pow(1.0 / r);
    let dict = CubeDictionary::standard(&grid, cfg.dict_depth)?;
    let rj = reverse_jensen(&u, 1.0 / r, &dict)?;
    // (u)_Q^{1/r} ≤ c (u^{1/r})_Q on every cube of the dictionary.
    let c = rj.bound.powf(1.0 / r);
    let c_measured = rj.value.powf(1.0 / r);

    let rows = dict
        .cubes()
        .par_iter()
        .map(|q| -> Result<_, LabError> {
            let lhs = bmo_ratio(&b, &ur, q)?;
            let weighted = bmo_ratio(&b, &u, q)?;
            let plain = mean_osc(&b, q)?;
            let rhs = c * weighted.powf(1.0 / r) * plain.powf(1.0 - 1.0 / r);
            Ok((*q, lhs, weighted, plain, rhs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cubes = Table::new(
        "embedding_cubes",
        &["corner", "side", "bmo_u_root", "bmo_u", "bmo", "rhs", "ratio"],
    );
    let mut worst = 0.0f64;
    for &(q, lhs, weighted, plain, rhs) in &rows {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        worst = worst.max(ratio);
        cubes.push(vec![
            real(q.corner()[0]),
            real(q.side()),
            real(lhs),
            real(weighted),
            real(plain),
            real(rhs),
            real(ratio),
        ]);
    }

    // b = |x|^{α/r} over (0, L) for growing L.
    let e = alpha / r;
    let lengths: Vec<f64> = cfg.eps_exponents.iter().map(|&k| 10f64.powi(k as i32)).collect();
    let scans = lengths
        .par_iter()
        .map(|&len| -> Result<_, LabError> {
            let g = Grid::new(Dim::One, &[0.0], len, cfg.n)?;
            let bp = g.sample(|x| x[0].abs().powf(e))?;
            let q = Cube::interval(0.0, len)?;
            Ok((len, mean_osc(&bp, &q)?, bmo_ratio(&bp, &Weight::power(&g, e)?, &q)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut growth = Table::new("embedding_growth", &["length", "bmo", "bmo_u_root", "closed_form"]);
    for &(len, plain, weighted) in &scans {
        growth.push(vec![real(len), real(plain), real(weighted), real(power_ratio_closed_form(e, e, len))]);
    }
    let slope = loglog_slope(&scans.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>());
    let bounded = scans.iter().map(|s| s.2).fold(0.0, f64::max);

    let checks = vec![
        Check::new("reverse_jensen", rj.holds, format!("value {:.6} bound {:.6}", rj.value, rj.bound)),
        Check::new(
            "interpolation_per_cube",
            worst <= 1.0 + 1e-9,
            format!("max lhs/rhs {worst:.6} with c = {c:.6} (measured {c_measured:.6})"),
        ),
        Check::new("weighted_bounded", bounded <= 2.0, format!("max BMO_(u^(1/r)) ratio {bounded:.6}")),
        Check::new(
            "unweighted_diverges",
            !(e > 0.0) || slope > 0.0,
            format!("log-log slope {slope:.6}, expected {e}"),
        ),
    ];
    Ok(ExperimentOutput {
        tables: vec![cubes, growth],
        plots: vec![(
            "embedding_growth".into(),
            plot("embedding_growth.svg", "BMO ratios over (0, L)", "length", "bmo", None, true, true),
        )],
        files: Vec::new(),
        checks,
    })
}
