//! Diagnostics of one weight: `A_p` constants, duality, doubling, the
//! level-set constant, reverse Jensen and density.

use bloomlab_core::weights::{
    ap_constant, density_beta, doubling_constant, level_set_gamma, reverse_jensen, CubeDictionary,
};
use bloomlab_core::{Dim, Grid};

use super::{point_rng, real, Check, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::io::Table;
use crate::specs::WeightSpec;
use crate::LabError;

pub const EXPONENTS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];
pub const DELTAS: [f64; 3] = [0.25, 0.5, 0.75];

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, LabError> {
    let grid = Grid::symmetric(Dim::new(cfg.dim)?, cfg.half_width, cfg.n)?;
    let w = WeightSpec::parse(&cfg.mu)?.build(&grid)?;
    let dict = CubeDictionary::standard(&grid, cfg.dict_depth)?;
    let mut checks = Vec::new();

    let mut ap = Table::new("diagnose_ap", &["p", "ap", "dual_ap", "dual_rel_err"]);
    for &p in &EXPONENTS {
        let pp = p / (p - 1.0);
        let a = ap_constant(&w, p, &dict)?;
        let dual = ap_constant(&w.pow(1.0 - pp), pp, &dict)?;
        let expect = a.powf(pp - 1.0);
        let err = (dual - expect).abs() / expect;
        ap.push(vec![real(p), real(a), real(dual), real(err)]);
        checks.push(Check::new(&format!("ap_at_least_one_p{p}"), a >= 1.0 - 1e-12, format!("{a:.6}")));
        checks.push(Check::new(&format!("duality_p{p}"), err <= 1e-9, format!("relative error {err:.3e}")));
    }

    let gamma = level_set_gamma(&w, &dict)?;
    let mut rj = Table::new("diagnose_reverse_jensen", &["delta", "value", "gamma", "bound", "holds"]);
    for &d in &DELTAS {
        let r = reverse_jensen(&w, d, &dict)?;
        rj.push(vec![real(d), real(r.value), real(r.gamma), real(r.bound), r.holds.into()]);
        checks.push(Check::new(
            &format!("reverse_jensen_{d}"),
            r.holds,
            format!("{:.6} ≤ {:.6}", r.value, r.bound),
        ));
    }

    let doubling = doubling_constant(&w, 2.0, &dict)?;
    let beta = density_beta(&w, 0.5, &grid.domain(), 64, &mut point_rng(cfg.seed, 0))?;
    let mut summary = Table::new("diagnose_summary", &["weight", "gamma", "doubling", "density_beta"]);
    summary.push(vec![cfg.mu.as_str().into(), real(gamma), real(doubling), real(beta)]);
    checks.push(Check::new("doubling_finite", doubling.is_finite(), format!("{doubling:.6}")));
    checks.push(Check::new("density_positive", beta > 0.0, format!("{beta:.6}")));
    Ok(ExperimentOutput {
        tables: vec![ap, rj, summary],
        plots: Vec::new(),
        files: Vec::new(),
        checks,
    })
}
