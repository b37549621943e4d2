//! Constructive geometry for the necessity of the Bloom `BMO` condition: the
//! witness sets `E ⊆ Q`, `F ⊆ k_0 Q` and `G ⊆ E × F` for one cube, and the
//! chain of inequalities that bounds `ω_{2^{-n-2}}(b; Q)^m` by
//! `((ν^{1/m})_Q)^m`.
//!
//! Orientation: `F_α` is placed at `x_0 - Rθ` with `θ` near `θ_0`, so that
//! every direction `(x - y)/|x - y|` with `x ∈ Q`, `y ∈ F_α` lies within
//! `δ` of `θ_0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Cube, Dim, Grid, GridFunction};
use crate::math;
use crate::operators::{angle_of_chord, angular_distance, chord_of_angle, KernelSpec, KernelTable, SpherePoint};
use crate::oscillation::{decomposition_lambda, local_mean_osc_cells, median_value};
use crate::weights::{BloomSetup, Weight};

/// Largest number of halvings of `α`, starting from `1/2`.
pub const MAX_ALPHA_HALVINGS: u32 = 12;

/// An open subset of the sphere on which `Ω` keeps one sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arc {
    /// A point of `{+1, -1}`.
    Point(f64),
    /// Angles within `half_width` of `center`.
    Circle { center: f64, half_width: f64 },
}

impl Arc {
    fn contains_angle(&self, t: f64) -> bool {
        match *self {
            Arc::Circle { center, half_width } => angular_distance(t, center) < half_width,
            Arc::Point(_) => false,
        }
    }
}

fn step(step: &'static str, reason: String) -> Error {
    Error::Certificate { step, reason }
}

/// `θ_0 ∈ Σ` maximising `|Ω|` over the samples (ties go to the sample nearest
/// the centre of `Σ`) and `ε_0 = |Ω(θ_0)|/2`.
pub fn find_theta0(kernel: &KernelSpec, sigma: &Arc) -> Result<(SpherePoint, f64)> {
    let omega = kernel.omega();
    match (kernel.dim(), *sigma) {
        (Dim::One, Arc::Point(s)) => {
            let p = SpherePoint::Line(if s >= 0.0 { 1.0 } else { -1.0 });
            let v = math::abs(omega.at(p));
            if v == 0.0 {
                return Err(Error::HypothesisViolated(format!("Ω vanishes at {s}")));
            }
            Ok((p, v / 2.0))
        }
        (Dim::Two, Arc::Circle { center, .. }) => {
            let inside: Vec<(f64, f64)> = omega
                .sphere_samples()
                .into_iter()
                .filter_map(|(p, v)| match p {
                    SpherePoint::Circle(t) if sigma.contains_angle(t) => Some((t, v)),
                    _ => None,
                })
                .collect();
            if inside.is_empty() {
                return Err(Error::HypothesisViolated("Σ contains no sphere samples".into()));
            }
            if inside.iter().any(|e| e.1 > 0.0) && inside.iter().any(|e| e.1 < 0.0) {
                return Err(Error::HypothesisViolated("Ω changes sign on Σ".into()));
            }
            let mut best = inside[0];
            for &(t, v) in &inside[1..] {
                let (bt, bv) = best;
                let better = math::abs(v) > math::abs(bv)
                    || (math::abs(v) == math::abs(bv)
                        && angular_distance(t, center) < angular_distance(bt, center));
                if better {
                    best = (t, v);
                }
            }
            if best.1 == 0.0 {
                return Err(Error::HypothesisViolated("Ω vanishes on Σ".into()));
            }
            Ok((SpherePoint::Circle(best.0), math::abs(best.1) / 2.0))
        }
        _ => Err(Error::InvalidArgument("Σ does not match the kernel dimension".into())),
    }
}

/// Largest `δ` on the ladder `δ_Σ 2^{-k}` (starting at the chordal distance
/// from `θ_0` to the boundary of `Σ`) with
/// `σ{θ ∈ B(θ_0, δ) : |Ω(θ)| ≥ ε_0} ≥ (1 - α) σ(B(θ_0, δ))` on the samples.
/// In dimension 1 the sphere is two points and `δ = 1`.
pub fn choose_delta(kernel: &KernelSpec, sigma: &Arc, theta0: SpherePoint, eps0: f64, alpha: f64) -> Result<f64> {
    let (t0, center, half_width) = match (theta0, *sigma) {
        (SpherePoint::Line(_), _) => return Ok(1.0),
        (SpherePoint::Circle(t), Arc::Circle { center, half_width }) => (t, center, half_width),
        _ => return Err(Error::InvalidArgument("Σ does not match θ_0".into())),
    };
    let room = half_width - angular_distance(t0, center);
    if !(room > 0.0) {
        return Err(Error::NoAdmissibleDelta("θ_0 is not interior to Σ".into()));
    }
    let samples = kernel.omega().sphere_samples();
    let mut delta = chord_of_angle(room);
    for _ in 0..48 {
        let angle = angle_of_chord(delta);
        let mut total = 0usize;
        let mut good = 0usize;
        for (p, v) in &samples {
            if let SpherePoint::Circle(t) = p {
                if angular_distance(*t, t0) < angle {
                    total += 1;
                    if math::abs(*v) >= eps0 {
                        good += 1;
                    }
                }
            }
        }
        if total == 0 {
            break;
        }
        if good as f64 >= (1.0 - alpha) * total as f64 {
            return Ok(delta);
        }
        delta /= 2.0;
    }
    Err(Error::NoAdmissibleDelta(format!(
        "no δ up to {} passes the density test at sphere resolution (α = {alpha})",
        chord_of_angle(room)
    )))
}

/// `F_α` as grid cells, with `k_0` and the radii used.
#[derive(Debug, Clone, PartialEq)]
pub struct FAlpha {
    pub cells: Vec<usize>,
    pub k0: f64,
    pub r: f64,
    pub r_inner: f64,
    pub r_outer: f64,
    /// `|F_α| δ / |Q|`.
    pub rho: f64,
}

/// Unit vector of `θ` in the plane of the grid.
fn unit(theta: SpherePoint) -> [f64; 2] {
    theta.vector()
}

fn chord_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    math::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
}

/// Cells of `{x_0 - Rθ : |θ - θ_0| < δ/2, (4+δ)r/δ ≤ R ≤ 2(4+δ)r/δ}` where
/// `x_0`, `r` are the centre and circumradius of `Q`.
pub fn build_f_alpha(grid: &Grid, q: &Cube, theta0: SpherePoint, delta: f64) -> Result<FAlpha> {
    let d = grid.dim().get();
    let x0 = q.center();
    let r = q.circumradius();
    let r_inner = (4.0 + delta) * r / delta;
    let r_outer = 2.0 * r_inner;
    let t0 = unit(theta0);
    let domain = grid.domain();

    // Extreme points of the sector must stay inside the domain.
    let probe: Vec<[f64; 2]> = match theta0 {
        SpherePoint::Line(_) => alloc::vec![t0],
        SpherePoint::Circle(t) => {
            let a = angle_of_chord(delta / 2.0);
            (0..=32)
                .map(|j| {
                    let s = t - a + 2.0 * a * j as f64 / 32.0;
                    [math::cos(s), math::sin(s)]
                })
                .collect()
        }
    };
    for th in &probe {
        for &rad in &[r_inner, r_outer] {
            let y = [x0[0] - rad * th[0], x0[1] - rad * th[1]];
            if !domain.contains_point(&y[..d]) {
                return Err(Error::EnlargeDomain(format!(
                    "F_α reaches {:?}, outside the domain",
                    &y[..d]
                )));
            }
        }
    }

    let mut cells = Vec::new();
    for c in 0..grid.len() {
        let y = grid.midpoint(c);
        let v = [x0[0] - y[0], x0[1] - y[1]];
        let dist = math::sqrt(v[0] * v[0] + v[1] * v[1]);
        if dist < r_inner || dist > r_outer {
            continue;
        }
        let th = [v[0] / dist, v[1] / dist];
        if chord_between(th, t0) < delta / 2.0 {
            cells.push(c);
        }
    }
    if cells.is_empty() {
        return Err(Error::EnlargeDomain("F_α contains no cells at this resolution".into()));
    }
    let h = grid.cell_width();
    let mut reach = 0.0f64;
    for &c in &cells {
        let lo = grid.cell_cube(c);
        for k in 0..d {
            let a = lo.corner()[k];
            reach = reach.max(math::abs(a - x0[k])).max(math::abs(a + h - x0[k]));
        }
    }
    let k0 = 2.0 * reach / q.side();
    let rho = cells.len() as f64 * grid.cell_volume() * delta / q.volume();
    Ok(FAlpha {
        cells,
        k0,
        r,
        r_inner,
        r_outer,
        rho,
    })
}

/// Largest `|(x - y)/|x - y| - θ_0|` over cell midpoints `x ∈ Q`, `y ∈ F`.
pub fn cone_spread(grid: &Grid, q_cells: &[usize], f_cells: &[usize], theta0: SpherePoint) -> f64 {
    let t0 = unit(theta0);
    let mut worst = 0.0f64;
    for &x in q_cells {
        let px = grid.midpoint(x);
        for &y in f_cells {
            worst = worst.max(chord_between(direction(px, grid.midpoint(y)), t0));
        }
    }
    worst
}

fn direction(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    let v = [x[0] - y[0], x[1] - y[1]];
    let d = math::sqrt(v[0] * v[0] + v[1] * v[1]);
    [v[0] / d, v[1] / d]
}

/// The witness package for one cube.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCertificate {
    pub q: Cube,
    pub q_cells: Vec<usize>,
    pub theta0: SpherePoint,
    pub eps0: f64,
    pub alpha0: f64,
    pub delta: f64,
    pub k0: f64,
    pub f_alpha: Vec<usize>,
    /// `|G_{α_0}| / (|F_{α_0}| |Q|)`.
    pub bad_fraction: f64,
    pub e: Vec<usize>,
    pub f: Vec<usize>,
    /// Pairs of `E × F` removed to form `G`.
    pub removed: Vec<(usize, usize)>,
    /// `|G| / |Q|^2`.
    pub xi0: f64,
    pub sign_b: i8,
    pub sign_omega: i8,
    /// `ω_{2^{-n-2}}(b; Q)`.
    pub oscillation: f64,
    /// `m_b(F_{α_0})`.
    pub median: f64,
    pub cell_volume: f64,
}

impl LowerBoundCertificate {
    /// `|G|` in measure units.
    pub fn g_measure(&self) -> f64 {
        (self.e.len() * self.f.len() - self.removed.len()) as f64 * self.cell_volume * self.cell_volume
    }

    /// Pairs of `G`.
    pub fn g_pairs(&self) -> Vec<(usize, usize)> {
        let mut removed = self.removed.clone();
        removed.sort_unstable();
        let mut out = Vec::new();
        for &x in &self.e {
            for &y in &self.f {
                if removed.binary_search(&(x, y)).is_err() {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Results of re-checking a certificate pair by pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    pub property_i: bool,
    pub property_ii: bool,
    pub property_iii: bool,
    /// `|G| ≥ 2^{-n-5}|F_{α_0}||Q|`, counted in cells.
    pub count_bound: bool,
    /// The cone estimate holds on `Q × F_{α_0}`.
    pub cone: bool,
    pub e_size: bool,
    pub f_size: bool,
}

impl CertificateCheck {
    pub fn all(&self) -> bool {
        self.property_i
            && self.property_ii
            && self.property_iii
            && self.count_bound
            && self.cone
            && self.e_size
            && self.f_size
    }
}

/// Re-verify every invariant of a certificate on all sampled pairs.
pub fn check_certificate(cert: &LowerBoundCertificate, kernel: &KernelSpec, b: &GridFunction) -> CertificateCheck {
    let grid = b.grid();
    let n = grid.dim().get();
    let omega = kernel.omega();
    let bs = b.samples();
    let mut i_ok = true;
    let mut ii_ok = true;
    for &x in &cert.e {
        let px = grid.midpoint(x);
        for &y in &cert.f {
            let diff = bs[x] - bs[y];
            if cert.oscillation > math::abs(diff) * (1.0 + 1e-12) {
                i_ok = false;
            }
            if diff * f64::from(cert.sign_b) < 0.0 {
                ii_ok = false;
            }
            let dir = direction(px, grid.midpoint(y));
            if omega.at_direction(&dir[..n]) * (cert.sign_omega as f64) < 0.0 {
                ii_ok = false;
            }
        }
    }
    let iii_ok = cert.g_pairs().iter().all(|&(x, y)| {
        let dir = direction(grid.midpoint(x), grid.midpoint(y));
        math::abs(omega.at_direction(&dir[..n])) >= cert.eps0 * (1.0 - 1e-12)
    });
    let q_count = cert.q_cells.len();
    let g_count = cert.e.len() * cert.f.len() - cert.removed.len();
    let count_bound = (g_count as u64) << (n + 5) >= (cert.f_alpha.len() * q_count) as u64;
    let cone = cone_spread(grid, &cert.q_cells, &cert.f_alpha, cert.theta0) < cert.delta;
    let e_size = cert.e.len() << (n + 3) == q_count;
    let f_size = cert.f.len() == cert.f_alpha.len().div_ceil(2);
    CertificateCheck {
        property_i: i_ok,
        property_ii: ii_ok,
        property_iii: iii_ok,
        count_bound,
        cone,
        e_size,
        f_size,
    }
}

/// Cells of a grid-aligned cube, or an error naming the failing step.
fn aligned_cells(grid: &Grid, q: &Cube) -> Result<Vec<usize>> {
    let cov = grid
        .coverage_inside(q)
        .map_err(|e| step("cube", format!("{e}")))?;
    let h = grid.cell_volume();
    if cov.cells.iter().any(|&(_, v)| math::abs(v - h) > 1e-9 * h) {
        return Err(step("cube", "Q is not aligned with the grid".into()));
    }
    let mut cells: Vec<usize> = cov.cells.iter().map(|c| c.0).collect();
    cells.sort_unstable();
    Ok(cells)
}

/// Run the construction on one cube: `F_α` for `α = 1/2, 1/4, …` until
/// `|G_α| ≤ 2^{-n-5}|F_α||Q|`, then `E`, `F` and `G`. With
/// `alpha0_search = false` only `α = 1/2` is tried.
pub fn build_certificate(
    kernel: &KernelSpec,
    sigma: &Arc,
    b: &GridFunction,
    q: &Cube,
    alpha0_search: bool,
) -> Result<LowerBoundCertificate> {
    let grid = *b.grid();
    if kernel.dim() != grid.dim() {
        return Err(Error::InvalidArgument("kernel and symbol dimensions differ".into()));
    }
    let n = grid.dim().get();
    let q_cells = aligned_cells(&grid, q)?;
    if q_cells.len() % (1 << (n + 3)) != 0 {
        return Err(step(
            "cube",
            format!("|Q| = {} cells is not a multiple of 2^(n+3)", q_cells.len()),
        ));
    }
    let (theta0, eps0) = find_theta0(kernel, sigma)?;
    let omega = kernel.omega();
    let sign_omega: i8 = if omega.at(theta0) > 0.0 { 1 } else { -1 };

    let mut alpha = 0.5;
    let halvings = if alpha0_search { MAX_ALPHA_HALVINGS } else { 0 };
    let mut chosen = None;
    let mut last = String::new();
    for _ in 0..=halvings {
        let delta = choose_delta(kernel, sigma, theta0, eps0, alpha)?;
        let fa = build_f_alpha(&grid, q, theta0, delta)?;
        let mut bad = Vec::new();
        for &x in &q_cells {
            let px = grid.midpoint(x);
            for &y in &fa.cells {
                let dir = direction(px, grid.midpoint(y));
                if math::abs(omega.at_direction(&dir[..n])) < eps0 {
                    bad.push((x, y));
                }
            }
        }
        let bad_fraction = bad.len() as f64 / (fa.cells.len() * q_cells.len()) as f64;
        if (bad.len() as u64) << (n + 5) <= (fa.cells.len() * q_cells.len()) as u64 {
            chosen = Some((alpha, delta, fa, bad, bad_fraction));
            break;
        }
        last = format!("α = {alpha}: |G_α| / (|F_α||Q|) = {bad_fraction}");
        alpha /= 2.0;
    }
    let Some((alpha0, delta, fa, bad, bad_fraction)) = chosen else {
        return Err(step("alpha0", last));
    };

    let bs = b.samples();
    let median = median_value(b, &fa.cells)?;
    let lambda = decomposition_lambda(n);
    let (oscillation, _) = local_mean_osc_cells(b, &q_cells, lambda);

    // The 2^{-n-2} fraction of Q where |b - m_b(F_α)| is largest.
    let mut by_gap = q_cells.clone();
    by_gap.sort_by(|&x, &y| {
        math::abs(bs[y] - median)
            .total_cmp(&math::abs(bs[x] - median))
            .then(x.cmp(&y))
    });
    let level: Vec<usize> = by_gap[..q_cells.len() >> (n + 2)].to_vec();
    let upper: Vec<usize> = level.iter().copied().filter(|&x| bs[x] >= median).collect();
    let lower: Vec<usize> = level.iter().copied().filter(|&x| bs[x] <= median).collect();
    let half = level.len() / 2;
    let (mut e, sign_b) = if upper.len() >= half { (upper, 1i8) } else { (lower, -1i8) };
    e.truncate(half);
    e.sort_unstable();

    let mut by_b = fa.cells.clone();
    by_b.sort_by(|&x, &y| bs[x].total_cmp(&bs[y]).then(x.cmp(&y)));
    if sign_b < 0 {
        by_b.reverse();
    }
    let mut f: Vec<usize> = by_b[..fa.cells.len().div_ceil(2)].to_vec();
    f.sort_unstable();

    let mut removed: Vec<(usize, usize)> = bad
        .into_iter()
        .filter(|(x, y)| e.binary_search(x).is_ok() && f.binary_search(y).is_ok())
        .collect();
    removed.sort_unstable();
    let g_count = e.len() * f.len() - removed.len();
    let xi0 = g_count as f64 / (q_cells.len() * q_cells.len()) as f64;
    if g_count == 0 {
        return Err(step("G", "G is empty".into()));
    }
    Ok(LowerBoundCertificate {
        q: *q,
        q_cells,
        theta0,
        eps0,
        alpha0,
        delta,
        k0: fa.k0,
        f_alpha: fa.cells,
        bad_fraction,
        e,
        f,
        removed,
        xi0,
        sign_b,
        sign_omega,
        oscillation,
        median,
        cell_volume: grid.cell_volume(),
    })
}

/// `∫_E |T_b^m χ_F|` by direct summation; `F` lies outside the truncation
/// radius of every point of `E`.
pub fn commutator_mass_on_e(table: &KernelTable, grid: &Grid, b: &GridFunction, m: u32, e: &[usize], f: &[usize]) -> f64 {
    let bs = b.samples();
    e.iter()
        .map(|&x| {
            let xi = grid.unflat(x);
            let v: f64 = f
                .iter()
                .map(|&y| math::powi(bs[x] - bs[y], m) * table.weight_or_zero(xi, grid.unflat(y)))
                .sum();
            math::abs(v)
        })
        .sum::<f64>()
        * grid.cell_volume()
}

/// `(∫_E |T_b^m χ_F|^p λ)^{1/p}`.
fn commutator_lp_on_e(table: &KernelTable, grid: &Grid, b: &GridFunction, m: u32, e: &[usize], f: &[usize], lambda: &Weight, p: f64) -> f64 {
    let bs = b.samples();
    let s: f64 = e
        .iter()
        .map(|&x| {
            let xi = grid.unflat(x);
            let v: f64 = f
                .iter()
                .map(|&y| math::powi(bs[x] - bs[y], m) * table.weight_or_zero(xi, grid.unflat(y)))
                .sum();
            math::powf(math::abs(v), p) * lambda.samples()[x]
        })
        .sum();
    math::powf(s * grid.cell_volume(), 1.0 / p)
}

/// One cube of a [`NecessityReport`]. Each `link_*` is a ratio `lhs / rhs`
/// of one step of the chain and is at most 1 when the step holds.
#[derive(Debug, Clone, PartialEq)]
pub struct NecessityRow {
    pub cube: Cube,
    pub oscillation: f64,
    /// `(ν^{1/m})_Q`.
    pub eta_avg: f64,
    /// `ω / (ν^{1/m})_Q`.
    pub ratio: f64,
    /// `c_1 = (1/(ε_0 ξ_0)) ((k_0+1)√n/2)^n`.
    pub c1: f64,
    /// `ω^m ≤ (c_1/|Q|) ∫_E |T_b^m χ_F|`.
    pub link_kernel: f64,
    /// Hölder on `E` with `λ`.
    pub link_holder: f64,
    /// `(∫_E |T_b^m χ_F|^p λ)^{1/p} ≤ c μ(F)^{1/p}`.
    pub link_restricted: f64,
    /// `μ(F) / μ(Q)`.
    pub doubling: f64,
    /// `(μ)_Q / ((μ^{1/r})_Q)^r` with `r = mp + 1`.
    pub reverse_jensen: f64,
    /// `((μ^{1/r})_Q)^r ≤ ((ν^{1/m})_Q)^{mp} (λ)_Q`.
    pub link_split: f64,
    /// The constant `C` with `ω^m ≤ C ((ν^{1/m})_Q)^m` assembled from the
    /// measured links and `[λ]_{A_p}` on `Q`.
    pub assembled: f64,
    pub certificate_ok: bool,
}

/// Per-cube necessity chain and its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct NecessityReport {
    pub rows: Vec<NecessityRow>,
    /// `max_Q ω / (ν^{1/m})_Q`.
    pub max_ratio: f64,
    /// Every link holds on every cube (to `1e-9` relative).
    pub links_hold: bool,
}

pub fn verify_oscillation_bound(
    setup: &BloomSetup,
    kernel: &KernelSpec,
    sigma: &Arc,
    b: &GridFunction,
    cubes: &[Cube],
    restricted_norm_c: f64,
) -> Result<NecessityReport> {
    let grid = *b.grid();
    let n = grid.dim().get();
    let m = setup.m;
    let p = setup.p;
    let pp = p / (p - 1.0);
    let table = kernel.table(&grid)?;
    let r = m as f64 * p + 1.0;
    let vol = grid.cell_volume();
    let avg = |w: &[f64], cells: &[usize], e: f64| -> f64 {
        cells.iter().map(|&c| math::powf(w[c], e)).sum::<f64>() / cells.len() as f64
    };
    let mu = setup.mu.samples();
    let la = setup.lambda.samples();
    let eta = setup.eta.samples();
    let mut rows = Vec::new();
    let mut links_hold = true;
    let ok = |x: f64| x <= 1.0 + 1e-9 || x.is_nan();
    for q in cubes {
        let cert = build_certificate(kernel, sigma, b, q, true)?;
        let certificate_ok = check_certificate(&cert, kernel, b).all();
        let qc = &cert.q_cells;
        let qv = qc.len() as f64 * vol;
        let om_m = math::powi(cert.oscillation, m);
        let c1 = (1.0 / (cert.eps0 * cert.xi0)) * math::powi((cert.k0 + 1.0) / 2.0 * math::sqrt(n as f64), n as u32);
        let mass = commutator_mass_on_e(&table, &grid, b, m, &cert.e, &cert.f);
        let kernel_rhs = c1 / qv * mass;
        let lp = commutator_lp_on_e(&table, &grid, b, m, &cert.e, &cert.f, &setup.lambda, p);
        let dual: f64 = qc.iter().map(|&c| math::powf(la[c], -1.0 / (p - 1.0))).sum::<f64>() * vol;
        let holder_rhs = lp * math::powf(dual, 1.0 / pp) / qv;
        let mu_f: f64 = cert.f.iter().map(|&c| mu[c]).sum::<f64>() * vol;
        let mu_q: f64 = qc.iter().map(|&c| mu[c]).sum::<f64>() * vol;
        let restricted_rhs = restricted_norm_c * math::powf(mu_f, 1.0 / p);
        let rj = avg(mu, qc, 1.0) / math::powf(avg(mu, qc, 1.0 / r), r);
        let split_lhs = math::powf(avg(mu, qc, 1.0 / r), r);
        let eta_avg = avg(eta, qc, 1.0);
        let split_rhs = math::powf(eta_avg, m as f64 * p) * avg(la, qc, 1.0);
        let ap_q = avg(la, qc, 1.0) * math::powf(avg(la, qc, -1.0 / (p - 1.0)), p - 1.0);
        // ω^m ≤ c_1 c (μ(F)/μ(Q))^{1/p} (μ)_Q^{1/p} (λ^{-1/(p-1)})_Q^{1/p'}
        //     ≤ … (rj)^{1/p} (η)_Q^m [λ]_{A_p,Q}^{1/p}
        let doubling = mu_f / mu_q;
        let assembled = c1 * restricted_norm_c * math::powf(doubling * rj, 1.0 / p) * math::powf(ap_q, 1.0 / p);
        let ratio_of = |l: f64, r: f64| if l == 0.0 { 0.0 } else { l / r };
        let row = NecessityRow {
            cube: *q,
            oscillation: cert.oscillation,
            eta_avg,
            ratio: cert.oscillation / eta_avg,
            c1,
            link_kernel: ratio_of(om_m, kernel_rhs),
            link_holder: ratio_of(mass / qv, holder_rhs),
            link_restricted: ratio_of(lp, restricted_rhs),
            doubling,
            reverse_jensen: rj,
            link_split: ratio_of(split_lhs, split_rhs),
            assembled,
            certificate_ok,
        };
        links_hold &= certificate_ok
            && ok(row.link_kernel)
            && ok(row.link_holder)
            && ok(row.link_restricted)
            && ok(row.link_split)
            && om_m <= assembled * math::powi(eta_avg, m) * (1.0 + 1e-9);
        rows.push(row);
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(NecessityReport {
        rows,
        max_ratio,
        links_hold,
    })
}
