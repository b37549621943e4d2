use std::f64::consts::PI;

use bloomlab_core::lowerbound::{
    build_certificate, build_f_alpha, check_certificate, cone_spread, verify_oscillation_bound, Arc,
};
use bloomlab_core::operators::{KernelSpec, SpherePoint, DEFAULT_ANGLES};
use bloomlab_core::weights::{BloomSetup, Weight};
use bloomlab_core::{Cube, Dim, Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn step_symbol<R: Rng>(g: Grid, block: usize, rng: &mut R) -> GridFunction {
    let n = g.n();
    let nb = n.div_ceil(block);
    let vals: Vec<f64> = (0..nb.pow(g.dim().get() as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = (0..g.len())
        .map(|c| {
            let [i, j] = g.unflat(c);
            match g.dim() {
                Dim::One => vals[i / block],
                Dim::Two => vals[(i / block) * nb + j / block],
            }
        })
        .collect();
    GridFunction::new(g, v).unwrap()
}

fn symbols<R: Rng>(g: Grid, rng: &mut R) -> Vec<GridFunction> {
    vec![
        g.sample(|x| x[0]).unwrap(),
        g.sample(|x| x.iter().map(|t| t * t).sum::<f64>().sqrt().powf(0.125)).unwrap(),
        step_symbol(g, 4, rng),
    ]
}

#[test]
fn planar_certificates_on_random_cubes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let g = Grid::symmetric(Dim::Two, 10.0, 160).unwrap();
    let h = g.cell_width();
    let kernels = [
        (KernelSpec::cosine(DEFAULT_ANGLES), Arc::Circle { center: 0.0, half_width: PI / 4.0 }),
        (
            KernelSpec::sign_patch(2.0, 2.0, DEFAULT_ANGLES).unwrap(),
            Arc::Circle { center: 2.0, half_width: 1.0 },
        ),
    ];
    for (kernel, sigma) in &kernels {
        for _ in 0..3 {
            let i = rng.gen_range(-8i32..0);
            let j = rng.gen_range(-8i32..0);
            let q = Cube::square(f64::from(i) * h, f64::from(j) * h, 8.0 * h).unwrap();
            for b in symbols(g, &mut rng) {
                let cert = build_certificate(kernel, sigma, &b, &q, true).unwrap();
                let check = check_certificate(&cert, kernel, &b);
                assert!(check.all(), "{check:?}");
                assert!(cert.xi0 > 0.0 && cert.k0 > 1.0);
            }
        }
    }
}

#[test]
fn line_certificates_on_random_cubes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = Grid::symmetric(Dim::One, 16.0, 2048).unwrap();
    let h = g.cell_width();
    for sign in [1.0, -1.0] {
        for _ in 0..4 {
            let len = 16 * rng.gen_range(1..5);
            let start = rng.gen_range(-64i32..0);
            let q = Cube::interval(f64::from(start) * h, len as f64 * h).unwrap();
            for b in symbols(g, &mut rng) {
                let cert = build_certificate(&KernelSpec::hilbert(), &Arc::Point(sign), &b, &q, true).unwrap();
                assert!(check_certificate(&cert, &KernelSpec::hilbert(), &b).all());
                assert!(cert.removed.is_empty());
            }
        }
    }
}

#[test]
fn certificates_are_scale_covariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kernel = KernelSpec::cosine(DEFAULT_ANGLES);
    let sigma = Arc::Circle { center: 0.0, half_width: PI / 4.0 };
    let g1 = Grid::symmetric(Dim::Two, 10.0, 160).unwrap();
    let g2 = Grid::symmetric(Dim::Two, 20.0, 160).unwrap();
    let b1 = step_symbol(g1, 4, &mut rng);
    let b2 = GridFunction::new(g2, b1.samples().to_vec()).unwrap();
    let h1 = g1.cell_width();
    let q1 = Cube::square(-4.0 * h1, -4.0 * h1, 8.0 * h1).unwrap();
    let q2 = Cube::square(-8.0 * h1, -8.0 * h1, 16.0 * h1).unwrap();
    let c1 = build_certificate(&kernel, &sigma, &b1, &q1, true).unwrap();
    let c2 = build_certificate(&kernel, &sigma, &b2, &q2, true).unwrap();
    assert_eq!(c1.e, c2.e);
    assert_eq!(c1.f, c2.f);
    assert_eq!(c1.f_alpha, c2.f_alpha);
    assert_eq!((c1.eps0, c1.delta, c1.alpha0), (c2.eps0, c2.delta, c2.alpha0));
    assert!((c1.xi0 - c2.xi0).abs() < 1e-15);
    assert!((c1.k0 - c2.k0).abs() < 1e-9 * c1.k0);
}

#[test]
fn cone_estimate_on_the_sector() {
    let g = Grid::symmetric(Dim::Two, 10.0, 160).unwrap();
    let h = g.cell_width();
    let q = Cube::square(0.0, 0.0, 8.0 * h).unwrap();
    let delta = 2.0 * (PI / 8.0).sin();
    let fa = build_f_alpha(&g, &q, SpherePoint::Circle(0.0), delta).unwrap();
    let q_cells: Vec<usize> = (0..g.len()).filter(|&c| q.contains_point(&g.midpoint(c))).collect();
    assert_eq!(q_cells.len(), 64);
    assert!(cone_spread(&g, &q_cells, &fa.cells, SpherePoint::Circle(0.0)) < delta);
    let sector = delta / 2.0 * (fa.r_outer * fa.r_outer - fa.r_inner * fa.r_inner);
    let measured = fa.cells.len() as f64 * g.cell_volume();
    assert!((measured / sector - 1.0).abs() < 0.1, "{measured} vs {sector}");
    assert!(fa.rho > 0.0);
}

#[test]
fn identity_symbol_has_uniform_ratio() {
    let g = Grid::symmetric(Dim::One, 16.0, 2048).unwrap();
    let one = Weight::constant(&g, 1.0).unwrap();
    let setup = BloomSetup::new(one.clone(), one, 2.0, 1).unwrap();
    let b = g.sample(|x| x[0]).unwrap();
    let cubes: Vec<Cube> = [2.0, 1.0, 0.5, 0.25]
        .iter()
        .map(|&s| Cube::interval(-s / 2.0, s).unwrap())
        .collect();
    let r = verify_oscillation_bound(&setup, &KernelSpec::hilbert(), &Arc::Point(1.0), &b, &cubes, 1e6).unwrap();
    for row in &r.rows {
        let k = row.cube.side() / g.cell_width();
        let exact = (7.0 * k / 8.0 - 1.0) * g.cell_width() / 2.0;
        assert!((row.ratio - exact).abs() < 1e-12, "{row:?}");
        assert!(row.certificate_ok);
    }
    assert!(r.links_hold);
    let c = g.constant(1.0).unwrap();
    let r = verify_oscillation_bound(&setup, &KernelSpec::hilbert(), &Arc::Point(1.0), &c, &cubes, 1.0).unwrap();
    assert_eq!(r.max_ratio, 0.0);
    assert!(r.links_hold);
}
